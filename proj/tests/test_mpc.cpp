#include <doctest.h>

#include "spmpc/mpc.hpp"
#include "spmpc/qp.hpp"
#include "spmpc/rng.hpp"

#include <sstream>

using namespace spmpc;

namespace {

LtiModel tiny_model(Xoshiro256pp& rng, int n, int m) {
  LtiModel mdl;
  mdl.A = Mat(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) mdl.A(i, j) = 0.6 * rng.normal() / n + (i == j ? 0.5 : 0.0);
  mdl.B = Mat(n, m);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) mdl.B(i, j) = rng.normal();
  mdl.x_lo = Vec::Constant(n, -1.0);
  mdl.x_hi = Vec::Constant(n, 1.0);
  mdl.u_lo = Vec::Constant(m, -0.6);
  mdl.u_hi = Vec::Constant(m, 0.6);
  return mdl;
}

MpcWeights tiny_weights(int n, int m, int N) {
  MpcWeights w;
  w.Q = 2.0 * Mat::Identity(n, n);
  w.R = 0.5 * Mat::Identity(m, m);
  w.T = 3.0 * Mat::Identity(n, n);
  w.S = Mat::Identity(m, m);
  w.N = N;
  w.rho = 5.0;
  return w;
}

}  // namespace

TEST_CASE("ingredient dimensions per variant") {
  Xoshiro256pp rng(5);
  const auto mdl = tiny_model(rng, 1, 1);
  MpcWeights w = tiny_weights(1, 1, 2);
  const auto equ = build_ingredients(mdl, w, MpcVariant::equ);
  CHECK(equ.nz == 3);
  CHECK(equ.mz == 2);
  const auto lax = build_ingredients(mdl, w, MpcVariant::lax);
  CHECK(lax.nz == 4);
  CHECK(lax.mz == 2);

  // dense assembly oracle: G = [[B, -1, 0], [0, A, B]] for the equ variant
  const Mat G = equ.denseG();
  CHECK(G(0, 0) == mdl.B(0, 0));
  CHECK(G(0, 1) == -1.0);
  CHECK(G(1, 1) == mdl.A(0, 0));
  CHECK(G(1, 2) == mdl.B(0, 0));

  CHECK_THROWS_AS(build_ingredients(mdl, tiny_weights(1, 1, 1), MpcVariant::lax),
                  std::invalid_argument);
}

TEST_CASE("sparse products match the dense assembly") {
  Xoshiro256pp rng(11);
  for (const auto variant : {MpcVariant::equ, MpcVariant::lax}) {
    const auto mdl = tiny_model(rng, 3, 2);
    const auto ing = build_ingredients(mdl, tiny_weights(3, 2, 4), variant);
    const Mat G = ing.denseG();
    for (int t = 0; t < 5; ++t) {
      Vec z(ing.nz), lam(ing.mz);
      for (int i = 0; i < ing.nz; ++i) z[i] = rng.normal();
      for (int i = 0; i < ing.mz; ++i) lam[i] = rng.normal();
      CHECK((ing.mulG(z) - G * z).lpNorm<Eigen::Infinity>() <= 1e-12);
      CHECK((ing.mulGT(lam) - G.transpose() * lam).lpNorm<Eigen::Infinity>() <= 1e-12);
    }
    // W has the block tridiagonal pattern: zero outside the band
    const Mat Hrho =
        ing.denseH() + ing.weights.rho * Mat::Identity(ing.nz, ing.nz);
    const Mat W = G * Hrho.inverse() * G.transpose();
    const int n = ing.n;
    for (int bi = 0; bi < ing.N; ++bi)
      for (int bj = 0; bj < ing.N; ++bj)
        if (std::abs(bi - bj) > 1)
          CHECK(W.block(bi * n, bj * n, n, n).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("standard solvers match the active-set oracle on tiny instances") {
  Xoshiro256pp rng(13);
  int checked = 0;
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 1 + static_cast<int>(rng.next() % 2);
    const int N = 2 + static_cast<int>(rng.next() % 2);
    const auto mdl = tiny_model(rng, n, 1);
    MpcWeights w = tiny_weights(n, 1, N);
    const MpcVariant variant = trial % 2 ? MpcVariant::equ : MpcVariant::lax;
    const auto ing = build_ingredients(mdl, w, variant);
    Vec x_t(n), x_r(n);
    for (int i = 0; i < n; ++i) {
      x_t[i] = 0.5 * rng.normal();
      x_r[i] = 0.2 * rng.normal();
    }
    const Vec u_r = Vec::Zero(1);
    const Vec q = ing.buildQ(x_r, u_r);
    const Vec b = ing.buildB(x_t, x_r);
    Vec oracle;
    try {
      oracle = dense_box_qp_oracle(ing.denseH(), q, ing.denseG(), b, ing.z_lo, ing.z_hi);
    } catch (const std::runtime_error&) {
      continue;  // infeasible draw (terminal equality out of reach)
    }
    const auto admm = solve_std_admm(ing, x_t, x_r, u_r, Vec::Zero(ing.nz),
                                     Vec::Zero(ing.nz), 1e-7, 1e-7, 500'000);
    if (!admm.converged) continue;
    CHECK((admm.v - oracle).lpNorm<Eigen::Infinity>() <= 1e-4);
    const auto fista =
        solve_std_fista(ing, x_t, x_r, u_r, Vec::Zero(ing.mz), 1e-8, 500'000);
    if (fista.converged)
      CHECK((fista.z - oracle).lpNorm<Eigen::Infinity>() <= 1e-4);
    ++checked;
  }
  CHECK(checked >= 20);
}

TEST_CASE("steady-state start with exact warmstart exits immediately") {
  Xoshiro256pp rng(31);
  const auto mdl = tiny_model(rng, 2, 1);
  MpcWeights w = tiny_weights(2, 1, 3);
  const auto ing = build_ingredients(mdl, w, MpcVariant::lax);
  // admissible steady state: x = Ax + Bu with (x, u) interior
  const Mat M = (Mat(2, 3) << Mat::Identity(2, 2) - mdl.A, -mdl.B).finished();
  const Vec xu = M.fullPivLu().kernel().col(0);
  const Vec x_s = 0.2 * xu.head(2) / xu.norm();
  const Vec u_s = 0.2 * xu.tail(1) / xu.norm();

  const auto first = solve_std_admm(ing, x_s, x_s, u_s, Vec::Zero(ing.nz),
                                    Vec::Zero(ing.nz), 1e-9, 1e-9, 500'000);
  REQUIRE(first.converged);
  const auto warm = solve_std_admm(ing, x_s, x_s, u_s, first.v, first.lam, 1e-9, 1e-9);
  CHECK(warm.iterations == 1);

  const auto ffirst = solve_std_fista(ing, x_s, x_s, u_s, Vec::Zero(ing.mz), 1e-9);
  const auto fwarm = solve_std_fista(ing, x_s, x_s, u_s, ffirst.lam, 1e-9);
  CHECK(fwarm.iterations == 1);
}

TEST_CASE("ellip solver respects the terminal set and matches lax when inactive") {
  Xoshiro256pp rng(37);
  const auto mdl = tiny_model(rng, 2, 1);
  MpcWeights w = tiny_weights(2, 1, 3);
  auto ing = build_ingredients(mdl, w, MpcVariant::ellip);
  CHECK_THROWS_AS(solve_ellip_admm(ing, Vec::Zero(2), Vec::Zero(2), Vec::Zero(1),
                                   Vec::Zero(ing.nz), Vec::Zero(ing.nz), 1e-6, 1e-6),
                  std::invalid_argument);
  // a huge ellipsoid disables the constraint: identical to the lax solution
  set_terminal_ellipsoid(ing, Ellipsoid(1e-6 * Mat::Identity(2, 2), Vec::Zero(2), 1.0));
  const Vec x_t = Vec::Constant(2, 0.1);
  const Vec x_r = Vec::Zero(2), u_r = Vec::Zero(1);
  const auto el = solve_ellip_admm(ing, x_t, x_r, u_r, Vec::Zero(ing.nz),
                                   Vec::Zero(ing.nz), 1e-8, 1e-8, 500'000);
  REQUIRE(el.converged);
  const auto lax = build_ingredients(mdl, w, MpcVariant::lax);
  const auto la = solve_std_admm(lax, x_t, x_r, u_r, Vec::Zero(lax.nz),
                                 Vec::Zero(lax.nz), 1e-8, 1e-8, 500'000);
  CHECK((el.v - la.v).lpNorm<Eigen::Infinity>() <= 1e-5);

  // a tiny ellipsoid forces the terminal state onto its boundary
  const Ellipsoid small(Mat::Identity(2, 2), Vec::Zero(2), 1e-3);
  set_terminal_ellipsoid(ing, small);
  const auto tight = solve_ellip_admm(ing, x_t, x_r, u_r, Vec::Zero(ing.nz),
                                      Vec::Zero(ing.nz), 1e-8, 1e-8, 500'000);
  REQUIRE(tight.converged);
  const Vec xN = tight.v.tail(2);
  CHECK(xN.dot(small.P() * xN) <= small.radius() * small.radius() + 1e-7);
}

TEST_CASE("mpct solver tracks an admissible reference and rejects bad input") {
  Xoshiro256pp rng(41);
  const auto mdl = tiny_model(rng, 2, 1);
  MpcWeights w = tiny_weights(2, 1, 4);
  w.rho1 = 2.0;
  w.rho2 = 40.0;
  const auto ing = build_mpct_ingredients(mdl, w);

  // the steady-state constraint on z2 holds by the null-space construction
  const Vec x_t = Vec::Constant(2, 0.05);
  const Vec x_r = Vec::Constant(2, 0.02);
  const Vec u_r = Vec::Zero(1);
  const auto res = solve_mpct_eadmm(ing, x_t, x_r, u_r, Vec::Zero(ing.n2),
                                    Vec::Zero(ing.n1), Vec::Zero(ing.mz), 1e-7, 500'000);
  REQUIRE(res.converged);
  const Vec xs = res.z2.head(2);
  const Vec us = res.z2.tail(1);
  CHECK((xs - mdl.A * xs - mdl.B * us).lpNorm<Eigen::Infinity>() <= 1e-9);

  MpcWeights bad = w;
  bad.rho2 = -1;
  CHECK_THROWS_AS(build_mpct_ingredients(mdl, bad), std::invalid_argument);
}

TEST_CASE("mpct matches a dense oracle on the equivalent tracking qp") {
  // (x, u, xs, us) stacked into one dense QP with the terminal equality
  Xoshiro256pp rng(43);
  for (int trial = 0; trial < 20; ++trial) {
    const auto mdl = tiny_model(rng, 1, 1);
    MpcWeights w = tiny_weights(1, 1, 2);
    w.rho1 = 5.0;
    w.rho2 = 100.0;
    w.eps_xu = 1e-6;
    const auto ing = build_mpct_ingredients(mdl, w);
    const double x0v = 0.4 * rng.normal();
    Vec x_t = Vec::Constant(1, x0v);
    Vec x_r = Vec::Constant(1, 0.3 * rng.normal());
    Vec u_r = Vec::Zero(1);
    const auto res = solve_mpct_eadmm(ing, x_t, x_r, u_r, Vec::Zero(ing.n2),
                                      Vec::Zero(ing.n1), Vec::Zero(ing.mz), 1e-8, 2'000'000);
    if (!res.converged) continue;

    // dense variables (x0, u0, x1, u1, x2, u2, xs, us); u1/u2 free duplicates
    // of the tracking problem with N = 2: cost over stages j = 0, 1
    const int nz = 8;
    Mat H = Mat::Zero(nz, nz);
    Vec q = Vec::Zero(nz);
    auto addq = [&](int i, double wq, double ref) {
      H(i, i) += 2 * wq;
      q[i] += -2 * wq * ref;
    };
    // stage costs ||x_j - xs||_Q + ||u_j - us||_R for j=0,1
    for (const int j : {0, 2}) {
      H(j, j) += 2 * w.Q(0, 0);
      H(6, 6) += 2 * w.Q(0, 0);
      H(j, 6) += -2 * w.Q(0, 0);
      H(6, j) += -2 * w.Q(0, 0);
    }
    for (const int j : {1, 3}) {
      H(j, j) += 2 * w.R(0, 0);
      H(7, 7) += 2 * w.R(0, 0);
      H(j, 7) += -2 * w.R(0, 0);
      H(7, j) += -2 * w.R(0, 0);
    }
    addq(6, w.T(0, 0), x_r[0]);
    addq(7, w.S(0, 0), u_r[0]);
    // equalities: x0 = x_t, dynamics x1 = Ax0 + Bu0, x2 = Ax1 + Bu1,
    // xs steady, x2 = xs, u2 = us
    Mat G = Mat::Zero(6, nz);
    Vec b = Vec::Zero(6);
    G(0, 0) = 1;
    b[0] = x0v;
    G(1, 0) = mdl.A(0, 0);
    G(1, 1) = mdl.B(0, 0);
    G(1, 2) = -1;
    G(2, 2) = mdl.A(0, 0);
    G(2, 3) = mdl.B(0, 0);
    G(2, 4) = -1;
    G(3, 6) = mdl.A(0, 0) - 1;
    G(3, 7) = mdl.B(0, 0);
    G(4, 4) = 1;
    G(4, 6) = -1;
    G(5, 5) = 1;
    G(5, 7) = -1;
    Vec lo = Vec::Constant(nz, -1e9), hi = Vec::Constant(nz, 1e9);
    lo[1] = mdl.u_lo[0];
    hi[1] = mdl.u_hi[0];
    lo[3] = mdl.u_lo[0];
    hi[3] = mdl.u_hi[0];
    lo[2] = mdl.x_lo[0];
    hi[2] = mdl.x_hi[0];  // x1 box
    lo[4] = mdl.x_lo[0] + w.eps_xu;
    hi[4] = mdl.x_hi[0] - w.eps_xu;  // x2 = xN shrunk box
    lo[5] = mdl.u_lo[0] + w.eps_xu;
    hi[5] = mdl.u_hi[0] - w.eps_xu;
    Vec oracle;
    try {
      oracle = dense_box_qp_oracle(0.5 * H, 0.5 * q, G, b, lo, hi);
    } catch (const std::runtime_error&) {
      continue;
    }
    CHECK(res.u0[0] == doctest::Approx(oracle[1]).epsilon(5e-4));
    CHECK(res.z2[0] == doctest::Approx(oracle[6]).epsilon(5e-4));
  }
}

TEST_CASE("invariant ellipsoid validator flags contraction and expansion") {
  LtiModel mdl;
  mdl.A = 0.5 * Mat::Identity(2, 2);
  mdl.B = Mat::Identity(2, 2);
  mdl.x_lo = Vec::Constant(2, -10);
  mdl.x_hi = Vec::Constant(2, 10);
  mdl.u_lo = Vec::Constant(2, -10);
  mdl.u_hi = Vec::Constant(2, 10);
  const Ellipsoid unit(Mat::Identity(2, 2), Vec::Zero(2), 1.0);
  const Mat K = Mat::Zero(2, 2);
  const auto ok = validate_invariant_ellipsoid(mdl, K, unit, Vec::Zero(2), Vec::Zero(2),
                                               2000, 99);
  CHECK(ok.invariance_violations == 0);
  CHECK(ok.admissibility_violations == 0);

  mdl.A = 2.0 * Mat::Identity(2, 2);
  const auto bad = validate_invariant_ellipsoid(mdl, K, unit, Vec::Zero(2), Vec::Zero(2),
                                                2000, 99);
  CHECK(bad.invariance_violations > 0);
}

TEST_CASE("terminal ingredients give a valid invariant admissible ellipsoid") {
  Xoshiro256pp rng(51);
  const auto mdl = tiny_model(rng, 2, 1);
  const Mat Q = 2.0 * Mat::Identity(2, 2);
  const Mat R = Mat::Identity(1, 1);
  const auto term = terminal_ingredients(mdl, Q, R, Vec::Zero(2), Vec::Zero(1));
  const Ellipsoid ell(term.P, Vec::Zero(2), term.r);
  const auto rep = validate_invariant_ellipsoid(mdl, term.K, ell, Vec::Zero(2),
                                                Vec::Zero(1), 10'000, 7);
  CHECK(rep.invariance_violations == 0);
  CHECK(rep.admissibility_violations == 0);
}

TEST_CASE("ingredient text round trip") {
  Xoshiro256pp rng(61);
  const auto mdl = tiny_model(rng, 2, 1);
  const auto ing = build_ingredients(mdl, tiny_weights(2, 1, 3), MpcVariant::lax);
  std::stringstream ss;
  write_ingredients(ss, ing);
  const auto back = read_ingredients(ss);
  CHECK(back.variant == MpcVariant::lax);
  CHECK(back.N == 3);
  CHECK(back.model.A.isApprox(mdl.A, 0));
  CHECK(back.weights.Q.isApprox(ing.weights.Q, 0));
  // identical solves from identical ingredients
  const Vec x_t = Vec::Constant(2, 0.1);
  const auto a = solve_std_admm(ing, x_t, Vec::Zero(2), Vec::Zero(1), Vec::Zero(ing.nz),
                                Vec::Zero(ing.nz), 1e-6, 1e-6);
  const auto b = solve_std_admm(back, x_t, Vec::Zero(2), Vec::Zero(1), Vec::Zero(back.nz),
                                Vec::Zero(back.nz), 1e-6, 1e-6);
  CHECK(a.iterations == b.iterations);
  CHECK(a.v == b.v);
}
