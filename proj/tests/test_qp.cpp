#include <doctest.h>

#include "spmpc/qp.hpp"
#include "spmpc/rng.hpp"

using namespace spmpc;

namespace {

struct TinyQp {
  Mat H, G;
  Vec q, b, lo, hi;
};

TinyQp random_tiny(Xoshiro256pp& rng, int nz, int mz, bool diagonal_h) {
  TinyQp t;
  if (diagonal_h) {
    Vec d(nz);
    for (int i = 0; i < nz; ++i) d[i] = 0.5 + rng.uniform();
    t.H = d.asDiagonal();
  } else {
    Mat M(nz, nz);
    for (int i = 0; i < nz; ++i)
      for (int j = 0; j < nz; ++j) M(i, j) = rng.normal();
    t.H = Mat(M.transpose() * M) + Mat::Identity(nz, nz);
  }
  t.G = Mat(mz, nz);
  for (int i = 0; i < mz; ++i)
    for (int j = 0; j < nz; ++j) t.G(i, j) = rng.normal();
  t.q = Vec(nz);
  for (int i = 0; i < nz; ++i) t.q[i] = rng.normal();
  // choose b so that a strictly feasible interior point exists
  Vec z0(nz);
  for (int i = 0; i < nz; ++i) z0[i] = 0.3 * rng.normal();
  t.b = t.G * z0;
  t.lo = Vec(nz);
  t.hi = Vec(nz);
  for (int i = 0; i < nz; ++i) {
    t.lo[i] = z0[i] - 0.2 - rng.uniform();
    t.hi[i] = z0[i] + 0.2 + rng.uniform();
  }
  return t;
}

}  // namespace

TEST_CASE("dual fista converges in one pass at the dual optimum") {
  // unconstrained-interior instance: equality solution well inside the box
  Vec hdiag = Vec::Ones(3);
  Mat H = hdiag.asDiagonal();
  Mat G(1, 3);
  G << 1, 1, 1;
  Vec q = Vec::Zero(3);
  Vec b = Vec::Constant(1, 0.3);
  Vec lo = Vec::Constant(3, -10), hi = Vec::Constant(3, 10);
  const auto qp = make_dense_qp(H, q, G, b, lo, hi);
  const auto res = dual_fista_qp(qp, Vec::Zero(1), 1e-9);
  CHECK(res.iterations == 1);
  CHECK((G * res.z - b).lpNorm<Eigen::Infinity>() <= 1e-9);
}

TEST_CASE("dual fista matches the active-set oracle on tiny instances") {
  Xoshiro256pp rng(21);
  int actives_seen = 0;
  for (int trial = 0; trial < 60; ++trial) {
    const auto t = random_tiny(rng, 3, 1, true);
    const auto qp = make_dense_qp(t.H, t.q, t.G, t.b, t.lo, t.hi);
    const auto res = dual_fista_qp(qp, Vec::Zero(1), 1e-8);
    REQUIRE(res.converged);
    const Vec oracle = dense_box_qp_oracle(t.H, t.q, t.G, t.b, t.lo, t.hi);
    CHECK((res.z - oracle).lpNorm<Eigen::Infinity>() <= 1e-4);
    if (((oracle - t.lo).cwiseAbs().minCoeff() < 1e-9) ||
        ((t.hi - oracle).cwiseAbs().minCoeff() < 1e-9))
      ++actives_seen;
  }
  CHECK(actives_seen > 5);  // the case split actually exercises active boxes
}

TEST_CASE("admm qp matches the active-set oracle and stays equality-feasible") {
  Xoshiro256pp rng(22);
  for (int trial = 0; trial < 60; ++trial) {
    const auto t = random_tiny(rng, 4, 2, trial % 2 == 0);
    const auto qp = make_dense_qp(t.H, t.q, t.G, t.b, t.lo, t.hi, /*rho=*/10.0);
    const auto res = admm_qp(qp, Vec::Zero(4), Vec::Zero(4), 1e-7, 1e-7, 500'000);
    REQUIRE(res.converged);
    const Vec oracle = dense_box_qp_oracle(t.H, t.q, t.G, t.b, t.lo, t.hi);
    CHECK((res.v - oracle).lpNorm<Eigen::Infinity>() <= 1e-4);
    // the z-update is equality-feasible by construction
    CHECK((t.G * res.z - t.b).lpNorm<Eigen::Infinity>() <= 1e-9);
  }
}

TEST_CASE("admm qp trivial fixed point") {
  Mat H = Mat::Identity(2, 2);
  Mat G(1, 2);
  G << 1, -1;
  Vec lo = Vec::Constant(2, -1), hi = Vec::Constant(2, 1);
  const auto qp = make_dense_qp(H, Vec::Zero(2), G, Vec::Zero(1), lo, hi, 1.0);
  const auto res = admm_qp(qp, Vec::Zero(2), Vec::Zero(2), 1e-10, 1e-10);
  CHECK(res.iterations == 1);
  CHECK(res.z.norm() == 0.0);
}

TEST_CASE("both qp paths agree on random feasible instances") {
  Xoshiro256pp rng(23);
  for (int trial = 0; trial < 50; ++trial) {
    const auto t = random_tiny(rng, 5, 2, true);
    const auto qp = make_dense_qp(t.H, t.q, t.G, t.b, t.lo, t.hi, 8.0);
    const auto fista = dual_fista_qp(qp, Vec::Zero(2), 1e-7, 500'000);
    const auto admm = admm_qp(qp, Vec::Zero(5), Vec::Zero(5), 1e-7, 1e-7, 500'000);
    REQUIRE(fista.converged);
    REQUIRE(admm.converged);
    CHECK((fista.z - admm.v).lpNorm<Eigen::Infinity>() <= 1e-5);
    // primal iterates of the dual method respect the box by construction
    CHECK((fista.z.array() >= t.lo.array() - 1e-12).all());
    CHECK((fista.z.array() <= t.hi.array() + 1e-12).all());
  }
}

TEST_CASE("qp path configuration errors") {
  Mat H(2, 2);
  H << 2, 0.5, 0.5, 1;  // non-diagonal: no FISTA path
  Mat G(1, 2);
  G << 1, 0;
  Vec lo = Vec::Constant(2, -1), hi = Vec::Constant(2, 1);
  const auto qp = make_dense_qp(H, Vec::Zero(2), G, Vec::Zero(1), lo, hi);
  CHECK_THROWS_AS(dual_fista_qp(qp, Vec::Zero(1), 1e-6), std::invalid_argument);
  CHECK_THROWS_AS(admm_qp(qp, Vec::Zero(2), Vec::Zero(2), 1e-6, 1e-6),
                  std::invalid_argument);
}
