#include "spmpc/mpc.hpp"

#include <cmath>

namespace spmpc {

// Residual row layout: [x0 block (n)] [per stage i=0..N: x rows (n), u rows (m)]
// [terminal tie rows (n+m)]. z1 = (x_0, u_0, ..., x_N, u_N), z2 = (x_s, u_s),
// z3 = (xt_0, ut_0, ..., xt_N, ut_N).

namespace {
inline int stage_row(int i, int n, int m) { return n + i * (n + m); }
}  // namespace

Vec MpctIngredients::mulC1(const Vec& z1) const {
  Vec r = Vec::Zero(mz);
  r.head(n) = z1.head(n);  // x_0
  for (int i = 0; i <= N; ++i)
    r.segment(stage_row(i, n, m), n + m) = -z1.segment(i * (n + m), n + m);
  r.tail(n + m) = -z1.tail(n + m);
  return r;
}

Vec MpctIngredients::mulC1T(const Vec& r) const {
  Vec out = Vec::Zero(n1);
  out.head(n) = r.head(n);
  for (int i = 0; i <= N; ++i)
    out.segment(i * (n + m), n + m) -= r.segment(stage_row(i, n, m), n + m);
  out.tail(n + m) -= r.tail(n + m);
  return out;
}

Vec MpctIngredients::mulC2(const Vec& z2) const {
  Vec r = Vec::Zero(mz);
  for (int i = 0; i <= N; ++i) r.segment(stage_row(i, n, m), n + m) = z2;
  r.tail(n + m) = z2;
  return r;
}

Vec MpctIngredients::mulC2T(const Vec& r) const {
  Vec out = Vec::Zero(n + m);
  for (int i = 0; i <= N; ++i) out += r.segment(stage_row(i, n, m), n + m);
  out += r.tail(n + m);
  return out;
}

Vec MpctIngredients::mulC3(const Vec& z3) const {
  Vec r = Vec::Zero(mz);
  for (int i = 0; i <= N; ++i)
    r.segment(stage_row(i, n, m), n + m) = z3.segment(i * (n + m), n + m);
  return r;
}

Vec MpctIngredients::mulC3T(const Vec& r) const {
  Vec out = Vec::Zero(n1);
  for (int i = 0; i <= N; ++i)
    out.segment(i * (n + m), n + m) = r.segment(stage_row(i, n, m), n + m);
  return out;
}

Vec MpctIngredients::applyH3inv(const Vec& v) const {
  Vec out(n1);
  for (int i = 0; i <= N; ++i) {
    const Mat& Qi = i == 0 ? Q3inv_first : (i == N ? Q3inv_last : Q3inv_mid);
    const Mat& Ri = i == N ? R3inv_last : (i == 0 ? R3inv_first : R3inv_mid);
    out.segment(i * (n + m), n) = Qi * v.segment(i * (n + m), n);
    out.segment(i * (n + m) + n, m) = Ri * v.segment(i * (n + m) + n, m);
  }
  return out;
}

Vec MpctIngredients::mulG3(const Vec& v) const {
  Vec out(N * n);
  for (int i = 0; i < N; ++i) {
    out.segment(i * n, n) = model.A * v.segment(i * (n + m), n) +
                            model.B * v.segment(i * (n + m) + n, m) -
                            v.segment((i + 1) * (n + m), n);
  }
  return out;
}

Vec MpctIngredients::mulG3T(const Vec& v) const {
  Vec out = Vec::Zero(n1);
  for (int i = 0; i < N; ++i) {
    const auto row = v.segment(i * n, n);
    out.segment(i * (n + m), n) += model.A.transpose() * row;
    out.segment(i * (n + m) + n, m) += model.B.transpose() * row;
    out.segment((i + 1) * (n + m), n) -= row;
  }
  return out;
}

MpctIngredients build_mpct_ingredients(const LtiModel& model, const MpcWeights& w) {
  if (w.N < 2) throw std::invalid_argument("build_mpct_ingredients: N must be >= 2");
  if (w.rho1 <= 0 || w.rho2 <= 0)
    throw std::invalid_argument("build_mpct_ingredients: penalties must be positive");
  if (w.S.size() == 0 || w.T.size() == 0)
    throw std::invalid_argument("build_mpct_ingredients: mpct needs T and S");

  MpctIngredients ing;
  ing.model = model;
  ing.weights = w;
  ing.n = model.n();
  ing.m = model.m();
  ing.N = w.N;
  const int n = ing.n, m = ing.m, N = ing.N;
  ing.n1 = (N + 1) * (n + m);
  ing.n2 = n + m;
  ing.mz = n + (N + 1) * (n + m) + (n + m);

  // per-row penalties: rho2 on the initial-state rows, the terminal ties
  // and the stage-0/stage-N congruence rows singled out in the formulation
  ing.rho_rows = Vec::Constant(ing.mz, w.rho1);
  ing.rho_rows.head(n).setConstant(w.rho2);
  ing.rho_rows.tail(n + m).setConstant(w.rho2);
  ing.rho_rows.segment(stage_row(0, n, m), n).setConstant(w.rho2);       // x-congruence i=0
  ing.rho_rows.segment(stage_row(N, n, m), n).setConstant(w.rho2);       // x-congruence i=N
  ing.rho_rows.segment(stage_row(N, n, m) + n, m).setConstant(w.rho2);   // u-congruence i=N

  // H1 = C1' diag(rho) C1 is diagonal; accumulate the per-coordinate sums
  Vec h1 = Vec::Zero(ing.n1);
  for (int i = 0; i <= N; ++i) {
    h1.segment(i * (n + m), n) += ing.rho_rows.segment(stage_row(i, n, m), n);
    h1.segment(i * (n + m) + n, m) += ing.rho_rows.segment(stage_row(i, n, m) + n, m);
  }
  h1.head(n) += ing.rho_rows.head(n);
  h1.tail(n + m) += ing.rho_rows.tail(n + m);
  ing.h1_diag_inv = h1.cwiseInverse();

  ing.z1_lo.resize(ing.n1);
  ing.z1_hi.resize(ing.n1);
  for (int i = 0; i <= N; ++i) {
    auto xlo = ing.z1_lo.segment(i * (n + m), n);
    auto xhi = ing.z1_hi.segment(i * (n + m), n);
    auto ulo = ing.z1_lo.segment(i * (n + m) + n, m);
    auto uhi = ing.z1_hi.segment(i * (n + m) + n, m);
    if (i == 0) {
      xlo.setConstant(-w.big_m);
      xhi.setConstant(w.big_m);
    } else if (i == N) {
      xlo = model.x_lo.array() + w.eps_xu;
      xhi = model.x_hi.array() - w.eps_xu;
    } else {
      xlo = model.x_lo;
      xhi = model.x_hi;
    }
    if (i == N) {
      ulo = model.u_lo.array() + w.eps_xu;
      uhi = model.u_hi.array() - w.eps_xu;
    } else {
      ulo = model.u_lo;
      uhi = model.u_hi;
    }
  }

  // z2 step: H2 = diag(T,S) + C2' diag(rho) C2 and the closed-form map M2
  Mat H2 = Mat::Zero(n + m, n + m);
  H2.topLeftCorner(n, n) = w.T;
  H2.bottomRightCorner(m, m) = w.S;
  Vec c2_diag = Vec::Zero(n + m);
  for (int i = 0; i <= N; ++i) {
    c2_diag.head(n) += ing.rho_rows.segment(stage_row(i, n, m), n);
    c2_diag.tail(m) += ing.rho_rows.segment(stage_row(i, n, m) + n, m);
  }
  c2_diag.head(n) += ing.rho_rows.segment(ing.mz - (n + m), n);
  c2_diag.tail(m) += ing.rho_rows.tail(m);
  H2 += Mat(c2_diag.asDiagonal());
  Mat G2(n, n + m);
  G2 << model.A - Mat::Identity(n, n), model.B;
  const Mat H2i = H2.inverse();
  const Mat W2 = G2 * H2i * G2.transpose();
  ing.M2 = H2i * G2.transpose() * W2.inverse() * G2 * H2i - H2i;

  // z3 step: H3 = diag(Q, R, ...) + C3' diag(rho) C3, banded W3
  const double r_first_x = w.rho2, r_mid = w.rho1, r_last = w.rho2;
  ing.Q3inv_first = (w.Q + r_first_x * Mat::Identity(n, n)).inverse();
  ing.Q3inv_mid = (w.Q + r_mid * Mat::Identity(n, n)).inverse();
  ing.Q3inv_last = (w.Q + r_last * Mat::Identity(n, n)).inverse();
  ing.R3inv_first = (w.R + w.rho1 * Mat::Identity(m, m)).inverse();
  ing.R3inv_mid = ing.R3inv_first;
  ing.R3inv_last = (w.R + w.rho2 * Mat::Identity(m, m)).inverse();

  std::vector<Mat> diag, off;
  for (int i = 0; i < N; ++i) {
    const Mat& Qi = i == 0 ? ing.Q3inv_first : ing.Q3inv_mid;
    const Mat& Ri = ing.R3inv_mid;
    const Mat& Qn = (i + 1 == N) ? ing.Q3inv_last : ing.Q3inv_mid;
    Mat D = model.A * Qi * model.A.transpose() + model.B * Ri * model.B.transpose() + Qn;
    diag.push_back(D);
    if (i < N - 1) off.push_back(-Qn * model.A.transpose());
  }
  ing.w3 = BandedCholesky::factor(diag, off);
  return ing;
}

MpctSolveResult solve_mpct_eadmm(const MpctIngredients& ing, const Vec& x_t, const Vec& x_r,
                                 const Vec& u_r, const Vec& z2_warm, const Vec& z3_warm,
                                 const Vec& lam_warm, double eps, long max_iter) {
  if (eps <= 0) throw std::invalid_argument("solve_mpct_eadmm: eps must be positive");
  const int n = ing.n, m = ing.m;
  Vec b = Vec::Zero(ing.mz);
  b.head(n) = x_t;
  Vec q2_ref(n + m);
  q2_ref.head(n) = -(ing.weights.T * x_r);
  q2_ref.tail(m) = -(ing.weights.S * u_r);

  MpctSolveResult res;
  Vec z2 = z2_warm, z3 = z3_warm, lam = lam_warm;
  long k = 0;
  while (true) {
    const Vec r23 = ing.mulC2(z2) + ing.mulC3(z3) - b;
    const Vec q1 = ing.mulC1T(lam + ing.rho_rows.cwiseProduct(r23));
    const Vec z1 = solve_box_qp(q1, ing.h1_diag_inv, ing.z1_lo, ing.z1_hi);

    const Vec c1z1 = ing.mulC1(z1);
    const Vec r13 = c1z1 + ing.mulC3(z3) - b;
    const Vec q2 = q2_ref + ing.mulC2T(lam + ing.rho_rows.cwiseProduct(r13));
    const Vec z2_next = ing.M2 * q2;

    const Vec c2z2 = ing.mulC2(z2_next);
    const Vec r12 = c1z1 + c2z2 - b;
    const Vec q3 = ing.mulC3T(lam + ing.rho_rows.cwiseProduct(r12));
    Vec mu = -ing.mulG3(ing.applyH3inv(q3));
    ing.w3.solveInPlace(mu);
    const Vec z3_next = -ing.applyH3inv(ing.mulG3T(mu) + q3);

    const Vec gamma = c1z1 + c2z2 + ing.mulC3(z3_next) - b;
    lam += ing.rho_rows.cwiseProduct(gamma);
    ++k;
    const double r_p = gamma.lpNorm<Eigen::Infinity>();
    const double d2 = (z2_next - z2).lpNorm<Eigen::Infinity>();
    const double d3 = (z3_next - z3).lpNorm<Eigen::Infinity>();
    z2 = z2_next;
    z3 = z3_next;
    if ((r_p <= eps && d2 <= eps && d3 <= eps) || k >= max_iter) {
      res.z1 = z1;
      res.z2 = z2;
      res.z3 = z3;
      res.lam = lam;
      res.u0 = z1.segment(n, m);
      res.iterations = k;
      res.r_p = r_p;
      res.converged = r_p <= eps && d2 <= eps && d3 <= eps;
      return res;
    }
  }
}

}  // namespace spmpc
