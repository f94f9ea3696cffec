#include "spmpc/qp.hpp"

#include <cmath>

namespace spmpc {
namespace {

BandedCholesky factor_dense_as_banded(const Mat& W, int block_size) {
  const int mz = static_cast<int>(W.rows());
  const int n = block_size > 0 ? block_size : mz;
  if (mz % n != 0)
    throw std::invalid_argument("factor_dense_as_banded: block size does not divide dim");
  const int N = mz / n;
  std::vector<Mat> diag, off;
  for (int k = 0; k < N; ++k) {
    diag.push_back(W.block(k * n, k * n, n, n));
    if (k < N - 1) off.push_back(W.block(k * n, (k + 1) * n, n, n));
  }
  return BandedCholesky::factor(diag, off);
}

}  // namespace

StructuredQp make_dense_qp(const Mat& H, const Vec& q, const Mat& G, const Vec& b,
                           const Vec& lo, const Vec& hi, double rho, int block_size) {
  StructuredQp qp;
  qp.nz = static_cast<int>(H.rows());
  qp.mz = static_cast<int>(G.rows());
  qp.q = q;
  qp.b = b;
  qp.lo = lo;
  qp.hi = hi;
  Mat Gc = G;
  qp.mul_g = [Gc](const Vec& v) -> Vec { return Gc * v; };
  qp.mul_gt = [Gc](const Vec& v) -> Vec { return Gc.transpose() * v; };
  qp.hdiag = H.diagonal();
  const bool diagonal_h = H.isApprox(Mat(H.diagonal().asDiagonal()), 1e-14) &&
                          (qp.hdiag.array() > 0.0).all();
  if (diagonal_h) {
    const Mat W = G * qp.hdiag.cwiseInverse().asDiagonal() * G.transpose();
    qp.w = factor_dense_as_banded(W, block_size);
  } else {
    qp.hdiag.resize(0);
  }
  if (rho > 0.0) {
    qp.rho = rho;
    const Mat Hrho = H + rho * Mat::Identity(qp.nz, qp.nz);
    const Mat Hrho_inv = Hrho.inverse();
    qp.apply_hrho_inv = [Hrho_inv](const Vec& v) -> Vec { return Hrho_inv * v; };
    qp.w_rho = factor_dense_as_banded(G * Hrho_inv * G.transpose(), block_size);
  }
  return qp;
}

DualFistaResult dual_fista_qp(const StructuredQp& qp, const Vec& lam0, double eps,
                              long max_iter) {
  if (eps <= 0.0) throw std::invalid_argument("dual_fista_qp: eps must be positive");
  if (qp.hdiag.size() != qp.nz)
    throw std::invalid_argument("dual_fista_qp: requires diagonal H");
  const Vec hinv = qp.hdiag.cwiseInverse();

  // Prologue (steps 1-9): first box solve from lambda itself.
  Vec qk = qp.q - qp.mul_gt(lam0);
  Vec z = solve_box_qp(qk, hinv, qp.lo, qp.hi);
  Vec gamma = -(qp.mul_g(z) - qp.b);
  Vec dl = qp.w.solve(gamma);
  Vec y = lam0 + dl;
  Vec lam = y;
  double t = 1.0;
  long k = 0;

  DualFistaResult res;
  while (true) {
    ++k;
    qk = qp.q - qp.mul_gt(y);
    z = solve_box_qp(qk, hinv, qp.lo, qp.hi);
    gamma = -(qp.mul_g(z) - qp.b);
    const double rnorm = gamma.lpNorm<Eigen::Infinity>();
    if (rnorm <= eps) {
      res.z = z;
      res.lam = y;
      res.iterations = k;
      res.residual = rnorm;
      return res;
    }
    if (k >= max_iter) {
      res.z = z;
      res.lam = y;
      res.iterations = k;
      res.residual = rnorm;
      res.converged = false;
      return res;
    }
    dl = qp.w.solve(gamma);
    const Vec lam_next = dl + y;
    const double tn = t_next(t);
    y = lam_next + ((t - 1.0) / tn) * (lam_next - lam);
    lam = lam_next;
    t = tn;
  }
}

QpAdmmResult admm_qp(const StructuredQp& qp, const Vec& v0, const Vec& lam0,
                     double eps_p, double eps_d, long max_iter) {
  if (eps_p <= 0.0 || eps_d <= 0.0)
    throw std::invalid_argument("admm_qp: tolerances must be positive");
  if (qp.rho <= 0.0 || !qp.apply_hrho_inv)
    throw std::invalid_argument("admm_qp: ADMM path not prepared (rho)");

  EqQpData eq;
  eq.apply_hinv = qp.apply_hrho_inv;
  eq.mul_g = qp.mul_g;
  eq.mul_gt = qp.mul_gt;
  eq.w_factor = qp.w_rho;

  QpAdmmResult res;
  Vec v = v0, lam = lam0;
  long k = 0;
  while (true) {
    const Vec qk = qp.q + lam - qp.rho * v;
    const Vec z = solve_eq_qp(eq, qk, qp.b).z;
    const Vec qhat = -qp.rho * z - lam;
    const Vec v_next = solve_box_qp(qhat, qp.rho, qp.lo, qp.hi);
    lam += qp.rho * (z - v_next);
    ++k;
    const double r_p = (z - v_next).lpNorm<Eigen::Infinity>();
    const double r_d = (v_next - v).lpNorm<Eigen::Infinity>();
    v = v_next;
    if ((r_p <= eps_p && r_d <= eps_d) || k >= max_iter) {
      res.z = z;
      res.v = v;
      res.lam = lam;
      res.iterations = k;
      res.r_p = r_p;
      res.r_d = r_d;
      res.converged = r_p <= eps_p && r_d <= eps_d;
      return res;
    }
  }
}

Vec dense_box_qp_oracle(const Mat& H, const Vec& q, const Mat& G, const Vec& b,
                        const Vec& lo, const Vec& hi) {
  const int n = static_cast<int>(H.rows());
  const int me = static_cast<int>(G.rows());
  // coordinates with huge bounds never clamp; they stay out of the enumeration
  std::vector<int> radix(n);
  long total = 1;
  for (int i = 0; i < n; ++i) {
    radix[i] = (std::abs(lo[i]) < 1e8 || std::abs(hi[i]) < 1e8) ? 3 : 1;
    total *= radix[i];
    if (total > 60'000'000L)
      throw std::invalid_argument("dense_box_qp_oracle: instance too large");
  }

  double best = std::numeric_limits<double>::infinity();
  Vec best_z;
  std::vector<int> state(n, 0);  // 0 free, 1 at lo, 2 at hi
  for (long pattern = 0; pattern < total; ++pattern) {
    long p = pattern;
    for (int i = 0; i < n; ++i) {
      state[i] = static_cast<int>(p % radix[i]);
      p /= radix[i];
    }
    std::vector<int> free_idx;
    Vec z = Vec::Zero(n);
    for (int i = 0; i < n; ++i) {
      if (state[i] == 0)
        free_idx.push_back(i);
      else
        z[i] = state[i] == 1 ? lo[i] : hi[i];
    }
    const int nf = static_cast<int>(free_idx.size());
    // KKT on the free coordinates with the clamped ones substituted.
    Mat K = Mat::Zero(nf + me, nf + me);
    Vec rhs = Vec::Zero(nf + me);
    for (int a = 0; a < nf; ++a) {
      for (int c = 0; c < nf; ++c) K(a, c) = H(free_idx[a], free_idx[c]);
      double lin = q[free_idx[a]];
      for (int i = 0; i < n; ++i)
        if (state[i] != 0) lin += H(free_idx[a], i) * z[i];
      rhs[a] = -lin;
      for (int r = 0; r < me; ++r) {
        K(a, nf + r) = G(r, free_idx[a]);
        K(nf + r, a) = G(r, free_idx[a]);
      }
    }
    for (int r = 0; r < me; ++r) {
      double fixed = 0.0;
      for (int i = 0; i < n; ++i)
        if (state[i] != 0) fixed += G(r, i) * z[i];
      rhs[nf + r] = b[r] - fixed;
    }
    if (nf + me > 0) {
      Eigen::FullPivLU<Mat> lu(K);
      if (!lu.isInvertible()) continue;
      const Vec sol = lu.solve(rhs);
      for (int a = 0; a < nf; ++a) z[free_idx[a]] = sol[a];
    } else if (me > 0) {
      continue;
    }
    // feasibility of the candidate
    if ((z.array() < lo.array() - 1e-9).any() || (z.array() > hi.array() + 1e-9).any())
      continue;
    if (me > 0 && (G * z - b).lpNorm<Eigen::Infinity>() > 1e-7) continue;
    const double val = 0.5 * z.dot(H * z) + q.dot(z);
    if (val < best - 1e-12) {
      best = val;
      best_z = z;
    }
  }
  if (best_z.size() == 0) throw std::runtime_error("dense_box_qp_oracle: no feasible pattern");
  return best_z;
}

}  // namespace spmpc
