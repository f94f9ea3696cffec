#include "spmpc/banded.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <string>

namespace spmpc {

BandedCholesky BandedCholesky::factor(const std::vector<Mat>& diag,
                                      const std::vector<Mat>& off) {
  if (diag.empty()) throw std::invalid_argument("BandedCholesky: no diagonal blocks");
  const int N = static_cast<int>(diag.size());
  const int n = static_cast<int>(diag.front().rows());
  if (static_cast<int>(off.size()) != N - 1)
    throw std::invalid_argument("BandedCholesky: need N-1 off-diagonal blocks");

  BandedCholesky f;
  f.n_ = n;
  f.N_ = N;
  f.beta_hat_.reserve(N);
  f.alpha_.reserve(N - 1);

  Mat pivot = diag[0];
  Mat beta(n, n);                      // plain upper-triangular factor of the pivot
  for (int k = 0; k < N; ++k) {
    if (k > 0) {
      // beta^{k+1'} beta^{k+1} = D_{k+1} - alpha^k' alpha^k
      pivot = diag[k] - f.alpha_[k - 1].transpose() * f.alpha_[k - 1];
    }
    // upper-triangular Cholesky: pivot = beta' beta
    Eigen::LLT<Mat> llt(pivot);
    if (llt.info() != Eigen::Success)
      throw std::runtime_error("BandedCholesky: non-positive-definite pivot at block " +
                               std::to_string(k + 1));
    beta = llt.matrixU();
    Mat beta_hat = beta;
    for (int i = 0; i < n; ++i) beta_hat(i, i) = 1.0 / beta(i, i);
    f.beta_hat_.push_back(beta_hat);
    if (k < N - 1) {
      // solve beta' alpha = E_k  (lower-triangular system, block column-wise)
      Mat a = beta.transpose().triangularView<Eigen::Lower>().solve(off[k]);
      f.alpha_.push_back(std::move(a));
    }
  }
  return f;
}

void BandedCholesky::solveInPlace(Vec& z) const {
  if (z.size() != dim()) throw std::invalid_argument("BandedCholesky::solve: bad length");
  const int n = n_;
  const int N = N_;
  // Forward substitution (Wc' zhat = w), first n elements:
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < j; ++i) z[j] -= beta_hat_[0](i, j) * z[i];
    z[j] *= beta_hat_[0](j, j);
  }
  for (int k = 1; k < N; ++k) {
    const Mat& a = alpha_[k - 1];
    const Mat& bh = beta_hat_[k];
    const int base = k * n;
    const int prev = (k - 1) * n;
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < n; ++i) z[base + j] -= a(i, j) * z[prev + i];
      for (int i = 0; i < j; ++i) z[base + j] -= bh(i, j) * z[base + i];
      z[base + j] *= bh(j, j);
    }
  }
  // Backward substitution (Wc z = zhat), last n elements:
  {
    const Mat& bh = beta_hat_[N - 1];
    const int base = (N - 1) * n;
    for (int j = n - 1; j >= 0; --j) {
      for (int i = n - 1; i > j; --i) z[base + j] -= bh(j, i) * z[base + i];
      z[base + j] *= bh(j, j);
    }
  }
  for (int k = N - 2; k >= 0; --k) {
    const Mat& a = alpha_[k];
    const Mat& bh = beta_hat_[k];
    const int base = k * n;
    const int next = (k + 1) * n;
    for (int j = n - 1; j >= 0; --j) {
      for (int i = n - 1; i >= 0; --i) z[base + j] -= a(j, i) * z[next + i];
      for (int i = n - 1; i > j; --i) z[base + j] -= bh(j, i) * z[base + i];
      z[base + j] *= bh(j, j);
    }
  }
}

Vec BandedCholesky::solve(const Vec& w) const {
  Vec z = w;
  solveInPlace(z);
  return z;
}

Mat BandedCholesky::denseFactor() const {
  Mat Wc = Mat::Zero(dim(), dim());
  for (int k = 0; k < N_; ++k) {
    Mat beta = beta_hat_[k];
    for (int i = 0; i < n_; ++i) beta(i, i) = 1.0 / beta(i, i);
    Wc.block(k * n_, k * n_, n_, n_) = beta;
    if (k < N_ - 1) Wc.block(k * n_, (k + 1) * n_, n_, n_) = alpha_[k];
  }
  return Wc;
}

EqQpSolution solve_eq_qp(const EqQpData& data, const Vec& q, const Vec& b) {
  Vec mu = -(data.mul_g(data.apply_hinv(q)) + b);
  data.w_factor.solveInPlace(mu);
  Vec z = -data.apply_hinv(data.mul_gt(mu) + q);
  return {std::move(z), std::move(mu)};
}

Vec solve_box_qp(const Vec& q, const Vec& hinv_diag, const Vec& lo, const Vec& hi) {
  if (q.size() != hinv_diag.size() || q.size() != lo.size() || q.size() != hi.size())
    throw std::invalid_argument("solve_box_qp: dimension mismatch");
  if ((lo.array() > hi.array()).any())
    throw std::invalid_argument("solve_box_qp: lo > hi");
  return (-hinv_diag.cwiseProduct(q)).cwiseMin(hi).cwiseMax(lo);
}

Vec solve_box_qp(const Vec& q, double rho, const Vec& lo, const Vec& hi) {
  if (q.size() != lo.size() || q.size() != hi.size())
    throw std::invalid_argument("solve_box_qp: dimension mismatch");
  if ((lo.array() > hi.array()).any())
    throw std::invalid_argument("solve_box_qp: lo > hi");
  return (-q / rho).cwiseMin(hi).cwiseMax(lo);
}

Ellipsoid::Ellipsoid(Mat P, Vec c, double r) : P_(std::move(P)), c_(std::move(c)), r_(r) {
  if (r_ <= 0.0) throw std::invalid_argument("Ellipsoid: radius must be positive");
  if (P_.rows() != P_.cols() || P_.rows() != c_.size())
    throw std::invalid_argument("Ellipsoid: dimension mismatch");
  Eigen::SelfAdjointEigenSolver<Mat> es(P_);
  const Vec evals = es.eigenvalues();
  if (evals.minCoeff() <= 1e-12 * evals.maxCoeff())
    throw std::invalid_argument("Ellipsoid: P must be positive definite");
  P_half_ = es.eigenvectors() * evals.cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
  P_neg_half_ =
      es.eigenvectors() * evals.cwiseSqrt().cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
}

bool Ellipsoid::contains(const Vec& x, double tol) const {
  const Vec d = x - c_;
  return d.dot(P_ * d) <= r_ * r_ + tol;
}

Vec Ellipsoid::project(const Vec& a) const {
  const Vec d = a - c_;
  const double s2 = d.dot(P_ * d);
  if (s2 <= r_ * r_) return a;
  return (r_ / std::sqrt(s2)) * d + c_;
}

void soc_project(Eigen::Ref<Vec> s, double& t) {
  const double nrm = s.norm();
  if (nrm <= t) return;
  if (nrm <= -t) {
    s.setZero();
    t = 0.0;
    return;
  }
  const double a = 0.5 * (1.0 + t / nrm);
  s *= a;
  t = a * nrm;
}

}  // namespace spmpc
