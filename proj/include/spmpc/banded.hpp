#pragma once

#include "spmpc/fom.hpp"

namespace spmpc {

/// Cholesky factor W = Wc' Wc of a symmetric positive definite block
/// tridiagonal matrix, stored as the repeating blocks of the upper
/// bidiagonal Wc: N upper-triangular beta blocks (with the diagonal
/// entries stored as reciprocals) and N-1 dense alpha blocks. Nothing
/// else is kept; in particular no index arrays.
class BandedCholesky {
public:
  BandedCholesky() = default;

  /// Blockwise factorization from the diagonal blocks D_1..D_N and the
  /// super-diagonal blocks E_1..E_{N-1} of W. Throws on a non-PD pivot,
  /// naming the failing block.
  static BandedCholesky factor(const std::vector<Mat>& diag, const std::vector<Mat>& off);

  int blockSize() const { return n_; }
  int blockCount() const { return N_; }
  int dim() const { return n_ * N_; }

  /// Forward then backward substitution for Wz = w using a single working
  /// array; w is overwritten with the solution.
  void solveInPlace(Vec& w) const;
  Vec solve(const Vec& w) const;

  /// Reconstructs the dense Wc (test support).
  Mat denseFactor() const;

  const std::vector<Mat>& betaHat() const { return beta_hat_; }
  const std::vector<Mat>& alpha() const { return alpha_; }

private:
  int n_{0};
  int N_{0};
  std::vector<Mat> beta_hat_;  // upper triangular, reciprocal diagonal
  std::vector<Mat> alpha_;
};

/// Equality-constrained QP min z'Hz/2 + q'z s.t. Gz = b where H is block
/// diagonal and W = G H^-1 G' is block tridiagonal. The matrix actions are
/// injected so callers can exploit repeating blocks.
struct EqQpData {
  std::function<Vec(const Vec&)> apply_hinv;  // H^-1 v
  std::function<Vec(const Vec&)> mul_g;       // G v
  std::function<Vec(const Vec&)> mul_gt;      // G' v
  BandedCholesky w_factor;                    // factor of G H^-1 G'
};

struct EqQpSolution {
  Vec z;
  Vec mu;
};

/// mu solves W mu = -(G H^-1 q + b); z = -H^-1 (G' mu + q).
EqQpSolution solve_eq_qp(const EqQpData& data, const Vec& q, const Vec& b);

/// Separable box QP: z_j = clamp(-hinv_j q_j, lo_j, hi_j).
Vec solve_box_qp(const Vec& q, const Vec& hinv_diag, const Vec& lo, const Vec& hi);
/// Scalar-Hessian variant (H = rho I).
Vec solve_box_qp(const Vec& q, double rho, const Vec& lo, const Vec& hi);

/// Ellipsoid { x : (x-c)' P (x-c) <= r^2 } with the symmetric square root
/// of P cached for the weighted projection.
class Ellipsoid {
public:
  Ellipsoid(Mat P, Vec c, double r);

  const Mat& P() const { return P_; }
  const Mat& Phalf() const { return P_half_; }
  const Mat& PnegHalf() const { return P_neg_half_; }
  const Vec& center() const { return c_; }
  double radius() const { return r_; }

  bool contains(const Vec& x, double tol = 0.0) const;
  /// P-weighted projection of a onto the ellipsoid (Theorem-style closed
  /// form): a itself inside, else r (a-c)/||a-c||_P + c.
  Vec project(const Vec& a) const;

private:
  Mat P_, P_half_, P_neg_half_;
  Vec c_;
  double r_{};
};

/// Closed-form projection onto the second-order cone {(s,t): ||s||_2 <= t}.
void soc_project(Eigen::Ref<Vec> s, double& t);

}  // namespace spmpc
