#pragma once

#include "spmpc/banded.hpp"

namespace spmpc {

/// Structured QP  min z'Hz/2 + q'z  s.t. Gz = b, lo <= z <= hi, with banded
/// equality system and block-diagonal H. Matrix actions are injected so the
/// MPC builders can plug in the repeating-block products; a dense builder is
/// provided for small instances and tests.
struct StructuredQp {
  int nz{};
  int mz{};
  Vec q, b, lo, hi;

  std::function<Vec(const Vec&)> mul_g;   // G v
  std::function<Vec(const Vec&)> mul_gt;  // G' v

  // dual-FISTA path (requires diagonal H)
  Vec hdiag;
  BandedCholesky w;  // factor of G H^-1 G'

  // ADMM path, H_rho = H + rho I
  double rho{0.0};
  std::function<Vec(const Vec&)> apply_hrho_inv;
  BandedCholesky w_rho;  // factor of G H_rho^-1 G'
};

/// Dense construction (tests, tiny instances). Setting rho > 0 also prepares
/// the ADMM path.
StructuredQp make_dense_qp(const Mat& H, const Vec& q, const Mat& G, const Vec& b,
                           const Vec& lo, const Vec& hi, double rho = 0.0,
                           int block_size = 0);

struct DualFistaResult {
  Vec z, lam;
  long iterations{};
  double residual{};
  bool converged{true};
};

/// FISTA on the dual of the QP, smoothness metric W = G H^-1 G'. Exits when
/// ||G z_k - b||_inf <= eps; the prologue pass counts as iteration 1.
DualFistaResult dual_fista_qp(const StructuredQp& qp, const Vec& lam0, double eps,
                              long max_iter = 100'000);

struct QpAdmmResult {
  Vec z, v, lam;
  long iterations{};
  double r_p{}, r_d{};
  bool converged{true};
};

/// ADMM splitting of the QP: equality-constrained step on H_rho, box step on
/// rho I, scaled dual update. Exit on ||z_k - v_k||_inf and ||v_k - v_{k-1}||_inf.
QpAdmmResult admm_qp(const StructuredQp& qp, const Vec& v0, const Vec& lam0,
                     double eps_p, double eps_d, long max_iter = 100'000);

/// Active-set enumeration oracle for box-constrained equality QPs (test
/// support; exponential in nz, meant for nz <= ~14).
Vec dense_box_qp_oracle(const Mat& H, const Vec& q, const Mat& G, const Vec& b,
                        const Vec& lo, const Vec& hi);

}  // namespace spmpc
