#pragma once

#include "spmpc/banded.hpp"
#include "spmpc/plants.hpp"

#include <iosfwd>
#include <optional>

namespace spmpc {

enum class MpcVariant { equ, lax, ellip, mpct };

const char* to_string(MpcVariant v);

/// Prediction model in the units the controller works in.
struct LtiModel {
  Mat A, B;
  Vec x_lo, x_hi, u_lo, u_hi;

  static LtiModel fromBench(const DiscreteLtiModel& m) {
    return {m.A, m.B, m.x_lo, m.x_hi, m.u_lo, m.u_hi};
  }
  int n() const { return static_cast<int>(A.rows()); }
  int m() const { return static_cast<int>(B.cols()); }
};

struct MpcWeights {
  Mat Q, R;
  Mat T;             // terminal weight (lax/ellip/mpct)
  Mat S;             // input offset weight (mpct)
  int N{};
  double rho{15.0};  // scalar penalty for the ADMM solvers
  double rho1{2.0};  // mpct: ordinary constraint rows
  double rho2{40.0}; // mpct: rows penalized more
  double eps_xu{1e-6};
  double big_m{1e6}; // mpct head-block bound, tunable
};

/// Assembled repeating-block data for the equ/lax/ellip variants.
struct MpcIngredients {
  MpcVariant variant{};
  LtiModel model;
  MpcWeights weights;
  int n{}, m{}, N{};
  int nz{}, mz{};

  Vec z_lo, z_hi;      // box on the decision vector (ellip: on z_o only)
  Vec hdiag;           // diagonal of H (FISTA path only; empty otherwise)
  Vec hdiag_inv;

  // ADMM path: block-diagonal H_rho inverses, one block per kind
  Mat Qrho_inv, Rrho_inv, Trho_inv;  // Trho: T+rho I (lax), T+rho P (ellip)
  BandedCholesky w_fista;            // G H^-1 G'
  BandedCholesky w_admm;             // G H_rho^-1 G'

  std::optional<Ellipsoid> terminal_set;  // ellip only

  // structure-exploiting products
  Vec mulG(const Vec& z) const;
  Vec mulGT(const Vec& lam) const;
  Vec applyHinvDiag(const Vec& v) const;  // FISTA path
  Vec applyHrhoInv(const Vec& v) const;   // ADMM path

  Vec buildQ(const Vec& x_r, const Vec& u_r) const;
  Vec buildB(const Vec& x_t, const Vec& x_r) const;

  /// Dense reconstructions for oracle checks.
  Mat denseG() const;
  Mat denseH() const;
};

MpcIngredients build_ingredients(const LtiModel& model, const MpcWeights& weights,
                                 MpcVariant variant);

/// Replaces the terminal set of an ellip ingredient set; c and r may change
/// between solves, the factorization only depends on P.
void set_terminal_ellipsoid(MpcIngredients& ing, const Ellipsoid& ell);

struct MpcSolveResult {
  Vec z;         // primal decision vector
  Vec v;         // ADMM copy (empty for FISTA)
  Vec lam;
  Vec u0;        // control action
  long iterations{};
  double r_p{}, r_d{};
  bool converged{true};
};

/// Algorithm 14 specialized to the standard formulations (diagonal weights).
MpcSolveResult solve_std_fista(const MpcIngredients& ing, const Vec& x_t, const Vec& x_r,
                               const Vec& u_r, const Vec& lam_warm, double eps,
                               long max_iter = 100'000);

/// Algorithm 15 specialized to the standard formulations.
MpcSolveResult solve_std_admm(const MpcIngredients& ing, const Vec& x_t, const Vec& x_r,
                              const Vec& u_r, const Vec& v_warm, const Vec& lam_warm,
                              double eps_p, double eps_d, long max_iter = 100'000);

/// ADMM with the split terminal state and the weighted ellipsoid projection.
MpcSolveResult solve_ellip_admm(const MpcIngredients& ing, const Vec& x_t, const Vec& x_r,
                                const Vec& u_r, const Vec& v_warm, const Vec& lam_warm,
                                double eps_p, double eps_d, long max_iter = 100'000);

// ---------------------------------------------------------------------------
// MPC for tracking via the three-block extended ADMM.

struct MpctIngredients {
  LtiModel model;
  MpcWeights weights;
  int n{}, m{}, N{};
  int n1{}, n2{}, mz{};

  Vec rho_rows;       // per-row penalty (rho2 on the emphasized groups)
  Vec h1_diag_inv;
  Vec z1_lo, z1_hi;
  Mat M2;             // closed-form z2 map
  Mat Q3inv_first, Q3inv_mid, Q3inv_last, R3inv_first, R3inv_mid, R3inv_last;
  BandedCholesky w3;  // factor of G3 H3^-1 G3'

  Vec applyH3inv(const Vec& v) const;
  Vec mulG3(const Vec& v) const;
  Vec mulG3T(const Vec& v) const;

  // residual-space actions: C1 z1 + C2 z2 + C3 z3 - b
  Vec mulC1(const Vec& z1) const;
  Vec mulC1T(const Vec& r) const;
  Vec mulC2(const Vec& z2) const;
  Vec mulC2T(const Vec& r) const;
  Vec mulC3(const Vec& z3) const;
  Vec mulC3T(const Vec& r) const;
};

MpctIngredients build_mpct_ingredients(const LtiModel& model, const MpcWeights& weights);

struct MpctSolveResult {
  Vec z1, z2, z3, lam;
  Vec u0;
  long iterations{};
  double r_p{};
  bool converged{true};
};

/// Algorithm 19 with the per-group penalty pair.
MpctSolveResult solve_mpct_eadmm(const MpctIngredients& ing, const Vec& x_t, const Vec& x_r,
                                 const Vec& u_r, const Vec& z2_warm, const Vec& z3_warm,
                                 const Vec& lam_warm, double eps, long max_iter = 100'000);

// ---------------------------------------------------------------------------
// Terminal ingredients and validation.

struct TerminalIngredients {
  Mat T;  // terminal cost, discrete Lyapunov solution for the softened gain
  Mat K;  // stabilizing gain
  Mat P;  // ellipsoid shape normalized so that radius 1 is admissible
  double r{1.0};
};

/// Substitute for an offline set synthesis: a detuned LQR gain (input weight
/// scaled by `softening`), the matching Lyapunov terminal cost, and the
/// largest admissible invariant ellipsoid of that shape normalized to r = 1.
TerminalIngredients terminal_ingredients(const LtiModel& model, const Mat& Q, const Mat& R,
                                         const Vec& x_r, const Vec& u_r,
                                         double softening = 100.0);

/// Diagonal row-sum surrogate of the Riccati terminal cost (FISTA path).
Mat diagonal_terminal_cost(const LtiModel& model, const Mat& Q, const Mat& R);

struct EllipsoidValidation {
  long samples{};
  long invariance_violations{};
  long admissibility_violations{};
  double worst_margin{};  // most negative invariance margin observed
};

/// Samples boundary and interior points of the ellipsoid and checks that the
/// successor under u = K(x - x_r) + u_r stays inside and that the state/input
/// constraints hold.
EllipsoidValidation validate_invariant_ellipsoid(const LtiModel& model, const Mat& K,
                                                 const Ellipsoid& ell, const Vec& x_r,
                                                 const Vec& u_r, long samples,
                                                 std::uint64_t seed);

// Ingredient text format (one labeled matrix per section, row-major decimal).
void write_ingredients(std::ostream& out, const MpcIngredients& ing);
MpcIngredients read_ingredients(std::istream& in);

}  // namespace spmpc
