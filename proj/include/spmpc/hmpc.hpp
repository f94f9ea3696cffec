#pragma once

#include "spmpc/mpc.hpp"

namespace spmpc {

/// Harmonic reference (x_e, x_s, x_c, u_e, u_s, u_c) with base frequency w,
/// anchored so that sample j = N carries (x_e + x_c, u_e + u_c).
struct HarmonicReference {
  Vec x_e, x_s, x_c;
  Vec u_e, u_s, u_c;
  double w{};
  int N{};
};

struct HarmonicSample {
  Vec x, u;
};

HarmonicSample harmonic_eval(const HarmonicReference& ref, long j);

/// One-step rotation: v_s+ = v_s cos w - v_c sin w, v_c+ = v_s sin w + v_c cos w.
void harmonic_rotate(const Vec& v_s, const Vec& v_c, double w, Vec& v_s_plus, Vec& v_c_plus);

/// System with coupled input-state constraints lo <= E x + F u <= hi.
struct ConstrainedLtiModel {
  Mat A, B;
  Mat E, F;
  Vec y_lo, y_hi;

  int n() const { return static_cast<int>(A.rows()); }
  int m() const { return static_cast<int>(B.cols()); }
  int p() const { return static_cast<int>(E.rows()); }
};

struct HmpcProblem {
  ConstrainedLtiModel model;
  Mat Q, R;          // stage weights
  Mat Te, Se;        // offset weights on (x_e - x_r, u_e - u_r)
  Mat Th, Sh;        // diagonal weights on the harmonic amplitudes
  Vec eps_y;         // empty -> 1e-6 (y_hi - y_lo)
  double w{};
  int N{};
};

struct HarmonicCheckReport {
  double worst_dynamics_residual{};  // max_j |x_{h,j+1} - A x_hj - B u_hj|
  double worst_band_violation{};     // max_j violation of lo <= Ex+Fu <= hi
  double steady_residual{};          // (6.3f)
  double rotation_residual{};        // (6.3g)-(6.3h)
  double worst_soc_margin{};         // min over cones of t - ||s||
};

HarmonicCheckReport harmonic_check(const HarmonicReference& ref,
                                   const ConstrainedLtiModel& model, const Vec& eps_y,
                                   long j_lo, long j_hi);

class HmpcProgram;

struct HmpcSolution {
  std::vector<Vec> x;  // x_0..x_N
  std::vector<Vec> u;  // u_0..u_{N-1}
  HarmonicReference reference;
  double objective{};
  long iterations{};
  double r_p{}, r_d{};
  bool converged{true};
};

struct HmpcSolveOptions {
  double eps_p{1e-5};
  double eps_d{1e-5};
  long max_iter{200'000};
};

HmpcSolution solve_hmpc(const HmpcProgram& program, const Vec& x_t, const Vec& x_r,
                        const Vec& u_r, const HmpcSolveOptions& opt = {});

/// Conic program data for the tracking problem: quadratic objective, the
/// equality block, and consensus rows for the band constraints plus one
/// second-order cone pair per output row. Factorizations are cached.
class HmpcProgram {
public:
  HmpcProgram(HmpcProblem problem);

  const HmpcProblem& problem() const { return prob_; }
  /// The zero-order-hold aliasing bound w <= pi/2 was exceeded; the program
  /// still builds, the flag is advisory.
  bool frequencyAdvisory() const { return freq_advisory_; }
  int numVariables() const { return nv_; }
  int numEqualities() const { return me_; }
  int coneCount() const { return 2 * prob_.model.p(); }

  // decision vector offsets: (x_0..x_N, u_0..u_{N-1}, x_e, x_s, x_c, u_e, u_s, u_c)
  int offX(int j) const { return j * n_; }
  int offU(int j) const { return (N_ + 1) * n_ + j * m_; }
  int offXe() const { return (N_ + 1) * n_ + N_ * m_; }
  int offXs() const { return offXe() + n_; }
  int offXc() const { return offXe() + 2 * n_; }
  int offUe() const { return offXe() + 3 * n_; }
  int offUs() const { return offUe() + m_; }
  int offUc() const { return offUe() + 2 * m_; }

private:
  HmpcProblem prob_;
  int n_{}, m_{}, p_{}, N_{}, nv_{}, me_{}, mc_{};
  Mat H_;       // standard-form Hessian (1/2 z'Hz + q'z)
  Vec q_;
  Mat E_;       // equality rows, rhs template has x_t in the head block
  Mat M_;       // consensus rows (band rows then cone triples)
  Vec off_;     // affine offsets of the consensus rows
  bool freq_advisory_{false};
  double rho_{20.0}, sigma_{1e-6};
  Eigen::LLT<Mat> llt_h_;   // H + sigma I + rho M'M
  Eigen::LLT<Mat> llt_e_;   // E (H + sigma I + rho M'M)^-1 E'

  friend HmpcSolution solve_hmpc(const HmpcProgram&, const Vec&, const Vec&, const Vec&,
                                 const HmpcSolveOptions&);
};

/// Feasible-point shift: input tail set to the harmonic, state rolled forward,
/// harmonic parts rotated one step.
struct ShiftedSolution {
  std::vector<Vec> x;
  std::vector<Vec> u;
  HarmonicReference reference;
};

ShiftedSolution shift_solution(const HmpcSolution& sol, const ConstrainedLtiModel& model);

/// Residuals of the feasibility conditions for a candidate solution tuple.
struct FeasibilityResiduals {
  double dynamics{};
  double initial_state{};
  double terminal_tie{};
  double steady{};
  double rotation{};
  double band{};
  double soc{};

  double worst() const;
};

FeasibilityResiduals hmpc_feasibility(const std::vector<Vec>& x, const std::vector<Vec>& u,
                                      const HarmonicReference& ref,
                                      const ConstrainedLtiModel& model, const Vec& eps_y,
                                      const Vec& x0);

/// Optimal artificial harmonic reference: sine and cosine parts vanish, so
/// the problem reduces to the closest admissible steady state in the
/// (Te, Se) metric under the strict band.
struct ArtificialReference {
  Vec x_e, u_e;
  double offset_cost{};
};

ArtificialReference optimal_artificial_reference(const HmpcProblem& p, const Vec& x_r,
                                                 const Vec& u_r, double eps = 1e-9);

/// Controllability index: smallest j with rank [B, AB, ..., A^{j-1}B] = n.
int controllability_index(const Mat& A, const Mat& B);

/// Academic two-state example system used in the study of the formulation.
ConstrainedLtiModel academic_example_model();

Vec default_eps_y(const ConstrainedLtiModel& model);

}  // namespace spmpc
