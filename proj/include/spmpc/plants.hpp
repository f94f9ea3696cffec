#pragma once

#include "spmpc/fom.hpp"

#include <string>

namespace spmpc {

/// Continuous-time nonlinear plant dchi/dt = rhs(chi, u) with engineering
/// unit bounds.
struct NonlinearPlant {
  int n{};
  int m{};
  std::function<Vec(const Vec&, const Vec&)> rhs;
  Vec chi_lo, chi_hi;  // engineering-unit state bounds
  Vec u_lo, u_hi;      // engineering-unit input bounds
  std::string name;
};

struct OperatingPoint {
  Vec chi0;  // steady state in engineering units
  Vec u0;
  Vec nx;    // diagonal scaling, positive entries
  Vec nu;
};

/// Discrete LTI model in scaled incremental units.
struct DiscreteLtiModel {
  Mat A, B;
  double ts{};
  Vec x_lo, x_hi, u_lo, u_hi;  // scaled bounds
  OperatingPoint op;
  std::string name;

  Vec toScaledState(const Vec& chi) const { return op.nx.cwiseProduct(chi - op.chi0); }
  Vec toScaledInput(const Vec& u) const { return op.nu.cwiseProduct(u - op.u0); }
  Vec toEngineeringState(const Vec& x) const { return op.chi0 + x.cwiseQuotient(op.nx); }
  Vec toEngineeringInput(const Vec& u) const { return op.u0 + u.cwiseQuotient(op.nu); }
};

// Test benches.
NonlinearPlant chemical_plant();
NonlinearPlant ball_plate();
/// Linear chain of three masses; returns the continuous (A_c, B_c).
void oscillating_masses_model(Mat& Ac, Mat& Bc);

/// Table values for the chemical plant: operating seed and reference.
Vec chemical_plant_operating_seed();   // Table state values (engineering units)
Vec chemical_plant_operating_input();  // heats off, nominal flows
Vec chemical_plant_reference_state();
Vec chemical_plant_reference_input();

/// Newton refinement of a steady state for fixed input, seeded at chi_seed.
Vec refine_steady_state(const NonlinearPlant& plant, const Vec& chi_seed, const Vec& u,
                        double tol = 1e-11, int max_iter = 60);

/// Central finite-difference Jacobians of the plant at (chi0, u0).
void linearize(const NonlinearPlant& plant, const Vec& chi0, const Vec& u0,
               Mat& Ac, Mat& Bc, double h = 1e-5);

/// Exact zero-order hold via the augmented matrix exponential.
void discretize_zoh(const Mat& Ac, const Mat& Bc, double ts, Mat& A, Mat& B);

/// Similarity transform to scaled incremental units plus bound conversion.
DiscreteLtiModel scale_model(const Mat& A, const Mat& B, const OperatingPoint& op,
                             const Vec& chi_lo, const Vec& chi_hi, const Vec& u_lo,
                             const Vec& u_hi, double ts, const std::string& name);

/// Fully assembled scaled benchmark models.
DiscreteLtiModel chemical_plant_model();
DiscreteLtiModel ball_plate_model();
DiscreteLtiModel oscillating_masses_bench();
/// Ball and plate in plain engineering units (no scaling).
DiscreteLtiModel ball_plate_model_unscaled();

struct ClosedLoopSample {
  Vec x;           // state at the sample (scaled units)
  Vec u;           // applied input
  long iterations{};
  double r_p{}, r_d{};
  double wall_us{};
  bool converged{true};
};

struct ClosedLoopTrace {
  std::vector<ClosedLoopSample> samples;
  Vec x_final;

  double averageIterations() const;
  double medianIterations() const;
  long maxIterations() const;
  long minIterations() const;
};

struct ControllerStep {
  Vec u;
  long iterations{};
  double r_p{}, r_d{};
  bool converged{true};
};

/// Simulates x+ = Ax + Bu with the injected controller; the model is both
/// plant and prediction model.
ClosedLoopTrace simulate_closed_loop(const DiscreteLtiModel& model,
                                     const std::function<ControllerStep(const Vec&)>& controller,
                                     const Vec& x0, int steps);

/// Sum over samples of ||x_k - x_r||_Q^2 + ||u_{k-1} - u_r||_R^2, k = 1..N.
double performance_index(const ClosedLoopTrace& trace, const Mat& A, const Mat& B,
                         const Vec& x_r, const Vec& u_r, const Mat& Q, const Mat& R);

/// CSV export, one row per sample; engineering units when a model is given.
void write_trace_csv(const ClosedLoopTrace& trace, const std::string& path,
                     const DiscreteLtiModel* eng_units_model = nullptr);

}  // namespace spmpc
