#pragma once

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

namespace spmpc {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Smoothness metric R of the descent bound. Diagonal metrics keep the
/// R and R^-1 actions O(n); a dense SPD metric falls back to a cached
/// Cholesky factor for the inverse action.
class SmoothMetric {
public:
  explicit SmoothMetric(Vec diagonal);
  explicit SmoothMetric(Mat dense);

  static SmoothMetric scaledIdentity(int dim, double value);

  int dim() const { return dim_; }
  bool isDiagonal() const { return dense_.size() == 0; }

  Vec apply(const Vec& v) const;     // R v
  Vec applyInv(const Vec& v) const;  // R^-1 v

  /// ||g||_{R^-1}, compensated accumulation for diagonal metrics.
  double dualNorm(const Vec& g) const;
  /// ||v||_R
  double primalNorm(const Vec& v) const;

  const Vec& diagonal() const { return diag_; }

private:
  int dim_{};
  Vec diag_;          // empty when dense
  Vec diag_inv_;
  Mat dense_;         // empty when diagonal
  Eigen::LLT<Mat> llt_;
};

/// Composite problem f = Psi + h over Z, with the T-map of Eq. (2.5a)
/// supplied per problem family (the map is assumed cheap to evaluate).
struct CompositeProblem {
  int dim{};
  std::function<Vec(const Vec&)> grad_h;
  std::function<double(const Vec&)> eval_f;
  std::function<Vec(const Vec&, const SmoothMetric&)> tmap;
};

/// Unconstrained smooth problem: T(y) = y - R^-1 grad(y).
CompositeProblem make_smooth_problem(int dim,
                                     std::function<Vec(const Vec&)> grad,
                                     std::function<double(const Vec&)> f);

struct CompositeGradient {
  Vec t;         // T(y)
  Vec g;         // G(y) = R (y - T(y))
  double gnorm;  // ||G(y)||_{R^-1} = ||y - T(y)||_R
};

CompositeGradient composite_gradient(const CompositeProblem& problem,
                                     const SmoothMetric& metric, const Vec& y);

struct FomTracePoint {
  double f{};
  double gnorm{};
  double t{};
};

struct FomReport {
  Vec solution;
  long iterations{};
  double final_residual{};
  std::vector<FomTracePoint> trace;
  bool converged{true};
};

/// Where the gradient-mapping exit test is evaluated. The point y_{k-1}
/// (z_{k-1} for the proximal gradient method) reuses the T-map already
/// computed in the iteration, so it is the cheap default.
enum class ExitAt { at_zk, at_yk_minus1 };

struct FomOptions {
  double eps{1e-6};
  long max_iter{1'000'000};
  ExitAt exit_at{ExitAt::at_yk_minus1};
  bool trace{false};
};

class MaxIterationsError : public std::runtime_error {
public:
  MaxIterationsError(std::string what, FomReport best)
      : std::runtime_error(std::move(what)), best_iterate(std::move(best)) {}
  FomReport best_iterate;
};

FomReport prox_grad_solve(const CompositeProblem& problem, const SmoothMetric& metric,
                          const Vec& z0, const FomOptions& opt);

FomReport fista_solve(const CompositeProblem& problem, const SmoothMetric& metric,
                      const Vec& z, const FomOptions& opt);

FomReport mfista_solve(const CompositeProblem& problem, const SmoothMetric& metric,
                       const Vec& z, const FomOptions& opt);

/// t_k = (1 + sqrt(1 + 4 t_{k-1}^2)) / 2
double t_next(double t_prev);

// ---------------------------------------------------------------------------
// Two-block ADMM (Algorithm 2) and the three-block extension (Algorithm 3).
// The sub-minimizations of the augmented Lagrangian are injected.

struct AdmmProblem {
  // z-update: argmin_z L_rho(z, v, lambda)
  std::function<Vec(const Vec& v, const Vec& lam)> min_z;
  // v-update: argmin_v L_rho(z, v, lambda)
  std::function<Vec(const Vec& z, const Vec& lam)> min_v;
  std::function<Vec(const Vec&)> mulC, mulD;  // coupling actions
  Vec d;
  double rho{};
};

struct AdmmResult {
  Vec z, v, lam;
  long iterations{};
  double r_p{}, r_d{};
  bool converged{true};
};

AdmmResult admm_solve(const AdmmProblem& ap, const Vec& v0, const Vec& lam0,
                      double eps_p, double eps_d, long max_iter = 100'000);

struct EadmmProblem {
  std::function<Vec(const Vec& z2, const Vec& z3, const Vec& lam)> min_z1;
  std::function<Vec(const Vec& z1, const Vec& z3, const Vec& lam)> min_z2;
  std::function<Vec(const Vec& z1, const Vec& z2, const Vec& lam)> min_z3;
  std::function<Vec(const Vec&)> mulC1, mulC2, mulC3;
  Vec d;
  double rho{};
};

struct EadmmResult {
  Vec z1, z2, z3, lam;
  long iterations{};
  double r_p{};
  bool converged{true};
};

EadmmResult eadmm_solve(const EadmmProblem& ap, const Vec& z2_0, const Vec& z3_0,
                        const Vec& lam0, double eps_p, double eps_d,
                        long max_iter = 100'000);

/// Kahan-compensated sum of squares; keeps iteration counts stable across
/// compilers when the exit test sits at the tolerance boundary.
double compensated_sumsq(const Vec& v);
double compensated_weighted_sumsq(const Vec& v, const Vec& w);

}  // namespace spmpc
