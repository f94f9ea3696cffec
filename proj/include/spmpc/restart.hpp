#pragma once

#include "spmpc/fom.hpp"

namespace spmpc {

enum class RestartScheme {
  alg7_obj,      // objective-value scheme with adaptive minimum iterations
  alg8_grad,     // gradient-mapping scheme, restart from y_k
  alg10_general, // delayed-exit scheme around a monotone AFOM
  lit_f,         // restart when f(z_k) > f(z_{k-1})
  lit_g,         // restart when <G(y_{k-1}), z_k - z_{k-1}> > 0
  lit_fstar,     // restart when f(z_k) - f* <= (f(z_0) - f*)/e^2
  fixed_rate     // restart every k_m iterations
};

struct RestartConfig {
  RestartScheme scheme{RestartScheme::alg7_obj};
  double eps{1e-6};
  std::optional<double> f_star;   // required by lit_fstar
  std::optional<long> k_m;        // required by fixed_rate
  long max_iter{1'000'000};
  long max_restarts{100'000};
  /// Terminate the moment the gradient mapping at the point whose T-map
  /// was just computed drops below eps. On for benchmark reproduction.
  bool fair_exit{true};
  /// Algorithm 8 step 13 checks rho_j only at restarts; the practical
  /// variant also exits on ||G(y_{k-1})|| <= eps between restarts.
  bool alg8_practical_exit{false};
};

struct RestartPoint {
  long j{};
  double f{};
  long k_inner{};  // iterations of the inner call
  double n_floor{};
};

struct RestartReport {
  Vec solution;
  long j_out{};
  long k_out{};
  double final_residual{};
  std::vector<RestartPoint> restarts;
  bool converged{true};
};

/// Algorithm 7: restart FISTA on objective values, exit condition E_f^e(n)
/// with the minimum-iteration floor doubled when (3.13) fires.
RestartReport restart_fista_obj(const CompositeProblem& problem, const SmoothMetric& metric,
                                const Vec& r0, const RestartConfig& cfg);

/// Algorithm 8: gradient-based restart; the restart point is y_k and the
/// trigger fires when ||G(y_k)|| <= rho_j / e.
RestartReport restart_fista_grad(const CompositeProblem& problem, const SmoothMetric& metric,
                                 const Vec& r0, const RestartConfig& cfg);

struct DelayedExitResult {
  Vec z_m;
  long m{};
  double gnorm_best{};
  bool fair_hit{false};
};

/// Algorithm 9 realized through MFISTA with the delayed exit condition
/// E_f^3 (monotone inner method, Remark 3.28). `n` is the minimum number
/// of inner iterations; the fair exit reports the gradient mapping at the
/// point whose T-map the iteration produced.
DelayedExitResult delayed_afom(const CompositeProblem& problem, const SmoothMetric& metric,
                               const Vec& z0, double n, double fair_eps, long max_iter);

/// Algorithm 10 around MFISTA; terminal test ||G(r_{j+1})|| <= eps
/// (the gradient variant of the exit condition).
RestartReport restart_afom_general(const CompositeProblem& problem, const SmoothMetric& metric,
                                   const Vec& r0, const RestartConfig& cfg);

/// Literature baselines driven by the general restart procedure: each call
/// runs FISTA from T(r_{j-1}) until the configured restart condition fires;
/// j counts inner calls.
RestartReport restart_literature(const CompositeProblem& problem, const SmoothMetric& metric,
                                 const Vec& r0, const RestartConfig& cfg);

/// Dispatch on cfg.scheme.
RestartReport restart_solve(const CompositeProblem& problem, const SmoothMetric& metric,
                            const Vec& r0, const RestartConfig& cfg);

}  // namespace spmpc
