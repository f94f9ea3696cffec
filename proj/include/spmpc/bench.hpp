#pragma once

#include "spmpc/mpc.hpp"
#include "spmpc/restart.hpp"
#include "spmpc/rng.hpp"

#include <string>

namespace spmpc {

/// Weighted Lasso instance min (1/2N)||Az - b||^2 + ||Wz||_1 with sparse
/// Gaussian A, Gershgorin metric R_ii = sum_j |H_ij|, H = A'A/N, and the
/// shrinkage T-map.
struct LassoInstance {
  CompositeProblem problem;
  SmoothMetric metric;
  Vec z0;
};

LassoInstance gen_lasso(int N, int n_z, double alpha, Xoshiro256pp& rng);

/// Unconstrained QP min z'Hz/2 + q'z with H = M'M/2 + alpha I, M uniform on
/// (0,1], q uniform on (0,beta]; same Gershgorin metric.
struct QpInstance {
  CompositeProblem problem;
  SmoothMetric metric;
  Vec z0;
  double cond_h{};
};

QpInstance gen_random_qp(int n_z, double alpha, double beta, Xoshiro256pp& rng);

struct ReportRow {
  std::string scheme;
  long instance{};
  long iterations{};
  long restarts{};
  double residual{};
  double wall_us{};
};

struct Aggregate {
  double avg{}, med{};
  double max{}, min{};
};

Aggregate aggregate_iterations(const std::vector<ReportRow>& rows, const std::string& scheme);

enum class BenchKind { lasso, random_qp, example31, mpc_scenario, hmpc_scenario };

struct BenchSpec {
  BenchKind kind{BenchKind::example31};
  std::uint64_t seed{1};
  int instances{100};
  int N{600};
  int n_z{800};
  double alpha{0.003};
  double beta{20.0};
  double eps{1e-7};
  std::vector<RestartScheme> schemes{
      RestartScheme::alg7_obj, RestartScheme::alg8_grad, RestartScheme::alg10_general,
      RestartScheme::lit_f,    RestartScheme::lit_g,     RestartScheme::lit_fstar};
};

const char* scheme_name(RestartScheme s);

struct RestartBenchResult {
  std::vector<ReportRow> rows;
  double mean_cond_h{};  // random_qp only
};

RestartBenchResult run_restart_bench(const BenchSpec& spec);

/// The six golden counter pairs plus the non-restarted run on the
/// two-variable oscillation example.
struct Example31Row {
  std::string scheme;
  long k_out{};
  long j_out{};
};
std::vector<Example31Row> run_example31();

// ---------------------------------------------------------------------------
// MPC closed-loop scenarios.

enum class MpcBenchSystem { chemical, ball_plate, oscillating };
enum class MpcSolverKind { admm, fista, eadmm };

struct MpcBenchSpec {
  MpcBenchSystem system{MpcBenchSystem::chemical};
  MpcVariant variant{MpcVariant::lax};
  MpcSolverKind solver{MpcSolverKind::admm};
  int samples{50};
  double eps{1e-4};
  /// diagonal row-sum surrogate terminal cost (the FISTA-compatible choice)
  bool diagonal_terminal{false};
  std::optional<double> rho;           // scalar penalty override
  std::optional<std::pair<double, double>> rho_pair;  // mpct penalties
  std::optional<int> horizon;
};

struct MpcBenchResult {
  ClosedLoopTrace trace;
  Aggregate iterations;
  double phi{};  // engineering-unit performance index
};

MpcBenchResult run_mpc_bench(const MpcBenchSpec& spec);

struct HmpcBenchSpec {
  int N{5};
  double w{0.3254};
  int samples{50};
  double eps{1e-5};
};

struct HmpcBenchResult {
  Aggregate iterations;
  double phi{};
  Vec x_final;
};

/// Ball-and-plate tracking comparison in engineering units.
HmpcBenchResult run_hmpc_bench(const HmpcBenchSpec& spec);
/// The MPCT side of the same comparison (same units and weighting).
MpcBenchResult run_hmpc_mpct_reference(int horizon, int samples = 50, double eps = 1e-5);

}  // namespace spmpc
