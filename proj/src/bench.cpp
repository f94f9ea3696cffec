#include "spmpc/bench.hpp"

#include "spmpc/hmpc.hpp"
#include "spmpc/linalg.hpp"
#include "spmpc/plants.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <chrono>
#include <memory>
#include <cmath>

namespace spmpc {
namespace {

SmoothMetric gershgorin_metric(const Mat& H) {
  // a coordinate the smooth part does not touch gets a unit entry so the
  // metric stays positive definite
  Vec r = H.cwiseAbs().rowwise().sum();
  for (Eigen::Index i = 0; i < r.size(); ++i)
    if (r[i] == 0.0) r[i] = 1.0;
  return SmoothMetric(std::move(r));
}

}  // namespace

LassoInstance gen_lasso(int N, int n_z, double alpha, Xoshiro256pp& rng) {
  if (n_z <= N) throw std::invalid_argument("gen_lasso: requires n_z > N");
  if (alpha <= 0) throw std::invalid_argument("gen_lasso: alpha must be positive");
  Mat A = Mat::Zero(N, n_z);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < n_z; ++j)
      if (rng.uniform() >= 0.9) A(i, j) = rng.normal();
  Vec b(N);
  for (int i = 0; i < N; ++i) b[i] = rng.normal();
  Vec wdiag(n_z);
  for (int j = 0; j < n_z; ++j) wdiag[j] = rng.uniformOpenClosed(alpha);

  const Mat H = A.transpose() * A / static_cast<double>(N);
  const Vec c = A.transpose() * b / static_cast<double>(N);
  const double f_const = b.squaredNorm() / (2.0 * static_cast<double>(N));

  LassoInstance inst{CompositeProblem{},
                     gershgorin_metric(H), Vec::Zero(n_z)};
  inst.problem.dim = n_z;
  inst.problem.grad_h = [H, c](const Vec& z) -> Vec { return H * z - c; };
  inst.problem.eval_f = [H, c, f_const, wdiag](const Vec& z) {
    return 0.5 * z.dot(H * z) - c.dot(z) + f_const + wdiag.dot(z.cwiseAbs());
  };
  inst.problem.tmap = [H, c, wdiag](const Vec& y, const SmoothMetric& R) -> Vec {
    const Vec step = y - R.applyInv(H * y - c);
    const Vec thresh = R.applyInv(wdiag);
    // soft threshold
    return step.array().sign() * (step.cwiseAbs() - thresh).cwiseMax(0.0).array();
  };
  return inst;
}

QpInstance gen_random_qp(int n_z, double alpha, double beta, Xoshiro256pp& rng) {
  if (alpha <= 0) throw std::invalid_argument("gen_random_qp: alpha must be positive");
  if (beta <= 0) throw std::invalid_argument("gen_random_qp: beta must be positive");
  // Gaussian factor: the reported conditioning (about 2 n_z / alpha for
  // small alpha) pins the distribution of M to a standard normal
  Mat M(n_z, n_z);
  for (int i = 0; i < n_z; ++i)
    for (int j = 0; j < n_z; ++j) M(i, j) = rng.normal();
  const Mat H = 0.5 * M.transpose() * M + alpha * Mat::Identity(n_z, n_z);
  Vec q(n_z);
  for (int j = 0; j < n_z; ++j) q[j] = rng.uniformOpenClosed(beta);

  QpInstance inst{CompositeProblem{}, gershgorin_metric(H), Vec::Zero(n_z), 0.0};
  inst.problem = make_smooth_problem(
      n_z, [H, q](const Vec& z) -> Vec { return H * z + q; },
      [H, q](const Vec& z) { return 0.5 * z.dot(H * z) + q.dot(z); });
  const Vec ev = Eigen::SelfAdjointEigenSolver<Mat>(H).eigenvalues();
  inst.cond_h = ev.maxCoeff() / ev.minCoeff();
  return inst;
}

const char* scheme_name(RestartScheme s) {
  switch (s) {
    case RestartScheme::alg7_obj: return "alg7";
    case RestartScheme::alg8_grad: return "alg8";
    case RestartScheme::alg10_general: return "alg10";
    case RestartScheme::lit_f: return "E_f";
    case RestartScheme::lit_g: return "E_g";
    case RestartScheme::lit_fstar: return "E_fstar";
    case RestartScheme::fixed_rate: return "fixed_rate";
  }
  return "?";
}

Aggregate aggregate_iterations(const std::vector<ReportRow>& rows, const std::string& scheme) {
  std::vector<double> it;
  for (const auto& r : rows)
    if (scheme.empty() || r.scheme == scheme) it.push_back(static_cast<double>(r.iterations));
  Aggregate a;
  if (it.empty()) return a;
  std::sort(it.begin(), it.end());
  a.min = it.front();
  a.max = it.back();
  double s = 0;
  for (double v : it) s += v;
  a.avg = s / static_cast<double>(it.size());
  const size_t n = it.size();
  a.med = n % 2 ? it[n / 2] : 0.5 * (it[n / 2 - 1] + it[n / 2]);
  return a;
}

RestartBenchResult run_restart_bench(const BenchSpec& spec) {
  RestartBenchResult out;
  if (spec.kind == BenchKind::example31) {
    const auto rows = run_example31();
    for (const auto& r : rows)
      out.rows.push_back({r.scheme, 0, r.k_out, r.j_out, 0.0, 0.0});
    return out;
  }
  double cond_sum = 0.0;
  for (int i = 0; i < spec.instances; ++i) {
    Xoshiro256pp rng = Xoshiro256pp::stream(spec.seed, static_cast<std::uint64_t>(i));
    CompositeProblem problem;
    std::optional<SmoothMetric> metric;
    Vec z0;
    if (spec.kind == BenchKind::lasso) {
      auto inst = gen_lasso(spec.N, spec.n_z, spec.alpha, rng);
      problem = std::move(inst.problem);
      metric.emplace(std::move(inst.metric));
      z0 = std::move(inst.z0);
    } else if (spec.kind == BenchKind::random_qp) {
      auto inst = gen_random_qp(spec.n_z, spec.alpha, spec.beta, rng);
      problem = std::move(inst.problem);
      metric.emplace(std::move(inst.metric));
      z0 = std::move(inst.z0);
      cond_sum += inst.cond_h;
    } else {
      throw std::invalid_argument("run_restart_bench: unsupported kind");
    }

    std::optional<double> f_star;
    for (const RestartScheme s : spec.schemes) {
      RestartConfig cfg;
      cfg.scheme = s;
      cfg.eps = spec.eps;
      cfg.fair_exit = true;
      if (s == RestartScheme::lit_fstar) {
        if (!f_star) {
          RestartConfig pre;
          pre.scheme = RestartScheme::alg7_obj;
          pre.eps = 1e-8;
          const auto ref = restart_fista_obj(problem, *metric, z0, pre);
          f_star = problem.eval_f(ref.solution);
        }
        cfg.f_star = f_star;
      }
      const auto t0 = std::chrono::steady_clock::now();
      const auto rep = restart_solve(problem, *metric, z0, cfg);
      const auto t1 = std::chrono::steady_clock::now();
      out.rows.push_back(
          {scheme_name(s), i, rep.k_out, rep.j_out, rep.final_residual,
           std::chrono::duration_cast<std::chrono::duration<double, std::micro>>(t1 - t0)
               .count()});
    }
  }
  if (spec.kind == BenchKind::random_qp && spec.instances > 0)
    out.mean_cond_h = cond_sum / spec.instances;
  return out;
}

std::vector<Example31Row> run_example31() {
  // two-variable ill-metric quadratic; the canonical oscillation example
  Mat H(2, 2);
  H << 0.5, 0, 0, 1;
  Vec q(2);
  q << -0.1, -1.0;
  const auto problem = make_smooth_problem(
      2, [H, q](const Vec& z) -> Vec { return H * z + q; },
      [H, q](const Vec& z) { return 0.5 * z.dot(H * z) + q.dot(z); });
  const SmoothMetric metric = SmoothMetric::scaledIdentity(2, 100.0);
  Vec z0(2);
  z0 << -2.0, -5.0;
  const double eps = 1e-6;

  std::vector<Example31Row> rows;
  FomOptions fo;
  fo.eps = eps;
  const auto plain = fista_solve(problem, metric, z0, fo);
  rows.push_back({"fista", plain.iterations, 0});

  const Vec zstar = -H.inverse() * q;
  const double f_star = problem.eval_f(zstar);
  for (const RestartScheme s :
       {RestartScheme::alg7_obj, RestartScheme::alg8_grad, RestartScheme::alg10_general,
        RestartScheme::lit_f, RestartScheme::lit_g, RestartScheme::lit_fstar}) {
    RestartConfig cfg;
    cfg.scheme = s;
    cfg.eps = eps;
    cfg.fair_exit = true;
    if (s == RestartScheme::lit_fstar) cfg.f_star = f_star;
    const auto rep = restart_solve(problem, metric, z0, cfg);
    rows.push_back({scheme_name(s), rep.k_out, rep.j_out});
  }
  return rows;
}

// ---------------------------------------------------------------------------

namespace {

struct BenchSetup {
  DiscreteLtiModel model;
  LtiModel lti;
  Mat Q, R;
  int N{};
  double rho{15.0};
  double rho1{}, rho2{};
  Vec x_r, u_r;
};

BenchSetup mpc_bench_setup(MpcBenchSystem system) {
  BenchSetup s;
  switch (system) {
    case MpcBenchSystem::chemical: {
      s.model = chemical_plant_model();
      s.Q = 5.0 * Mat::Identity(12, 12);
      s.R = 0.5 * Mat::Identity(6, 6);
      s.N = 20;
      s.rho1 = 2.0;
      s.rho2 = 40.0;
      s.x_r = s.model.toScaledState(refine_steady_state(
          chemical_plant(), chemical_plant_reference_state(), chemical_plant_reference_input()));
      s.u_r = s.model.toScaledInput(chemical_plant_reference_input());
      break;
    }
    case MpcBenchSystem::ball_plate: {
      s.model = ball_plate_model();
      Vec qd(8);
      qd << 10, 0.05, 0.05, 0.05, 10, 0.05, 0.05, 0.05;
      s.Q = qd.asDiagonal();
      s.R = 0.5 * Mat::Identity(2, 2);
      s.N = 30;
      s.rho1 = 10.0;
      s.rho2 = 200.0;
      Vec xr(8);
      xr << 1.8, 0, 0, 0, 1.4, 0, 0, 0;
      s.x_r = s.model.toScaledState(xr);
      s.u_r = s.model.toScaledInput(Vec::Zero(2));
      break;
    }
    case MpcBenchSystem::oscillating: {
      s.model = oscillating_masses_bench();
      Vec qd(6);
      qd << 15, 15, 15, 1, 1, 1;
      s.Q = qd.asDiagonal();
      s.R = 0.1 * Mat::Identity(2, 2);
      s.N = 10;
      s.rho1 = 2.0;
      s.rho2 = 40.0;
      Vec xr(6);
      xr << 0.25, 0.25, 0.25, 0, 0, 0;
      s.x_r = s.model.toScaledState(xr);
      s.u_r = s.model.toScaledInput(Vec::Constant(2, 0.5));
      break;
    }
  }
  s.lti = LtiModel::fromBench(s.model);
  return s;
}

}  // namespace

MpcBenchResult run_mpc_bench(const MpcBenchSpec& spec) {
  BenchSetup s = mpc_bench_setup(spec.system);
  if (spec.horizon) s.N = *spec.horizon;
  if (spec.rho) s.rho = *spec.rho;
  if (spec.rho_pair) {
    s.rho1 = spec.rho_pair->first;
    s.rho2 = spec.rho_pair->second;
  }
  // Ball-and-plate tracking runs use the heavier offset pair by default.
  if (spec.system == MpcBenchSystem::ball_plate && spec.variant == MpcVariant::mpct &&
      !spec.rho_pair) {
    s.rho1 = 10.0;
    s.rho2 = 2000.0;
  }

  const auto term = terminal_ingredients(s.lti, s.Q, s.R, s.x_r, s.u_r);

  MpcWeights w;
  w.Q = s.Q;
  w.R = s.R;
  w.N = s.N;
  w.rho = s.rho;
  w.rho1 = s.rho1;
  w.rho2 = s.rho2;
  w.T = spec.diagonal_terminal || spec.solver == MpcSolverKind::fista
            ? diagonal_terminal_cost(s.lti, s.Q, s.R)
            : term.T;
  if (spec.variant == MpcVariant::mpct) {
    if (spec.system == MpcBenchSystem::ball_plate && s.N == 15) {
      Vec td(8);
      td << 600, 50, 50, 50, 600, 50, 50, 50;
      w.T = td.asDiagonal();
      w.S = Vec::Constant(2, 0.3).asDiagonal();
    } else {
      w.T = term.T;
      w.S = s.R;
    }
  }

  MpcBenchResult out;
  const Vec x0 = Vec::Zero(s.lti.n());
  std::function<ControllerStep(const Vec&)> controller;

  if (spec.variant == MpcVariant::mpct) {
    auto ing = std::make_shared<MpctIngredients>(build_mpct_ingredients(s.lti, w));
    controller = [ing, s, spec](const Vec& x) {
      const auto r = solve_mpct_eadmm(*ing, x, s.x_r, s.u_r, Vec::Zero(ing->n2),
                                      Vec::Zero(ing->n1), Vec::Zero(ing->mz), spec.eps);
      return ControllerStep{r.u0, r.iterations, r.r_p, 0.0, r.converged};
    };
  } else if (spec.variant == MpcVariant::ellip) {
    auto ing = std::make_shared<MpcIngredients>(
        build_ingredients(s.lti, w, MpcVariant::ellip));
    set_terminal_ellipsoid(*ing, Ellipsoid(term.P, s.x_r, term.r));
    controller = [ing, s, spec](const Vec& x) {
      const auto r = solve_ellip_admm(*ing, x, s.x_r, s.u_r, Vec::Zero(ing->nz),
                                      Vec::Zero(ing->nz), spec.eps, spec.eps);
      return ControllerStep{r.u0, r.iterations, r.r_p, r.r_d, r.converged};
    };
  } else {
    auto ing = std::make_shared<MpcIngredients>(build_ingredients(s.lti, w, spec.variant));
    if (spec.solver == MpcSolverKind::fista) {
      controller = [ing, s, spec](const Vec& x) {
        const auto r =
            solve_std_fista(*ing, x, s.x_r, s.u_r, Vec::Zero(ing->mz), spec.eps);
        return ControllerStep{r.u0, r.iterations, r.r_p, 0.0, r.converged};
      };
    } else {
      controller = [ing, s, spec](const Vec& x) {
        const auto r = solve_std_admm(*ing, x, s.x_r, s.u_r, Vec::Zero(ing->nz),
                                      Vec::Zero(ing->nz), spec.eps, spec.eps);
        return ControllerStep{r.u0, r.iterations, r.r_p, r.r_d, r.converged};
      };
    }
  }

  out.trace = simulate_closed_loop(s.model, controller, x0, spec.samples);
  out.iterations = {out.trace.averageIterations(), out.trace.medianIterations(),
                    static_cast<double>(out.trace.maxIterations()),
                    static_cast<double>(out.trace.minIterations())};
  // engineering-unit performance index
  double phi = 0.0;
  Vec x = x0;
  for (const auto& smp : out.trace.samples) {
    x = s.model.A * smp.x + s.model.B * smp.u;
    const Vec dx = s.model.toEngineeringState(x) - s.model.toEngineeringState(s.x_r);
    const Vec du = s.model.toEngineeringInput(smp.u) - s.model.toEngineeringInput(s.u_r);
    phi += dx.dot(s.Q * dx) + du.dot(s.R * du);
  }
  out.phi = phi;
  return out;
}

HmpcBenchResult run_hmpc_bench(const HmpcBenchSpec& spec) {
  const DiscreteLtiModel bench = ball_plate_model_unscaled();
  HmpcProblem p;
  p.model.A = bench.A;
  p.model.B = bench.B;
  // band rows: the two velocities, the two angles and the two inputs
  p.model.E = Mat::Zero(6, 8);
  p.model.F = Mat::Zero(6, 2);
  p.model.E(0, 1) = 1;
  p.model.E(1, 2) = 1;
  p.model.E(2, 5) = 1;
  p.model.E(3, 6) = 1;
  p.model.F(4, 0) = 1;
  p.model.F(5, 1) = 1;
  p.model.y_lo = Vec(6);
  p.model.y_lo << -0.5, -M_PI / 4, -0.5, -M_PI / 4, -0.4, -0.4;
  p.model.y_hi = -p.model.y_lo;
  Vec qd(8);
  qd << 10, 0.05, 0.05, 0.05, 10, 0.05, 0.05, 0.05;
  p.Q = qd.asDiagonal();
  p.R = 0.5 * Mat::Identity(2, 2);
  Vec td(8);
  td << 600, 50, 50, 50, 600, 50, 50, 50;
  p.Te = td.asDiagonal();
  p.Se = Vec::Constant(2, 0.3).asDiagonal();
  p.Th = p.Te;
  p.Sh = 0.5 * p.Se;
  p.w = spec.w;
  p.N = spec.N;

  const HmpcProgram program(p);
  Vec x_r(8);
  x_r << 1.8, 0, 0, 0, 1.4, 0, 0, 0;
  const Vec u_r = Vec::Zero(2);

  HmpcSolveOptions opt;
  opt.eps_p = spec.eps;
  opt.eps_d = spec.eps;

  HmpcBenchResult out;
  std::vector<double> iters;
  Vec x = Vec::Zero(8);
  double phi = 0.0;
  for (int t = 0; t < spec.samples; ++t) {
    const auto sol = solve_hmpc(program, x, x_r, u_r, opt);
    iters.push_back(static_cast<double>(sol.iterations));
    const Vec u = sol.u[0];
    x = bench.A * x + bench.B * u;
    const Vec dx = x - x_r;
    phi += dx.dot(p.Q * dx) + u.dot(p.R * u);
  }
  out.phi = phi;
  out.x_final = x;
  std::sort(iters.begin(), iters.end());
  const size_t ni = iters.size();
  out.iterations.min = iters.front();
  out.iterations.max = iters.back();
  out.iterations.med = ni % 2 ? iters[ni / 2] : 0.5 * (iters[ni / 2 - 1] + iters[ni / 2]);
  double sum = 0;
  for (double v : iters) sum += v;
  out.iterations.avg = sum / static_cast<double>(ni);
  return out;
}

MpcBenchResult run_hmpc_mpct_reference(int horizon, int samples, double eps) {
  const DiscreteLtiModel bench = ball_plate_model_unscaled();
  LtiModel lti = LtiModel::fromBench(bench);
  MpcWeights w;
  Vec qd(8);
  qd << 10, 0.05, 0.05, 0.05, 10, 0.05, 0.05, 0.05;
  w.Q = qd.asDiagonal();
  w.R = 0.5 * Mat::Identity(2, 2);
  Vec td(8);
  td << 600, 50, 50, 50, 600, 50, 50, 50;
  w.T = td.asDiagonal();
  w.S = Vec::Constant(2, 0.3).asDiagonal();
  w.N = horizon;
  w.rho1 = 10.0;
  w.rho2 = 2000.0;
  Vec x_r(8);
  x_r << 1.8, 0, 0, 0, 1.4, 0, 0, 0;
  const Vec u_r = Vec::Zero(2);

  auto ing = std::make_shared<MpctIngredients>(build_mpct_ingredients(lti, w));
  auto controller = [ing, x_r, u_r, eps](const Vec& x) {
    const auto r = solve_mpct_eadmm(*ing, x, x_r, u_r, Vec::Zero(ing->n2),
                                    Vec::Zero(ing->n1), Vec::Zero(ing->mz), eps, 400'000);
    return ControllerStep{r.u0, r.iterations, r.r_p, 0.0, r.converged};
  };
  MpcBenchResult out;
  out.trace = simulate_closed_loop(bench, controller, Vec::Zero(8), samples);
  out.iterations = {out.trace.averageIterations(), out.trace.medianIterations(),
                    static_cast<double>(out.trace.maxIterations()),
                    static_cast<double>(out.trace.minIterations())};
  double phi = 0.0;
  Vec x = Vec::Zero(8);
  for (const auto& smp : out.trace.samples) {
    x = bench.A * smp.x + bench.B * smp.u;
    const Vec dx = x - x_r;
    const Vec du = smp.u - u_r;
    phi += dx.dot(w.Q * dx) + du.dot(w.R * du);
  }
  out.phi = phi;
  return out;
}

}  // namespace spmpc
