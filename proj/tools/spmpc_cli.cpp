// Command line driver for the benchmark suite: seeded restart-scheme
// comparisons, MPC closed-loop scenarios with iteration statistics, and the
// ellipsoid sampling validator. Reports are CSV (plot-ready) or JSON.

#include "spmpc/bench.hpp"
#include "spmpc/hmpc.hpp"
#include "spmpc/report.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

namespace {

using namespace spmpc;

std::map<std::string, std::string> load_config(const std::string& path) {
  // flat key-value lines, '#' comments
  std::map<std::string, std::string> kv;
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path);
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string key, value;
    if (ls >> key >> value) kv[key] = value;
  }
  return kv;
}

RestartScheme parse_scheme(const std::string& s) {
  if (s == "alg7") return RestartScheme::alg7_obj;
  if (s == "alg8") return RestartScheme::alg8_grad;
  if (s == "alg10") return RestartScheme::alg10_general;
  if (s == "E_f") return RestartScheme::lit_f;
  if (s == "E_g") return RestartScheme::lit_g;
  if (s == "E_fstar") return RestartScheme::lit_fstar;
  if (s == "fixed_rate") return RestartScheme::fixed_rate;
  throw CLI::ValidationError("unknown scheme " + s);
}

int check_band(const std::string& label, double value, double target, double rel_tol) {
  const bool ok = std::abs(value - target) <= rel_tol * std::abs(target);
  std::cout << (ok ? "PASS " : "FAIL ") << label << ": " << value << " (target " << target
            << " +/-" << rel_tol * 100 << "%)\n";
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spmpc benchmark driver"};
  app.require_subcommand(1);

  std::string config_path, out_path, format = "csv";
  std::uint64_t seed = 1;
  int instances = 100;
  double eps = 0.0;
  bool check = false;

  app.add_option("--config", config_path, "flat key-value config file");

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--seed", seed, "master seed");
    sub->add_option("--instances", instances, "number of instances");
    sub->add_option("--eps", eps, "exit tolerance");
    sub->add_option("--out", out_path, "output report path");
    sub->add_option("--format", format, "csv or json")
        ->check(CLI::IsMember({"csv", "json"}));
    sub->add_flag("--check", check, "verify against the reference statistics (exit 2 on miss)");
  };

  // restart-bench ------------------------------------------------------------
  auto* rb = app.add_subcommand("restart-bench", "restart-scheme comparison on random instances");
  std::string bench_kind = "lasso";
  std::vector<std::string> scheme_names;
  int dim_N = 600, dim_nz = 800;
  double alpha = 0.003, beta = 20.0;
  rb->add_option("--bench", bench_kind, "lasso | qp")->check(CLI::IsMember({"lasso", "qp"}));
  rb->add_option("--scheme", scheme_names, "subset of schemes to run");
  rb->add_option("--rows", dim_N, "data rows (lasso)");
  rb->add_option("--dim", dim_nz, "decision dimension");
  rb->add_option("--alpha", alpha, "distribution parameter");
  rb->add_option("--beta", beta, "linear-term bound (qp)");
  add_common(rb);

  // example31 ----------------------------------------------------------------
  auto* ex = app.add_subcommand("example31", "golden iteration counts on the oscillation example");
  add_common(ex);

  // mpc-bench ----------------------------------------------------------------
  auto* mb = app.add_subcommand("mpc-bench", "closed-loop MPC iteration statistics");
  std::string system = "chemical", formulation = "lax", solver = "admm";
  int horizon = 0, samples = 50;
  double rho = 0.0, rho2 = 0.0;
  std::string trace_path;
  mb->add_option("--bench", system, "chemical | ball_plate | oscillating")
      ->check(CLI::IsMember({"chemical", "ball_plate", "oscillating"}));
  mb->add_option("--formulation", formulation, "lax | equ | ellip | mpct")
      ->check(CLI::IsMember({"lax", "equ", "ellip", "mpct"}));
  mb->add_option("--solver", solver, "admm | fista | eadmm")
      ->check(CLI::IsMember({"admm", "fista", "eadmm"}));
  mb->add_option("--horizon", horizon, "prediction horizon override");
  mb->add_option("--samples", samples, "closed-loop samples");
  mb->add_option("--rho", rho, "penalty parameter (rho1 for mpct)");
  mb->add_option("--rho2", rho2, "second penalty parameter (mpct)");
  mb->add_option("--trace", trace_path, "write the engineering-unit closed-loop trace CSV");
  add_common(mb);

  // hmpc-bench ---------------------------------------------------------------
  auto* hb = app.add_subcommand("hmpc-bench", "harmonic tracking comparison on the ball and plate");
  int hm_N = 5;
  double base_w = 0.3254;
  int mpct_N = 0;
  hb->add_option("--horizon", hm_N, "harmonic controller horizon");
  hb->add_option("--w", base_w, "base frequency");
  hb->add_option("--mpct-horizon", mpct_N, "also run the tracking MPC reference at this horizon");
  add_common(hb);

  // validate-ellipsoid ---------------------------------------------------------
  auto* ve = app.add_subcommand("validate-ellipsoid", "sampling check of a terminal ellipsoid");
  std::string ve_system = "oscillating";
  long ve_samples = 10000;
  ve->add_option("--bench", ve_system, "chemical | ball_plate | oscillating")
      ->check(CLI::IsMember({"chemical", "ball_plate", "oscillating"}));
  ve->add_option("--samples", ve_samples, "sample count");
  add_common(ve);

  CLI11_PARSE(app, argc, argv);

  try {
    if (!config_path.empty()) {
      const auto kv = load_config(config_path);
      if (kv.count("seed")) seed = std::stoull(kv.at("seed"));
      if (kv.count("instances")) instances = std::stoi(kv.at("instances"));
      if (kv.count("eps")) eps = std::stod(kv.at("eps"));
      if (kv.count("out")) out_path = kv.at("out");
      if (kv.count("format")) format = kv.at("format");
    }
    const ReportFormat fmt = format == "json" ? ReportFormat::json : ReportFormat::csv;
    int failures = 0;

    if (rb->parsed()) {
      BenchSpec spec;
      spec.kind = bench_kind == "lasso" ? BenchKind::lasso : BenchKind::random_qp;
      spec.seed = seed;
      spec.instances = instances;
      if (bench_kind == "lasso") {
        spec.N = dim_N;
        spec.n_z = dim_nz;
        spec.alpha = alpha;
        spec.eps = eps > 0 ? eps : 1e-7;
      } else {
        spec.n_z = dim_nz;
        spec.alpha = alpha;
        spec.beta = beta;
        spec.eps = eps > 0 ? eps : 1e-5;
      }
      if (!scheme_names.empty()) {
        spec.schemes.clear();
        for (const auto& s : scheme_names) spec.schemes.push_back(parse_scheme(s));
      }
      const auto res = run_restart_bench(spec);
      if (!out_path.empty()) emit_report(res.rows, fmt, out_path);
      for (const auto s : spec.schemes) {
        const auto a = aggregate_iterations(res.rows, scheme_name(s));
        std::cout << scheme_name(s) << ": avg " << a.avg << " med " << a.med << " max "
                  << a.max << " min " << a.min << '\n';
      }
      if (spec.kind == BenchKind::random_qp)
        std::cout << "mean cond(H): " << res.mean_cond_h << '\n';
    } else if (ex->parsed()) {
      const auto rows = run_example31();
      std::vector<ReportRow> rrows;
      const std::map<std::string, std::pair<long, long>> golden = {
          {"fista", {853, 0}}, {"alg7", {237, 8}},   {"alg8", {431, 14}},
          {"alg10", {239, 5}}, {"E_f", {246, 5}},    {"E_g", {221, 5}},
          {"E_fstar", {415, 13}}};
      for (const auto& r : rows) {
        std::cout << r.scheme << ": k_out " << r.k_out << " j_out " << r.j_out;
        const auto& g = golden.at(r.scheme);
        const bool ok = std::labs(r.k_out - g.first) <= 2 && std::labs(r.j_out - g.second) <= 1;
        if (check) {
          std::cout << (ok ? "  PASS" : "  FAIL");
          failures += ok ? 0 : 1;
        }
        std::cout << '\n';
        rrows.push_back({r.scheme, 0, r.k_out, r.j_out, 0.0, 0.0});
      }
      if (!out_path.empty()) emit_report(rrows, fmt, out_path);
    } else if (mb->parsed()) {
      MpcBenchSpec spec;
      spec.system = system == "chemical"  ? MpcBenchSystem::chemical
                    : system == "ball_plate" ? MpcBenchSystem::ball_plate
                                             : MpcBenchSystem::oscillating;
      spec.variant = formulation == "lax"   ? MpcVariant::lax
                     : formulation == "equ" ? MpcVariant::equ
                     : formulation == "ellip" ? MpcVariant::ellip
                                              : MpcVariant::mpct;
      spec.solver = solver == "fista" ? MpcSolverKind::fista
                    : solver == "eadmm" ? MpcSolverKind::eadmm
                                        : MpcSolverKind::admm;
      if (spec.variant == MpcVariant::mpct) spec.solver = MpcSolverKind::eadmm;
      spec.samples = samples;
      if (eps > 0) spec.eps = eps;
      if (horizon > 0) spec.horizon = horizon;
      if (rho > 0 && rho2 > 0)
        spec.rho_pair = {rho, rho2};
      else if (rho > 0)
        spec.rho = rho;
      const auto res = run_mpc_bench(spec);
      std::cout << system << ' ' << formulation << ' ' << solver << ": avg "
                << res.iterations.avg << " med " << res.iterations.med << " max "
                << res.iterations.max << " min " << res.iterations.min << " phi " << res.phi
                << '\n';
      if (!trace_path.empty()) {
        write_trace_csv(res.trace, trace_path);
        std::cout << "trace written to " << trace_path << '\n';
      }
      if (check && spec.system == MpcBenchSystem::chemical &&
          spec.solver == MpcSolverKind::admm) {
        const std::map<std::string, double> ref = {
            {"lax", 130.28}, {"equ", 130.64}, {"ellip", 130.2}, {"mpct", 197.32}};
        failures += check_band("chemical " + formulation + " avg iterations",
                               res.iterations.avg, ref.at(formulation), 0.15);
      }
    } else if (hb->parsed()) {
      HmpcBenchSpec spec;
      spec.N = hm_N;
      spec.w = base_w;
      if (eps > 0) spec.eps = eps;
      const auto res = run_hmpc_bench(spec);
      std::cout << "hmpc N=" << spec.N << " w=" << spec.w << ": phi " << res.phi
                << " iterations avg " << res.iterations.avg << '\n';
      if (check) failures += check_band("hmpc phi", res.phi, 511.09, 0.10);
      if (mpct_N > 0) {
        const auto mref = run_hmpc_mpct_reference(mpct_N);
        std::cout << "mpct N=" << mpct_N << ": phi " << mref.phi << " iterations avg "
                  << mref.iterations.avg << '\n';
      }
    } else if (ve->parsed()) {
      MpcBenchSystem sys = ve_system == "chemical"  ? MpcBenchSystem::chemical
                           : ve_system == "ball_plate" ? MpcBenchSystem::ball_plate
                                                       : MpcBenchSystem::oscillating;
      MpcBenchSpec spec;
      spec.system = sys;
      // reuse the bench setup through run_mpc_bench internals is overkill;
      // rebuild the ingredients directly
      DiscreteLtiModel model;
      Mat Q, R;
      Vec x_r, u_r;
      if (sys == MpcBenchSystem::chemical) {
        model = chemical_plant_model();
        Q = 5.0 * Mat::Identity(12, 12);
        R = 0.5 * Mat::Identity(6, 6);
        x_r = model.toScaledState(refine_steady_state(chemical_plant(),
                                                      chemical_plant_reference_state(),
                                                      chemical_plant_reference_input()));
        u_r = model.toScaledInput(chemical_plant_reference_input());
      } else if (sys == MpcBenchSystem::ball_plate) {
        model = ball_plate_model();
        Vec qd(8);
        qd << 10, 0.05, 0.05, 0.05, 10, 0.05, 0.05, 0.05;
        Q = qd.asDiagonal();
        R = 0.5 * Mat::Identity(2, 2);
        Vec xr(8);
        xr << 1.8, 0, 0, 0, 1.4, 0, 0, 0;
        x_r = model.toScaledState(xr);
        u_r = model.toScaledInput(Vec::Zero(2));
      } else {
        model = oscillating_masses_bench();
        Vec qd(6);
        qd << 15, 15, 15, 1, 1, 1;
        Q = qd.asDiagonal();
        R = 0.1 * Mat::Identity(2, 2);
        Vec xr(6);
        xr << 0.25, 0.25, 0.25, 0, 0, 0;
        x_r = model.toScaledState(xr);
        u_r = model.toScaledInput(Vec::Constant(2, 0.5));
      }
      const LtiModel lti = LtiModel::fromBench(model);
      const auto term = terminal_ingredients(lti, Q, R, x_r, u_r);
      const Ellipsoid ell(term.P, x_r, term.r);
      const auto rep = validate_invariant_ellipsoid(lti, term.K, ell, x_r, u_r, ve_samples, seed);
      std::cout << ve_system << ": samples " << rep.samples << " invariance violations "
                << rep.invariance_violations << " admissibility violations "
                << rep.admissibility_violations << " worst margin " << rep.worst_margin
                << '\n';
      if (check && (rep.invariance_violations > 0 || rep.admissibility_violations > 0))
        ++failures;
    }

    return failures > 0 ? 2 : 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
