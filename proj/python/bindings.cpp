#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "spmpc/bench.hpp"
#include "spmpc/hmpc.hpp"
#include "spmpc/linalg.hpp"
#include "spmpc/plants.hpp"
#include "spmpc/report.hpp"

namespace py = pybind11;
using namespace spmpc;

namespace {

CompositeProblem quadratic_problem(const Mat& H, const Vec& q) {
  return make_smooth_problem(
      static_cast<int>(H.rows()),
      [H, q](const Vec& z) -> Vec { return H * z + q; },
      [H, q](const Vec& z) { return 0.5 * z.dot(H * z) + q.dot(z); });
}

RestartScheme scheme_from_name(const std::string& name) {
  for (const auto s : {RestartScheme::alg7_obj, RestartScheme::alg8_grad,
                       RestartScheme::alg10_general, RestartScheme::lit_f,
                       RestartScheme::lit_g, RestartScheme::lit_fstar,
                       RestartScheme::fixed_rate})
    if (name == scheme_name(s)) return s;
  throw std::invalid_argument("unknown restart scheme: " + name);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "First-order solvers for predictive control: accelerated methods "
            "with restarts, structure-exploiting QP solvers, harmonic tracking.";

  // ---- first-order methods on quadratics -----------------------------------
  py::class_<FomReport>(m, "FomReport")
      .def_readonly("solution", &FomReport::solution)
      .def_readonly("iterations", &FomReport::iterations)
      .def_readonly("final_residual", &FomReport::final_residual)
      .def_readonly("converged", &FomReport::converged);

  m.def("t_next", &t_next, py::arg("t_prev"));

  m.def(
      "fista_quadratic",
      [](const Mat& H, const Vec& q, const Vec& r_diag, const Vec& z0, double eps,
         long max_iter) {
        FomOptions opt;
        opt.eps = eps;
        opt.max_iter = max_iter;
        return fista_solve(quadratic_problem(H, q), SmoothMetric(r_diag), z0, opt);
      },
      py::arg("H"), py::arg("q"), py::arg("metric_diag"), py::arg("z0"),
      py::arg("eps") = 1e-6, py::arg("max_iter") = 1'000'000,
      "FISTA on min z'Hz/2 + q'z under a diagonal smoothness metric.");

  py::class_<RestartReport>(m, "RestartReport")
      .def_readonly("solution", &RestartReport::solution)
      .def_readonly("k_out", &RestartReport::k_out)
      .def_readonly("j_out", &RestartReport::j_out)
      .def_readonly("final_residual", &RestartReport::final_residual)
      .def_readonly("converged", &RestartReport::converged);

  m.def(
      "restart_quadratic",
      [](const std::string& scheme, const Mat& H, const Vec& q, const Vec& r_diag,
         const Vec& z0, double eps, std::optional<double> f_star) {
        RestartConfig cfg;
        cfg.scheme = scheme_from_name(scheme);
        cfg.eps = eps;
        cfg.f_star = f_star;
        return restart_solve(quadratic_problem(H, q), SmoothMetric(r_diag), z0, cfg);
      },
      py::arg("scheme"), py::arg("H"), py::arg("q"), py::arg("metric_diag"),
      py::arg("z0"), py::arg("eps") = 1e-6, py::arg("f_star") = std::nullopt,
      "Restarted FISTA variants on a quadratic; schemes: alg7, alg8, alg10, "
      "E_f, E_g, E_fstar.");

  // ---- structure-exploiting kernels -----------------------------------------
  py::class_<BandedCholesky>(m, "BandedCholesky")
      .def_static("factor", &BandedCholesky::factor, py::arg("diag_blocks"),
                  py::arg("off_blocks"))
      .def("solve", &BandedCholesky::solve, py::arg("w"))
      .def_property_readonly("block_size", &BandedCholesky::blockSize)
      .def_property_readonly("block_count", &BandedCholesky::blockCount);

  m.def("solve_box_qp",
        py::overload_cast<const Vec&, const Vec&, const Vec&, const Vec&>(&solve_box_qp),
        py::arg("q"), py::arg("hinv_diag"), py::arg("lo"), py::arg("hi"));

  py::class_<Ellipsoid>(m, "Ellipsoid")
      .def(py::init<Mat, Vec, double>(), py::arg("P"), py::arg("c"), py::arg("r"))
      .def("project", &Ellipsoid::project, py::arg("a"))
      .def("contains", &Ellipsoid::contains, py::arg("x"), py::arg("tol") = 0.0)
      .def_property_readonly("P", &Ellipsoid::P)
      .def_property_readonly("center", &Ellipsoid::center)
      .def_property_readonly("radius", &Ellipsoid::radius);

  // ---- model pipeline --------------------------------------------------------
  m.def("expm", &expm, py::arg("A"));
  m.def("solve_dare", &solve_dare, py::arg("A"), py::arg("B"), py::arg("Q"), py::arg("R"),
        py::arg("tol") = 1e-10, py::arg("max_iter") = 100'000);
  m.def("discretize_zoh",
        [](const Mat& Ac, const Mat& Bc, double ts) {
          Mat A, B;
          discretize_zoh(Ac, Bc, ts, A, B);
          return py::make_tuple(A, B);
        },
        py::arg("Ac"), py::arg("Bc"), py::arg("ts"));

  py::class_<DiscreteLtiModel>(m, "DiscreteLtiModel")
      .def_readonly("A", &DiscreteLtiModel::A)
      .def_readonly("B", &DiscreteLtiModel::B)
      .def_readonly("ts", &DiscreteLtiModel::ts)
      .def_readonly("x_lo", &DiscreteLtiModel::x_lo)
      .def_readonly("x_hi", &DiscreteLtiModel::x_hi)
      .def_readonly("u_lo", &DiscreteLtiModel::u_lo)
      .def_readonly("u_hi", &DiscreteLtiModel::u_hi)
      .def_readonly("name", &DiscreteLtiModel::name)
      .def("to_scaled_state", &DiscreteLtiModel::toScaledState)
      .def("to_engineering_state", &DiscreteLtiModel::toEngineeringState);

  m.def("chemical_plant_model", &chemical_plant_model);
  m.def("ball_plate_model", &ball_plate_model);
  m.def("ball_plate_model_unscaled", &ball_plate_model_unscaled);
  m.def("oscillating_masses_bench", &oscillating_masses_bench);

  // ---- MPC solvers ------------------------------------------------------------
  py::class_<LtiModel>(m, "LtiModel")
      .def(py::init([](const Mat& A, const Mat& B, const Vec& x_lo, const Vec& x_hi,
                       const Vec& u_lo, const Vec& u_hi) {
             return LtiModel{A, B, x_lo, x_hi, u_lo, u_hi};
           }),
           py::arg("A"), py::arg("B"), py::arg("x_lo"), py::arg("x_hi"), py::arg("u_lo"),
           py::arg("u_hi"))
      .def_static("from_bench", &LtiModel::fromBench);

  py::enum_<MpcVariant>(m, "MpcVariant")
      .value("equ", MpcVariant::equ)
      .value("lax", MpcVariant::lax)
      .value("ellip", MpcVariant::ellip)
      .value("mpct", MpcVariant::mpct);

  py::class_<MpcWeights>(m, "MpcWeights")
      .def(py::init<>())
      .def_readwrite("Q", &MpcWeights::Q)
      .def_readwrite("R", &MpcWeights::R)
      .def_readwrite("T", &MpcWeights::T)
      .def_readwrite("S", &MpcWeights::S)
      .def_readwrite("N", &MpcWeights::N)
      .def_readwrite("rho", &MpcWeights::rho)
      .def_readwrite("rho1", &MpcWeights::rho1)
      .def_readwrite("rho2", &MpcWeights::rho2);

  py::class_<MpcIngredients>(m, "MpcIngredients")
      .def_readonly("nz", &MpcIngredients::nz)
      .def_readonly("mz", &MpcIngredients::mz);
  py::class_<MpctIngredients>(m, "MpctIngredients")
      .def_readonly("n1", &MpctIngredients::n1)
      .def_readonly("n2", &MpctIngredients::n2)
      .def_readonly("mz", &MpctIngredients::mz);

  py::class_<MpcSolveResult>(m, "MpcSolveResult")
      .def_readonly("z", &MpcSolveResult::z)
      .def_readonly("v", &MpcSolveResult::v)
      .def_readonly("lam", &MpcSolveResult::lam)
      .def_readonly("u0", &MpcSolveResult::u0)
      .def_readonly("iterations", &MpcSolveResult::iterations)
      .def_readonly("converged", &MpcSolveResult::converged);
  py::class_<MpctSolveResult>(m, "MpctSolveResult")
      .def_readonly("z1", &MpctSolveResult::z1)
      .def_readonly("z2", &MpctSolveResult::z2)
      .def_readonly("u0", &MpctSolveResult::u0)
      .def_readonly("iterations", &MpctSolveResult::iterations)
      .def_readonly("converged", &MpctSolveResult::converged);

  m.def("build_ingredients", &build_ingredients, py::arg("model"), py::arg("weights"),
        py::arg("variant"));
  m.def("set_terminal_ellipsoid", &set_terminal_ellipsoid, py::arg("ingredients"),
        py::arg("ellipsoid"));
  m.def("build_mpct_ingredients", &build_mpct_ingredients, py::arg("model"),
        py::arg("weights"));
  m.def(
      "solve_std_fista",
      [](const MpcIngredients& ing, const Vec& x_t, const Vec& x_r, const Vec& u_r,
         double eps) {
        return solve_std_fista(ing, x_t, x_r, u_r, Vec::Zero(ing.mz), eps);
      },
      py::arg("ingredients"), py::arg("x_t"), py::arg("x_r"), py::arg("u_r"),
      py::arg("eps") = 1e-4);
  m.def(
      "solve_std_admm",
      [](const MpcIngredients& ing, const Vec& x_t, const Vec& x_r, const Vec& u_r,
         double eps) {
        return solve_std_admm(ing, x_t, x_r, u_r, Vec::Zero(ing.nz), Vec::Zero(ing.nz),
                              eps, eps);
      },
      py::arg("ingredients"), py::arg("x_t"), py::arg("x_r"), py::arg("u_r"),
      py::arg("eps") = 1e-4);
  m.def(
      "solve_ellip_admm",
      [](const MpcIngredients& ing, const Vec& x_t, const Vec& x_r, const Vec& u_r,
         double eps) {
        return solve_ellip_admm(ing, x_t, x_r, u_r, Vec::Zero(ing.nz), Vec::Zero(ing.nz),
                                eps, eps);
      },
      py::arg("ingredients"), py::arg("x_t"), py::arg("x_r"), py::arg("u_r"),
      py::arg("eps") = 1e-4);
  m.def(
      "solve_mpct_eadmm",
      [](const MpctIngredients& ing, const Vec& x_t, const Vec& x_r, const Vec& u_r,
         double eps) {
        return solve_mpct_eadmm(ing, x_t, x_r, u_r, Vec::Zero(ing.n2), Vec::Zero(ing.n1),
                                Vec::Zero(ing.mz), eps);
      },
      py::arg("ingredients"), py::arg("x_t"), py::arg("x_r"), py::arg("u_r"),
      py::arg("eps") = 1e-4);

  py::class_<TerminalIngredients>(m, "TerminalIngredients")
      .def_readonly("T", &TerminalIngredients::T)
      .def_readonly("K", &TerminalIngredients::K)
      .def_readonly("P", &TerminalIngredients::P)
      .def_readonly("r", &TerminalIngredients::r);
  m.def("terminal_ingredients", &terminal_ingredients, py::arg("model"), py::arg("Q"),
        py::arg("R"), py::arg("x_r"), py::arg("u_r"), py::arg("softening") = 100.0);

  // ---- harmonic tracking -------------------------------------------------------
  py::class_<HarmonicReference>(m, "HarmonicReference")
      .def(py::init<>())
      .def_readwrite("x_e", &HarmonicReference::x_e)
      .def_readwrite("x_s", &HarmonicReference::x_s)
      .def_readwrite("x_c", &HarmonicReference::x_c)
      .def_readwrite("u_e", &HarmonicReference::u_e)
      .def_readwrite("u_s", &HarmonicReference::u_s)
      .def_readwrite("u_c", &HarmonicReference::u_c)
      .def_readwrite("w", &HarmonicReference::w)
      .def_readwrite("N", &HarmonicReference::N);

  m.def(
      "harmonic_eval",
      [](const HarmonicReference& ref, long j) {
        const auto s = harmonic_eval(ref, j);
        return py::make_tuple(s.x, s.u);
      },
      py::arg("reference"), py::arg("j"));
  m.def(
      "harmonic_rotate",
      [](const Vec& vs, const Vec& vc, double w) {
        Vec sp, cp;
        harmonic_rotate(vs, vc, w, sp, cp);
        return py::make_tuple(sp, cp);
      },
      py::arg("v_s"), py::arg("v_c"), py::arg("w"));

  py::class_<ConstrainedLtiModel>(m, "ConstrainedLtiModel")
      .def(py::init([](const Mat& A, const Mat& B, const Mat& E, const Mat& F,
                       const Vec& y_lo, const Vec& y_hi) {
             return ConstrainedLtiModel{A, B, E, F, y_lo, y_hi};
           }),
           py::arg("A"), py::arg("B"), py::arg("E"), py::arg("F"), py::arg("y_lo"),
           py::arg("y_hi"));
  m.def("academic_example_model", &academic_example_model);

  py::class_<HmpcProblem>(m, "HmpcProblem")
      .def(py::init<>())
      .def_readwrite("model", &HmpcProblem::model)
      .def_readwrite("Q", &HmpcProblem::Q)
      .def_readwrite("R", &HmpcProblem::R)
      .def_readwrite("Te", &HmpcProblem::Te)
      .def_readwrite("Se", &HmpcProblem::Se)
      .def_readwrite("Th", &HmpcProblem::Th)
      .def_readwrite("Sh", &HmpcProblem::Sh)
      .def_readwrite("eps_y", &HmpcProblem::eps_y)
      .def_readwrite("w", &HmpcProblem::w)
      .def_readwrite("N", &HmpcProblem::N);

  py::class_<HmpcProgram>(m, "HmpcProgram")
      .def(py::init<HmpcProblem>(), py::arg("problem"))
      .def_property_readonly("num_variables", &HmpcProgram::numVariables)
      .def_property_readonly("cone_count", &HmpcProgram::coneCount);

  py::class_<HmpcSolution>(m, "HmpcSolution")
      .def_readonly("x", &HmpcSolution::x)
      .def_readonly("u", &HmpcSolution::u)
      .def_readonly("reference", &HmpcSolution::reference)
      .def_readonly("objective", &HmpcSolution::objective)
      .def_readonly("iterations", &HmpcSolution::iterations)
      .def_readonly("converged", &HmpcSolution::converged);

  m.def(
      "solve_hmpc",
      [](const HmpcProgram& prog, const Vec& x_t, const Vec& x_r, const Vec& u_r,
         double eps) {
        HmpcSolveOptions opt;
        opt.eps_p = eps;
        opt.eps_d = eps;
        return solve_hmpc(prog, x_t, x_r, u_r, opt);
      },
      py::arg("program"), py::arg("x_t"), py::arg("x_r"), py::arg("u_r"),
      py::arg("eps") = 1e-5);

  m.def(
      "optimal_artificial_reference",
      [](const HmpcProblem& p, const Vec& x_r, const Vec& u_r) {
        const auto art = optimal_artificial_reference(p, x_r, u_r);
        return py::make_tuple(art.x_e, art.u_e, art.offset_cost);
      },
      py::arg("problem"), py::arg("x_r"), py::arg("u_r"));

  // ---- benchmark runners ---------------------------------------------------------
  m.def("run_example31", [] {
    py::list out;
    for (const auto& r : run_example31())
      out.append(py::make_tuple(r.scheme, r.k_out, r.j_out));
    return out;
  });
  m.def(
      "run_mpc_bench",
      [](const std::string& system, const std::string& formulation,
         const std::string& solver, int samples, double eps) {
        MpcBenchSpec spec;
        spec.system = system == "chemical"  ? MpcBenchSystem::chemical
                      : system == "ball_plate" ? MpcBenchSystem::ball_plate
                                               : MpcBenchSystem::oscillating;
        spec.variant = formulation == "lax"     ? MpcVariant::lax
                       : formulation == "equ"   ? MpcVariant::equ
                       : formulation == "ellip" ? MpcVariant::ellip
                                                : MpcVariant::mpct;
        spec.solver = solver == "fista" ? MpcSolverKind::fista : MpcSolverKind::admm;
        spec.samples = samples;
        spec.eps = eps;
        const auto res = run_mpc_bench(spec);
        return py::make_tuple(res.iterations.avg, res.iterations.med, res.iterations.max,
                              res.iterations.min, res.phi);
      },
      py::arg("system"), py::arg("formulation"), py::arg("solver") = "admm",
      py::arg("samples") = 50, py::arg("eps") = 1e-4);

  m.attr("__version__") = "0.1.0";
}
