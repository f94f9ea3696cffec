#include "spmpc/restart.hpp"

#include <cmath>

namespace spmpc {
namespace {

constexpr double kEuler = 2.718281828459045235360287471352662498;

struct InnerResult {
  Vec z;
  long k{};
  double f{};
  bool fair_hit{false};
};

// FISTA from T(r) with exit condition E_f^e(n) (3.12); optional fair exit on
// ||G(y_{k-1})|| <= fair_eps. The objective history of the call backs (3.12a).
InnerResult fista_efe(const CompositeProblem& problem, const SmoothMetric& metric,
                      const Vec& r, long n, double fair_eps, bool fair_exit,
                      long max_iter) {
  Vec y = problem.tmap(r, metric);
  Vec zk = y;
  double t = 1.0;
  const double f0 = problem.eval_f(zk);
  std::vector<double> fhist;
  fhist.reserve(256);
  fhist.push_back(f0);
  long k = 0;
  while (true) {
    ++k;
    const Vec z_next = problem.tmap(y, metric);
    const double gnorm_y = metric.primalNorm(y - z_next);
    const double tn = t_next(t);
    y = z_next + ((t - 1.0) / tn) * (z_next - zk);
    zk = z_next;
    t = tn;
    const double fk = problem.eval_f(zk);
    fhist.push_back(fk);
    if (fair_exit && gnorm_y <= fair_eps) return {zk, k, fk, true};
    const long m = k / 2 + 1;
    const double fm = fhist[static_cast<size_t>(m)];
    if (fm - fk <= (f0 - fm) / kEuler && fk <= f0 && k >= n)
      return {zk, k, fk, false};
    if (k >= max_iter) return {zk, k, fk, true};
  }
}

}  // namespace

RestartReport restart_fista_obj(const CompositeProblem& problem, const SmoothMetric& metric,
                                const Vec& r0, const RestartConfig& cfg) {
  if (cfg.eps <= 0.0) throw std::invalid_argument("restart_fista_obj: eps must be positive");
  RestartReport rep;
  long k = 0, j = 1;
  Vec r_prev = r0;
  double f_prev = problem.eval_f(r_prev), f_prev2 = 0.0;
  bool have_prev2 = false;

  InnerResult in = fista_efe(problem, metric, r_prev, 0, cfg.eps, cfg.fair_exit, cfg.max_iter);
  long n_j = in.k;
  Vec r_j = in.z;
  double f_j = in.f;
  k += in.k;
  rep.restarts.push_back({j, f_j, in.k, 0.0});

  while (true) {
    const auto cg = composite_gradient(problem, metric, r_j);
    if (cg.gnorm <= cfg.eps) {
      rep.solution = r_j;
      rep.j_out = j;
      rep.k_out = k;
      rep.final_residual = cg.gnorm;
      return rep;
    }
    if (k >= cfg.max_iter || j >= cfg.max_restarts) {
      rep.solution = r_j;
      rep.j_out = j;
      rep.k_out = k;
      rep.final_residual = cg.gnorm;
      rep.converged = false;
      return rep;
    }
    ++j;
    have_prev2 = true;
    f_prev2 = f_prev;
    r_prev = r_j;
    f_prev = f_j;
    const long n_prev = n_j;
    in = fista_efe(problem, metric, r_prev, n_prev, cfg.eps, cfg.fair_exit,
                   cfg.max_iter - k);
    r_j = in.z;
    f_j = in.f;
    n_j = in.k;
    k += in.k;
    if (have_prev2 && f_prev - f_j > (f_prev2 - f_prev) / kEuler) n_j = 2 * n_prev;
    rep.restarts.push_back({j, f_j, in.k, static_cast<double>(n_prev)});
  }
}

RestartReport restart_fista_grad(const CompositeProblem& problem, const SmoothMetric& metric,
                                 const Vec& r0, const RestartConfig& cfg) {
  if (cfg.eps <= 0.0) throw std::invalid_argument("restart_fista_grad: eps must be positive");
  RestartReport rep;
  long k = 0, j = 0;
  auto cg0 = composite_gradient(problem, metric, r0);
  double rho = cg0.gnorm;
  rep.restarts.push_back({0, problem.eval_f(r0), 0, rho});
  if (rho <= cfg.eps) {
    rep.solution = r0;
    rep.j_out = 0;
    rep.k_out = 0;
    rep.final_residual = rho;
    return rep;
  }
  Vec y = cg0.t, zk = cg0.t;
  double t = 1.0;
  // T(y_k) computed for the step-7 test is reused as the next z-update.
  bool have_ty = false;
  Vec ty;
  while (true) {
    ++k;
    const Vec z_next = have_ty ? ty : problem.tmap(y, metric);
    const double gnorm_prev = metric.primalNorm(y - z_next);
    if (cfg.alg8_practical_exit && gnorm_prev <= cfg.eps) {
      rep.solution = z_next;
      rep.j_out = j;
      rep.k_out = k;
      rep.final_residual = gnorm_prev;
      return rep;
    }
    const double tn = t_next(t);
    y = z_next + ((t - 1.0) / tn) * (z_next - zk);
    zk = z_next;
    t = tn;
    ty = problem.tmap(y, metric);
    have_ty = true;
    const double gnorm_y = metric.primalNorm(y - ty);
    if (gnorm_y <= rho / kEuler) {
      ++j;
      rho = gnorm_y;  // rho_j = ||G(r_j)|| with r_j = y_k
      rep.restarts.push_back({j, problem.eval_f(y), k, rho});
      y = ty;
      zk = ty;
      t = 1.0;
      have_ty = false;
      if (rho <= cfg.eps) {
        rep.solution = zk;
        rep.j_out = j;
        rep.k_out = k;
        rep.final_residual = rho;
        return rep;
      }
    }
    if (k >= cfg.max_iter || j >= cfg.max_restarts) {
      rep.solution = zk;
      rep.j_out = j;
      rep.k_out = k;
      rep.final_residual = rho;
      rep.converged = false;
      return rep;
    }
  }
}

DelayedExitResult delayed_afom(const CompositeProblem& problem, const SmoothMetric& metric,
                               const Vec& z0, double n, double fair_eps, long max_iter) {
  const double f0 = problem.eval_f(z0);
  if (!std::isfinite(f0)) throw std::invalid_argument("delayed_afom: f(z0) must be finite");
  Vec y = z0, zk = z0;
  double fk = f0, t = 1.0;
  std::vector<double> fhist;
  fhist.reserve(256);
  fhist.push_back(f0);
  long k = 0;
  while (true) {
    ++k;
    const Vec v = problem.tmap(y, metric);
    const double gnorm_y = metric.primalNorm(y - v);
    const double tn = t_next(t);
    const double fv = problem.eval_f(v);
    Vec z_next;
    double f_next;
    if (fv <= fk) {
      z_next = v;
      f_next = fv;
    } else {
      z_next = zk;
      f_next = fk;
    }
    y = z_next + (t / tn) * (v - z_next) + ((t - 1.0) / tn) * (z_next - zk);
    zk = z_next;
    fk = f_next;
    t = tn;
    fhist.push_back(fk);
    if (fair_eps > 0.0 && gnorm_y <= fair_eps) return {zk, k, gnorm_y, true};
    const long l = k / 2;
    const double fl = fhist[static_cast<size_t>(l)];
    if (fl - fk <= (f0 - fl) / 3.0 && static_cast<double>(k) >= n)
      return {zk, k, gnorm_y, false};
    if (k >= max_iter) return {zk, k, gnorm_y, true};
  }
}

RestartReport restart_afom_general(const CompositeProblem& problem, const SmoothMetric& metric,
                                   const Vec& r0, const RestartConfig& cfg) {
  if (cfg.eps <= 0.0)
    throw std::invalid_argument("restart_afom_general: eps must be positive");
  RestartReport rep;
  std::vector<double> m{1.0, 1.0};  // m_{-1}, m_0
  std::vector<Vec> r{r0};
  std::vector<double> f{problem.eval_f(r0)};
  long j = -1, k = 0;
  while (true) {
    ++j;
    const size_t ji = static_cast<size_t>(j);
    double s = 0.0;
    if (j >= 2) s = std::sqrt((f[ji - 1] - f[ji]) / (f[ji - 2] - f[ji]));
    const double n_j = std::max(m[ji + 1], 4.0 * s * m[ji]);
    const auto in = delayed_afom(problem, metric, r[ji], n_j,
                                 cfg.fair_exit ? cfg.eps : 0.0, cfg.max_iter - k);
    r.push_back(in.z_m);
    f.push_back(problem.eval_f(in.z_m));
    m.push_back(static_cast<double>(in.m));
    k += in.m;
    rep.restarts.push_back({j, f.back(), in.m, n_j});
    const auto cg = composite_gradient(problem, metric, in.z_m);
    const bool done = in.fair_hit || cg.gnorm <= cfg.eps;
    if (done || k >= cfg.max_iter || j + 1 >= cfg.max_restarts) {
      rep.solution = in.z_m;
      rep.j_out = j + 1;  // number of calls to the delayed method
      rep.k_out = k;
      rep.final_residual = cg.gnorm;
      rep.converged = done;
      return rep;
    }
  }
}

RestartReport restart_literature(const CompositeProblem& problem, const SmoothMetric& metric,
                                 const Vec& r0, const RestartConfig& cfg) {
  if (cfg.eps <= 0.0)
    throw std::invalid_argument("restart_literature: eps must be positive");
  if (cfg.scheme == RestartScheme::lit_fstar && !cfg.f_star)
    throw std::invalid_argument("restart_literature: lit_fstar requires f_star");
  if (cfg.scheme == RestartScheme::fixed_rate && (!cfg.k_m || *cfg.k_m < 1))
    throw std::invalid_argument("restart_literature: fixed_rate requires k_m >= 1");

  RestartReport rep;
  Vec r = r0;
  long k = 0, j = 0;
  while (true) {
    ++j;  // the general procedure counts calls to the AFOM
    Vec y = problem.tmap(r, metric);
    Vec zk = y;
    double t = 1.0;
    const double f0 = problem.eval_f(zk);
    double f_prev = f0;
    long k_call = 0;
    rep.restarts.push_back({j, f0, 0, 0.0});
    while (true) {
      ++k;
      ++k_call;
      const Vec z_next = problem.tmap(y, metric);
      const Vec g_at_y = metric.apply(y - z_next);
      const double gnorm_y = metric.primalNorm(y - z_next);
      const Vec z_prev = zk;
      const double tn = t_next(t);
      y = z_next + ((t - 1.0) / tn) * (z_next - zk);
      zk = z_next;
      t = tn;
      const double fk = problem.eval_f(zk);
      if (gnorm_y <= cfg.eps) {
        rep.solution = zk;
        rep.j_out = j;
        rep.k_out = k;
        rep.final_residual = gnorm_y;
        rep.restarts.back().k_inner = k_call;
        return rep;
      }
      bool fire = false;
      switch (cfg.scheme) {
        case RestartScheme::lit_f:
          fire = fk - f_prev > 0.0;
          break;
        case RestartScheme::lit_g:
          fire = g_at_y.dot(zk - z_prev) > 0.0;
          break;
        case RestartScheme::lit_fstar:
          fire = fk - *cfg.f_star <= (f0 - *cfg.f_star) / (kEuler * kEuler);
          break;
        case RestartScheme::fixed_rate:
          fire = k_call >= *cfg.k_m;
          break;
        default:
          throw std::invalid_argument("restart_literature: unsupported scheme");
      }
      f_prev = fk;
      if (fire) {
        r = zk;
        rep.restarts.back().k_inner = k_call;
        break;
      }
      if (k >= cfg.max_iter) {
        rep.solution = zk;
        rep.j_out = j;
        rep.k_out = k;
        rep.final_residual = gnorm_y;
        rep.restarts.back().k_inner = k_call;
        rep.converged = false;
        return rep;
      }
    }
    if (j >= cfg.max_restarts) {
      rep.solution = r;
      rep.j_out = j;
      rep.k_out = k;
      rep.final_residual = composite_gradient(problem, metric, r).gnorm;
      rep.converged = false;
      return rep;
    }
  }
}

RestartReport restart_solve(const CompositeProblem& problem, const SmoothMetric& metric,
                            const Vec& r0, const RestartConfig& cfg) {
  switch (cfg.scheme) {
    case RestartScheme::alg7_obj:
      return restart_fista_obj(problem, metric, r0, cfg);
    case RestartScheme::alg8_grad:
      return restart_fista_grad(problem, metric, r0, cfg);
    case RestartScheme::alg10_general:
      return restart_afom_general(problem, metric, r0, cfg);
    default:
      return restart_literature(problem, metric, r0, cfg);
  }
}

}  // namespace spmpc
