#include "spmpc/fom.hpp"

#include <cmath>

namespace spmpc {

double compensated_sumsq(const Vec& v) {
  double sum = 0.0, c = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double term = v[i] * v[i];
    const double y = term - c;
    const double t = sum + y;
    c = (t - sum) - y;
    sum = t;
  }
  return sum;
}

double compensated_weighted_sumsq(const Vec& v, const Vec& w) {
  double sum = 0.0, c = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double term = v[i] * v[i] * w[i];
    const double y = term - c;
    const double t = sum + y;
    c = (t - sum) - y;
    sum = t;
  }
  return sum;
}

SmoothMetric::SmoothMetric(Vec diagonal) : dim_(static_cast<int>(diagonal.size())) {
  if ((diagonal.array() <= 0.0).any())
    throw std::invalid_argument("SmoothMetric: diagonal entries must be positive");
  diag_ = std::move(diagonal);
  diag_inv_ = diag_.cwiseInverse();
}

SmoothMetric::SmoothMetric(Mat dense) : dim_(static_cast<int>(dense.rows())) {
  if (dense.rows() != dense.cols())
    throw std::invalid_argument("SmoothMetric: matrix must be square");
  if (!dense.isApprox(dense.transpose(), 1e-12))
    throw std::invalid_argument("SmoothMetric: matrix must be symmetric");
  dense_ = std::move(dense);
  llt_.compute(dense_);
  if (llt_.info() != Eigen::Success)
    throw std::invalid_argument("SmoothMetric: matrix must be positive definite");
}

SmoothMetric SmoothMetric::scaledIdentity(int dim, double value) {
  return SmoothMetric(Vec(Vec::Constant(dim, value)));
}

Vec SmoothMetric::apply(const Vec& v) const {
  if (v.size() != dim_) throw std::invalid_argument("SmoothMetric::apply: dimension mismatch");
  return isDiagonal() ? Vec(diag_.cwiseProduct(v)) : Vec(dense_ * v);
}

Vec SmoothMetric::applyInv(const Vec& v) const {
  if (v.size() != dim_) throw std::invalid_argument("SmoothMetric::applyInv: dimension mismatch");
  return isDiagonal() ? Vec(diag_inv_.cwiseProduct(v)) : Vec(llt_.solve(v));
}

double SmoothMetric::dualNorm(const Vec& g) const {
  if (isDiagonal()) return std::sqrt(compensated_weighted_sumsq(g, diag_inv_));
  return std::sqrt(g.dot(llt_.solve(g)));
}

double SmoothMetric::primalNorm(const Vec& v) const {
  if (isDiagonal()) return std::sqrt(compensated_weighted_sumsq(v, diag_));
  return std::sqrt(v.dot(dense_ * v));
}

CompositeProblem make_smooth_problem(int dim, std::function<Vec(const Vec&)> grad,
                                     std::function<double(const Vec&)> f) {
  CompositeProblem p;
  p.dim = dim;
  p.grad_h = grad;
  p.eval_f = std::move(f);
  p.tmap = [grad](const Vec& y, const SmoothMetric& R) -> Vec {
    return y - R.applyInv(grad(y));
  };
  return p;
}

CompositeGradient composite_gradient(const CompositeProblem& problem,
                                     const SmoothMetric& metric, const Vec& y) {
  if (y.size() != problem.dim)
    throw std::invalid_argument("composite_gradient: dimension mismatch");
  if (!y.allFinite())
    throw std::invalid_argument("composite_gradient: non-finite input");
  CompositeGradient out;
  out.t = problem.tmap(y, metric);
  out.g = metric.apply(y - out.t);
  out.gnorm = metric.primalNorm(y - out.t);
  return out;
}

double t_next(double t_prev) {
  if (t_prev < 1.0) throw std::invalid_argument("t_next: t_prev must be >= 1");
  return 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t_prev * t_prev));
}

FomReport prox_grad_solve(const CompositeProblem& problem, const SmoothMetric& metric,
                          const Vec& z0, const FomOptions& opt) {
  if (opt.eps <= 0.0) throw std::invalid_argument("prox_grad_solve: eps must be positive");
  if (z0.size() != problem.dim)
    throw std::invalid_argument("prox_grad_solve: dimension mismatch");
  if (!z0.allFinite()) throw std::invalid_argument("prox_grad_solve: non-finite start");

  FomReport rep;
  Vec z = z0;
  long k = 0;
  while (true) {
    ++k;
    const Vec z_next = problem.tmap(z, metric);
    const double gnorm_prev = metric.primalNorm(z - z_next);  // ||G(z_{k-1})||_{R^-1}
    if (opt.trace) rep.trace.push_back({problem.eval_f(z_next), gnorm_prev, 1.0});
    if (opt.exit_at == ExitAt::at_yk_minus1) {
      if (gnorm_prev <= opt.eps) {
        rep.solution = z_next;
        rep.iterations = k;
        rep.final_residual = gnorm_prev;
        return rep;
      }
      z = z_next;
    } else {
      z = z_next;
      const auto cg = composite_gradient(problem, metric, z);
      if (cg.gnorm <= opt.eps) {
        rep.solution = z;
        rep.iterations = k;
        rep.final_residual = cg.gnorm;
        return rep;
      }
    }
    if (k >= opt.max_iter) {
      rep.solution = z;
      rep.iterations = k;
      rep.final_residual = metric.primalNorm(z - problem.tmap(z, metric));
      rep.converged = false;
      throw MaxIterationsError("prox_grad_solve: iteration cap reached", rep);
    }
  }
}

FomReport fista_solve(const CompositeProblem& problem, const SmoothMetric& metric,
                      const Vec& z, const FomOptions& opt) {
  if (opt.eps <= 0.0) throw std::invalid_argument("fista_solve: eps must be positive");
  if (z.size() != problem.dim)
    throw std::invalid_argument("fista_solve: dimension mismatch");
  if (!z.allFinite()) throw std::invalid_argument("fista_solve: non-finite start");

  FomReport rep;
  Vec y = problem.tmap(z, metric);
  Vec zk = y;
  double t = 1.0;
  long k = 0;
  while (true) {
    ++k;
    const Vec z_next = problem.tmap(y, metric);
    const double gnorm_y = metric.primalNorm(y - z_next);  // ||G(y_{k-1})||_{R^-1}
    const double tn = t_next(t);
    const Vec y_next = z_next + ((t - 1.0) / tn) * (z_next - zk);
    zk = z_next;
    t = tn;
    y = y_next;
    if (opt.trace) rep.trace.push_back({problem.eval_f(zk), gnorm_y, t});
    if (opt.exit_at == ExitAt::at_yk_minus1) {
      if (gnorm_y <= opt.eps) {
        rep.solution = zk;
        rep.iterations = k;
        rep.final_residual = gnorm_y;
        return rep;
      }
    } else {
      const auto cg = composite_gradient(problem, metric, zk);
      if (cg.gnorm <= opt.eps) {
        rep.solution = zk;
        rep.iterations = k;
        rep.final_residual = cg.gnorm;
        return rep;
      }
    }
    if (k >= opt.max_iter) {
      rep.solution = zk;
      rep.iterations = k;
      rep.final_residual = gnorm_y;
      rep.converged = false;
      throw MaxIterationsError("fista_solve: iteration cap reached", rep);
    }
  }
}

FomReport mfista_solve(const CompositeProblem& problem, const SmoothMetric& metric,
                       const Vec& z, const FomOptions& opt) {
  if (opt.eps <= 0.0) throw std::invalid_argument("mfista_solve: eps must be positive");
  if (z.size() != problem.dim)
    throw std::invalid_argument("mfista_solve: dimension mismatch");
  const double f0 = problem.eval_f(z);
  if (!std::isfinite(f0))
    throw std::invalid_argument("mfista_solve: f(z) must be finite");

  FomReport rep;
  Vec y = z, zk = z;
  double fk = f0;
  double t = 1.0;
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
    if (opt.trace) rep.trace.push_back({fk, gnorm_y, t});
    if (opt.exit_at == ExitAt::at_yk_minus1) {
      if (gnorm_y <= opt.eps) {
        rep.solution = zk;
        rep.iterations = k;
        rep.final_residual = gnorm_y;
        return rep;
      }
    } else {
      const auto cg = composite_gradient(problem, metric, zk);
      if (cg.gnorm <= opt.eps) {
        rep.solution = zk;
        rep.iterations = k;
        rep.final_residual = cg.gnorm;
        return rep;
      }
    }
    if (k >= opt.max_iter) {
      rep.solution = zk;
      rep.iterations = k;
      rep.final_residual = gnorm_y;
      rep.converged = false;
      throw MaxIterationsError("mfista_solve: iteration cap reached", rep);
    }
  }
}

AdmmResult admm_solve(const AdmmProblem& ap, const Vec& v0, const Vec& lam0,
                      double eps_p, double eps_d, long max_iter) {
  if (eps_p <= 0.0 || eps_d <= 0.0)
    throw std::invalid_argument("admm_solve: tolerances must be positive");
  if (ap.rho <= 0.0) throw std::invalid_argument("admm_solve: rho must be positive");
  const Vec cd_probe = ap.mulD(v0);
  if (cd_probe.size() != ap.d.size() || lam0.size() != ap.d.size())
    throw std::invalid_argument("admm_solve: coupling dimensions disagree");

  AdmmResult res;
  Vec v = v0, lam = lam0;
  long k = 0;
  while (true) {
    const Vec z = ap.min_z(v, lam);
    const Vec v_next = ap.min_v(z, lam);
    const Vec resid = ap.mulC(z) + ap.mulD(v_next) - ap.d;
    lam += ap.rho * resid;
    ++k;
    const double r_p = resid.lpNorm<Eigen::Infinity>();
    const double r_d = (v_next - v).lpNorm<Eigen::Infinity>();
    v = v_next;
    if (r_p <= eps_p && r_d <= eps_d) {
      res.z = z;
      res.v = v;
      res.lam = lam;
      res.iterations = k;
      res.r_p = r_p;
      res.r_d = r_d;
      return res;
    }
    if (k >= max_iter) {
      res.z = z;
      res.v = v;
      res.lam = lam;
      res.iterations = k;
      res.r_p = r_p;
      res.r_d = r_d;
      res.converged = false;
      return res;
    }
  }
}

EadmmResult eadmm_solve(const EadmmProblem& ap, const Vec& z2_0, const Vec& z3_0,
                        const Vec& lam0, double eps_p, double eps_d, long max_iter) {
  if (eps_p <= 0.0 || eps_d <= 0.0)
    throw std::invalid_argument("eadmm_solve: tolerances must be positive");
  if (ap.rho <= 0.0) throw std::invalid_argument("eadmm_solve: rho must be positive");

  EadmmResult res;
  Vec z2 = z2_0, z3 = z3_0, lam = lam0;
  long k = 0;
  while (true) {
    const Vec z1 = ap.min_z1(z2, z3, lam);
    const Vec z2_next = ap.min_z2(z1, z3, lam);
    const Vec z3_next = ap.min_z3(z1, z2_next, lam);
    const Vec resid = ap.mulC1(z1) + ap.mulC2(z2_next) + ap.mulC3(z3_next) - ap.d;
    lam += ap.rho * resid;
    ++k;
    const double r_p = resid.lpNorm<Eigen::Infinity>();
    const double d2 = (z2_next - z2).lpNorm<Eigen::Infinity>();
    const double d3 = (z3_next - z3).lpNorm<Eigen::Infinity>();
    z2 = z2_next;
    z3 = z3_next;
    if (r_p <= eps_p && d2 <= eps_d && d3 <= eps_d) {
      res.z1 = z1;
      res.z2 = z2;
      res.z3 = z3;
      res.lam = lam;
      res.iterations = k;
      res.r_p = r_p;
      return res;
    }
    if (k >= max_iter) {
      res.z1 = z1;
      res.z2 = z2;
      res.z3 = z3;
      res.lam = lam;
      res.iterations = k;
      res.r_p = r_p;
      res.converged = false;
      return res;
    }
  }
}

}  // namespace spmpc
