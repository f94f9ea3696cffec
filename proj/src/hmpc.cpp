#include "spmpc/hmpc.hpp"

#include "spmpc/qp.hpp"

#include <cmath>

namespace spmpc {

HarmonicSample harmonic_eval(const HarmonicReference& ref, long j) {
  const double a = ref.w * static_cast<double>(j - ref.N);
  const double s = std::sin(a), c = std::cos(a);
  return {ref.x_e + s * ref.x_s + c * ref.x_c, ref.u_e + s * ref.u_s + c * ref.u_c};
}

void harmonic_rotate(const Vec& v_s, const Vec& v_c, double w, Vec& v_s_plus, Vec& v_c_plus) {
  if (v_s.size() != v_c.size())
    throw std::invalid_argument("harmonic_rotate: length mismatch");
  const double cw = std::cos(w), sw = std::sin(w);
  v_s_plus = v_s * cw - v_c * sw;
  v_c_plus = v_s * sw + v_c * cw;
}

Vec default_eps_y(const ConstrainedLtiModel& model) {
  return 1e-6 * (model.y_hi - model.y_lo);
}

HarmonicCheckReport harmonic_check(const HarmonicReference& ref,
                                   const ConstrainedLtiModel& model, const Vec& eps_y,
                                   long j_lo, long j_hi) {
  HarmonicCheckReport rep;
  rep.worst_soc_margin = std::numeric_limits<double>::infinity();
  const Mat& A = model.A;
  const Mat& B = model.B;
  rep.steady_residual = (ref.x_e - A * ref.x_e - B * ref.u_e).lpNorm<Eigen::Infinity>();
  const double cw = std::cos(ref.w), sw = std::sin(ref.w);
  const Vec rot1 = ref.x_s * cw - ref.x_c * sw - A * ref.x_s - B * ref.u_s;
  const Vec rot2 = ref.x_s * sw + ref.x_c * cw - A * ref.x_c - B * ref.u_c;
  rep.rotation_residual =
      std::max(rot1.lpNorm<Eigen::Infinity>(), rot2.lpNorm<Eigen::Infinity>());

  const Vec y_e = model.E * ref.x_e + model.F * ref.u_e;
  const Vec y_s = model.E * ref.x_s + model.F * ref.u_s;
  const Vec y_c = model.E * ref.x_c + model.F * ref.u_c;
  for (int i = 0; i < model.p(); ++i) {
    const double amp = std::hypot(y_s[i], y_c[i]);
    rep.worst_soc_margin =
        std::min({rep.worst_soc_margin, y_e[i] - model.y_lo[i] - eps_y[i] - amp,
                  model.y_hi[i] - eps_y[i] - y_e[i] - amp});
  }

  for (long j = j_lo; j <= j_hi; ++j) {
    const auto now = harmonic_eval(ref, j);
    const auto next = harmonic_eval(ref, j + 1);
    const double dres = (next.x - A * now.x - B * now.u).lpNorm<Eigen::Infinity>();
    rep.worst_dynamics_residual = std::max(rep.worst_dynamics_residual, dres);
    const Vec y = model.E * now.x + model.F * now.u;
    const double viol = std::max((model.y_lo - y).maxCoeff(), (y - model.y_hi).maxCoeff());
    rep.worst_band_violation = std::max(rep.worst_band_violation, viol);
  }
  return rep;
}

HmpcProgram::HmpcProgram(HmpcProblem problem) : prob_(std::move(problem)) {
  const auto& mdl = prob_.model;
  n_ = mdl.n();
  m_ = mdl.m();
  p_ = mdl.p();
  N_ = prob_.N;
  if (N_ < 1) throw std::invalid_argument("HmpcProgram: N must be >= 1");
  if (prob_.eps_y.size() == 0) prob_.eps_y = default_eps_y(mdl);
  if (((mdl.y_lo + prob_.eps_y).array() >= (mdl.y_hi - prob_.eps_y).array()).any())
    throw std::invalid_argument("HmpcProgram: band is empty after margins");
  if (!prob_.Th.isApprox(Mat(prob_.Th.diagonal().asDiagonal()), 1e-12) ||
      !prob_.Sh.isApprox(Mat(prob_.Sh.diagonal().asDiagonal()), 1e-12))
    throw std::invalid_argument("HmpcProgram: Th and Sh must be diagonal");
  freq_advisory_ = prob_.w > M_PI / 2.0 + 1e-12;

  nv_ = (N_ + 1) * n_ + N_ * m_ + 3 * (n_ + m_);
  // objective, full quadratic form accumulated then doubled to standard form
  Mat Hf = Mat::Zero(nv_, nv_);
  q_ = Vec::Zero(nv_);
  for (int j = 0; j < N_; ++j) {
    const double a = prob_.w * static_cast<double>(j - N_);
    const double co[4] = {1.0, -1.0, -std::sin(a), -std::cos(a)};
    const int ix[4] = {offX(j), offXe(), offXs(), offXc()};
    const int iu[4] = {offU(j), offUe(), offUs(), offUc()};
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c) {
        Hf.block(ix[r], ix[c], n_, n_) += co[r] * co[c] * prob_.Q;
        Hf.block(iu[r], iu[c], m_, m_) += co[r] * co[c] * prob_.R;
      }
  }
  Hf.block(offXe(), offXe(), n_, n_) += prob_.Te;
  Hf.block(offUe(), offUe(), m_, m_) += prob_.Se;
  Hf.block(offXs(), offXs(), n_, n_) += prob_.Th;
  Hf.block(offXc(), offXc(), n_, n_) += prob_.Th;
  Hf.block(offUs(), offUs(), m_, m_) += prob_.Sh;
  Hf.block(offUc(), offUc(), m_, m_) += prob_.Sh;
  H_ = 2.0 * Hf;
  // the linear term carries the (x_r, u_r) pull; filled per solve

  // equality block
  me_ = n_ * (N_ + 5);
  E_ = Mat::Zero(me_, nv_);
  int r = 0;
  E_.block(r, offX(0), n_, n_).setIdentity();
  r += n_;
  for (int j = 0; j < N_; ++j) {
    E_.block(r, offX(j), n_, n_) = prob_.model.A;
    E_.block(r, offU(j), n_, m_) = prob_.model.B;
    E_.block(r, offX(j + 1), n_, n_) = -Mat::Identity(n_, n_);
    r += n_;
  }
  E_.block(r, offX(N_), n_, n_).setIdentity();
  E_.block(r, offXe(), n_, n_) = -Mat::Identity(n_, n_);
  E_.block(r, offXc(), n_, n_) = -Mat::Identity(n_, n_);
  r += n_;
  E_.block(r, offXe(), n_, n_) = prob_.model.A - Mat::Identity(n_, n_);
  E_.block(r, offUe(), n_, m_) = prob_.model.B;
  r += n_;
  const double cw = std::cos(prob_.w), sw = std::sin(prob_.w);
  E_.block(r, offXs(), n_, n_) = cw * Mat::Identity(n_, n_) - prob_.model.A;
  E_.block(r, offXc(), n_, n_) = -sw * Mat::Identity(n_, n_);
  E_.block(r, offUs(), n_, m_) = -prob_.model.B;
  r += n_;
  E_.block(r, offXs(), n_, n_) = sw * Mat::Identity(n_, n_);
  E_.block(r, offXc(), n_, n_) = cw * Mat::Identity(n_, n_) - prob_.model.A;
  E_.block(r, offUc(), n_, m_) = -prob_.model.B;

  // consensus rows: N band rows blocks, then (y_s, y_c, t) cone triples
  mc_ = N_ * p_ + 6 * p_;
  M_ = Mat::Zero(mc_, nv_);
  off_ = Vec::Zero(mc_);
  r = 0;
  for (int j = 0; j < N_; ++j) {
    M_.block(r, offX(j), p_, n_) = prob_.model.E;
    M_.block(r, offU(j), p_, m_) = prob_.model.F;
    r += p_;
  }
  for (int i = 0; i < p_; ++i) {
    for (int side = 0; side < 2; ++side) {
      M_.block(r, offXs(), 1, n_) = prob_.model.E.row(i);
      M_.block(r, offUs(), 1, m_) = prob_.model.F.row(i);
      ++r;
      M_.block(r, offXc(), 1, n_) = prob_.model.E.row(i);
      M_.block(r, offUc(), 1, m_) = prob_.model.F.row(i);
      ++r;
      if (side == 0) {  // t = y_e(i) - y_lo(i) - eps(i)
        M_.block(r, offXe(), 1, n_) = prob_.model.E.row(i);
        M_.block(r, offUe(), 1, m_) = prob_.model.F.row(i);
        off_[r] = -prob_.model.y_lo[i] - prob_.eps_y[i];
      } else {  // t = y_hi(i) - eps(i) - y_e(i)
        M_.block(r, offXe(), 1, n_) = -prob_.model.E.row(i);
        M_.block(r, offUe(), 1, m_) = -prob_.model.F.row(i);
        off_[r] = prob_.model.y_hi[i] - prob_.eps_y[i];
      }
      ++r;
    }
  }

  const Mat Hs = H_ + sigma_ * Mat::Identity(nv_, nv_) + rho_ * M_.transpose() * M_;
  llt_h_.compute(Hs);
  if (llt_h_.info() != Eigen::Success)
    throw std::runtime_error("HmpcProgram: regularized Hessian factorization failed");
  const Mat EHiEt = E_ * llt_h_.solve(E_.transpose());
  llt_e_.compute(EHiEt);
  if (llt_e_.info() != Eigen::Success)
    throw std::runtime_error("HmpcProgram: equality Schur factorization failed");
}

HmpcSolution solve_hmpc(const HmpcProgram& program, const Vec& x_t, const Vec& x_r,
                        const Vec& u_r, const HmpcSolveOptions& opt) {
  const auto& P = program;
  const auto& prob = P.prob_;
  const int nv = P.nv_;
  const int n = P.n_, m = P.m_, p = P.p_, N = P.N_;

  Vec q = Vec::Zero(nv);
  q.segment(P.offXe(), n) = -2.0 * (prob.Te * x_r);
  q.segment(P.offUe(), m) = -2.0 * (prob.Se * u_r);

  Vec e = Vec::Zero(P.me_);
  e.head(n) = x_t;

  const int nbox = N * p;
  Vec z = Vec::Zero(nv);
  Vec v = P.M_ * z + P.off_;
  Vec lam = Vec::Zero(P.mc_);
  long k = 0;
  HmpcSolution sol;
  while (true) {
    const Vec rhs = -(q + P.M_.transpose() * (lam + P.rho_ * (P.off_ - v)) - P.sigma_ * z);
    const Vec t1 = P.llt_h_.solve(rhs);
    const Vec mu = P.llt_e_.solve(P.E_ * t1 - e);
    z = t1 - P.llt_h_.solve(P.E_.transpose() * mu);

    Vec wv = P.M_ * z + P.off_ + lam / P.rho_;
    Vec v_next(P.mc_);
    for (int j = 0; j < N; ++j)
      v_next.segment(j * p, p) = wv.segment(j * p, p)
                                     .cwiseMax(prob.model.y_lo)
                                     .cwiseMin(prob.model.y_hi);
    int r = nbox;
    for (int c = 0; c < 2 * p; ++c) {
      Vec s = wv.segment(r, 2);
      double t = wv[r + 2];
      soc_project(s, t);
      v_next.segment(r, 2) = s;
      v_next[r + 2] = t;
      r += 3;
    }
    const Vec resid = P.M_ * z + P.off_ - v_next;
    lam += P.rho_ * resid;
    ++k;
    const double r_p = resid.lpNorm<Eigen::Infinity>();
    const double r_d = (v_next - v).lpNorm<Eigen::Infinity>();
    v = v_next;
    if ((r_p <= opt.eps_p && r_d <= opt.eps_d) || k >= opt.max_iter) {
      sol.iterations = k;
      sol.r_p = r_p;
      sol.r_d = r_d;
      sol.converged = r_p <= opt.eps_p && r_d <= opt.eps_d;
      break;
    }
  }

  sol.x.reserve(N + 1);
  for (int j = 0; j <= N; ++j) sol.x.push_back(z.segment(P.offX(j), n));
  sol.u.reserve(N);
  for (int j = 0; j < N; ++j) sol.u.push_back(z.segment(P.offU(j), m));
  sol.reference.x_e = z.segment(P.offXe(), n);
  sol.reference.x_s = z.segment(P.offXs(), n);
  sol.reference.x_c = z.segment(P.offXc(), n);
  sol.reference.u_e = z.segment(P.offUe(), m);
  sol.reference.u_s = z.segment(P.offUs(), m);
  sol.reference.u_c = z.segment(P.offUc(), m);
  sol.reference.w = prob.w;
  sol.reference.N = N;
  const double cst = x_r.dot(prob.Te * x_r) + u_r.dot(prob.Se * u_r);
  sol.objective = 0.5 * z.dot(P.H_ * z) + q.dot(z) + cst;
  return sol;
}

ShiftedSolution shift_solution(const HmpcSolution& sol, const ConstrainedLtiModel& model) {
  const auto& ref = sol.reference;
  const int N = ref.N;
  ShiftedSolution out;
  out.u.reserve(N);
  for (int j = 0; j + 1 < N; ++j) out.u.push_back(sol.u[static_cast<size_t>(j) + 1]);
  out.u.push_back(ref.u_e + ref.u_c);  // tail input is the harmonic at j = N
  out.x.reserve(N + 1);
  out.x.push_back(model.A * sol.x[0] + model.B * sol.u[0]);
  for (int j = 0; j < N; ++j)
    out.x.push_back(model.A * out.x.back() + model.B * out.u[static_cast<size_t>(j)]);
  out.reference.u_e = ref.u_e;
  harmonic_rotate(ref.u_s, ref.u_c, ref.w, out.reference.u_s, out.reference.u_c);
  out.reference.x_e = model.A * ref.x_e + model.B * ref.u_e;
  out.reference.x_s = model.A * ref.x_s + model.B * ref.u_s;
  out.reference.x_c = model.A * ref.x_c + model.B * ref.u_c;
  out.reference.w = ref.w;
  out.reference.N = N;
  return out;
}

double FeasibilityResiduals::worst() const {
  return std::max({dynamics, initial_state, terminal_tie, steady, rotation, band, soc});
}

FeasibilityResiduals hmpc_feasibility(const std::vector<Vec>& x, const std::vector<Vec>& u,
                                      const HarmonicReference& ref,
                                      const ConstrainedLtiModel& model, const Vec& eps_y,
                                      const Vec& x0) {
  FeasibilityResiduals res;
  const int N = static_cast<int>(u.size());
  res.initial_state = (x[0] - x0).lpNorm<Eigen::Infinity>();
  for (int j = 0; j < N; ++j) {
    res.dynamics = std::max(
        res.dynamics,
        (x[static_cast<size_t>(j) + 1] - model.A * x[static_cast<size_t>(j)] -
         model.B * u[static_cast<size_t>(j)])
            .lpNorm<Eigen::Infinity>());
    const Vec y = model.E * x[static_cast<size_t>(j)] + model.F * u[static_cast<size_t>(j)];
    res.band = std::max({res.band, (model.y_lo - y).maxCoeff(), (y - model.y_hi).maxCoeff()});
  }
  res.terminal_tie = (x[static_cast<size_t>(N)] - ref.x_e - ref.x_c).lpNorm<Eigen::Infinity>();
  res.steady = (ref.x_e - model.A * ref.x_e - model.B * ref.u_e).lpNorm<Eigen::Infinity>();
  const double cw = std::cos(ref.w), sw = std::sin(ref.w);
  res.rotation = std::max(
      (ref.x_s * cw - ref.x_c * sw - model.A * ref.x_s - model.B * ref.u_s)
          .lpNorm<Eigen::Infinity>(),
      (ref.x_s * sw + ref.x_c * cw - model.A * ref.x_c - model.B * ref.u_c)
          .lpNorm<Eigen::Infinity>());
  const Vec y_e = model.E * ref.x_e + model.F * ref.u_e;
  const Vec y_s = model.E * ref.x_s + model.F * ref.u_s;
  const Vec y_c = model.E * ref.x_c + model.F * ref.u_c;
  double worst_cone = 0.0;
  for (int i = 0; i < model.p(); ++i) {
    const double amp = std::hypot(y_s[i], y_c[i]);
    worst_cone = std::max({worst_cone, amp - (y_e[i] - model.y_lo[i] - eps_y[i]),
                           amp - (model.y_hi[i] - eps_y[i] - y_e[i])});
  }
  res.soc = worst_cone;
  return res;
}

ArtificialReference optimal_artificial_reference(const HmpcProblem& p, const Vec& x_r,
                                                 const Vec& u_r, double eps) {
  const auto& mdl = p.model;
  const int n = mdl.n(), m = mdl.m(), pp = mdl.p();
  const Vec eps_y = p.eps_y.size() ? p.eps_y : default_eps_y(mdl);
  // variables (x_e, u_e, y); equalities steady state and y = E x_e + F u_e;
  // box on the y coordinates only
  const int nz = n + m + pp;
  Mat H = Mat::Zero(nz, nz);
  H.topLeftCorner(n, n) = 2.0 * p.Te;
  H.block(n, n, m, m) = 2.0 * p.Se;
  Vec q(nz);
  q.head(n) = -2.0 * (p.Te * x_r);
  q.segment(n, m) = -2.0 * (p.Se * u_r);
  q.tail(pp).setZero();
  Mat G = Mat::Zero(n + pp, nz);
  G.topLeftCorner(n, n) = mdl.A - Mat::Identity(n, n);
  G.block(0, n, n, m) = mdl.B;
  G.block(n, 0, pp, n) = mdl.E;
  G.block(n, n, pp, m) = mdl.F;
  G.block(n, n + m, pp, pp) = -Mat::Identity(pp, pp);
  const Vec b = Vec::Zero(n + pp);
  Vec lo = Vec::Constant(nz, -1e9), hi = Vec::Constant(nz, 1e9);
  lo.tail(pp) = mdl.y_lo + eps_y;
  hi.tail(pp) = mdl.y_hi - eps_y;

  const StructuredQp qp = make_dense_qp(H, q, G, b, lo, hi, /*rho=*/1.0);
  const auto res = admm_qp(qp, Vec::Zero(nz), Vec::Zero(nz), eps, eps, 2'000'000);
  if (!res.converged)
    throw std::runtime_error("optimal_artificial_reference: ADMM did not converge");
  ArtificialReference out;
  out.x_e = res.v.head(n);
  out.u_e = res.v.segment(n, m);
  const Vec dx = out.x_e - x_r;
  const Vec du = out.u_e - u_r;
  out.offset_cost = dx.dot(p.Te * dx) + du.dot(p.Se * du);
  return out;
}

int controllability_index(const Mat& A, const Mat& B) {
  const int n = static_cast<int>(A.rows());
  Mat C(n, 0);
  Mat AkB = B;
  for (int j = 1; j <= n; ++j) {
    Mat C2(n, C.cols() + B.cols());
    C2 << C, AkB;
    C = std::move(C2);
    if (Eigen::FullPivLU<Mat>(C).rank() == n) return j;
    AkB = A * AkB;
  }
  throw std::invalid_argument("controllability_index: system is not controllable");
}

ConstrainedLtiModel academic_example_model() {
  ConstrainedLtiModel mdl;
  mdl.A = Mat(2, 2);
  mdl.A << 0.9, 0.8, 0.0, 1.0;
  mdl.B = Mat(2, 1);
  mdl.B << 0.8, 1.0;
  mdl.E = Mat(2, 2);
  mdl.E << 1, 0, 0, 0;
  mdl.F = Mat(2, 1);
  mdl.F << 0, 1;
  mdl.y_lo = Vec(2);
  mdl.y_lo << -10, -0.5;
  mdl.y_hi = -mdl.y_lo;
  return mdl;
}

}  // namespace spmpc
