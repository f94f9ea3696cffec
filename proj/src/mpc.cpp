#include "spmpc/mpc.hpp"

#include "spmpc/linalg.hpp"
#include "spmpc/rng.hpp"

#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace spmpc {
namespace {

constexpr double kBigBound = 1e6;

bool is_diagonal(const Mat& M) {
  return M.isApprox(Mat(M.diagonal().asDiagonal()), 1e-14);
}

// offsets into z = (u_0, x_1, u_1, ..., x_{N-1}, u_{N-1}[, x_N])
inline int off_u(int j, int n, int m) { return j * (n + m); }
inline int off_x(int j, int n, int m) { return (j - 1) * (n + m) + m; }

}  // namespace

const char* to_string(MpcVariant v) {
  switch (v) {
    case MpcVariant::equ: return "equ";
    case MpcVariant::lax: return "lax";
    case MpcVariant::ellip: return "ellip";
    case MpcVariant::mpct: return "mpct";
  }
  return "?";
}

Vec MpcIngredients::mulG(const Vec& z) const {
  Vec out = Vec::Zero(mz);
  const bool equ = variant == MpcVariant::equ;
  for (int j = 0; j < N; ++j) {
    auto row = out.segment(j * n, n);
    row = model.B * z.segment(off_u(j, n, m), m);
    if (j > 0) row += model.A * z.segment(off_x(j, n, m), n);
    if (!(equ && j == N - 1)) row -= z.segment(off_x(j + 1, n, m), n);
  }
  return out;
}

Vec MpcIngredients::mulGT(const Vec& lam) const {
  Vec out = Vec::Zero(nz);
  const bool equ = variant == MpcVariant::equ;
  for (int j = 0; j < N; ++j) {
    const auto row = lam.segment(j * n, n);
    out.segment(off_u(j, n, m), m) += model.B.transpose() * row;
    if (j > 0) out.segment(off_x(j, n, m), n) += model.A.transpose() * row;
    if (!(equ && j == N - 1)) out.segment(off_x(j + 1, n, m), n) -= row;
  }
  return out;
}

Vec MpcIngredients::applyHinvDiag(const Vec& v) const { return hdiag_inv.cwiseProduct(v); }

Vec MpcIngredients::applyHrhoInv(const Vec& v) const {
  Vec out(nz);
  const bool equ = variant == MpcVariant::equ;
  for (int j = 0; j < N; ++j) {
    out.segment(off_u(j, n, m), m) = Rrho_inv * v.segment(off_u(j, n, m), m);
    if (j > 0)
      out.segment(off_x(j, n, m), n) = Qrho_inv * v.segment(off_x(j, n, m), n);
  }
  if (!equ) out.tail(n) = Trho_inv * v.tail(n);
  return out;
}

Vec MpcIngredients::buildQ(const Vec& x_r, const Vec& u_r) const {
  Vec q(nz);
  const Vec qu = -(weights.R * u_r);
  const Vec qx = -(weights.Q * x_r);
  for (int j = 0; j < N; ++j) {
    q.segment(off_u(j, n, m), m) = qu;
    if (j > 0) q.segment(off_x(j, n, m), n) = qx;
  }
  if (variant != MpcVariant::equ) q.tail(n) = -(weights.T * x_r);
  return q;
}

Vec MpcIngredients::buildB(const Vec& x_t, const Vec& x_r) const {
  Vec b = Vec::Zero(mz);
  b.head(n) = -(model.A * x_t);
  if (variant == MpcVariant::equ) b.tail(n) = x_r;
  return b;
}

Mat MpcIngredients::denseG() const {
  Mat G = Mat::Zero(mz, nz);
  const bool equ = variant == MpcVariant::equ;
  for (int j = 0; j < N; ++j) {
    G.block(j * n, off_u(j, n, m), n, m) = model.B;
    if (j > 0) G.block(j * n, off_x(j, n, m), n, n) = model.A;
    if (!(equ && j == N - 1))
      G.block(j * n, off_x(j + 1, n, m), n, n) = -Mat::Identity(n, n);
  }
  return G;
}

Mat MpcIngredients::denseH() const {
  Mat H = Mat::Zero(nz, nz);
  for (int j = 0; j < N; ++j) {
    H.block(off_u(j, n, m), off_u(j, n, m), m, m) = weights.R;
    if (j > 0) H.block(off_x(j, n, m), off_x(j, n, m), n, n) = weights.Q;
  }
  if (variant != MpcVariant::equ) H.bottomRightCorner(n, n) = weights.T;
  return H;
}

MpcIngredients build_ingredients(const LtiModel& model, const MpcWeights& weights,
                                 MpcVariant variant) {
  if (variant == MpcVariant::mpct)
    throw std::invalid_argument("build_ingredients: use build_mpct_ingredients for mpct");
  if (weights.N < 2) throw std::invalid_argument("build_ingredients: N must be >= 2");
  if ((model.x_lo.array() >= model.x_hi.array()).any() ||
      (model.u_lo.array() >= model.u_hi.array()).any())
    throw std::invalid_argument("build_ingredients: bounds must satisfy lo < hi");

  MpcIngredients ing;
  ing.variant = variant;
  ing.model = model;
  ing.weights = weights;
  ing.n = model.n();
  ing.m = model.m();
  ing.N = weights.N;
  const int n = ing.n, m = ing.m, N = ing.N;
  ing.mz = N * n;
  ing.nz = variant == MpcVariant::equ ? (N - 1) * (n + m) + m : N * (n + m);

  const bool needs_x_n = variant != MpcVariant::equ;
  const int nbox = variant == MpcVariant::ellip ? ing.nz - n : ing.nz;
  ing.z_lo.resize(nbox);
  ing.z_hi.resize(nbox);
  for (int j = 0; j < N; ++j) {
    ing.z_lo.segment(off_u(j, n, m), m) = model.u_lo;
    ing.z_hi.segment(off_u(j, n, m), m) = model.u_hi;
    if (j > 0) {
      ing.z_lo.segment(off_x(j, n, m), n) = model.x_lo;
      ing.z_hi.segment(off_x(j, n, m), n) = model.x_hi;
    }
  }
  if (variant == MpcVariant::lax) {
    ing.z_lo.tail(n) = model.x_lo;
    ing.z_hi.tail(n) = model.x_hi;
  }

  // FISTA path needs diagonal weights
  const bool diag_weights = is_diagonal(weights.Q) && is_diagonal(weights.R) &&
                            (!needs_x_n || is_diagonal(weights.T));
  if (diag_weights && variant != MpcVariant::ellip) {
    if ((weights.Q.diagonal().array() <= 0).any() || (weights.R.diagonal().array() <= 0).any())
      throw std::invalid_argument("build_ingredients: diagonal weights must be positive");
    ing.hdiag.resize(ing.nz);
    for (int j = 0; j < N; ++j) {
      ing.hdiag.segment(off_u(j, n, m), m) = weights.R.diagonal();
      if (j > 0) ing.hdiag.segment(off_x(j, n, m), n) = weights.Q.diagonal();
    }
    if (needs_x_n) ing.hdiag.tail(n) = weights.T.diagonal();
    ing.hdiag_inv = ing.hdiag.cwiseInverse();

    const Mat Qi = weights.Q.diagonal().cwiseInverse().asDiagonal();
    const Mat Ri = weights.R.diagonal().cwiseInverse().asDiagonal();
    const Mat Ti = needs_x_n ? Mat(weights.T.diagonal().cwiseInverse().asDiagonal()) : Mat();
    std::vector<Mat> diag, off;
    for (int j = 0; j < N; ++j) {
      Mat D = model.B * Ri * model.B.transpose();
      if (j > 0) D += model.A * Qi * model.A.transpose();
      if (!(variant == MpcVariant::equ && j == N - 1))
        D += (j == N - 1 && needs_x_n) ? Ti : Qi;
      diag.push_back(D);
      // rows j and j+1 overlap on x_{j+1}, whose weight is always Q
      if (j < N - 1) off.push_back(-Qi * model.A.transpose());
    }
    ing.w_fista = BandedCholesky::factor(diag, off);
  }

  // ADMM path
  if (weights.rho <= 0) throw std::invalid_argument("build_ingredients: rho must be positive");
  const double rho = weights.rho;
  ing.Qrho_inv = (weights.Q + rho * Mat::Identity(n, n)).inverse();
  ing.Rrho_inv = (weights.R + rho * Mat::Identity(m, m)).inverse();
  if (variant == MpcVariant::lax)
    ing.Trho_inv = (weights.T + rho * Mat::Identity(n, n)).inverse();
  if (variant != MpcVariant::ellip) {
    std::vector<Mat> diag, off;
    for (int j = 0; j < N; ++j) {
      Mat D = model.B * ing.Rrho_inv * model.B.transpose();
      if (j > 0) D += model.A * ing.Qrho_inv * model.A.transpose();
      if (!(variant == MpcVariant::equ && j == N - 1))
        D += (j == N - 1 && needs_x_n) ? ing.Trho_inv : ing.Qrho_inv;
      diag.push_back(D);
      if (j < N - 1) off.push_back(-ing.Qrho_inv * model.A.transpose());
    }
    ing.w_admm = BandedCholesky::factor(diag, off);
  }
  return ing;
}

void set_terminal_ellipsoid(MpcIngredients& ing, const Ellipsoid& ell) {
  if (ing.variant != MpcVariant::ellip)
    throw std::invalid_argument("set_terminal_ellipsoid: ingredient set is not ellip");
  ing.terminal_set = ell;
  const int n = ing.n, N = ing.N;
  const double rho = ing.weights.rho;
  ing.Trho_inv = (ing.weights.T + rho * ell.P()).inverse();
  std::vector<Mat> diag, off;
  for (int j = 0; j < N; ++j) {
    Mat D = ing.model.B * ing.Rrho_inv * ing.model.B.transpose();
    if (j > 0) D += ing.model.A * ing.Qrho_inv * ing.model.A.transpose();
    D += (j == N - 1) ? ing.Trho_inv : ing.Qrho_inv;
    diag.push_back(D);
    if (j < N - 1) off.push_back(-ing.Qrho_inv * ing.model.A.transpose());
  }
  ing.w_admm = BandedCholesky::factor(diag, off);
}

MpcSolveResult solve_std_fista(const MpcIngredients& ing, const Vec& x_t, const Vec& x_r,
                               const Vec& u_r, const Vec& lam_warm, double eps,
                               long max_iter) {
  if (ing.hdiag.size() == 0)
    throw std::invalid_argument("solve_std_fista: ingredients lack a diagonal-H path");
  const Vec q = ing.buildQ(x_r, u_r);
  const Vec b = ing.buildB(x_t, x_r);

  Vec qk = q - ing.mulGT(lam_warm);
  Vec z = solve_box_qp(qk, ing.hdiag_inv, ing.z_lo, ing.z_hi);
  Vec gamma = -(ing.mulG(z) - b);
  Vec dl = ing.w_fista.solve(gamma);
  Vec y = lam_warm + dl;
  Vec lam = y;
  double t = 1.0;
  long k = 0;
  MpcSolveResult res;
  while (true) {
    ++k;
    qk = q - ing.mulGT(y);
    z = solve_box_qp(qk, ing.hdiag_inv, ing.z_lo, ing.z_hi);
    gamma = -(ing.mulG(z) - b);
    const double rnorm = gamma.lpNorm<Eigen::Infinity>();
    if (rnorm <= eps || k >= max_iter) {
      res.z = z;
      res.lam = y;
      res.u0 = z.head(ing.m);
      res.iterations = k;
      res.r_p = rnorm;
      res.converged = rnorm <= eps;
      return res;
    }
    dl = ing.w_fista.solve(gamma);
    const Vec lam_next = dl + y;
    const double tn = t_next(t);
    y = lam_next + ((t - 1.0) / tn) * (lam_next - lam);
    lam = lam_next;
    t = tn;
  }
}

MpcSolveResult solve_std_admm(const MpcIngredients& ing, const Vec& x_t, const Vec& x_r,
                              const Vec& u_r, const Vec& v_warm, const Vec& lam_warm,
                              double eps_p, double eps_d, long max_iter) {
  const Vec q = ing.buildQ(x_r, u_r);
  const Vec b = ing.buildB(x_t, x_r);
  const double rho = ing.weights.rho;

  MpcSolveResult res;
  Vec v = v_warm, lam = lam_warm;
  long k = 0;
  while (true) {
    const Vec qk = q + lam - rho * v;
    Vec mu = -(ing.mulG(ing.applyHrhoInv(qk)) + b);
    ing.w_admm.solveInPlace(mu);
    const Vec z = -ing.applyHrhoInv(ing.mulGT(mu) + qk);
    const Vec qhat = -rho * z - lam;
    const Vec v_next = solve_box_qp(qhat, rho, ing.z_lo, ing.z_hi);
    lam += rho * (z - v_next);
    ++k;
    const double r_p = (z - v_next).lpNorm<Eigen::Infinity>();
    const double r_d = (v_next - v).lpNorm<Eigen::Infinity>();
    v = v_next;
    if ((r_p <= eps_p && r_d <= eps_d) || k >= max_iter) {
      res.z = z;
      res.v = v;
      res.lam = lam;
      res.u0 = v.head(ing.m);
      res.iterations = k;
      res.r_p = r_p;
      res.r_d = r_d;
      res.converged = r_p <= eps_p && r_d <= eps_d;
      return res;
    }
  }
}

MpcSolveResult solve_ellip_admm(const MpcIngredients& ing, const Vec& x_t, const Vec& x_r,
                                const Vec& u_r, const Vec& v_warm, const Vec& lam_warm,
                                double eps_p, double eps_d, long max_iter) {
  if (!ing.terminal_set)
    throw std::invalid_argument("solve_ellip_admm: terminal ellipsoid not set");
  const Ellipsoid& ell = *ing.terminal_set;
  const Vec q = ing.buildQ(x_r, u_r);
  const Vec b = ing.buildB(x_t, x_r);
  const double rho = ing.weights.rho;
  const int n = ing.n;
  const int no = ing.nz - n;

  MpcSolveResult res;
  Vec v = v_warm, lam = lam_warm;
  long k = 0;
  while (true) {
    Vec qhat(ing.nz);
    qhat.head(no) = q.head(no) + lam.head(no) - rho * v.head(no);
    qhat.tail(n) =
        q.tail(n) + ell.Phalf() * lam.tail(n) - rho * (ell.P() * v.tail(n));
    Vec mu = -(ing.mulG(ing.applyHrhoInv(qhat)) + b);
    ing.w_admm.solveInPlace(mu);
    const Vec z = -ing.applyHrhoInv(ing.mulGT(mu) + qhat);
    Vec v_next(ing.nz);
    v_next.head(no) =
        solve_box_qp(Vec(-rho * z.head(no) - lam.head(no)), rho, ing.z_lo, ing.z_hi);
    Vec vf = z.tail(n) + ell.PnegHalf() * lam.tail(n) / rho;
    vf = ell.project(vf);
    v_next.tail(n) = vf;
    const Vec rf = ell.Phalf() * (z.tail(n) - vf);
    lam.head(no) += rho * (z.head(no) - v_next.head(no));
    lam.tail(n) += rho * rf;
    ++k;
    const double r_p = std::max((z.head(no) - v_next.head(no)).lpNorm<Eigen::Infinity>(),
                                rf.lpNorm<Eigen::Infinity>());
    const double r_d = (v_next - v).lpNorm<Eigen::Infinity>();
    v = v_next;
    if ((r_p <= eps_p && r_d <= eps_d) || k >= max_iter) {
      res.z = z;
      res.v = v;
      res.lam = lam;
      res.u0 = v.head(ing.m);
      res.iterations = k;
      res.r_p = r_p;
      res.r_d = r_d;
      res.converged = r_p <= eps_p && r_d <= eps_d;
      return res;
    }
  }
}

TerminalIngredients terminal_ingredients(const LtiModel& model, const Mat& Q, const Mat& R,
                                         const Vec& x_r, const Vec& u_r, double softening) {
  TerminalIngredients out;
  const Mat Ps = solve_dare(model.A, model.B, Q, softening * R);
  out.K = lqr_gain(model.A, model.B, Ps, softening * R);
  const Mat AK = model.A + model.B * out.K;
  out.T = solve_dlyap(AK, Mat(Q + out.K.transpose() * R * out.K));

  const Mat Pinv = Ps.inverse();
  double rmax = std::numeric_limits<double>::infinity();
  for (int j = 0; j < model.n(); ++j) {
    for (const double gap : {model.x_hi[j] - x_r[j], x_r[j] - model.x_lo[j]}) {
      if (gap < kBigBound / 2)
        rmax = std::min(rmax, gap / std::sqrt(Pinv(j, j)));
    }
  }
  for (int j = 0; j < model.m(); ++j) {
    const Vec kj = out.K.row(j).transpose();
    const double s = std::sqrt(kj.dot(Pinv * kj));
    for (const double gap : {model.u_hi[j] - u_r[j], u_r[j] - model.u_lo[j]})
      rmax = std::min(rmax, gap / s);
  }
  if (!std::isfinite(rmax) || rmax <= 0)
    throw std::runtime_error("terminal_ingredients: no admissible radius");
  out.P = Ps / (rmax * rmax);  // normalized so radius 1 is admissible
  out.r = 1.0;
  return out;
}

Mat diagonal_terminal_cost(const LtiModel& model, const Mat& Q, const Mat& R) {
  const Mat That = solve_dare(model.A, model.B, Q, R);
  return That.rowwise().sum().asDiagonal();
}

EllipsoidValidation validate_invariant_ellipsoid(const LtiModel& model, const Mat& K,
                                                 const Ellipsoid& ell, const Vec& x_r,
                                                 const Vec& u_r, long samples,
                                                 std::uint64_t seed) {
  EllipsoidValidation rep;
  rep.samples = samples;
  rep.worst_margin = std::numeric_limits<double>::infinity();
  Xoshiro256pp rng(seed);
  const int n = model.n();
  const double r2 = ell.radius() * ell.radius();
  for (long i = 0; i < samples; ++i) {
    Vec d(n);
    for (int j = 0; j < n; ++j) d[j] = rng.normal();
    d /= d.norm();
    const double scale = (i % 2 == 0) ? 1.0 : std::pow(rng.uniform(), 1.0 / n);
    const Vec x = ell.center() + ell.radius() * scale * (ell.PnegHalf() * d);
    const Vec u = K * (x - x_r) + u_r;
    const Vec xn = model.A * x + model.B * u;
    const Vec dn = xn - ell.center();
    const double margin = r2 - dn.dot(ell.P() * dn);
    rep.worst_margin = std::min(rep.worst_margin, margin);
    if (margin < -1e-9) ++rep.invariance_violations;
    const bool adm = (x.array() >= model.x_lo.array() - 1e-9).all() &&
                     (x.array() <= model.x_hi.array() + 1e-9).all() &&
                     (u.array() >= model.u_lo.array() - 1e-9).all() &&
                     (u.array() <= model.u_hi.array() + 1e-9).all();
    if (!adm) ++rep.admissibility_violations;
  }
  return rep;
}

// ---------------------------------------------------------------------------
// ingredient text format

namespace {

void write_mat(std::ostream& out, const std::string& label, const Mat& M) {
  out << '[' << label << "]\n" << M.rows() << ' ' << M.cols() << '\n';
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    for (Eigen::Index j = 0; j < M.cols(); ++j) {
      if (j) out << ' ';
      out << M(i, j);
    }
    out << '\n';
  }
}

Mat read_mat(std::istream& in) {
  Eigen::Index rows, cols;
  in >> rows >> cols;
  Mat M(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) in >> M(i, j);
  return M;
}

}  // namespace

void write_ingredients(std::ostream& out, const MpcIngredients& ing) {
  out.precision(17);
  out << "spmpc-ingredients 1\n";
  out << "variant " << to_string(ing.variant) << '\n';
  out << "N " << ing.N << '\n';
  out << "rho " << ing.weights.rho << '\n';
  write_mat(out, "A", ing.model.A);
  write_mat(out, "B", ing.model.B);
  write_mat(out, "Q", ing.weights.Q);
  write_mat(out, "R", ing.weights.R);
  if (ing.variant != MpcVariant::equ) write_mat(out, "T", ing.weights.T);
  write_mat(out, "x_lo", ing.model.x_lo);
  write_mat(out, "x_hi", ing.model.x_hi);
  write_mat(out, "u_lo", ing.model.u_lo);
  write_mat(out, "u_hi", ing.model.u_hi);
  if (ing.terminal_set) {
    write_mat(out, "P", ing.terminal_set->P());
    write_mat(out, "c", ing.terminal_set->center());
    out << "[r]\n1 1\n" << ing.terminal_set->radius() << '\n';
  }
}

MpcIngredients read_ingredients(std::istream& in) {
  std::string header;
  int version;
  in >> header >> version;
  if (header != "spmpc-ingredients" || version != 1)
    throw std::runtime_error("read_ingredients: bad header");
  std::string key, variant;
  in >> key >> variant;
  MpcWeights w;
  in >> key >> w.N;
  in >> key >> w.rho;
  std::map<std::string, Mat> mats;
  std::string label;
  while (in >> label) {
    if (label.size() < 2 || label.front() != '[') break;
    mats[label.substr(1, label.size() - 2)] = read_mat(in);
  }
  LtiModel model;
  model.A = mats.at("A");
  model.B = mats.at("B");
  model.x_lo = mats.at("x_lo");
  model.x_hi = mats.at("x_hi");
  model.u_lo = mats.at("u_lo");
  model.u_hi = mats.at("u_hi");
  w.Q = mats.at("Q");
  w.R = mats.at("R");
  if (mats.count("T")) w.T = mats.at("T");
  MpcVariant v = MpcVariant::lax;
  if (variant == "equ") v = MpcVariant::equ;
  else if (variant == "ellip") v = MpcVariant::ellip;
  else if (variant == "lax") v = MpcVariant::lax;
  else throw std::runtime_error("read_ingredients: unsupported variant " + variant);
  MpcIngredients ing = build_ingredients(model, w, v);
  if (mats.count("P"))
    set_terminal_ellipsoid(ing, Ellipsoid(mats.at("P"), Vec(mats.at("c")),
                                          mats.at("r")(0, 0)));
  return ing;
}

}  // namespace spmpc
