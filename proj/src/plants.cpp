#include "spmpc/plants.hpp"

#include "spmpc/linalg.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>

namespace spmpc {
namespace {

constexpr double kBigBound = 1e6;

struct ChemParams {
  double A1 = 1.0, A2 = 1.0, A3 = 1.0;
  double rho = 1100.0, Cp = 4.0;
  double kv1 = 50.0, kv2 = 50.0, kv3 = 30.0;
  double T0 = 313.0;
  double kA = 1e-5, kB = 5e-6;
  double EA_R = -2840.0, EB_R = -2077.0;
  double dHA = -100.0, dHB = -39.0;
  double aA = 3.5, aB = 1.1, aC = 0.5, aD = 0.001;
  double cA0 = 1.0, cB0 = 0.0;
};

Vec chem_rhs(const Vec& x, const Vec& u, const ChemParams& p) {
  const double h1 = x[0], cA1 = x[1], cB1 = x[2], T1 = x[3];
  const double h2 = x[4], cA2 = x[5], cB2 = x[6], T2 = x[7];
  const double h3 = x[8], cA3 = x[9], cB3 = x[10], T3 = x[11];
  const double Q1 = u[0], Q2 = u[1], Q3 = u[2];
  const double Ff1 = u[3], Ff2 = u[4], FR = u[5];
  if (h1 <= 0.0 || h2 <= 0.0 || h3 <= 0.0)
    throw std::domain_error("chemical plant: liquid height must be positive");

  const double F1 = p.kv1 * h1;
  const double F2 = p.kv2 * h2;
  const double F3 = p.kv3 * h3;
  const double FD = p.aD * FR;
  const double cC3 = 1.0 - cA3 - cB3;
  const double c3bar = p.aA * cA3 + p.aB * cB3 + p.aC * cC3;
  const double cAR = p.aA * cA3 / c3bar;
  const double cBR = p.aB * cB3 / c3bar;
  const double kA1 = p.kA * std::exp(-p.EA_R / T1);
  const double kB1 = p.kB * std::exp(-p.EB_R / T1);
  const double kA2 = p.kA * std::exp(-p.EA_R / T2);
  const double kB2 = p.kB * std::exp(-p.EB_R / T2);
  const double rA1 = p.rho * p.A1, rA2 = p.rho * p.A2, rA3 = p.rho * p.A3;
  const double TR = T3;  // recycle leaves the separator at its temperature

  Vec d(12);
  d[0] = (Ff1 + FR - F1) / rA1;
  d[1] = (Ff1 * (p.cA0 - cA1) + FR * (cAR - cA1)) / (rA1 * h1) - kA1 * cA1;
  d[2] = (Ff1 * (p.cB0 - cB1) + FR * (cBR - cB1)) / (rA1 * h1) - kB1 * cB1 + kA1 * cA1;
  d[3] = (Ff1 * (p.T0 - T1) + FR * (TR - T1)) / (rA1 * h1) + Q1 / (rA1 * h1 * p.Cp) -
         (kA1 * cA1 * p.dHA + kB1 * cB1 * p.dHB) / p.Cp;
  d[4] = (Ff2 + F1 - F2) / rA2;
  d[5] = (Ff2 * (p.cA0 - cA2) + F1 * (cA1 - cA2)) / (rA2 * h2) - kA2 * cA2;
  d[6] = (Ff2 * (p.cB0 - cB2) + F1 * (cB1 - cB2)) / (rA2 * h2) - kB2 * cB2 + kA2 * cA2;
  d[7] = (Ff2 * (p.T0 - T2) + F1 * (T1 - T2)) / (rA2 * h2) + Q2 / (rA2 * h2 * p.Cp) -
         (kA2 * cA2 * p.dHA + kB2 * cB2 * p.dHB) / p.Cp;
  // The (FD + FR) terms in the separator mass balances enter with the
  // minus sign used in the source model.
  d[8] = (F2 - FD - FR - F3) / rA3;
  d[9] = (F2 * (cA2 - cA3) - (FD + FR) * (cAR - cA3)) / (rA3 * h3);
  d[10] = (F2 * (cB2 - cB3) - (FD + FR) * (cBR - cB3)) / (rA3 * h3);
  d[11] = F2 * (T2 - T3) / (rA3 * h3) + Q3 / (rA3 * h3 * p.Cp);
  return d;
}

}  // namespace

NonlinearPlant chemical_plant() {
  NonlinearPlant p;
  p.n = 12;
  p.m = 6;
  p.name = "chemical_plant";
  const ChemParams par;
  p.rhs = [par](const Vec& x, const Vec& u) { return chem_rhs(x, u, par); };
  p.chi_lo = Vec(12);
  p.chi_hi = Vec(12);
  p.chi_lo << 0, 0, 0, 320, 0, 0, 0, 320, 0, 0, 0, 320;
  p.chi_hi << 2, 1, 1, 348, 2, 1, 1, 348, 2, 1, 1, 338;
  p.u_lo = Vec(6);
  p.u_hi = Vec(6);
  p.u_lo << -5000, -5000, -5000, 0, 0, 0;
  p.u_hi << 5000, 5000, 5000, 50, 50, 50;
  return p;
}

NonlinearPlant ball_plate() {
  NonlinearPlant p;
  p.n = 8;
  p.m = 2;
  p.name = "ball_plate";
  const double m = 0.05, r = 0.01;
  const double Ib = (2.0 / 5.0) * m * r * r;
  const double fac = m / (m + Ib / (r * r));  // = 5/7 for a solid ball
  const double g = 9.81;
  p.rhs = [fac, g](const Vec& x, const Vec& u) {
    // x = (p1, p1., th1, th1., p2, p2., th2, th2.)
    const double p1 = x[0], th1 = x[2], dth1 = x[3];
    const double p2 = x[4], th2 = x[6], dth2 = x[7];
    Vec d(8);
    d[0] = x[1];
    d[1] = fac * (p1 * dth1 * dth1 + p2 * dth1 * dth2 + g * std::sin(th1));
    d[2] = dth1;
    d[3] = u[0];
    d[4] = x[5];
    d[5] = fac * (p2 * dth2 * dth2 + p1 * dth1 * dth2 + g * std::sin(th2));
    d[6] = dth2;
    d[7] = u[1];
    return d;
  };
  // velocity, angle and angle-acceleration limits; positions and angular
  // rates free
  p.chi_lo = Vec(8);
  p.chi_hi = Vec(8);
  const double th = M_PI / 4.0;
  p.chi_lo << -kBigBound, -0.5, -th, -kBigBound, -kBigBound, -0.5, -th, -kBigBound;
  p.chi_hi = -p.chi_lo;
  p.u_lo = Vec::Constant(2, -0.4);
  p.u_hi = Vec::Constant(2, 0.4);
  return p;
}

void oscillating_masses_model(Mat& Ac, Mat& Bc) {
  const double k = 2.0, m1 = 1.0, m2 = 0.5, m3 = 1.0;
  Ac = Mat::Zero(6, 6);
  Ac(0, 3) = Ac(1, 4) = Ac(2, 5) = 1.0;
  Ac(3, 0) = -2 * k / m1;
  Ac(3, 1) = k / m1;
  Ac(4, 0) = k / m2;
  Ac(4, 1) = -2 * k / m2;
  Ac(4, 2) = k / m2;
  Ac(5, 1) = k / m3;
  Ac(5, 2) = -2 * k / m3;
  Bc = Mat::Zero(6, 2);
  Bc(3, 0) = 1.0 / m1;
  Bc(5, 1) = 1.0 / m3;
}

Vec chemical_plant_operating_seed() {
  Vec chi(12);
  // Table values; the separator temperature is left to the Newton solve
  // (the steady value under zero heats is T3 = T2).
  chi << 0.7, 0.4155, 0.5480, 329.0, 0.9, 0.2581, 0.6755, 333.0, 1.33, 0.2282, 0.7, 333.0;
  return chi;
}

Vec chemical_plant_operating_input() {
  Vec u(6);
  u << 0, 0, 0, 30, 10, 5;
  return u;
}

Vec chemical_plant_reference_state() {
  Vec chi(12);
  chi << 0.7, 0.419, 0.545, 329.571, 0.9, 0.261, 0.673, 333.435, 1.333, 0.231, 0.698, 337.602;
  return chi;
}

Vec chemical_plant_reference_input() {
  Vec u(6);
  u << 0, 0, 750, 30, 10, 5;
  return u;
}

Vec refine_steady_state(const NonlinearPlant& plant, const Vec& chi_seed, const Vec& u,
                        double tol, int max_iter) {
  Vec x = chi_seed;
  const int n = plant.n;
  for (int it = 0; it < max_iter; ++it) {
    const Vec r = plant.rhs(x, u);
    if (r.lpNorm<Eigen::Infinity>() < tol) return x;
    Mat J(n, n);
    for (int i = 0; i < n; ++i) {
      const double h = 1e-6 * std::max(1.0, std::abs(x[i]));
      Vec xp = x, xm = x;
      xp[i] += h;
      xm[i] -= h;
      J.col(i) = (plant.rhs(xp, u) - plant.rhs(xm, u)) / (2.0 * h);
    }
    x -= J.partialPivLu().solve(r);
  }
  throw std::runtime_error("refine_steady_state: Newton iteration did not converge");
}

void linearize(const NonlinearPlant& plant, const Vec& chi0, const Vec& u0, Mat& Ac,
               Mat& Bc, double h) {
  if (h <= 0.0) throw std::invalid_argument("linearize: step must be positive");
  Ac.resize(plant.n, plant.n);
  Bc.resize(plant.n, plant.m);
  for (int i = 0; i < plant.n; ++i) {
    Vec xp = chi0, xm = chi0;
    xp[i] += h;
    xm[i] -= h;
    const Vec fp = plant.rhs(xp, u0);
    const Vec fm = plant.rhs(xm, u0);
    if (!fp.allFinite() || !fm.allFinite())
      throw std::runtime_error("linearize: non-finite plant evaluation in stencil");
    Ac.col(i) = (fp - fm) / (2.0 * h);
  }
  for (int i = 0; i < plant.m; ++i) {
    Vec up = u0, um = u0;
    up[i] += h;
    um[i] -= h;
    Bc.col(i) = (plant.rhs(chi0, up) - plant.rhs(chi0, um)) / (2.0 * h);
  }
}

void discretize_zoh(const Mat& Ac, const Mat& Bc, double ts, Mat& A, Mat& B) {
  if (ts <= 0.0) throw std::invalid_argument("discretize_zoh: ts must be positive");
  const int n = static_cast<int>(Ac.rows());
  const int m = static_cast<int>(Bc.cols());
  Mat M = Mat::Zero(n + m, n + m);
  M.topLeftCorner(n, n) = Ac * ts;
  M.topRightCorner(n, m) = Bc * ts;
  const Mat E = expm(M);
  A = E.topLeftCorner(n, n);
  B = E.topRightCorner(n, m);
}

DiscreteLtiModel scale_model(const Mat& A, const Mat& B, const OperatingPoint& op,
                             const Vec& chi_lo, const Vec& chi_hi, const Vec& u_lo,
                             const Vec& u_hi, double ts, const std::string& name) {
  if ((op.nx.array() == 0.0).any() || (op.nu.array() == 0.0).any())
    throw std::invalid_argument("scale_model: zero scaling entry");
  DiscreteLtiModel m;
  m.A = op.nx.asDiagonal() * A * op.nx.cwiseInverse().asDiagonal();
  m.B = op.nx.asDiagonal() * B * op.nu.cwiseInverse().asDiagonal();
  m.ts = ts;
  m.op = op;
  m.name = name;
  m.x_lo = op.nx.cwiseProduct(chi_lo - op.chi0);
  m.x_hi = op.nx.cwiseProduct(chi_hi - op.chi0);
  m.u_lo = op.nu.cwiseProduct(u_lo - op.u0);
  m.u_hi = op.nu.cwiseProduct(u_hi - op.u0);
  return m;
}

DiscreteLtiModel chemical_plant_model() {
  const NonlinearPlant plant = chemical_plant();
  OperatingPoint op;
  op.u0 = chemical_plant_operating_input();
  op.chi0 = refine_steady_state(plant, chemical_plant_operating_seed(), op.u0);
  op.nx = Vec(12);
  op.nx << 1, 1, 1, 0.1, 1, 1, 1, 0.1, 1, 1, 1, 0.1;
  op.nu = Vec(6);
  op.nu << 0.001, 0.001, 0.001, 0.1, 0.1, 0.1;
  Mat Ac, Bc, A, B;
  linearize(plant, op.chi0, op.u0, Ac, Bc);
  discretize_zoh(Ac, Bc, 3.0, A, B);
  return scale_model(A, B, op, plant.chi_lo, plant.chi_hi, plant.u_lo, plant.u_hi, 3.0,
                     plant.name);
}

DiscreteLtiModel ball_plate_model() {
  const NonlinearPlant plant = ball_plate();
  OperatingPoint op;
  op.chi0 = Vec::Zero(8);
  op.u0 = Vec::Zero(2);
  op.nx = Vec(8);
  op.nx << 0.1, 1, 1, 1, 0.1, 1, 1, 1;
  op.nu = Vec::Ones(2);
  Mat Ac, Bc, A, B;
  linearize(plant, op.chi0, op.u0, Ac, Bc);
  discretize_zoh(Ac, Bc, 0.2, A, B);
  return scale_model(A, B, op, plant.chi_lo, plant.chi_hi, plant.u_lo, plant.u_hi, 0.2,
                     plant.name);
}

DiscreteLtiModel ball_plate_model_unscaled() {
  const NonlinearPlant plant = ball_plate();
  OperatingPoint op;
  op.chi0 = Vec::Zero(8);
  op.u0 = Vec::Zero(2);
  op.nx = Vec::Ones(8);
  op.nu = Vec::Ones(2);
  Mat Ac, Bc, A, B;
  linearize(plant, op.chi0, op.u0, Ac, Bc);
  discretize_zoh(Ac, Bc, 0.2, A, B);
  return scale_model(A, B, op, plant.chi_lo, plant.chi_hi, plant.u_lo, plant.u_hi, 0.2,
                     "ball_plate_eng");
}

DiscreteLtiModel oscillating_masses_bench() {
  Mat Ac, Bc, A, B;
  oscillating_masses_model(Ac, Bc);
  discretize_zoh(Ac, Bc, 0.2, A, B);
  OperatingPoint op;
  op.chi0 = Vec::Zero(6);
  op.u0 = Vec::Zero(2);
  op.nx = Vec(6);
  op.nx << 10, 10, 10, 1, 1, 1;
  op.nu = Vec::Ones(2);
  Vec chi_lo(6), chi_hi(6);
  chi_lo << -0.3, -0.3, -0.3, -kBigBound, -kBigBound, -kBigBound;
  chi_hi = -chi_lo;
  Vec u_lo = Vec::Constant(2, -0.8);
  Vec u_hi = Vec::Constant(2, 0.8);
  return scale_model(A, B, op, chi_lo, chi_hi, u_lo, u_hi, 0.2, "oscillating_masses");
}

double ClosedLoopTrace::averageIterations() const {
  if (samples.empty()) return 0.0;
  double s = 0.0;
  for (const auto& c : samples) s += static_cast<double>(c.iterations);
  return s / static_cast<double>(samples.size());
}

double ClosedLoopTrace::medianIterations() const {
  if (samples.empty()) return 0.0;
  std::vector<long> it;
  it.reserve(samples.size());
  for (const auto& c : samples) it.push_back(c.iterations);
  std::sort(it.begin(), it.end());
  const size_t n = it.size();
  if (n % 2 == 1) return static_cast<double>(it[n / 2]);
  return 0.5 * (static_cast<double>(it[n / 2 - 1]) + static_cast<double>(it[n / 2]));
}

long ClosedLoopTrace::maxIterations() const {
  long v = 0;
  for (const auto& c : samples) v = std::max(v, c.iterations);
  return v;
}

long ClosedLoopTrace::minIterations() const {
  long v = samples.empty() ? 0 : samples.front().iterations;
  for (const auto& c : samples) v = std::min(v, c.iterations);
  return v;
}

ClosedLoopTrace simulate_closed_loop(const DiscreteLtiModel& model,
                                     const std::function<ControllerStep(const Vec&)>& controller,
                                     const Vec& x0, int steps) {
  ClosedLoopTrace trace;
  trace.samples.reserve(static_cast<size_t>(steps));
  Vec x = x0;
  for (int t = 0; t < steps; ++t) {
    const auto t0 = std::chrono::steady_clock::now();
    const ControllerStep step = controller(x);
    const auto t1 = std::chrono::steady_clock::now();
    ClosedLoopSample s;
    s.x = x;
    s.u = step.u;
    s.iterations = step.iterations;
    s.r_p = step.r_p;
    s.r_d = step.r_d;
    s.converged = step.converged;
    s.wall_us =
        std::chrono::duration_cast<std::chrono::duration<double, std::micro>>(t1 - t0).count();
    trace.samples.push_back(std::move(s));
    x = model.A * x + model.B * step.u;
  }
  trace.x_final = x;
  return trace;
}

double performance_index(const ClosedLoopTrace& trace, const Mat& A, const Mat& B,
                         const Vec& x_r, const Vec& u_r, const Mat& Q, const Mat& R) {
  double phi = 0.0;
  for (size_t k = 0; k < trace.samples.size(); ++k) {
    // x_k is the state after applying input k-1; reconstruct the successor.
    const Vec x_next = A * trace.samples[k].x + B * trace.samples[k].u;
    const Vec dx = x_next - x_r;
    const Vec du = trace.samples[k].u - u_r;
    phi += dx.dot(Q * dx) + du.dot(R * du);
  }
  return phi;
}

void write_trace_csv(const ClosedLoopTrace& trace, const std::string& path,
                     const DiscreteLtiModel* eng) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_trace_csv: cannot open " + path);
  if (trace.samples.empty()) {
    out << "sample,iterations,r_p,r_d,wall_us\n";
    return;
  }
  const auto nx = trace.samples.front().x.size();
  const auto nu = trace.samples.front().u.size();
  out << "sample";
  for (Eigen::Index i = 0; i < nx; ++i) out << ",x" << i;
  for (Eigen::Index i = 0; i < nu; ++i) out << ",u" << i;
  out << ",iterations,r_p,r_d,wall_us\n";
  out.precision(17);
  for (size_t k = 0; k < trace.samples.size(); ++k) {
    const auto& s = trace.samples[k];
    const Vec x = eng ? eng->toEngineeringState(s.x) : s.x;
    const Vec u = eng ? eng->toEngineeringInput(s.u) : s.u;
    out << k;
    for (Eigen::Index i = 0; i < nx; ++i) out << ',' << x[i];
    for (Eigen::Index i = 0; i < nu; ++i) out << ',' << u[i];
    out << ',' << s.iterations << ',' << s.r_p << ',' << s.r_d << ',' << s.wall_us << '\n';
  }
}

}  // namespace spmpc
