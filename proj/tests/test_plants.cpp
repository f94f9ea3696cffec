#include <doctest.h>

#include "spmpc/linalg.hpp"
#include "spmpc/plants.hpp"

using namespace spmpc;

TEST_CASE("chemical plant near-steady at the tabulated reference") {
  const auto plant = chemical_plant();
  const Vec r = plant.rhs(chemical_plant_reference_state(), chemical_plant_reference_input());
  CHECK(r.lpNorm<Eigen::Infinity>() <= 1e-2);  // table values carry rounding

  Vec bad = chemical_plant_reference_state();
  bad[0] = 0.0;
  CHECK_THROWS_AS(plant.rhs(bad, chemical_plant_reference_input()), std::domain_error);

  // the Q1 term enters linearly with gain 1/(rho A1 h1 Cp)
  const Vec chi = chemical_plant_reference_state();
  Vec u = chemical_plant_reference_input();
  const Vec r0 = plant.rhs(chi, u);
  u[0] += 500.0;
  const Vec r1 = plant.rhs(chi, u);
  const double gain = (r1[3] - r0[3]) / 500.0;
  CHECK(gain == doctest::Approx(1.0 / (1100.0 * 1.0 * chi[0] * 4.0)).epsilon(1e-9));
}

TEST_CASE("newton refinement lands on an exact steady state") {
  const auto plant = chemical_plant();
  const Vec u0 = chemical_plant_operating_input();
  const Vec chi0 = refine_steady_state(plant, chemical_plant_operating_seed(), u0);
  CHECK(plant.rhs(chi0, u0).lpNorm<Eigen::Infinity>() <= 1e-10);
  // stays near the tabulated seed (concentrations match to table precision)
  CHECK(std::abs(chi0[1] - 0.4155) < 5e-4);
  CHECK(std::abs(chi0[5] - 0.2581) < 5e-4);
  // separator and second reactor share the steady temperature with heats off
  CHECK(chi0[11] == doctest::Approx(chi0[7]).epsilon(1e-6));
}

TEST_CASE("ball and plate equilibrium and small-angle gain") {
  const auto plant = ball_plate();
  CHECK(plant.rhs(Vec::Zero(8), Vec::Zero(2)).norm() == 0.0);
  Vec chi = Vec::Zero(8);
  chi[2] = 1e-6;
  const Vec d = plant.rhs(chi, Vec::Zero(2));
  CHECK(d[1] / chi[2] == doctest::Approx((5.0 / 7.0) * 9.81).epsilon(1e-6));
}

TEST_CASE("oscillating masses rows and symmetry") {
  Mat Ac, Bc;
  oscillating_masses_model(Ac, Bc);
  // v2 row: (k/m2)(p1 + p3 - 2 p2) with k=2, m2=0.5
  CHECK(Ac(4, 0) == doctest::Approx(4.0));
  CHECK(Ac(4, 2) == doctest::Approx(4.0));
  CHECK(Ac(4, 1) == doctest::Approx(-8.0));
  CHECK((Ac * Vec::Zero(6)).norm() == 0.0);
  // mirror symmetry of the chain
  Eigen::PermutationMatrix<6> perm;
  perm.indices() << 2, 1, 0, 5, 4, 3;
  CHECK((perm.transpose() * Ac * perm - Ac).norm() <= 1e-14);
}

TEST_CASE("linearize recovers a linear model exactly") {
  Mat Ac, Bc;
  oscillating_masses_model(Ac, Bc);
  NonlinearPlant lin;
  lin.n = 6;
  lin.m = 2;
  lin.rhs = [Ac, Bc](const Vec& x, const Vec& u) -> Vec { return Ac * x + Bc * u; };
  Mat Ah, Bh;
  linearize(lin, Vec::Zero(6), Vec::Zero(2), Ah, Bh);
  CHECK((Ah - Ac).cwiseAbs().maxCoeff() <= 1e-8);
  CHECK((Bh - Bc).cwiseAbs().maxCoeff() <= 1e-8);

  // second-order accuracy: halving h shrinks the error by about four
  const auto plant = ball_plate();
  Vec chi = Vec::Zero(8);
  chi[0] = 0.3;
  chi[3] = 0.2;
  Mat A1, B1, A2, B2, A3, B3;
  linearize(plant, chi, Vec::Zero(2), A1, B1, 2e-3);
  linearize(plant, chi, Vec::Zero(2), A2, B2, 1e-3);
  linearize(plant, chi, Vec::Zero(2), A3, B3, 1e-6);
  const double e1 = (A1 - A3).cwiseAbs().maxCoeff();
  const double e2 = (A2 - A3).cwiseAbs().maxCoeff();
  CHECK(e2 <= 0.35 * e1);
}

TEST_CASE("zero order hold limits") {
  Mat A, B;
  discretize_zoh(Mat::Zero(2, 2), Mat::Identity(2, 2), 0.7, A, B);
  CHECK(A.isApprox(Mat::Identity(2, 2), 1e-14));
  CHECK(B.isApprox(0.7 * Mat::Identity(2, 2), 1e-14));

  // scalar closed form
  Mat Ac = Mat::Constant(1, 1, -1.3);
  Mat Bc = Mat::Constant(1, 1, 2.0);
  discretize_zoh(Ac, Bc, 0.5, A, B);
  CHECK(A(0, 0) == doctest::Approx(std::exp(-1.3 * 0.5)).epsilon(1e-12));
  CHECK(B(0, 0) ==
        doctest::Approx((std::exp(-1.3 * 0.5) - 1.0) / -1.3 * 2.0).epsilon(1e-12));

  // short-step series: A -> I + Ac Ts + O(Ts^2)
  Mat Ac2(2, 2);
  Ac2 << 0, 1, -2, -0.5;
  discretize_zoh(Ac2, Mat::Identity(2, 2), 1e-4, A, B);
  CHECK((A - Mat::Identity(2, 2) - 1e-4 * Ac2).cwiseAbs().maxCoeff() <= 1e-7);
}

TEST_CASE("scaling is a similarity transform") {
  Mat Ac, Bc, A, B;
  oscillating_masses_model(Ac, Bc);
  discretize_zoh(Ac, Bc, 0.2, A, B);
  const auto bench = oscillating_masses_bench();
  // eigenvalues are invariant under the state scaling
  const Eigen::VectorXcd e0 = A.eigenvalues();
  const Eigen::VectorXcd e1 = bench.A.eigenvalues();
  std::vector<double> m0, m1;
  for (int i = 0; i < 6; ++i) {
    m0.push_back(std::abs(e0[i]));
    m1.push_back(std::abs(e1[i]));
  }
  std::sort(m0.begin(), m0.end());
  std::sort(m1.begin(), m1.end());
  for (int i = 0; i < 6; ++i) CHECK(m0[i] == doctest::Approx(m1[i]).epsilon(1e-10));

  // identity scaling keeps the matrices
  OperatingPoint op;
  op.chi0 = Vec::Zero(6);
  op.u0 = Vec::Zero(2);
  op.nx = Vec::Ones(6);
  op.nu = Vec::Ones(2);
  const auto ident = scale_model(A, B, op, Vec::Constant(6, -1), Vec::Constant(6, 1),
                                 Vec::Constant(2, -1), Vec::Constant(2, 1), 0.2, "x");
  CHECK(ident.A.isApprox(A));
  CHECK(ident.B.isApprox(B));
}

TEST_CASE("matrix exponential agrees with the truncated series") {
  Mat M(3, 3);
  M << 0.2, -1.0, 0.4, 0.7, 0.1, -0.3, -0.2, 0.5, 0.05;
  Mat series = Mat::Identity(3, 3);
  Mat term = Mat::Identity(3, 3);
  for (int k = 1; k < 40; ++k) {
    term = term * M / k;
    series += term;
  }
  CHECK((expm(M) - series).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("closed-loop simulation is reproducible and constant at steady state") {
  const auto bench = oscillating_masses_bench();
  const Vec x_r = bench.toScaledState((Vec(6) << 0.25, 0.25, 0.25, 0, 0, 0).finished());
  const Vec u_r = bench.toScaledInput(Vec::Constant(2, 0.5));
  // constant-input controller at the reference keeps the state put
  auto ctl = [&](const Vec&) { return ControllerStep{u_r, 1, 0.0, 0.0, true}; };
  const auto tr = simulate_closed_loop(bench, ctl, x_r, 20);
  CHECK((tr.x_final - x_r).lpNorm<Eigen::Infinity>() <= 1e-9);
  const auto tr2 = simulate_closed_loop(bench, ctl, x_r, 20);
  for (size_t k = 0; k < tr.samples.size(); ++k)
    CHECK(tr.samples[k].x == tr2.samples[k].x);
}

TEST_CASE("riccati and lyapunov fixed points") {
  const auto bench = oscillating_masses_bench();
  const Mat Q = Vec((Vec(6) << 15, 15, 15, 1, 1, 1).finished()).asDiagonal();
  const Mat R = 0.1 * Mat::Identity(2, 2);
  const Mat X = solve_dare(bench.A, bench.B, Q, R);
  const Mat K = lqr_gain(bench.A, bench.B, X, R);
  const Mat res = bench.A.transpose() * X * bench.A - X -
                  (bench.A.transpose() * X * bench.B) *
                      (R + bench.B.transpose() * X * bench.B)
                          .ldlt()
                          .solve(bench.B.transpose() * X * bench.A) +
                  Q;
  CHECK(res.cwiseAbs().maxCoeff() <= 1e-8);
  const Mat AK = bench.A + bench.B * K;
  const Mat T = solve_dlyap(AK, Mat(Q + K.transpose() * R * K));
  CHECK((AK.transpose() * T * AK - T + Q + K.transpose() * R * K).cwiseAbs().maxCoeff() <=
        1e-9);
}
