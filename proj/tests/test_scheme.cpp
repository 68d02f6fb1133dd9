#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>

#include "selkov/scheme.hpp"
#include "support.hpp"

using namespace selkov;
using namespace selkov::testing;

namespace {

double xnorm(const ModelParams& m, const State& s) { return std::sqrt(weighted_norm_sq(m.geometry(), s)); }

State diff(const State& a, const State& b) {
  return {Field(a.u.values() - b.u.values(), a.boundary()), Field(a.v.values() - b.v.values(), a.boundary())};
}

}  // namespace

TEST_CASE("assemble_rhs") {
  const ModelParams quiet = quiet_params();
  const State zero = State::zeros(3, Boundary::Periodic);
  const RightHandSide D0 = assemble_rhs(quiet, zero, 0.7, 0.1);
  CHECK(D0.D1.values().isZero(0.0));
  CHECK(D0.D2.values().isZero(0.0));

  ModelParams drift = quiet;
  drift.f = Field::basis(0, Boundary::ZeroPad, 0);
  const RightHandSide D1 = assemble_rhs(drift, zero, 0.0, 0.1);
  CHECK(D1.D1[0] == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(D1.D1.values().cwiseAbs().sum() == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(D1.D2.values().isZero(0.0));

  std::mt19937_64 rng(4);
  const ModelParams m = dissipative_params();
  for (int trial = 0; trial < 100; ++trial) {
    const State psi = random_state(rng, 6, Boundary::ZeroPad, 3.0);
    const double dW = std::normal_distribution<double>(0.0, 0.3)(rng);
    const RightHandSide D = assemble_rhs(m, psi, dW, 0.05);
    for (int i = -6; i <= 6; ++i) {
      const bool inside = std::abs(i) <= 4;
      const double f = inside ? 0.6 : 0.0, g = inside ? 0.2 : 0.0, h = inside ? 0.1 : 0.0;
      const double dl = inside ? 0.1 : 0.0;
      const double su = dl * std::tanh(psi.u[i]) + 0.2 * psi.u[i];
      const double sv = dl * std::tanh(psi.v[i]) + 0.2 * psi.v[i];
      CHECK(std::abs(D.D1[i] - (psi.u[i] + f * 0.05 + (h + su) * dW)) <= 1e-14 * std::max(1.0, std::abs(D.D1[i])));
      CHECK(std::abs(D.D2[i] - (psi.v[i] + g * 0.05 + (h + sv) * dW)) <= 1e-14 * std::max(1.0, std::abs(D.D2[i])));
    }
  }

  State bad = zero;
  bad.u.values()(0) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(assemble_rhs(m, bad, 0.1, 0.1), Error);
}

TEST_CASE("implicit_operator examples") {
  ModelParams m = quiet_params();
  const SchemeConfig cfg = scheme(0.1, 0, Boundary::Periodic);
  CHECK(implicit_operator(m, cfg, State::zeros(0, Boundary::Periodic)).u.values().isZero(0.0));

  State psi = State::zeros(0, Boundary::Periodic);
  psi.u.at(0) = 1.0;
  const State G = implicit_operator(m, cfg, psi);
  // u + dt(a1 u - b1 u^2 v + b2 u^3) = 1 + 0.1 + 0.1 ; v + dt(a2 v + b1 u^2 v - b2 u^3) = -0.1
  CHECK(G.u[0] == doctest::Approx(1.2).epsilon(1e-15));
  CHECK(G.v[0] == doctest::Approx(-0.1).epsilon(1e-15));
}

TEST_CASE("implicit_operator matches the dense scalar expansion") {
  std::mt19937_64 rng(8);
  ModelParams m = dissipative_params();
  m.d1 = 0.7;
  m.d2 = 1.3;
  m.a2 = 1.5;
  m.b1 = 0.8;
  m.p = 2;
  for (Boundary b : {Boundary::ZeroPad, Boundary::Periodic}) {
    for (int n : {0, 1, 2, 5}) {
      const DenseOracle oracle(m, 0.07, n, b);
      const State psi = random_state(rng, n, b, 1.5);
      const Eigen::VectorXd ref = oracle.op(oracle.to_blocks(psi));
      const Eigen::VectorXd got = oracle.to_blocks(implicit_operator(m, scheme(0.07, n, b), psi));
      CHECK((ref - got).norm() <= 1e-13 * std::max(1.0, ref.norm()));
    }
  }
}

TEST_CASE("coercivity of the implicit operator") {
  std::mt19937_64 rng(21);
  ModelParams m = dissipative_params();
  m.a1 = 1.0;
  m.a2 = 2.0;
  m.b1 = 0.5;
  m.b2 = 1.5;
  const double dt = 0.1;
  const double lambda = m.lambda();
  int violations = 0;
  for (Boundary b : {Boundary::ZeroPad, Boundary::Periodic}) {
    for (int trial = 0; trial < 1000; ++trial) {
      State psi = random_state(rng, 1 + static_cast<int>(rng() % 10), b);
      const double target = std::uniform_real_distribution<double>(0.0, 100.0)(rng);
      const double scale = target / std::max(1e-300, xnorm(m, psi));
      psi.u.values() *= scale;
      psi.v.values() *= scale;
      const State G = implicit_operator(m, scheme(dt, psi.truncation(), b), psi);
      const double lhs = weighted_inner(m.geometry(), psi, G);
      const double rhs = (1 + lambda * dt) * weighted_norm_sq(m.geometry(), psi);
      if (lhs < rhs * (1 - 1e-12)) ++violations;
    }
  }
  CHECK(violations == 0);
}

TEST_CASE("jacobian") {
  ModelParams m = dissipative_params();
  m.d1 = 0.9;
  m.d2 = 1.4;
  SchemeConfig cfg = scheme(0.1, 3, Boundary::ZeroPad);

  // At psi = 0 the reaction blocks vanish: J = I + dt (d A + a) per species.
  const BandedMatrix J0 = jacobian(m, cfg, State::zeros(3, Boundary::ZeroPad));
  CHECK(J0.coeff(0, 0) == doctest::Approx(1 + 0.1 * (2 * 0.9 + 1)));
  CHECK(J0.coeff(1, 1) == doctest::Approx(1 + 0.1 * (2 * 1.4 + 1)));
  CHECK(J0.coeff(0, 1) == 0.0);
  CHECK(J0.coeff(1, 0) == 0.0);
  CHECK(J0.coeff(0, 2) == doctest::Approx(-0.09));
  CHECK(J0.coeff(1, 3) == doctest::Approx(-0.14));
  CHECK(J0.corners().empty());

  // Periodic N=1: u_1 neighbors u_{-1} through the wrap, which is off-band.
  cfg = scheme(0.1, 1, Boundary::Periodic);
  const BandedMatrix Jp = jacobian(m, cfg, State::zeros(1, Boundary::Periodic));
  std::vector<std::pair<Eigen::Index, Eigen::Index>> corners;
  for (const auto& e : Jp.corners()) corners.emplace_back(e.row, e.col);
  std::sort(corners.begin(), corners.end());
  const std::vector<std::pair<Eigen::Index, Eigen::Index>> expected{{0, 4}, {1, 5}, {4, 0}, {5, 1}};
  CHECK(corners == expected);
  CHECK(Jp.coeff(4, 0) == doctest::Approx(-0.09));
  CHECK(Jp.coeff(5, 1) == doctest::Approx(-0.14));

  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const Boundary b = trial % 2 ? Boundary::Periodic : Boundary::ZeroPad;
    const int n = trial % 5;
    const State psi = random_state(rng, n, b, 2.0);
    const SchemeConfig c = scheme(0.1, n, b);
    const Eigen::MatrixXd analytic = jacobian(m, c, psi).to_dense();
    // Central differences on the library operator in interleaved ordering.
    const Eigen::VectorXd z = pack(psi);
    Eigen::MatrixXd fd(z.size(), z.size());
    for (Eigen::Index k = 0; k < z.size(); ++k) {
      Eigen::VectorXd zp = z, zm = z;
      zp(k) += 1e-6;
      zm(k) -= 1e-6;
      fd.col(k) = (pack(implicit_operator(m, c, unpack(zp, n, b))) -
                   pack(implicit_operator(m, c, unpack(zm, n, b)))) / 2e-6;
    }
    CHECK((analytic - fd).norm() <= 1e-6 * std::max(1.0, analytic.norm()));
  }
}

TEST_CASE("banded solve against dense LU") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng() % 20);
    BandedMatrix A(n, 2, 2);
    for (Eigen::Index r = 0; r < n; ++r) {
      for (Eigen::Index c = std::max<Eigen::Index>(0, r - 2); c <= std::min(n - 1, r + 2); ++c) A.add(r, c, U(rng));
    }
    if (n > 4) {
      A.add(0, n - 1, U(rng));
      A.add(n - 1, 0, U(rng));
      A.add(1, n - 2, U(rng));
    }
    const Eigen::VectorXd b = Eigen::VectorXd::NullaryExpr(n, [&] { return U(rng); });
    const Eigen::MatrixXd dense = A.to_dense();
    if (std::abs(dense.determinant()) < 1e-6) continue;
    const Eigen::VectorXd x = A.solve(b);
    CHECK((dense * x - b).norm() <= 1e-9 * std::max(1.0, b.norm()) * dense.norm() * x.norm());
    CHECK((A.apply(x) - dense * x).norm() <= 1e-12 * std::max(1.0, x.norm()));
  }
  BandedMatrix singular(4, 2, 2);
  CHECK_THROWS_AS(singular.solve(Eigen::VectorXd::Ones(4)), Error);
}

TEST_CASE("solve_implicit examples") {
  const ModelParams m = quiet_params();
  SchemeConfig cfg = scheme(0.1, 0, Boundary::Periodic);

  RightHandSide zero{Field(0, Boundary::Periodic), Field(0, Boundary::Periodic)};
  const SolveResult r0 = solve_implicit(m, cfg, zero, State::zeros(0, Boundary::Periodic));
  CHECK(r0.state.u[0] == 0.0);
  CHECK(r0.diagnostics.iterations <= 1);

  RightHandSide D{Field(0, Boundary::Periodic), Field(0, Boundary::Periodic)};
  D.D1.at(0) = 0.1;
  const SolveResult r = solve_implicit(m, cfg, D, State::zeros(0, Boundary::Periodic));
  CHECK(r.diagnostics.final_residual <= 1e-10);
  // Adding the two equations: (1 + a dt)(u + v) = 0.1.
  CHECK(r.state.u[0] + r.state.v[0] == doctest::Approx(1.0 / 11.0).epsilon(1e-12));
  const DenseOracle oracle(m, 0.1, 0, Boundary::Periodic);
  Eigen::VectorXd d(2);
  d << 0.1, 0.0;
  const Eigen::VectorXd ref = oracle.solve(d, Eigen::VectorXd::Zero(2));
  CHECK(r.state.u[0] == doctest::Approx(ref(0)).epsilon(1e-10));
  CHECK(r.state.v[0] == doctest::Approx(ref(1)).epsilon(1e-10));
}

TEST_CASE("solve_implicit agrees with the dense Newton oracle") {
  std::mt19937_64 rng(77);
  const ModelParams m = dissipative_params();
  for (Boundary b : {Boundary::ZeroPad, Boundary::Periodic}) {
    for (int n : {0, 1, 2}) {
      const DenseOracle oracle(m, 0.1, n, b);
      for (int trial = 0; trial < 30; ++trial) {
        const State target = random_state(rng, n, b, 2.0);
        const State Dstate = implicit_operator(m, scheme(0.1, n, b), target);
        const RightHandSide D{Dstate.u, Dstate.v};
        const State guess = random_state(rng, n, b, 1.0);
        const SolveResult got = solve_implicit(m, scheme(0.1, n, b), D, guess);
        const State ref = oracle.from_blocks(oracle.solve(oracle.to_blocks(Dstate), oracle.to_blocks(guess)));
        CHECK(got.diagnostics.final_residual <= 1e-10);
        CHECK(xnorm(m, diff(got.state, ref)) <= 1e-8);
      }
    }
  }
}

TEST_CASE("fixed-point fallback and divergence") {
  const ModelParams m = dissipative_params();
  SchemeConfig cfg = scheme(0.05, 2, Boundary::Periodic);
  cfg.newton_max_iters = 0;  // force the fallback path
  std::mt19937_64 rng(6);
  const State target = random_state(rng, 2, Boundary::Periodic, 0.5);
  const State Ds = implicit_operator(m, cfg, target);
  const SolveResult r = solve_implicit(m, cfg, RightHandSide{Ds.u, Ds.v}, State::zeros(2, Boundary::Periodic));
  CHECK(r.diagnostics.solver_used == SolverKind::FixedPoint);
  CHECK(r.diagnostics.final_residual <= 1e-10);
  CHECK(xnorm(m, diff(r.state, target)) <= 1e-8);

  cfg.fallback_max_iters = 3;
  CHECK_THROWS_AS(solve_implicit(m, cfg, RightHandSide{Ds.u, Ds.v}, State::zeros(2, Boundary::Periodic)), Error);
}

TEST_CASE("bem_step") {
  const ModelParams quiet = quiet_params();
  const SchemeConfig cfg = scheme(0.1, 2, Boundary::ZeroPad);
  const SolveResult z = bem_step(quiet, cfg, State::zeros(2, Boundary::ZeroPad), 0.3);
  CHECK(z.state.u.values().isZero(0.0));

  std::mt19937_64 rng(12);
  ModelParams no_noise = dissipative_params();
  no_noise.h = Field(0, Boundary::ZeroPad);
  no_noise.sigma_family = SigmaFamily::Zero;
  const State psi = random_state(rng, 2, Boundary::ZeroPad);
  const SolveResult a = bem_step(no_noise, cfg, psi, -1.3);
  const SolveResult b = bem_step(no_noise, cfg, psi, 0.8);
  CHECK(a.state == b.state);

  // One step against the dense oracle on N = 1.
  const ModelParams m = dissipative_params();
  const SchemeConfig c1 = scheme(0.1, 1, Boundary::Periodic);
  const State p1 = random_state(rng, 1, Boundary::Periodic);
  const SolveResult step = bem_step(m, c1, p1, 0.25);
  const RightHandSide D = assemble_rhs(m, p1, 0.25, 0.1);
  const DenseOracle oracle(m, 0.1, 1, Boundary::Periodic);
  const State ref = oracle.from_blocks(oracle.solve(oracle.to_blocks(State{D.D1, D.D2}), oracle.to_blocks(p1)));
  CHECK(xnorm(m, diff(step.state, ref)) <= 1e-8);
}

TEST_CASE("noise stream statistics and coarsening") {
  const NoiseStream s{42, 7, 0.05, 1};
  const std::size_t n = 200000;
  double mean = 0.0, m2 = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double w = s.increment(k);
    mean += w;
    m2 += w * w;
  }
  mean /= n;
  const double var = m2 / n - mean * mean;
  // 5-sigma bands for the sample mean and variance of N(0, 0.05).
  CHECK(std::abs(mean) < 5.0 * std::sqrt(0.05 / n));
  CHECK(std::abs(var - 0.05) < 5.0 * 0.05 * std::sqrt(2.0 / n));
  CHECK(s.increment(123) == NoiseStream{42, 7, 0.05, 1}.increment(123));
  CHECK(s.increment(3) != NoiseStream{42, 8, 0.05, 1}.increment(3));

  // A coarse step sums the fine increments of the same path.
  const NoiseStream coarse = s.with_substeps(4);
  CHECK(coarse.dt == doctest::Approx(0.2));
  for (std::uint64_t m = 0; m < 20; ++m) {
    double fine = 0.0;
    for (std::uint64_t j = 0; j < 4; ++j) fine += s.increment(4 * m + j);
    CHECK(coarse.increment(m) == doctest::Approx(fine).epsilon(1e-13));
  }
}

TEST_CASE("simulate_trajectory") {
  const ModelParams m = dissipative_params();
  const SchemeConfig cfg = scheme(0.05, 6, Boundary::Periodic);
  std::mt19937_64 rng(15);
  const State psi0 = random_state(rng, 6, Boundary::Periodic);
  const NoiseStream stream{99, 0, cfg.dt, 1};

  const Trajectory t0 = simulate_trajectory(m, cfg, psi0, 0, stream);
  REQUIRE(t0.states.size() == 1);
  CHECK(t0.states[0] == psi0);

  const Trajectory a = simulate_trajectory(m, cfg, psi0, 40, stream);
  const Trajectory b = simulate_trajectory(m, cfg, psi0, 40, stream);
  REQUIRE(a.states.size() == 41);
  for (std::size_t k = 0; k < a.states.size(); ++k) {
    CHECK(std::memcmp(a.states[k].u.values().data(), b.states[k].u.values().data(), 13 * sizeof(double)) == 0);
    CHECK(std::memcmp(a.states[k].v.values().data(), b.states[k].v.values().data(), 13 * sizeof(double)) == 0);
  }
  CHECK(a.max_residual <= 1e-10);

  const Trajectory thin = simulate_trajectory(m, cfg, psi0, 40, stream, 10);
  REQUIRE(thin.states.size() == 5);
  CHECK(thin.steps.back() == 40);
  CHECK(thin.states[2] == a.states[20]);

  // Pure dissipation: the X-norm contracts by at least 1/(1 + lambda dt) per step.
  const ModelParams quiet = quiet_params();
  for (Boundary bd : {Boundary::ZeroPad, Boundary::Periodic}) {
    const SchemeConfig c = scheme(0.1, 6, bd);
    const State start = random_state(rng, 6, bd, 3.0);
    const Trajectory d = simulate_trajectory(quiet, c, start, 30, stream);
    for (std::size_t k = 1; k < d.states.size(); ++k) {
      const double prev = xnorm(quiet, d.states[k - 1]);
      const double next = xnorm(quiet, d.states[k]);
      CHECK(next <= prev / (1 + quiet.lambda() * 0.1) * (1 + 1e-9) + 1e-12);
    }
  }
}

TEST_CASE("step failures report the failing step") {
  ModelParams m = dissipative_params();
  SchemeConfig cfg = scheme(0.1, 1, Boundary::Periodic);
  cfg.newton_max_iters = 0;
  cfg.fallback_max_iters = 1;
  State psi0 = State::zeros(1, Boundary::Periodic);
  psi0.u.values().setConstant(50.0);
  try {
    simulate_trajectory(m, cfg, psi0, 5, NoiseStream{1, 0, 0.1, 1});
    FAIL("expected a step failure");
  } catch (const StepFailed& e) {
    CHECK(e.step() == 0);
    CHECK(e.kind() == ErrorKind::SolverDiverged);
  }
}

TEST_CASE("simulate_coupled_pair") {
  const ModelParams m = dissipative_params();
  const NoiseStream stream{5, 3, 0.05, 1};
  const State psi0 = State::zeros(8, Boundary::Periodic);

  const CoupledRun same = simulate_coupled_pair(m, scheme(0.05, 8, Boundary::Periodic),
                                                scheme(0.05, 8, Boundary::Periodic), psi0, 20, stream);
  for (double g : same.gap_series) CHECK(g == 0.0);

  // Sources live in |i| <= 4; a quiet start keeps the far boundary out of
  // play for the first steps, so the gap starts negligible and then grows.
  const CoupledRun run = simulate_coupled_pair(m, scheme(0.05, 8, Boundary::Periodic),
                                               scheme(0.05, 64, Boundary::ZeroPad), psi0, 40, stream);
  REQUIRE(run.gap_series.size() == 41);
  CHECK(run.gap_series[0] == 0.0);
  CHECK(run.gap_series[1] < 1e-12);
  CHECK(run.gap_series[40] > run.gap_series[1]);

  State outside = State::zeros(10, Boundary::Periodic);
  outside.u.at(10) = 1.0;
  CHECK_THROWS_AS(simulate_coupled_pair(m, scheme(0.05, 8, Boundary::Periodic),
                                        scheme(0.05, 16, Boundary::ZeroPad), outside, 1, stream),
                  Error);
}

TEST_CASE("coupled gap shrinks as the small truncation grows") {
  const ModelParams m = dissipative_params();
  const State psi0 = State::zeros(8, Boundary::Periodic);
  const std::size_t steps = 20;
  std::vector<double> mean_gap;
  for (int n1 : {8, 16, 32}) {
    double acc = 0.0;
    for (std::uint64_t s = 0; s < 100; ++s) {
      const CoupledRun run = simulate_coupled_pair(m, scheme(0.05, n1, Boundary::Periodic),
                                                   scheme(0.05, 128, Boundary::ZeroPad), psi0, steps,
                                                   NoiseStream{2024, s, 0.05, 1});
      acc += run.gap_series.back();
    }
    mean_gap.push_back(acc / 100.0);
  }
  CHECK(mean_gap[1] <= mean_gap[0]);
  CHECK(mean_gap[2] <= mean_gap[1]);
}
