#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>

#include "selkov/reports.hpp"
#include "selkov/studies.hpp"
#include "support.hpp"

using namespace selkov;
using namespace selkov::testing;

namespace {

State bump(int n, double amp) {
  State s = State::zeros(n, Boundary::Periodic);
  for (int i = -1; i <= 1; ++i) {
    s.u.at(i) = amp;
    s.v.at(i) = -0.5 * amp;
  }
  return s;
}

MeasureProtocol small_protocol() {
  MeasureProtocol p;
  p.sample_interval = 0.5;
  p.burn_in_samples = 4;
  p.samples_per_chain = 10;
  p.n_chains = 4;
  p.distance.budget_tolerance = 1e-5;
  return p;
}

}  // namespace

TEST_CASE("bound conditions") {
  ModelParams m = dissipative_params(0.2);
  CHECK(bound_conditions(m, 0.1).empty());
  m = dissipative_params(0.3);
  REQUIRE(bound_conditions(m, 0.1).size() == 1);
  CHECK(bound_conditions(m, 0.1)[0].required == doctest::Approx(1.44));
  m = dissipative_params(0.2);
  REQUIRE(bound_conditions(m, 0.3).size() == 1);
  CHECK(bound_conditions(m, 0.3)[0].required == doctest::Approx(0.25));
  CHECK(bound_conditions(dissipative_params(0.3), 0.3).size() == 2);
  // Zero noise has no growth slope, whatever beta says.
  ModelParams z = dissipative_params(0.9);
  z.sigma_family = SigmaFamily::Zero;
  CHECK(bound_conditions(z, 0.1).empty());
}

TEST_CASE("moment bound algebra") {
  ModelParams m = quiet_params();
  CHECK(m.moment_constant() == 0.0);
  CHECK(moment_bound(m, 0.1, 1.0, 10) == doctest::Approx(std::pow(1 - 0.025, 10)).epsilon(1e-14));
  CHECK(moment_bound(m, 0.1, 2.0, 0) == doctest::Approx(2.0));

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(0.2, 2.0);
  for (int trial = 0; trial < 200; ++trial) {
    ModelParams p = dissipative_params();
    p.a1 = U(rng);
    p.a2 = U(rng);
    p.b1 = U(rng);
    p.b2 = U(rng);
    p.f = random_field(rng, 3, Boundary::ZeroPad);
    p.g = random_field(rng, 2, Boundary::ZeroPad);
    p.h = random_field(rng, 4, Boundary::ZeroPad);
    p.delta = random_field(rng, 1, Boundary::ZeroPad);
    CHECK(p.moment_constant() == doctest::Approx(moment_constant_oracle(p)).epsilon(1e-12));
    const double dt = 0.2 / std::min(p.a1, p.a2);
    const double direct = 3.0 * std::exp(7 * std::log(1 - std::min(p.a1, p.a2) * dt / 4)) + moment_constant_oracle(p);
    CHECK(moment_bound(p, dt, 3.0, 7) == doctest::Approx(direct).epsilon(1e-12));
  }
}

TEST_CASE("check_moment_bound") {
  MonteCarlo mc;
  mc.n_trajectories = 4;
  mc.horizon = 60;
  mc.root_seed = 11;

  // Deterministic decay: every path obeys the bound pathwise.
  const ModelParams quiet = quiet_params();
  const MomentReport q = check_moment_bound(quiet, scheme(0.1, 6, Boundary::Periodic), bump(6, 2.0), mc);
  CHECK(q.M == 0.0);
  REQUIRE(q.estimated.size() == 61);
  for (std::size_t m = 0; m < q.m_grid.size(); ++m) {
    CHECK(q.estimated[m].half_width == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(q.estimated[m].mean <= q.bound[m] * (1 + 1e-12));
  }
  CHECK(!q.any_violation());

  // Forcing on from rest: the ensemble mean stays below M.
  const ModelParams m = dissipative_params();
  mc.n_trajectories = 200;
  mc.horizon = 100;
  const MomentReport r = check_moment_bound(m, scheme(0.1, 12, Boundary::Periodic), State::zeros(12, Boundary::Periodic), mc);
  CHECK(r.psi0_norm_sq == 0.0);
  for (std::size_t k = 0; k < r.m_grid.size(); ++k) CHECK(r.estimated[k].mean <= r.M);
  CHECK(!r.any_violation());

  CHECK_THROWS_AS(check_moment_bound(dissipative_params(0.3), scheme(0.1, 4, Boundary::Periodic),
                                     State::zeros(4, Boundary::Periodic), mc),
                  Error);
  try {
    check_moment_bound(m, scheme(0.3, 4, Boundary::Periodic), State::zeros(4, Boundary::Periodic), mc);
    FAIL("expected rejection");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ConfigRejected);
  }
}

TEST_CASE("moment report is schedule invariant") {
  MonteCarlo mc;
  mc.n_trajectories = 12;
  mc.horizon = 20;
  mc.root_seed = 3;
  const ModelParams m = dissipative_params();
  const MomentReport a = check_moment_bound(m, scheme(0.1, 8, Boundary::Periodic), State::zeros(8, Boundary::Periodic), mc);
  mc.workers = 3;
  const MomentReport b = check_moment_bound(m, scheme(0.1, 8, Boundary::Periodic), State::zeros(8, Boundary::Periodic), mc);
  for (std::size_t k = 0; k < a.estimated.size(); ++k) {
    CHECK(a.estimated[k].mean == b.estimated[k].mean);
    CHECK(a.estimated[k].half_width == b.estimated[k].half_width);
  }
}

TEST_CASE("check_tail_bound") {
  MonteCarlo mc;
  mc.n_trajectories = 20;
  mc.horizon = 30;
  mc.root_seed = 77;
  const ModelParams m = dissipative_params();
  const SchemeConfig cfg = scheme(0.05, 32, Boundary::Periodic);
  const TailReport t = check_tail_bound(m, cfg, bump(32, 1.0), mc, {20, 1, 4, 8, 12, 16, 30});
  CHECK(t.I_grid == std::vector<int>{1, 4, 8, 12, 16, 20, 30});
  CHECK(t.monotone_failures == 0);
  // psi_0 lives in |i| <= 1, so its tail beyond 1 is exactly zero.
  CHECK(t.tail_mass[0][0].mean == 0.0);
  for (const auto& row : t.tail_mass) {
    for (std::size_t k = 1; k < row.size(); ++k) CHECK(row[k].mean <= row[k - 1].mean);
  }
  CHECK(t.tail_mass[30][0].mean > 0.0);
  CHECK(t.empirical_threshold(30, 1e300) == 1);
  CHECK(t.empirical_threshold(30, -1.0) == -1);

  CHECK_THROWS_AS(check_tail_bound(m, cfg, State::zeros(32, Boundary::Periodic), mc, {32}), Error);
  CHECK_THROWS_AS(check_tail_bound(m, cfg, State::zeros(32, Boundary::Periodic), mc, {}), Error);
}

TEST_CASE("deterministic regime collapses to a Dirac") {
  ModelParams m = dissipative_params();
  m.h = Field(0, Boundary::ZeroPad);
  m.sigma_family = SigmaFamily::Zero;
  MeasureProtocol p = small_protocol();
  p.burn_in_samples = 80;  // 40 time units
  const EmpiricalMeasure mu = invariant_measure(m, scheme(0.1, 6, Boundary::Periodic), bump(6, 1.0), p, 1,
                                                StudyId::Invariant, 0, 0.1);
  CHECK(summarize(m.geometry(), mu).sample_variance < 1e-16);

  StudySeeds seeds;
  seeds.n_replicates = 2;
  const StudyReport r = dt_refinement_study(m, scheme(0.1, 6, Boundary::Periodic), {0.1, 0.05, 0.025}, bump(6, 1.0),
                                            p, seeds);
  const auto d = r.trend("bl_distance");
  REQUIRE(d != nullptr);
  REQUIRE(d->values.size() == 2);
  // The equilibrium of the implicit map does not depend on dt.
  CHECK(d->values[0] < 1e-8);
  CHECK(d->values[1] < 1e-8);
}

TEST_CASE("degenerate refinements vanish") {
  const ModelParams m = dissipative_params();
  const MeasureProtocol p = small_protocol();
  StudySeeds seeds;
  seeds.n_replicates = 2;
  seeds.root_seed = 9;

  const StudyReport dt = dt_refinement_study(m, scheme(0.05, 6, Boundary::Periodic), {0.05, 0.05},
                                             State::zeros(6, Boundary::Periodic), p, seeds);
  for (const StudyRow& row : dt.select("bl_distance")) CHECK(row.value == 0.0);

  ExceedanceProtocol ex;
  ex.step = 10;
  ex.n_streams = 5;
  const StudyReport n = n_refinement_study(m, scheme(0.05, 6, Boundary::Periodic), {6}, 6,
                                           State::zeros(6, Boundary::Periodic), p, ex, seeds);
  for (const StudyRow& row : n.select("exceedance")) CHECK(row.value == 0.0);
  for (const StudyRow& row : n.select("bl_distance")) CHECK(row.value == 0.0);

  const StudyReport dl = double_limit_study(m, scheme(0.05, 6, Boundary::Periodic), {0.1, 0.05}, {4, 6},
                                            State::zeros(6, Boundary::Periodic), p, seeds);
  const auto cells = dl.select("bl_distance_mean");
  REQUIRE(cells.size() == 4);
  CHECK(cells.back().dt == 0.05);
  CHECK(cells.back().n == 6);
  CHECK(cells.back().value == 0.0);
  for (std::size_t k = 0; k + 1 < cells.size(); ++k) CHECK(cells[k].value > 0.0);
}

TEST_CASE("study grids are validated") {
  const ModelParams m = dissipative_params();
  const MeasureProtocol p = small_protocol();
  const StudySeeds seeds;
  const State z = State::zeros(6, Boundary::Periodic);
  CHECK_THROWS_AS(dt_refinement_study(m, scheme(0.1, 6, Boundary::Periodic), {}, z, p, seeds), Error);
  CHECK_THROWS_AS(dt_refinement_study(m, scheme(0.1, 6, Boundary::Periodic), {0.05, 0.1}, z, p, seeds), Error);
  CHECK_THROWS_AS(dt_refinement_study(m, scheme(0.1, 6, Boundary::Periodic), {0.3, 0.1}, z, p, seeds), Error);
  // 0.1 is not a multiple of 0.03.
  CHECK_THROWS_AS(dt_refinement_study(m, scheme(0.1, 6, Boundary::Periodic), {0.1, 0.03}, z, p, seeds), Error);
  CHECK_THROWS_AS(n_refinement_study(m, scheme(0.1, 6, Boundary::Periodic), {8, 4}, 16, z, p, {}, seeds), Error);
  CHECK_THROWS_AS(n_refinement_study(m, scheme(0.1, 6, Boundary::Periodic), {8, 16}, 8, z, p, {}, seeds), Error);
  try {
    n_refinement_study(m, scheme(0.1, 6, Boundary::Periodic), {}, 8, z, p, {}, seeds);
    FAIL("expected rejection");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::EmptyStudy);
  }
}

TEST_CASE("studies are schedule invariant") {
  const ModelParams m = dissipative_params();
  const MeasureProtocol p = small_protocol();
  StudySeeds seeds;
  seeds.n_replicates = 2;
  seeds.root_seed = 123;
  const StudyReport a = dt_refinement_study(m, scheme(0.1, 6, Boundary::Periodic), {0.1, 0.05},
                                            State::zeros(6, Boundary::Periodic), p, seeds);
  seeds.workers = 4;
  const StudyReport b = dt_refinement_study(m, scheme(0.1, 6, Boundary::Periodic), {0.1, 0.05},
                                            State::zeros(6, Boundary::Periodic), p, seeds);
  REQUIRE(a.rows.size() == b.rows.size());
  for (std::size_t k = 0; k < a.rows.size(); ++k) {
    CHECK(a.rows[k].statistic == b.rows[k].statistic);
    CHECK(a.rows[k].seed == b.rows[k].seed);
    CHECK(std::memcmp(&a.rows[k].value, &b.rows[k].value, sizeof(double)) == 0);
  }
}

TEST_CASE("coupled exceedance falls with N") {
  ModelParams m = dissipative_params();
  m.d1 = m.d2 = 10.0;
  MeasureProtocol p = small_protocol();
  p.n_chains = 2;
  ExceedanceProtocol ex;
  ex.step = 40;
  ex.eta = 1e-4;
  ex.n_streams = 40;
  StudySeeds seeds;
  seeds.n_replicates = 2;
  const StudyReport r = n_refinement_study(m, scheme(0.05, 8, Boundary::Periodic), {4, 8, 16}, 32,
                                           State::zeros(4, Boundary::Periodic), p, ex, seeds);
  const Trend* t = r.trend("exceedance");
  REQUIRE(t != nullptr);
  CHECK(t->values.front() > 0.0);
  for (std::size_t k = 1; k < t->values.size(); ++k) CHECK(t->values[k] <= t->values[k - 1]);
  const Trend* d = r.trend("bl_distance");
  REQUIRE(d != nullptr);
  CHECK(d->strictly_decreasing);
}

TEST_CASE("trend helper") {
  const Trend a = make_trend("a", {{3.0, 0.1, 3}, {2.0, 0.1, 3}, {1.0, 0.1, 3}});
  CHECK(a.strictly_decreasing);
  CHECK(a.non_increasing);
  const Trend b = make_trend("b", {{3.0, 0.5, 3}, {3.2, 0.5, 3}});
  CHECK(!b.strictly_decreasing);
  CHECK(b.non_increasing);
  const Trend c = make_trend("c", {{1.0, 0.01, 3}, {2.0, 0.01, 3}});
  CHECK(!c.non_increasing);
}
