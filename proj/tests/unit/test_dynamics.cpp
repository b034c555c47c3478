#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "cornerlab/dynamics.hpp"
#include "cornerlab/error.hpp"
#include "cornerlab/gibbs.hpp"

using namespace cornerlab;
using namespace cornerlab::dynamics;
using lattice::BridgeConfig;

namespace {

double tv(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return 0.5 * s;
}

std::vector<double> point_mass(std::size_t size, std::size_t at) {
  std::vector<double> v(size, 0.0);
  v[at] = 1.0;
  return v;
}

}  // namespace

TEST(TimeScale, Factors) {
  const auto p = gibbs::make_params(8, 0.5, 1.0);
  EXPECT_DOUBLE_EQ(TimeScale::of(Speed::diffusive, p).factor, 256.0);
  EXPECT_DOUBLE_EQ(TimeScale::of(Speed::subdiffusive, p).factor, 16.0);
  EXPECT_DOUBLE_EQ(TimeScale::of(Speed::hydrodynamic, p).factor, 64.0);
  EXPECT_DOUBLE_EQ(TimeScale::of(Speed::kpz, p).factor, 256.0);
  const auto q = gibbs::make_params(8, 1.5, 1.0);
  EXPECT_DOUBLE_EQ(TimeScale::of(Speed::hydrodynamic, q).factor, 256.0);
  for (auto s : {Speed::diffusive, Speed::subdiffusive, Speed::hydrodynamic, Speed::kpz})
    EXPECT_EQ(parse_speed(speed_name(s)), s);
}

TEST(Simulate, ZeroTime) {
  const auto p = gibbs::make_params(4, 1.0, 1.0);
  const auto init = BridgeConfig::flat(4);
  const auto log = simulate(p, init, 0.0, TimeScale::unit(), {0.0}, 1);
  EXPECT_TRUE(log.events.empty());
  ASSERT_EQ(log.snapshots.size(), 1u);
  EXPECT_EQ(log.snapshots[0].config, init);
}

TEST(Simulate, Reproducible) {
  const auto p = gibbs::make_params(16, 1.0, 1.0);
  const auto init = BridgeConfig::flat(16);
  const auto a = simulate(p, init, 0.2, TimeScale::of(Speed::diffusive, p), {0.1, 0.2}, 7, 3);
  const auto b = simulate(p, init, 0.2, TimeScale::of(Speed::diffusive, p), {0.1, 0.2}, 7, 3);
  EXPECT_EQ(a.events, b.events);
  EXPECT_EQ(a.snapshots[1].config, b.snapshots[1].config);
  const auto c = simulate(p, init, 0.2, TimeScale::of(Speed::diffusive, p), {0.1, 0.2}, 7, 4);
  EXPECT_NE(a.events, c.events);
}

TEST(Simulate, EventsOrderedAndReplayable) {
  const auto p = gibbs::make_params(16, 0.7, 2.0);
  const auto log = simulate(p, BridgeConfig::minimal(16), 0.5, TimeScale::of(Speed::diffusive, p),
                            {0.05, 0.1, 0.3, 0.5}, 9);
  ASSERT_GT(log.events.size(), 100u);
  EXPECT_EQ(log.event_count, log.events.size());
  for (std::size_t i = 1; i < log.events.size(); ++i) EXPECT_LT(log.events[i - 1].time, log.events[i].time);
  const auto again = replay(log);
  ASSERT_EQ(again.size(), log.snapshots.size());
  for (std::size_t i = 0; i < again.size(); ++i) {
    EXPECT_EQ(again[i].time, log.snapshots[i].time);
    EXPECT_EQ(again[i].config, log.snapshots[i].config);
  }
}

TEST(Simulate, PathIndependentOfObservation) {
  const auto p = gibbs::make_params(8, 1.0, 1.0);
  const auto scale = TimeScale::of(Speed::diffusive, p);
  const auto coarse = simulate(p, BridgeConfig::flat(8), 0.3, scale, {0.3}, 5);
  const auto fine = simulate(p, BridgeConfig::flat(8), 0.3, scale, {0.01, 0.1, 0.2, 0.3}, 5);
  EXPECT_EQ(coarse.events, fine.events);
  EXPECT_EQ(coarse.snapshots.back().config, fine.snapshots.back().config);
}

TEST(Simulate, LongRunMatchesEnumeration) {
  // start from the minimal profile; by t = 200 (unit time) memory is gone
  const auto p = gibbs::make_params(3, 1.0, 1.0);
  const auto mu = gibbs::mu_exact(p);
  const auto gen = generator_matrix(p, TimeScale::unit());
  const auto start = mu.bridges.index_of(BridgeConfig::minimal(3));
  EXPECT_LT(tv(evolve_master(gen, point_mass(gen.size(), start), 200.0), mu.prob), 1e-9);
  constexpr std::size_t reps = 100000;
  const auto logs = ensemble(
      p, [](std::size_t, CounterRng&) { return BridgeConfig::minimal(3); }, 200.0, TimeScale::unit(), {200.0}, reps,
      21, 0, SimOptions{false});
  std::vector<double> freq(mu.prob.size(), 0.0);
  for (const auto& log : logs) freq[mu.bridges.index_of(log.snapshots[0].config)] += 1.0 / reps;
  EXPECT_LT(tv(freq, mu.prob), 0.01);
}

TEST(Simulate, StationaryFromMu) {
  const auto p = gibbs::make_params(3, 1.0, 1.5);
  const auto mu = gibbs::mu_exact(p);
  constexpr std::size_t reps = 100000;
  const auto logs = ensemble(
      p, [&](std::size_t, CounterRng& rng) { return gibbs::sample_mu(p, rng); }, 0.7, TimeScale::unit(), {0.7},
      reps, 22, 0, SimOptions{false});
  std::vector<double> freq(mu.prob.size(), 0.0);
  for (const auto& log : logs) freq[mu.bridges.index_of(log.snapshots[0].config)] += 1.0 / reps;
  EXPECT_LT(tv(freq, mu.prob), 0.01);
}

TEST(Simulate, NearlyFrozenAtStrongTilt) {
  // exact check at N = 8 against the enumerated mean area
  const auto p = gibbs::make_params(8, 0.1, 5.0);
  const auto mu = gibbs::mu_exact(p);
  double mean_area = 0.0;
  for (std::size_t i = 0; i < mu.prob.size(); ++i) mean_area += mu.prob[i] * static_cast<double>(mu.bridges.area(i));
  const double max_area = static_cast<double>(BridgeConfig::maximal(8).area());
  EXPECT_GE(mean_area, 0.95 * max_area);
  const auto logs = ensemble(
      p, [](std::size_t, CounterRng&) { return BridgeConfig::flat(8); }, 50.0, TimeScale::unit(), {50.0}, 2000, 23,
      0, SimOptions{false});
  double sim = 0.0;
  for (const auto& log : logs) sim += static_cast<double>(log.snapshots[0].config.area()) / 2000.0;
  EXPECT_NEAR(sim, mean_area, 0.01 * max_area);
}

TEST(Ensemble, Deterministic) {
  const auto p = gibbs::make_params(8, 1.0, 1.0);
  auto init = [](std::size_t, CounterRng&) { return BridgeConfig::flat(8); };
  const auto a = ensemble(p, init, 0.1, TimeScale::of(Speed::diffusive, p), {0.1}, 8, 5, 2);
  const auto b = ensemble(p, init, 0.1, TimeScale::of(Speed::diffusive, p), {0.1}, 8, 5, 1);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t r = 0; r < a.size(); ++r) EXPECT_EQ(a[r].events, b[r].events);
  EXPECT_NE(a[0].events, a[1].events);
}

TEST(Ensemble, MeanVarianceShrinks) {
  // Var of the replica mean quarters when n quadruples
  const auto p = gibbs::make_params(8, 1.0, 1.0);
  auto init = [](std::size_t, CounterRng&) { return BridgeConfig::flat(8); };
  auto spread = [&](std::size_t n) {
    constexpr int batches = 200;
    const auto logs = ensemble(p, init, 0.05, TimeScale::of(Speed::diffusive, p), {0.05}, n * batches,
                               31 + n, 0, SimOptions{false});
    double s1 = 0, s2 = 0;
    for (int b = 0; b < batches; ++b) {
      double m = 0;
      for (std::size_t r = 0; r < n; ++r) m += logs[b * n + r].snapshots[0].config.height(8);
      m /= static_cast<double>(n);
      s1 += m;
      s2 += m * m;
    }
    return s2 / batches - (s1 / batches) * (s1 / batches);
  };
  EXPECT_NEAR(spread(16) / spread(64), 4.0, 4.0 * 0.3);
}

TEST(Generator, RowsSumToZero) {
  const auto p = gibbs::make_params(4, 0.9, 1.2);
  const auto gen = generator_matrix(p, TimeScale::of(Speed::diffusive, p));
  for (std::size_t i = 0; i < gen.size(); ++i) {
    double off = 0.0;
    for (std::size_t j = 0; j < gen.size(); ++j) {
      if (i == j) continue;
      off += gen(i, j);
      EXPECT_GE(gen(i, j), 0.0);
    }
    EXPECT_DOUBLE_EQ(gen(i, i), -off);
  }
  EXPECT_THROW(generator_matrix(gibbs::make_params(8, 1.0, 1.0), TimeScale::unit()), TooLarge);
}

TEST(Generator, TwoStates) {
  const auto p = gibbs::make_params(1, 1.0, 1.0);
  const auto gen = generator_matrix(p, TimeScale{Speed::diffusive, 3.0});
  ASSERT_EQ(gen.size(), 2u);
  const auto down = gen.bridges.index_of(BridgeConfig::minimal(1));
  const auto up = gen.bridges.index_of(BridgeConfig::maximal(1));
  EXPECT_NEAR(gen(down, up), 3.0 * p.p, 1e-15);
  EXPECT_NEAR(gen(up, down), 3.0 * p.one_minus_p, 1e-15);
}

TEST(Generator, MuIsStationary) {
  const auto p = gibbs::make_params(5, 1.0, 1.0);
  const auto gen = generator_matrix(p, TimeScale::unit());
  const auto mu = gibbs::mu_exact(p);
  double qmax = 0.0, residual = 0.0;
  for (std::size_t j = 0; j < gen.size(); ++j) {
    double s = 0.0, row = 0.0;
    for (std::size_t i = 0; i < gen.size(); ++i) {
      s += mu.prob[i] * gen(i, j);
      row += std::abs(gen(j, i));
    }
    residual = std::max(residual, std::abs(s));
    qmax = std::max(qmax, row);
  }
  EXPECT_LT(residual, 1e-10 * qmax);
}

TEST(Master, Semigroup) {
  const auto p = gibbs::make_params(3, 1.0, 1.0);
  const auto gen = generator_matrix(p, TimeScale::unit());
  const auto mu = gibbs::mu_exact(p);
  const auto init = point_mass(gen.size(), 0);
  EXPECT_EQ(evolve_master(gen, init, 0.0), init);
  const auto direct = evolve_master(gen, init, 0.9);
  const auto split = evolve_master(gen, evolve_master(gen, init, 0.4), 0.5);
  double total = 0.0;
  for (std::size_t i = 0; i < direct.size(); ++i) {
    EXPECT_NEAR(direct[i], split[i], 1e-10);
    total += direct[i];
  }
  EXPECT_NEAR(total, 1.0, 1e-10);
  EXPECT_LT(tv(evolve_master(gen, init, 200.0), mu.prob), 1e-8);
}

TEST(Master, TwoStateClosedForm) {
  // P(up at t | down at 0) = p(1 − e^{−t}) for total switching rate 1
  const auto p = gibbs::make_params(1, 1.0, 0.4);
  const auto gen = generator_matrix(p, TimeScale::unit());
  const auto down = gen.bridges.index_of(BridgeConfig::minimal(1));
  const auto up = gen.bridges.index_of(BridgeConfig::maximal(1));
  for (double t : {0.1, 1.0, 5.0}) {
    const auto d = evolve_master(gen, point_mass(2, down), t);
    EXPECT_NEAR(d[up], p.p * -std::expm1(-t), 1e-12);
  }
}

TEST(EventIo, BinaryRoundTrip) {
  const auto p = gibbs::make_params(8, 1.0, 1.0);
  const auto log = simulate(p, BridgeConfig::flat(8), 0.1, TimeScale::of(Speed::diffusive, p), {0.1}, 3);
  std::stringstream buf;
  write_events_binary(buf, log.events);
  EXPECT_EQ(buf.str().size(), log.events.size() * 13);
  EXPECT_EQ(read_events_binary(buf), log.events);
}

TEST(EventIo, SnapshotCsv) {
  const auto p = gibbs::make_params(2, 1.0, 1.0);
  const auto log = simulate(p, BridgeConfig::flat(2), 0.0, TimeScale::unit(), {0.0}, 1);
  std::ostringstream out;
  write_snapshots_csv(out, 4, log, true);
  EXPECT_EQ(out.str(), "replica,t,k,S\n4,0,0,0\n4,0,1,1\n4,0,2,0\n4,0,3,1\n4,0,4,0\n");
}
