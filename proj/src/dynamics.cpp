#include "cornerlab/dynamics.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <istream>
#include <ostream>

#include <fmt/format.h>

#include "cornerlab/error.hpp"
#include "cornerlab/numerics.hpp"
#include "cornerlab/parallel.hpp"

namespace cornerlab::dynamics {

TimeScale TimeScale::of(Speed speed, const gibbs::ModelParams& params) {
  const double n2 = static_cast<double>(params.length());
  const double a = params.alpha;
  switch (speed) {
    case Speed::diffusive: return {speed, n2 * n2};
    case Speed::subdiffusive: return {speed, std::pow(n2, 2.0 * a)};
    case Speed::hydrodynamic: return {speed, std::pow(n2, std::min(1.0 + a, 2.0))};
    case Speed::kpz: return {speed, std::pow(n2, 4.0 * a)};
  }
  throw BadParam("unknown time scale");
}

const char* speed_name(Speed s) {
  switch (s) {
    case Speed::diffusive: return "diffusive";
    case Speed::subdiffusive: return "subdiffusive";
    case Speed::hydrodynamic: return "hydrodynamic";
    case Speed::kpz: return "kpz";
  }
  return "?";
}

Speed parse_speed(const std::string& name) {
  for (Speed s : {Speed::diffusive, Speed::subdiffusive, Speed::hydrodynamic, Speed::kpz})
    if (name == speed_name(s)) return s;
  throw BadParam("unknown time scale '" + name + "'");
}

Simulator::Simulator(const gibbs::ModelParams& params, lattice::BridgeConfig init, TimeScale scale, CounterRng rng)
    : cfg_(std::move(init)),
      rng_(rng),
      down_rate_(scale.factor * params.p),
      up_rate_(scale.factor * params.one_minus_p) {
  if (cfg_.n_half() != params.n_half) throw BadParam("initial configuration has the wrong N");
  if (!(scale.factor > 0.0)) throw BadParam("time scale factor must be positive");
  schedule();
}

EventLog simulate(const gibbs::ModelParams& params, const lattice::BridgeConfig& init, double t_end,
                  TimeScale scale, const std::vector<double>& snapshot_times, std::uint64_t seed,
                  std::uint64_t stream, SimOptions options) {
  if (!(t_end >= 0.0)) throw BadParam("t_end must be nonnegative");
  for (std::size_t i = 0; i < snapshot_times.size(); ++i) {
    if (snapshot_times[i] < 0.0 || snapshot_times[i] > t_end) throw BadParam("snapshot time outside [0, t_end]");
    if (i > 0 && snapshot_times[i] < snapshot_times[i - 1]) throw BadParam("snapshot times must be sorted");
  }
  EventLog log;
  log.seed = seed;
  log.stream = stream;
  log.t_end = t_end;
  log.initial = init;
  Simulator sim(params, init, scale, CounterRng(seed, stream));
  auto record = [&](const FlipEvent& ev, const lattice::BridgeConfig&) { log.events.push_back(ev); };
  for (double t : snapshot_times) {
    if (options.record_events) sim.advance_to(t, record);
    else sim.advance_to(t);
    log.snapshots.push_back({t, sim.state()});
  }
  if (options.record_events) sim.advance_to(t_end, record);
  else sim.advance_to(t_end);
  log.event_count = sim.event_count();
  return log;
}

std::vector<Snapshot> replay(const EventLog& log) {
  if (log.events.size() != log.event_count) throw MissingData("event log was recorded without events");
  lattice::BridgeConfig cfg = log.initial;
  std::vector<Snapshot> out;
  std::size_t e = 0;
  for (const Snapshot& snap : log.snapshots) {
    while (e < log.events.size() && log.events[e].time <= snap.time) {
      const FlipEvent& ev = log.events[e++];
      const lattice::Corner expected = ev.direction > 0 ? lattice::Corner::down : lattice::Corner::up;
      if (cfg.corner_at(ev.index) != expected) throw NumericalError("replayed event does not match a corner");
      cfg.flip(ev.index);
    }
    out.push_back({snap.time, cfg});
  }
  return out;
}

std::vector<EventLog> ensemble(const gibbs::ModelParams& params, const InitFactory& init, double t_end,
                               TimeScale scale, const std::vector<double>& snapshot_times,
                               std::size_t n_replicas, std::uint64_t seed, unsigned threads, SimOptions options) {
  std::vector<EventLog> out(n_replicas);
  parallel_for(n_replicas, threads, [&](std::size_t r) {
    // Initial states come from a stream disjoint from the dynamics streams.
    CounterRng init_rng(seed ^ 0x5bd1e9955bd1e995ULL, r);
    out[r] = simulate(params, init(r, init_rng), t_end, scale, snapshot_times, seed, r, options);
  });
  return out;
}

Generator generator_matrix(const gibbs::ModelParams& params, TimeScale scale) {
  constexpr std::size_t kMaxN = 7;
  if (params.n_half > kMaxN) throw TooLarge("dense generator limited to N <= 7");
  Generator gen{lattice::BridgeEnumeration(params.n_half), {}};
  const std::size_t n = gen.size();
  gen.q.assign(n * n, 0.0);
  const double down = scale.factor * params.p, up = scale.factor * params.one_minus_p;
  for (std::size_t i = 0; i < n; ++i) {
    lattice::BridgeConfig cfg = gen.bridges[i];
    double out_rate = 0.0;
    for (std::size_t k = 1; k < cfg.length(); ++k) {
      const lattice::Corner c = cfg.corner_at(k);
      if (c == lattice::Corner::none) continue;
      const double r = c == lattice::Corner::down ? down : up;
      const auto rec = cfg.flip(k);
      const std::size_t j = gen.bridges.index_of(cfg);
      cfg.undo(rec);
      gen.q[i * n + j] += r;
      out_rate += r;
    }
    gen.q[i * n + i] = -out_rate;
  }
  return gen;
}

std::vector<double> evolve_master(const Generator& gen, const std::vector<double>& init, double t) {
  const std::size_t n = gen.size();
  if (init.size() != n) throw BadParam("initial distribution has the wrong size");
  if (!(t >= 0.0)) throw BadParam("time must be nonnegative");
  if (t == 0.0) return init;
  double lam = 0.0;
  for (std::size_t i = 0; i < n; ++i) lam = std::max(lam, -gen(i, i));
  if (lam == 0.0) return init;
  // Sparse copy of P = I + Q/Λ, column-oriented for the row-vector product.
  struct Entry {
    std::uint32_t from;
    double w;
  };
  std::vector<std::vector<Entry>> incoming(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double w = gen(i, j) / lam;
      if (i == j) w += 1.0;
      if (w != 0.0) incoming[j].push_back({static_cast<std::uint32_t>(i), w});
    }
  const std::vector<double> weights = numerics::poisson_weights(lam * t, 1e-15);
  std::vector<double> v = init, next(n), out(n, 0.0);
  for (std::size_t step = 0; step < weights.size(); ++step) {
    const double w = weights[step];
    for (std::size_t j = 0; j < n; ++j) out[j] += w * v[j];
    if (step + 1 == weights.size()) break;
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (const Entry& e : incoming[j]) acc += v[e.from] * e.w;
      next[j] = acc;
    }
    std::swap(v, next);
  }
  return out;
}

void write_snapshots_csv(std::ostream& out, std::size_t replica, const EventLog& log, bool header) {
  if (header) out << "replica,t,k,S\n";
  for (const Snapshot& snap : log.snapshots)
    for (std::size_t k = 0; k <= snap.config.length(); ++k)
      out << fmt::format("{},{},{},{}\n", replica, snap.time, k, snap.config.height(k));
}

void write_events_binary(std::ostream& out, const std::vector<FlipEvent>& events) {
  static_assert(std::endian::native == std::endian::little, "binary event format assumes a little-endian host");
  for (const FlipEvent& ev : events) {
    char buf[13];
    std::memcpy(buf, &ev.time, 8);
    std::memcpy(buf + 8, &ev.index, 4);
    buf[12] = ev.direction > 0 ? 1 : 0;
    out.write(buf, sizeof buf);
  }
}

std::vector<FlipEvent> read_events_binary(std::istream& in) {
  std::vector<FlipEvent> events;
  char buf[13];
  while (in.read(buf, sizeof buf)) {
    FlipEvent ev{};
    std::memcpy(&ev.time, buf, 8);
    std::memcpy(&ev.index, buf + 8, 4);
    ev.direction = buf[12] ? 1 : -1;
    events.push_back(ev);
  }
  if (in.gcount() != 0) throw MissingData("truncated event record");
  return events;
}

}  // namespace cornerlab::dynamics
