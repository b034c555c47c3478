#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "cornerlab/gibbs.hpp"
#include "cornerlab/lattice.hpp"
#include "cornerlab/rng.hpp"

namespace cornerlab::dynamics {

enum class Speed { diffusive, subdiffusive, hydrodynamic, kpz };

struct TimeScale {
  Speed speed = Speed::diffusive;
  double factor = 1.0;

  /// (2N)², (2N)^{2α}, (2N)^{(1+α)∧2} or (2N)^{4α}.
  static TimeScale of(Speed speed, const gibbs::ModelParams& params);
  /// Factor 1: time measured in microscopic units.
  static TimeScale unit() { return {Speed::diffusive, 1.0}; }
};

const char* speed_name(Speed s);
Speed parse_speed(const std::string& name);

struct FlipEvent {
  double time;          // macroscopic
  std::uint32_t index;  // corner k
  std::int8_t direction;  // +1: down corner filled (S(k) += 2), -1: up corner removed

  bool operator==(const FlipEvent&) const = default;
};

struct Snapshot {
  double time;
  lattice::BridgeConfig config;
};

struct EventLog {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  double t_end = 0.0;
  lattice::BridgeConfig initial;
  std::vector<FlipEvent> events;  // empty when recording was switched off
  std::uint64_t event_count = 0;
  std::vector<Snapshot> snapshots;
};

/// Exact continuous-time corner-flip dynamics.  Down corners flip at rate
/// factor·p, up corners at factor·(1−p).  The pending event time survives
/// across advance_to calls, so the path does not depend on where it is
/// observed.
class Simulator {
 public:
  Simulator(const gibbs::ModelParams& params, lattice::BridgeConfig init, TimeScale scale, CounterRng rng);

  double time() const { return time_; }
  const lattice::BridgeConfig& state() const { return cfg_; }
  std::uint64_t event_count() const { return events_; }
  CounterRng& rng() { return rng_; }

  /// Total jump rate in macroscopic time for the current configuration.
  double total_rate() const {
    return down_rate_ * static_cast<double>(cfg_.down_corners().size()) +
           up_rate_ * static_cast<double>(cfg_.up_corners().size());
  }

  /// Applies every event with time ≤ t; on_event(event, state_after) after each.
  template <class F>
  void advance_to(double t, F&& on_event) {
    if (t < time_) return;
    while (next_ <= t) {
      const FlipEvent ev = fire();
      on_event(ev, static_cast<const lattice::BridgeConfig&>(cfg_));
      schedule();
    }
    time_ = t;
  }

  void advance_to(double t) {
    advance_to(t, [](const FlipEvent&, const lattice::BridgeConfig&) {});
  }

 private:
  FlipEvent fire() {
    const std::size_t nd = cfg_.down_corners().size();
    const std::size_t nu = cfg_.up_corners().size();
    const double rd = down_rate_ * static_cast<double>(nd);
    const double total = rd + up_rate_ * static_cast<double>(nu);
    std::size_t k;
    std::int8_t dir;
    if (rng_.uniform() * total < rd) {
      k = cfg_.down_corners().pick(rng_);
      dir = 1;
    } else {
      k = cfg_.up_corners().pick(rng_);
      dir = -1;
    }
    cfg_.flip(k);
    ++events_;
    time_ = next_;
    return {next_, static_cast<std::uint32_t>(k), dir};
  }

  void schedule() {
    const double r = total_rate();
    if (!(r > 0.0)) {
      next_ = std::numeric_limits<double>::infinity();
      return;
    }
    double t = time_ + rng_.exponential(r);
    if (t <= time_) t = std::nextafter(time_, std::numeric_limits<double>::infinity());
    next_ = t;
  }

  lattice::BridgeConfig cfg_;
  CounterRng rng_;
  double down_rate_;
  double up_rate_;
  double time_ = 0.0;
  double next_ = 0.0;
  std::uint64_t events_ = 0;
};

struct SimOptions {
  bool record_events = true;
};

/// One run to t_end with snapshots at the given (sorted, ≤ t_end) times.
EventLog simulate(const gibbs::ModelParams& params, const lattice::BridgeConfig& init, double t_end,
                  TimeScale scale, const std::vector<double>& snapshot_times, std::uint64_t seed,
                  std::uint64_t stream = 0, SimOptions options = {});

/// Re-applies the recorded events and returns the configurations at the
/// log's snapshot times.
std::vector<Snapshot> replay(const EventLog& log);

using InitFactory = std::function<lattice::BridgeConfig(std::size_t replica, CounterRng& rng)>;

/// Replica r runs on stream r of the seed; results are ordered by replica.
std::vector<EventLog> ensemble(const gibbs::ModelParams& params, const InitFactory& init, double t_end,
                               TimeScale scale, const std::vector<double>& snapshot_times,
                               std::size_t n_replicas, std::uint64_t seed, unsigned threads = 0,
                               SimOptions options = {});

/// Dense generator over the enumeration order of lattice::BridgeEnumeration.
struct Generator {
  lattice::BridgeEnumeration bridges;
  std::vector<double> q;  // row-major, size × size
  std::size_t size() const { return bridges.size(); }
  double operator()(std::size_t i, std::size_t j) const { return q[i * size() + j]; }
};

Generator generator_matrix(const gibbs::ModelParams& params, TimeScale scale);

/// init·exp(tQ) by uniformization, truncation error below 1e-12.
std::vector<double> evolve_master(const Generator& gen, const std::vector<double>& init, double t);

/// CSV rows replica,t,k,S for every snapshot of the log.
void write_snapshots_csv(std::ostream& out, std::size_t replica, const EventLog& log, bool header);
/// Little-endian records: f64 time, u32 index, u8 direction (1 growth, 0 shrink).
void write_events_binary(std::ostream& out, const std::vector<FlipEvent>& events);
std::vector<FlipEvent> read_events_binary(std::istream& in);

}  // namespace cornerlab::dynamics
