#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "cornerlab/rng.hpp"

namespace cornerlab::lattice {

/// Subset of {0, ..., capacity-1} with O(1) insert, erase, membership and
/// uniform random pick.  Members are kept densely packed; slot_ maps an index
/// back to its position in members_.
class IndexedSet {
 public:
  IndexedSet() = default;
  explicit IndexedSet(std::size_t capacity) : slot_(capacity, kAbsent) {}

  bool contains(std::size_t i) const { return slot_[i] != kAbsent; }
  std::size_t size() const { return members_.size(); }
  bool empty() const { return members_.empty(); }
  std::size_t capacity() const { return slot_.size(); }

  void insert(std::size_t i) {
    if (slot_[i] != kAbsent) return;
    slot_[i] = static_cast<std::uint32_t>(members_.size());
    members_.push_back(static_cast<std::uint32_t>(i));
  }

  void erase(std::size_t i) {
    const std::uint32_t pos = slot_[i];
    if (pos == kAbsent) return;
    const std::uint32_t last = members_.back();
    members_[pos] = last;
    slot_[last] = pos;
    members_.pop_back();
    slot_[i] = kAbsent;
  }

  std::size_t at(std::size_t pos) const { return members_[pos]; }
  std::size_t pick(CounterRng& rng) const { return members_[rng.below(members_.size())]; }

  /// Members in insertion-dependent order; sort before comparing sets.
  std::span<const std::uint32_t> members() const { return members_; }
  std::vector<std::size_t> sorted() const;

 private:
  static constexpr std::uint32_t kAbsent = std::numeric_limits<std::uint32_t>::max();
  std::vector<std::uint32_t> members_;
  std::vector<std::uint32_t> slot_;
};

enum class Corner : std::int8_t { none = 0, down = 1, up = -1 };

/// Enough to revert one flip.
struct FlipRecord {
  std::size_t k = 0;
  Corner kind = Corner::none;
};

struct ParticleConfig {
  std::vector<std::uint8_t> occupation;  // site i+1 stored at index i

  std::size_t size() const { return occupation.size(); }
  std::size_t particles() const;
  bool operator==(const ParticleConfig&) const = default;
};

/// A path of 2N steps of +-1 pinned at S(0) = S(2N) = 0, with cached
/// heights, area and the two corner sets.  Indices follow the lattice:
/// steps are X_1..X_{2N}, heights S(0)..S(2N), corners live in 1..2N-1.
class BridgeConfig {
 public:
  BridgeConfig() = default;

  static BridgeConfig from_steps(std::span<const int> steps);
  static BridgeConfig from_steps(std::span<const std::int8_t> steps);
  /// '+' / '-' characters, one per step.
  static BridgeConfig from_string(std::string_view text);
  static BridgeConfig from_json(const nlohmann::json& j);
  static BridgeConfig from_particles(const ParticleConfig& eta);

  /// S(k) = k mod 2.
  static BridgeConfig flat(std::size_t n_half);
  /// S(k) = k ∧ (2N − k).
  static BridgeConfig maximal(std::size_t n_half);
  /// S(k) = −(k ∧ (2N − k)).
  static BridgeConfig minimal(std::size_t n_half);

  std::size_t n_half() const { return n_half_; }
  std::size_t length() const { return 2 * n_half_; }

  int step(std::size_t k) const { return steps_[k]; }
  int height(std::size_t k) const { return heights_[k]; }
  std::span<const std::int8_t> steps() const { return {steps_.data() + 1, length()}; }
  std::span<const int> heights() const { return heights_; }
  long long area() const { return area_; }

  Corner corner_at(std::size_t k) const;
  const IndexedSet& down_corners() const { return down_; }
  const IndexedSet& up_corners() const { return up_; }

  /// Flips the corner at k in place: +2 on S(k) for a down corner, −2 for an
  /// up corner.  Only corner membership of k−1, k, k+1 is touched.
  FlipRecord flip(std::size_t k);
  void undo(const FlipRecord& record) { flip(record.k); }

  std::string to_string() const;
  nlohmann::json to_json() const;

  /// Recomputes every cache from the steps and throws NumericalError on any
  /// mismatch.  Used by tests and replay checks.
  void check_invariants() const;

  bool operator==(const BridgeConfig& other) const {
    return n_half_ == other.n_half_ && steps_ == other.steps_;
  }

 private:
  void rebuild();
  void refresh_corner(std::size_t k);

  std::size_t n_half_ = 0;
  std::vector<std::int8_t> steps_;  // index 0 unused
  std::vector<int> heights_;
  long long area_ = 0;
  IndexedSet down_;
  IndexedSet up_;
};

ParticleConfig to_particles(const BridgeConfig& cfg);
inline BridgeConfig from_particles(const ParticleConfig& eta) {
  return BridgeConfig::from_particles(eta);
}

/// τ_k η: (τ_k η)(i) = η(i + k), indices modulo 2N.
ParticleConfig shift(const ParticleConfig& eta, long long k);

/// All C(2N, N) bridges in increasing order of their step code (bit i of
/// the code set when X_{i+1} = +1).  Configurations are materialized on
/// demand, so the list itself stays a vector of integers.
class BridgeEnumeration {
 public:
  static constexpr std::size_t kMaxHalfLength = 12;

  explicit BridgeEnumeration(std::size_t n_half);

  std::size_t n_half() const { return n_half_; }
  std::size_t size() const { return codes_.size(); }
  std::uint32_t code(std::size_t i) const { return codes_[i]; }
  BridgeConfig operator[](std::size_t i) const;
  /// Index of a configuration, or size() if it is not a bridge of this N.
  std::size_t index_of(const BridgeConfig& cfg) const;
  std::size_t index_of_code(std::uint32_t code) const;
  /// Area of bridge i, computed from its code without materializing it.
  long long area(std::size_t i) const;

 private:
  std::size_t n_half_;
  std::vector<std::uint32_t> codes_;
};

inline BridgeEnumeration enumerate_bridges(std::size_t n_half) {
  return BridgeEnumeration(n_half);
}

std::uint32_t bridge_code(const BridgeConfig& cfg);

}  // namespace cornerlab::lattice
