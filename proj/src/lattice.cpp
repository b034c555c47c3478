#include "cornerlab/lattice.hpp"

#include <algorithm>
#include <bit>

#include "cornerlab/error.hpp"

namespace cornerlab::lattice {

std::vector<std::size_t> IndexedSet::sorted() const {
  std::vector<std::size_t> out(members_.begin(), members_.end());
  std::sort(out.begin(), out.end());
  return out;
}

std::size_t ParticleConfig::particles() const {
  std::size_t n = 0;
  for (auto v : occupation) n += v;
  return n;
}

namespace {

template <class T>
void build(std::span<const T> steps, std::vector<std::int8_t>& out) {
  if (steps.empty()) throw NotABridge("empty step sequence");
  if (steps.size() % 2 != 0) throw NotABridge("odd number of steps: " + std::to_string(steps.size()));
  long long sum = 0;
  out.assign(steps.size() + 1, 0);
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const long long v = steps[i];
    if (v != 1 && v != -1) throw BadStep("step " + std::to_string(i + 1) + " = " + std::to_string(v));
    out[i + 1] = static_cast<std::int8_t>(v);
    sum += v;
  }
  if (sum != 0) throw NotABridge("steps sum to " + std::to_string(sum));
}

}  // namespace

BridgeConfig BridgeConfig::from_steps(std::span<const int> steps) {
  BridgeConfig cfg;
  build(steps, cfg.steps_);
  cfg.n_half_ = steps.size() / 2;
  cfg.rebuild();
  return cfg;
}

BridgeConfig BridgeConfig::from_steps(std::span<const std::int8_t> steps) {
  BridgeConfig cfg;
  build(steps, cfg.steps_);
  cfg.n_half_ = steps.size() / 2;
  cfg.rebuild();
  return cfg;
}

BridgeConfig BridgeConfig::from_string(std::string_view text) {
  while (!text.empty() && (text.back() == '\n' || text.back() == '\r' || text.back() == ' ')) text.remove_suffix(1);
  std::vector<int> steps;
  steps.reserve(text.size());
  for (char c : text) {
    if (c == '+') steps.push_back(1);
    else if (c == '-') steps.push_back(-1);
    else throw BadStep(std::string("unexpected character '") + c + "'");
  }
  return from_steps(std::span<const int>(steps));
}

BridgeConfig BridgeConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("steps")) throw NotABridge("json bridge needs a \"steps\" array");
  std::vector<int> steps;
  for (const auto& v : j.at("steps")) {
    if (!v.is_number_integer()) throw BadStep("non-integer step in json");
    steps.push_back(v.get<int>());
  }
  if (j.contains("N") && j.at("N").get<std::size_t>() * 2 != steps.size())
    throw NotABridge("N does not match the number of steps");
  return from_steps(std::span<const int>(steps));
}

BridgeConfig BridgeConfig::from_particles(const ParticleConfig& eta) {
  std::vector<int> steps(eta.size());
  for (std::size_t i = 0; i < eta.size(); ++i) {
    if (eta.occupation[i] > 1) throw BadStep("occupation must be 0 or 1");
    steps[i] = 2 * eta.occupation[i] - 1;
  }
  return from_steps(std::span<const int>(steps));
}

BridgeConfig BridgeConfig::flat(std::size_t n_half) {
  if (n_half == 0) throw BadParam("N must be positive");
  std::vector<int> steps(2 * n_half);
  for (std::size_t i = 0; i < steps.size(); ++i) steps[i] = i % 2 == 0 ? 1 : -1;
  return from_steps(std::span<const int>(steps));
}

BridgeConfig BridgeConfig::maximal(std::size_t n_half) {
  if (n_half == 0) throw BadParam("N must be positive");
  std::vector<int> steps(2 * n_half);
  for (std::size_t i = 0; i < steps.size(); ++i) steps[i] = i < n_half ? 1 : -1;
  return from_steps(std::span<const int>(steps));
}

BridgeConfig BridgeConfig::minimal(std::size_t n_half) {
  if (n_half == 0) throw BadParam("N must be positive");
  std::vector<int> steps(2 * n_half);
  for (std::size_t i = 0; i < steps.size(); ++i) steps[i] = i < n_half ? -1 : 1;
  return from_steps(std::span<const int>(steps));
}

void BridgeConfig::rebuild() {
  const std::size_t n = length();
  heights_.assign(n + 1, 0);
  area_ = 0;
  for (std::size_t k = 1; k <= n; ++k) {
    heights_[k] = heights_[k - 1] + steps_[k];
    area_ += heights_[k];
  }
  down_ = IndexedSet(n + 1);
  up_ = IndexedSet(n + 1);
  for (std::size_t k = 1; k < n; ++k) refresh_corner(k);
}

void BridgeConfig::refresh_corner(std::size_t k) {
  if (k == 0 || k >= length()) return;
  const int a = steps_[k], b = steps_[k + 1];
  if (a == -1 && b == 1) {
    down_.insert(k);
    up_.erase(k);
  } else if (a == 1 && b == -1) {
    up_.insert(k);
    down_.erase(k);
  } else {
    down_.erase(k);
    up_.erase(k);
  }
}

Corner BridgeConfig::corner_at(std::size_t k) const {
  if (k == 0 || k >= length()) return Corner::none;
  if (down_.contains(k)) return Corner::down;
  if (up_.contains(k)) return Corner::up;
  return Corner::none;
}

FlipRecord BridgeConfig::flip(std::size_t k) {
  const Corner kind = corner_at(k);
  if (kind == Corner::none) throw NotACorner("no corner at k = " + std::to_string(k));
  const int d = kind == Corner::down ? 2 : -2;
  std::swap(steps_[k], steps_[k + 1]);
  heights_[k] += d;
  area_ += d;
  refresh_corner(k - 1);
  refresh_corner(k);
  refresh_corner(k + 1);
  return {k, kind};
}

std::string BridgeConfig::to_string() const {
  std::string s(length(), '+');
  for (std::size_t k = 1; k <= length(); ++k)
    if (steps_[k] < 0) s[k - 1] = '-';
  return s;
}

nlohmann::json BridgeConfig::to_json() const {
  std::vector<int> st(steps().begin(), steps().end());
  return {{"N", n_half_}, {"steps", st}};
}

void BridgeConfig::check_invariants() const {
  const std::size_t n = length();
  if (steps_.size() != n + 1 || heights_.size() != n + 1) throw NumericalError("cache sizes out of sync");
  if (heights_[0] != 0 || heights_[n] != 0) throw NumericalError("bridge endpoints not pinned");
  long long area = 0;
  for (std::size_t k = 1; k <= n; ++k) {
    if (steps_[k] != 1 && steps_[k] != -1) throw NumericalError("bad step at " + std::to_string(k));
    if (heights_[k] != heights_[k - 1] + steps_[k]) throw NumericalError("height cache wrong at " + std::to_string(k));
    const long long cap = static_cast<long long>(std::min(k, n - k));
    if (std::abs(heights_[k]) > cap) throw NumericalError("height outside maximal shape");
    area += heights_[k];
  }
  if (area != area_) throw NumericalError("area cache " + std::to_string(area_) + " != " + std::to_string(area));
  std::size_t nd = 0, nu = 0;
  for (std::size_t k = 1; k < n; ++k) {
    const bool d = steps_[k] == -1 && steps_[k + 1] == 1;
    const bool u = steps_[k] == 1 && steps_[k + 1] == -1;
    if (d != down_.contains(k) || u != up_.contains(k))
      throw NumericalError("corner cache wrong at " + std::to_string(k));
    nd += d;
    nu += u;
  }
  if (nd != down_.size() || nu != up_.size()) throw NumericalError("corner set holds stray indices");
}

ParticleConfig to_particles(const BridgeConfig& cfg) {
  ParticleConfig eta;
  eta.occupation.resize(cfg.length());
  for (std::size_t k = 1; k <= cfg.length(); ++k) eta.occupation[k - 1] = cfg.step(k) > 0 ? 1 : 0;
  return eta;
}

ParticleConfig shift(const ParticleConfig& eta, long long k) {
  const long long n = static_cast<long long>(eta.size());
  ParticleConfig out;
  out.occupation.resize(eta.size());
  if (n == 0) return out;
  const long long s = ((k % n) + n) % n;
  for (long long i = 0; i < n; ++i) out.occupation[i] = eta.occupation[(i + s) % n];
  return out;
}

std::uint32_t bridge_code(const BridgeConfig& cfg) {
  if (cfg.length() > 2 * BridgeEnumeration::kMaxHalfLength) throw TooLarge("bridge too long for a 32-bit code");
  std::uint32_t code = 0;
  for (std::size_t k = 1; k <= cfg.length(); ++k)
    if (cfg.step(k) > 0) code |= 1u << (k - 1);
  return code;
}

BridgeEnumeration::BridgeEnumeration(std::size_t n_half) : n_half_(n_half) {
  if (n_half == 0) throw BadParam("N must be positive");
  if (n_half > kMaxHalfLength)
    throw TooLarge("exhaustive enumeration limited to N <= " + std::to_string(kMaxHalfLength));
  const std::uint32_t limit = 1u << (2 * n_half);
  std::uint32_t v = (1u << n_half) - 1;
  // Gosper's hack walks the N-subsets of 2N bits in increasing order.
  while (v < limit) {
    codes_.push_back(v);
    const std::uint32_t c = v & (~v + 1);
    const std::uint32_t r = v + c;
    v = (((r ^ v) >> 2) / c) | r;
  }
}

BridgeConfig BridgeEnumeration::operator[](std::size_t i) const {
  std::vector<std::int8_t> steps(2 * n_half_);
  const std::uint32_t c = codes_.at(i);
  for (std::size_t k = 0; k < steps.size(); ++k) steps[k] = (c >> k) & 1u ? 1 : -1;
  return BridgeConfig::from_steps(std::span<const std::int8_t>(steps));
}

std::size_t BridgeEnumeration::index_of_code(std::uint32_t code) const {
  auto it = std::lower_bound(codes_.begin(), codes_.end(), code);
  if (it == codes_.end() || *it != code) return codes_.size();
  return static_cast<std::size_t>(it - codes_.begin());
}

std::size_t BridgeEnumeration::index_of(const BridgeConfig& cfg) const {
  if (cfg.n_half() != n_half_) return codes_.size();
  return index_of_code(bridge_code(cfg));
}

long long BridgeEnumeration::area(std::size_t i) const {
  const std::uint32_t c = codes_.at(i);
  long long s = 0, a = 0;
  for (std::size_t k = 0; k < 2 * n_half_; ++k) {
    s += (c >> k) & 1u ? 1 : -1;
    a += s;
  }
  return a;
}

}  // namespace cornerlab::lattice
