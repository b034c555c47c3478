#include "cornerlab/gibbs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>

#include <fmt/format.h>

#include "cornerlab/error.hpp"
#include "cornerlab/numerics.hpp"

namespace cornerlab::gibbs {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kQuadTol = 1e-10;

double lse(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

// log(1 / (1 + e^{-x}))
double log_sigmoid(double x) { return x < 0 ? x - std::log1p(std::exp(x)) : -std::log1p(std::exp(-x)); }

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

LogLaplace log_laplace(double h) {
  const double a = std::abs(h);
  const double e = std::exp(-2.0 * a);
  return {a - std::numbers::ln2 + std::log1p(e), std::tanh(h), 4.0 * e / ((1.0 + e) * (1.0 + e))};
}

double log_cosh(double h) { return log_laplace(h).value; }

Regime regime_of(double alpha) {
  if (alpha > 1.0) return Regime::super;
  if (alpha == 1.0) return Regime::critical;
  return Regime::sub;
}

const char* regime_name(Regime r) {
  switch (r) {
    case Regime::super: return "alpha>1";
    case Regime::critical: return "alpha=1";
    case Regime::sub: return "alpha<1";
  }
  return "?";
}

double ModelParams::window() const { return std::pow(2.0 * static_cast<double>(n_half), alpha); }

double ModelParams::grid_point(std::size_t k) const {
  const double n2 = 2.0 * static_cast<double>(n_half);
  if (alpha >= 1.0) return static_cast<double>(k) / n2;
  return (static_cast<double>(k) - static_cast<double>(n_half)) / window();
}

double ModelParams::lattice_coordinate(double x) const {
  const double n2 = 2.0 * static_cast<double>(n_half);
  if (alpha >= 1.0) return x * n2;
  return static_cast<double>(n_half) + x * window();
}

ModelParams make_params(std::size_t n_half, double alpha, double sigma) {
  if (n_half == 0) throw BadParam("N must be at least 1");
  if (!std::isfinite(alpha) || alpha <= 0.0) throw BadParam("alpha must be positive, got " + std::to_string(alpha));
  if (!std::isfinite(sigma) || sigma < 0.0) throw BadParam("sigma must be nonnegative, got " + std::to_string(sigma));
  ModelParams m;
  m.n_half = n_half;
  m.alpha = alpha;
  m.sigma = sigma;
  const double n2 = 2.0 * static_cast<double>(n_half);
  m.gamma = 2.0 * sigma / std::pow(n2, alpha);
  m.p = sigmoid(2.0 * m.gamma);
  m.one_minus_p = sigmoid(-2.0 * m.gamma);
  m.c = std::pow(n2, 4.0 * alpha) / (2.0 * std::cosh(m.gamma));
  const double sh = std::sinh(0.5 * m.gamma);
  m.lambda = m.c * 4.0 * sh * sh;
  m.rho = -m.gamma * (static_cast<double>(n_half) + 0.5);
  m.tilt.assign(2 * n_half + 1, 0.0);
  m.weights.assign(2 * n_half + 1, 0.0);
  for (std::size_t k = 1; k <= 2 * n_half; ++k) {
    const double h = m.gamma * (static_cast<double>(n_half) - static_cast<double>(k) + 0.5);
    m.tilt[k] = h;
    m.weights[k] = sigmoid(2.0 * h);
  }
  return m;
}

NuSampler::NuSampler(const ModelParams& params) : thresholds_(params.length() + 1, 0) {
  for (std::size_t k = 1; k <= params.length(); ++k) thresholds_[k] = CounterRng::threshold(params.weights[k]);
}

void NuSampler::draw(CounterRng& rng, std::vector<std::int8_t>& steps) const {
  const std::size_t n = thresholds_.size() - 1;
  steps.resize(n);
  for (std::size_t k = 1; k <= n; ++k) steps[k - 1] = rng() < thresholds_[k] ? 1 : -1;
}

MuSampler::MuSampler(const ModelParams& params) : thresholds_(params.length() + 1, 0) {
  for (std::size_t k = 1; k <= params.length(); ++k) thresholds_[k] = CounterRng::threshold(params.weights[k]);
}

std::size_t MuSampler::draw(CounterRng& rng, std::vector<std::int8_t>& steps) const {
  const long long n = static_cast<long long>(thresholds_.size()) - 1;
  steps.resize(static_cast<std::size_t>(n));
  for (std::size_t attempt = 1;; ++attempt) {
    long long s = 0;
    long long k = 1;
    for (; k <= n; ++k) {
      const std::int8_t x = rng() < thresholds_[static_cast<std::size_t>(k)] ? 1 : -1;
      steps[static_cast<std::size_t>(k - 1)] = x;
      s += x;
      if (std::abs(s) > n - k) break;
    }
    if (k > n) return attempt;
  }
}

lattice::BridgeConfig MuSampler::sample(CounterRng& rng, std::size_t* attempts) const {
  std::vector<std::int8_t> steps;
  const std::size_t a = draw(rng, steps);
  if (attempts) *attempts = a;
  return lattice::BridgeConfig::from_steps(std::span<const std::int8_t>(steps));
}

std::vector<std::int8_t> sample_nu(const ModelParams& params, CounterRng& rng) {
  std::vector<std::int8_t> steps;
  NuSampler(params).draw(rng, steps);
  return steps;
}

lattice::BridgeConfig sample_mu(const ModelParams& params, CounterRng& rng, std::size_t* attempts) {
  return MuSampler(params).sample(rng, attempts);
}

ExactMeasure mu_exact(const ModelParams& params) {
  ExactMeasure out{lattice::BridgeEnumeration(params.n_half), {}, 0.0};
  const std::size_t n = out.bridges.size();
  out.prob.resize(n);
  double log_z = kNegInf;
  for (std::size_t i = 0; i < n; ++i) {
    out.prob[i] = params.gamma * static_cast<double>(out.bridges.area(i));
    log_z = lse(log_z, out.prob[i]);
  }
  for (auto& w : out.prob) w = std::exp(w - log_z);
  out.log_z = log_z;
  return out;
}

std::vector<double> nu_conditioned_exact(const ModelParams& params) {
  lattice::BridgeEnumeration bridges(params.n_half);
  const std::size_t len = params.length();
  std::vector<double> log_up(len + 1), log_down(len + 1);
  for (std::size_t k = 1; k <= len; ++k) {
    log_up[k] = log_sigmoid(2.0 * params.tilt[k]);
    log_down[k] = log_sigmoid(-2.0 * params.tilt[k]);
  }
  std::vector<double> out(bridges.size());
  double total = kNegInf;
  for (std::size_t i = 0; i < bridges.size(); ++i) {
    const std::uint32_t code = bridges.code(i);
    double lw = 0.0;
    for (std::size_t k = 1; k <= len; ++k) lw += (code >> (k - 1)) & 1u ? log_up[k] : log_down[k];
    out[i] = lw;
    total = lse(total, lw);
  }
  for (auto& w : out) w = std::exp(w - total);
  return out;
}

double log_partition_exact(const ModelParams& params) {
  const long long n = static_cast<long long>(params.n_half);
  const long long len = 2 * n;
  std::vector<double> cur(static_cast<std::size_t>(len + 3), kNegInf), next(cur.size(), kNegInf);
  auto at = [n](long long s) { return static_cast<std::size_t>(s + n + 1); };
  cur[at(0)] = 0.0;
  for (long long k = 1; k <= len; ++k) {
    const long long cap = std::min(k, len - k);
    std::fill(next.begin(), next.end(), kNegInf);
    for (long long s = -cap; s <= cap; s += 2)
      next[at(s)] = lse(cur[at(s - 1)], cur[at(s + 1)]) + params.gamma * static_cast<double>(s);
    std::swap(cur, next);
  }
  return cur[at(0)];
}

PartitionViaNu log_partition_via_nu(const ModelParams& params) {
  const long long n = static_cast<long long>(params.n_half);
  const long long len = 2 * n;
  std::vector<double> cur(static_cast<std::size_t>(len + 3), 0.0), next(cur.size(), 0.0);
  auto at = [n](long long s) { return static_cast<std::size_t>(s + n + 1); };
  cur[at(0)] = 1.0;
  double log_scale = 0.0;
  for (long long k = 1; k <= len; ++k) {
    const double up = params.weights[static_cast<std::size_t>(k)];
    const double down = sigmoid(-2.0 * params.tilt[static_cast<std::size_t>(k)]);
    const long long cap = std::min(k, len - k);
    std::fill(next.begin(), next.end(), 0.0);
    double mx = 0.0;
    for (long long s = -cap; s <= cap; s += 2) {
      const double v = cur[at(s - 1)] * up + cur[at(s + 1)] * down;
      next[at(s)] = v;
      mx = std::max(mx, v);
    }
    if (mx > 0.0 && mx < 1e-200) {
      for (long long s = -cap; s <= cap; s += 2) next[at(s)] /= mx;
      log_scale += std::log(mx);
    }
    std::swap(cur, next);
  }
  PartitionViaNu out;
  out.log_nu_hat = std::log(cur[at(0)]) + log_scale;
  for (std::size_t k = 1; k <= params.length(); ++k) out.laplace_sum += log_cosh(params.tilt[k]);
  out.log_z = static_cast<double>(len) * std::numbers::ln2 + out.log_nu_hat + out.laplace_sum;
  return out;
}

double critical_partition_coefficient(double sigma) {
  return numerics::adaptive_simpson([sigma](double x) { return log_cosh(sigma * (1.0 - 2.0 * x)); }, 0.0, 1.0,
                                    kQuadTol);
}

PartitionAsymptotic log_partition_asymptotic(const ModelParams& params) {
  const double n2 = static_cast<double>(params.length());
  const double s = params.sigma;
  PartitionAsymptotic out;
  switch (params.regime()) {
    case Regime::super:
      out.log_z_minus_entropy = s * s / 6.0 * std::pow(n2, 3.0 - 2.0 * params.alpha);
      break;
    case Regime::critical:
      out.log_z_minus_entropy = n2 * critical_partition_coefficient(s);
      break;
    case Regime::sub:
      out.log_z_minus_entropy = s / 2.0 * std::pow(n2, 2.0 - params.alpha) - n2 * std::numbers::ln2;
      break;
  }
  out.log_z = out.log_z_minus_entropy + n2 * std::numbers::ln2;
  return out;
}

double sub_tail_integral(double sigma, double x, double tol) {
  if (!(sigma > 0.0)) throw DomainError("tail integral needs sigma > 0");
  const double cutoff = std::log(2.0 / tol) / (4.0 * sigma);
  const double lo = -x;
  const double hi = std::max(lo, cutoff);
  return numerics::adaptive_simpson([sigma](double y) { return std::tanh(2.0 * sigma * y) - 1.0; }, lo, hi, tol);
}

double sigma_asymptotic(const ModelParams& params, double x) {
  const double n2 = static_cast<double>(params.length());
  const double s = params.sigma;
  switch (params.regime()) {
    case Regime::super:
      return std::pow(n2, 2.0 - params.alpha) * s * x * (1.0 - x);
    case Regime::critical:
      return n2 * numerics::adaptive_simpson([s](double y) { return std::tanh(s * (1.0 - 2.0 * y)); }, 0.0, x,
                                             kQuadTol);
    case Regime::sub:
      return static_cast<double>(params.n_half) + params.window() * (x + sub_tail_integral(s, x));
  }
  return 0.0;
}

Profile sigma_profile(const ModelParams& params) {
  const std::size_t len = params.length();
  Profile out;
  out.x.resize(len + 1);
  out.sigma.assign(len + 1, 0.0);
  out.asymptotic.resize(len + 1);
  double acc = 0.0;
  for (std::size_t k = 1; k <= params.n_half; ++k) {
    acc += std::tanh(params.tilt[k]);
    out.sigma[k] = acc;
  }
  // Antisymmetry of the tilt makes the profile symmetric about N; mirror
  // instead of summing on so that Σ(2N) is exactly zero.
  for (std::size_t k = params.n_half + 1; k <= len; ++k) out.sigma[k] = out.sigma[len - k];
  const bool sub_without_drift = params.regime() == Regime::sub && params.sigma == 0.0;
  for (std::size_t k = 0; k <= len; ++k) {
    out.x[k] = params.grid_point(k);
    out.asymptotic[k] = sub_without_drift ? std::nan("") : sigma_asymptotic(params, out.x[k]);
  }
  return out;
}

double sigma_at(const ModelParams& params, const Profile& profile, double x) {
  const double pos = params.lattice_coordinate(x);
  const double len = static_cast<double>(params.length());
  if (pos < 0.0 || pos > len) throw DomainError("x outside the lattice window");
  const auto k = static_cast<std::size_t>(std::floor(pos));
  if (k >= params.length()) return profile.sigma.back();
  const double f = pos - static_cast<double>(k);
  return (1.0 - f) * profile.sigma[k] + f * profile.sigma[k + 1];
}

void write_profile_csv(const ModelParams& params, std::ostream& out) {
  const Profile prof = sigma_profile(params);
  out << "x,sigma_profile,asymptotic_prediction\n";
  for (std::size_t k = 0; k < prof.x.size(); ++k)
    out << fmt::format("{},{},{}\n", prof.x[k], prof.sigma[k], prof.asymptotic[k]);
}

BridgeCovariance::BridgeCovariance(double alpha, double sigma) : regime_(regime_of(alpha)), sigma_(sigma) {
  if (!std::isfinite(alpha) || alpha <= 0.0) throw DomainError("alpha must be positive");
  if (!std::isfinite(sigma) || sigma < 0.0) throw DomainError("sigma must be nonnegative");
  if (regime_ == Regime::sub) {
    if (sigma == 0.0) throw DomainError("alpha < 1 covariance needs sigma > 0");
    cutoff_ = std::log(2.0 / kQuadTol) / (4.0 * sigma);
    total_ = q(-std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity());
  } else {
    total_ = q(0.0, 1.0);
  }
}

double BridgeCovariance::integrand(double u) const {
  switch (regime_) {
    case Regime::super: return 1.0;
    case Regime::critical: return log_laplace(sigma_ * (1.0 - 2.0 * u)).second;
    case Regime::sub: return log_laplace(2.0 * sigma_ * u).second;
  }
  return 0.0;
}

bool BridgeCovariance::in_domain(double x) const {
  if (regime_ == Regime::sub) return !std::isnan(x);
  return x >= 0.0 && x <= 1.0;
}

double BridgeCovariance::q(double x, double y) const {
  if (x > y) std::swap(x, y);
  if (!in_domain(x) || !in_domain(y)) throw DomainError("point outside the covariance domain");
  if (regime_ == Regime::super) return y - x;
  double a = x, b = y;
  if (regime_ == Regime::sub) {
    a = std::max(a, -cutoff_);
    b = std::min(b, cutoff_);
    if (a >= b) return 0.0;
  }
  return numerics::adaptive_simpson([this](double u) { return integrand(u); }, a, b, kQuadTol);
}

double BridgeCovariance::cov(double x, double y) const {
  if (x > y) std::swap(x, y);
  if (regime_ == Regime::sub) {
    if (!std::isfinite(x) || !std::isfinite(y)) throw DomainError("covariance needs finite points");
    const double inf = std::numeric_limits<double>::infinity();
    return q(-inf, x) * q(y, inf) / total_;
  }
  return q(0.0, x) * q(y, 1.0) / total_;
}

BridgeCovariance bridge_covariance(double alpha, double sigma) { return BridgeCovariance(alpha, sigma); }

HeightMoments height_moments_exact(const ModelParams& params, std::size_t k1, std::size_t k2) {
  if (k1 > k2) std::swap(k1, k2);
  const long long n = static_cast<long long>(params.n_half);
  const long long len = 2 * n;
  if (static_cast<long long>(k2) > len) throw DomainError("site beyond 2N");
  const std::size_t width = static_cast<std::size_t>(len + 3);
  auto at = [n](long long s) { return static_cast<std::size_t>(s + n + 1); };
  const double g = params.gamma;

  // Backward: log weight of completions from (k, s), factors for sites > k.
  std::vector<double> back(width, kNegInf), prev(width, kNegInf), back1, back2;
  back[at(0)] = 0.0;
  if (static_cast<long long>(k2) == len) back2 = back;
  for (long long k = len - 1; k >= static_cast<long long>(k1); --k) {
    std::swap(back, prev);
    std::fill(back.begin(), back.end(), kNegInf);
    const long long cap = std::min(k, len - k);
    for (long long s = -cap; s <= cap; s += 2)
      back[at(s)] = lse(prev[at(s + 1)] + g * static_cast<double>(s + 1),
                        prev[at(s - 1)] + g * static_cast<double>(s - 1));
    if (k == static_cast<long long>(k2)) back2 = back;
    if (k == static_cast<long long>(k1)) back1 = back;
  }
  if (back1.empty()) back1 = back;

  // Forward: log weight of paths to (k, s) including the factor at k.
  std::vector<double> fwd(width, kNegInf), fprev(width, kNegInf);
  std::vector<double> mean_s1(width, 0.0), mprev(width, 0.0);
  fwd[at(0)] = 0.0;
  HeightMoments out;
  auto marginal = [&](const std::vector<double>& f, const std::vector<double>& b, long long k, auto&& visit) {
    const long long cap = std::min(k, len - k);
    double mx = kNegInf;
    for (long long s = -cap; s <= cap; s += 2) mx = std::max(mx, f[at(s)] + b[at(s)]);
    double z = 0.0;
    for (long long s = -cap; s <= cap; s += 2) z += std::exp(f[at(s)] + b[at(s)] - mx);
    for (long long s = -cap; s <= cap; s += 2) visit(s, std::exp(f[at(s)] + b[at(s)] - mx) / z);
  };
  for (long long k = 1; k <= static_cast<long long>(k2); ++k) {
    std::swap(fwd, fprev);
    std::swap(mean_s1, mprev);
    std::fill(fwd.begin(), fwd.end(), kNegInf);
    const long long cap = std::min(k, len - k);
    for (long long s = -cap; s <= cap; s += 2) {
      const double a = fprev[at(s - 1)], b = fprev[at(s + 1)];
      const double m = lse(a, b);
      fwd[at(s)] = m + g * static_cast<double>(s);
      if (k > static_cast<long long>(k1)) {
        const double wa = a == kNegInf ? 0.0 : std::exp(a - m);
        const double wb = b == kNegInf ? 0.0 : std::exp(b - m);
        mean_s1[at(s)] = wa * mprev[at(s - 1)] + wb * mprev[at(s + 1)];
      }
    }
    if (k == static_cast<long long>(k1)) {
      for (long long s = -cap; s <= cap; s += 2) mean_s1[at(s)] = static_cast<double>(s);
    }
  }
  // k1 = 0 leaves S(k1) = 0 identically.
  if (k1 == 0) std::fill(mean_s1.begin(), mean_s1.end(), 0.0);

  // Marginal at k1 needs the forward row at k1, so recompute it cheaply when k1 < k2.
  std::vector<double> f1(width, kNegInf), tmp(width, kNegInf);
  f1[at(0)] = 0.0;
  for (long long k = 1; k <= static_cast<long long>(k1); ++k) {
    std::swap(f1, tmp);
    std::fill(f1.begin(), f1.end(), kNegInf);
    const long long cap = std::min(k, len - k);
    for (long long s = -cap; s <= cap; s += 2)
      f1[at(s)] = lse(tmp[at(s - 1)], tmp[at(s + 1)]) + g * static_cast<double>(s);
  }
  double m1 = 0.0, s11 = 0.0;
  marginal(f1, back1, static_cast<long long>(k1), [&](long long s, double pr) {
    m1 += pr * static_cast<double>(s);
    s11 += pr * static_cast<double>(s) * static_cast<double>(s);
  });
  double m2 = 0.0, s22 = 0.0, s12 = 0.0;
  marginal(fwd, back2, static_cast<long long>(k2), [&](long long s, double pr) {
    const double sd = static_cast<double>(s);
    m2 += pr * sd;
    s22 += pr * sd * sd;
    s12 += pr * sd * mean_s1[at(s)];
  });
  if (k1 == k2) s12 = s22;
  out.mean1 = m1;
  out.mean2 = m2;
  out.var1 = s11 - m1 * m1;
  out.var2 = s22 - m2 * m2;
  out.cov = s12 - m1 * m2;
  return out;
}

}  // namespace cornerlab::gibbs
