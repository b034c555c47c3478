#include "cornerlab/stats.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>

#include <boost/math/special_functions/gamma.hpp>
#include <fmt/format.h>

#include "cornerlab/error.hpp"

namespace cornerlab::stats {

MeanEstimate mean_se(std::span<const double> xs) {
  if (xs.size() < 2) throw TooFewSamples(fmt::format("need at least 2 samples, got {}", xs.size()));
  const double n = static_cast<double>(xs.size());
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= n;
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / (n - 1.0) / n), xs.size()};
}

CovEstimate empirical_cov(const std::vector<std::vector<double>>& samples, const std::vector<double>& points) {
  const std::size_t n = samples.size();
  if (n < 2) throw TooFewSamples(fmt::format("need at least 2 samples, got {}", n));
  const std::size_t d = points.size();
  for (const auto& s : samples)
    if (s.size() != d) throw BadParam("every sample needs one value per point");
  const double nd = static_cast<double>(n);

  // shifted by the first sample so that identical rows give exactly zero
  const std::vector<double>& shift = samples.front();
  std::vector<double> mean(d, 0.0);
  for (const auto& s : samples)
    for (std::size_t a = 0; a < d; ++a) mean[a] += s[a] - shift[a];
  for (double& m : mean) m /= nd;

  CovEstimate est{points, std::vector<double>(d * d, 0.0), std::vector<double>(d * d, 0.0), n};
  std::vector<double> x(n), y(n);
  for (std::size_t a = 0; a < d; ++a) {
    for (std::size_t i = 0; i < n; ++i) x[i] = samples[i][a] - shift[a] - mean[a];
    for (std::size_t b = a; b < d; ++b) {
      for (std::size_t i = 0; i < n; ++i) y[i] = samples[i][b] - shift[b] - mean[b];
      double sxy = 0.0;
      for (std::size_t i = 0; i < n; ++i) sxy += x[i] * y[i];
      const double c = sxy / (nd - 1.0);
      double se = std::numeric_limits<double>::infinity();
      if (n > 2) {
        // Leave-one-out covariance on centred data:
        // (Sxy − x_i y_i · n/(n−1)) / (n − 2).
        double jm = 0.0;
        for (std::size_t i = 0; i < n; ++i) jm += (sxy - x[i] * y[i] * nd / (nd - 1.0)) / (nd - 2.0);
        jm /= nd;
        double ss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          const double ci = (sxy - x[i] * y[i] * nd / (nd - 1.0)) / (nd - 2.0);
          ss += (ci - jm) * (ci - jm);
        }
        se = std::sqrt((nd - 1.0) / nd * ss);
      }
      est.cov[a * d + b] = est.cov[b * d + a] = c;
      est.se[a * d + b] = est.se[b * d + a] = se;
    }
  }
  return est;
}

double field_value(const scaling::RescaledField& field, double x) {
  const auto& g = field.grid;
  if (g.empty()) throw MissingData("empty field");
  if (x < g.front() || x > g.back()) throw DomainError(fmt::format("x = {} outside the field grid", x));
  auto it = std::upper_bound(g.begin(), g.end(), x);
  if (it == g.end()) return field.values.back();
  const std::size_t k = static_cast<std::size_t>(it - g.begin());
  if (k == 0) return field.values.front();
  const double f = (x - g[k - 1]) / (g[k] - g[k - 1]);
  return (1.0 - f) * field.values[k - 1] + f * field.values[k];
}

CovEstimate empirical_cov(const std::vector<scaling::RescaledField>& fields, const std::vector<double>& points) {
  std::vector<std::vector<double>> samples(fields.size(), std::vector<double>(points.size()));
  for (std::size_t i = 0; i < fields.size(); ++i)
    for (std::size_t a = 0; a < points.size(); ++a) samples[i][a] = field_value(fields[i], points[a]);
  return empirical_cov(samples, points);
}

namespace {

// Index of site s (any integer) in storage, sites wrapped onto 1..n.
std::size_t wrap(long long s, std::size_t n) {
  const long long m = static_cast<long long>(n);
  return static_cast<std::size_t>((((s - 1) % m) + m) % m);
}

void check_block(std::size_t n, std::size_t l) {
  if (n == 0) throw BadParam("empty configuration");
  if (2 * l + 1 > n) throw BadParam(fmt::format("block of {} sites exceeds the lattice of {}", 2 * l + 1, n));
}

}  // namespace

double block_average(std::span<const std::uint8_t> eta, long long i, std::size_t l) {
  check_block(eta.size(), l);
  const long long ll = static_cast<long long>(l);
  double s = 0.0;
  for (long long j = i - ll; j <= i + ll; ++j) s += eta[wrap(j, eta.size())];
  return s / static_cast<double>(2 * l + 1);
}

CylinderFunction::CylinderFunction(std::size_t r, std::vector<double> table) : r_(r), table_(std::move(table)) {
  if (r > kMaxSites) throw TooLarge(fmt::format("cylinder functions support at most {} sites", kMaxSites));
  if (table_.size() != (std::size_t{1} << r)) throw BadParam("table size must be 2^r");
}

CylinderFunction CylinderFunction::from(std::size_t r, const std::function<double(std::uint32_t)>& f) {
  if (r > kMaxSites) throw TooLarge(fmt::format("cylinder functions support at most {} sites", kMaxSites));
  std::vector<double> table(std::size_t{1} << r);
  for (std::uint32_t c = 0; c < table.size(); ++c) table[c] = f(c);
  return {r, std::move(table)};
}

CylinderFunction CylinderFunction::constant(double value) { return {0, {value}}; }

CylinderFunction CylinderFunction::disagreement() { return {2, {0.0, 1.0, 1.0, 0.0}}; }

double CylinderFunction::operator()(std::span<const std::uint8_t> eta, long long k) const {
  std::uint32_t pattern = 0;
  for (std::size_t j = 0; j < r_; ++j)
    if (eta[wrap(k + 1 + static_cast<long long>(j), eta.size())]) pattern |= std::uint32_t{1} << j;
  return table_[pattern];
}

double phi_tilde(const CylinderFunction& phi, double a) {
  if (!(a >= 0.0 && a <= 1.0)) throw DomainError(fmt::format("density {} outside [0, 1]", a));
  const std::vector<double> q(phi.sites(), a);
  return product_expectation(phi, q);
}

double product_expectation(const CylinderFunction& phi, std::span<const double> q) {
  if (q.size() != phi.sites()) throw BadParam("one density per site");
  const std::size_t size = std::size_t{1} << phi.sites();
  double sum = 0.0;
  for (std::uint32_t c = 0; c < size; ++c) {
    double w = 1.0;
    for (std::size_t j = 0; j < q.size(); ++j) w *= (c >> j) & 1u ? q[j] : 1.0 - q[j];
    sum += w * phi.at(c);
  }
  return sum;
}

double product_expectation_derivative(const CylinderFunction& phi, std::span<const double> q) {
  if (q.size() != phi.sites()) throw BadParam("one density per site");
  if (q.empty()) return 0.0;
  const std::size_t size = std::size_t{1} << phi.sites();
  double sum = 0.0;
  for (std::uint32_t c = 0; c < size; ++c) {
    double w = c & 1u ? 1.0 : -1.0;
    for (std::size_t j = 1; j < q.size(); ++j) w *= (c >> j) & 1u ? q[j] : 1.0 - q[j];
    sum += w * phi.at(c);
  }
  return sum;
}

double replacement_v(std::span<const std::uint8_t> eta, const CylinderFunction& phi, std::size_t l, long long i) {
  check_block(eta.size(), l);
  const long long ll = static_cast<long long>(l);
  double phis = 0.0;
  for (long long j = i - ll; j <= i + ll; ++j) phis += phi(eta, j);
  const double width = static_cast<double>(2 * l + 1);
  return std::abs(phis / width - phi_tilde(phi, block_average(eta, i, l)));
}

double replacement_average(std::span<const std::uint8_t> eta, const CylinderFunction& phi, std::size_t l) {
  const std::size_t n = eta.size();
  check_block(n, l);
  if (n % 2 != 0) throw BadParam("lattice length must be even");
  // Prefix sums over two periods so every window is a difference.
  std::vector<double> phi_prefix(2 * n + 1, 0.0);
  std::vector<long long> eta_prefix(2 * n + 1, 0);
  for (std::size_t j = 0; j < 2 * n; ++j) {
    // slot j holds shift/site j + 1
    phi_prefix[j + 1] = phi_prefix[j] + phi(eta, static_cast<long long>(j + 1));
    eta_prefix[j + 1] = eta_prefix[j] + eta[j % n];
  }
  const std::size_t width = 2 * l + 1;
  std::vector<double> tilde(width + 1);
  for (std::size_t m = 0; m <= width; ++m) tilde[m] = phi_tilde(phi, static_cast<double>(m) / static_cast<double>(width));
  double sum = 0.0;
  for (std::size_t k = 1; k <= n; ++k) {
    // window {k−ℓ..k+ℓ} starts at slot (k − ℓ − 1) mod n
    const std::size_t start = wrap(static_cast<long long>(k) - static_cast<long long>(l), n);
    const double phis = phi_prefix[start + width] - phi_prefix[start];
    const long long count = eta_prefix[start + width] - eta_prefix[start];
    sum += std::abs(phis / static_cast<double>(width) - tilde[static_cast<std::size_t>(count)]);
  }
  return sum / static_cast<double>(n / 2);
}

double bg_fluctuation(std::span<const std::uint8_t> eta, const CylinderFunction& psi,
                      const gibbs::ModelParams& params, long long k) {
  const std::size_t n = eta.size();
  if (n != params.length()) throw BadParam("configuration and parameters disagree on N");
  const std::size_t r = psi.sites();
  std::vector<double> q(r);
  for (std::size_t j = 0; j < r; ++j) q[j] = params.weights[wrap(k + 1 + static_cast<long long>(j), n) + 1];
  const double mean = product_expectation(psi, q);
  if (r == 0) return psi(eta, k) - mean;
  const double deriv = product_expectation_derivative(psi, q);
  const double first = eta[wrap(k + 1, n)];
  return psi(eta, k) - mean - static_cast<double>(r) * deriv * (first - q[0]);
}

namespace {

void check_site(const dynamics::EventLog& log, std::size_t site) {
  if (site == 0 || site >= log.initial.length()) throw DomainError("site must lie in 1..2N-1");
  if (log.events.empty() && log.event_count > 0) throw MissingData("event log was not recorded");
}

}  // namespace

double realized_qv(const dynamics::EventLog& log, std::size_t site,
                   const std::function<double(int, double)>& transform, double t) {
  check_site(log, site);
  int h = log.initial.height(site);
  double qv = 0.0;
  for (const auto& ev : log.events) {
    if (ev.time > t) break;
    if (ev.index != site) continue;
    const int after = h + 2 * ev.direction;
    const double jump = transform(after, ev.time) - transform(h, ev.time);
    qv += jump * jump;
    h = after;
  }
  return qv;
}

double integrated_bracket_path(const dynamics::EventLog& log, std::size_t site, const gibbs::ModelParams& params,
                               double t) {
  check_site(log, site);
  lattice::BridgeConfig cfg = log.initial;
  double now = 0.0;
  double total = 0.0;
  for (const auto& ev : log.events) {
    if (ev.time > t) break;
    total += scaling::integrated_bracket(cfg, site, params, now, ev.time);
    cfg.flip(ev.index);
    now = ev.time;
  }
  total += scaling::integrated_bracket(cfg, site, params, now, t);
  return total;
}

QvTracker::QvTracker(const gibbs::ModelParams& params, const lattice::BridgeConfig& init, std::size_t site)
    : params_(&params), site_(site) {
  if (site == 0 || site >= init.length()) throw DomainError("site must lie in 1..2N-1");
  hm_ = init.height(site - 1);
  h_ = init.height(site);
  hp_ = init.height(site + 1);
}

void QvTracker::integrate_to(double t) {
  if (t <= last_) return;
  const double f = scaling::bracket_factor(hm_, h_, hp_, *params_);
  const double two_lambda = 2.0 * params_->lambda;
  bracket_ += two_lambda == 0.0 ? f * (t - last_)
                                : f * std::exp(two_lambda * last_) * std::expm1(two_lambda * (t - last_)) / two_lambda;
  last_ = t;
}

void QvTracker::on_event(const dynamics::FlipEvent& ev, const lattice::BridgeConfig& after) {
  if (ev.index + 1 < site_ || ev.index > site_ + 1) return;
  integrate_to(ev.time);
  if (ev.index == site_) {
    const double g = params_->gamma;
    const double jump = std::exp(params_->lambda * ev.time - g * after.height(site_)) -
                        std::exp(params_->lambda * ev.time - g * h_);
    qv_ += jump * jump;
  }
  hm_ = after.height(site_ - 1);
  h_ = after.height(site_);
  hp_ = after.height(site_ + 1);
}

void QvTracker::finish(double t) { integrate_to(t); }

nlohmann::json TestReport::to_json() const {
  return {{"test", test}, {"statistic", statistic}, {"p_value", p_value},
          {"n", n},       {"params", params},       {"pass", pass}};
}

double kolmogorov_sf(double lambda) {
  if (!(lambda > 0.0)) return 1.0;
  constexpr double pi = std::numbers::pi;
  if (lambda < 1.18) {
    // Theta-function form, fast for small λ.
    double s = 0.0;
    for (int j = 1; j <= 50; ++j) {
      const double odd = 2.0 * j - 1.0;
      const double term = std::exp(-odd * odd * pi * pi / (8.0 * lambda * lambda));
      s += term;
      if (term < 1e-18 * s) break;
    }
    return std::clamp(1.0 - std::sqrt(2.0 * pi) / lambda * s, 0.0, 1.0);
  }
  double s = 0.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = std::exp(-2.0 * j * j * lambda * lambda);
    s += j % 2 == 1 ? term : -term;
    if (term < 1e-18) break;
  }
  return std::clamp(2.0 * s, 0.0, 1.0);
}

namespace {

// Stephens' small-sample correction of the asymptotic law.
double ks_p_value(double d, double n_eff) {
  const double rn = std::sqrt(n_eff);
  return kolmogorov_sf((rn + 0.12 + 0.11 / rn) * d);
}

}  // namespace

TestReport ks_test(std::vector<double> samples, const std::function<double(double)>& cdf, double level) {
  if (samples.empty()) throw TooFewSamples("no samples");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  TestReport rep{"ks", d, ks_p_value(d, n), samples.size(), nlohmann::json::object(), false};
  rep.params["level"] = level;
  rep.pass = rep.p_value > level;
  return rep;
}

TestReport ks_two_sample(std::vector<double> a, std::vector<double> b, double level) {
  if (a.empty() || b.empty()) throw TooFewSamples("both samples must be nonempty");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  TestReport rep{"ks2", d, ks_p_value(d, na * nb / (na + nb)), a.size() + b.size(), nlohmann::json::object(),
                 false};
  rep.params["level"] = level;
  rep.params["n_a"] = a.size();
  rep.params["n_b"] = b.size();
  rep.pass = rep.p_value > level;
  return rep;
}

double chisq_sf(double x, double dof) {
  if (!(dof > 0.0)) throw DomainError("degrees of freedom must be positive");
  if (x <= 0.0) return 1.0;
  return boost::math::gamma_q(0.5 * dof, 0.5 * x);
}

TestReport chisq_test(const std::vector<double>& counts, const std::vector<double>& pmf, double level,
                      double min_expected) {
  if (counts.size() != pmf.size()) throw BadParam("counts and pmf differ in length");
  double n = 0.0;
  for (double c : counts) n += c;
  if (!(n > 0.0)) throw TooFewSamples("no counts");

  std::vector<double> obs, exp;
  double o = 0.0, e = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    o += counts[i];
    e += n * pmf[i];
    if (e >= min_expected) {
      obs.push_back(o);
      exp.push_back(e);
      o = e = 0.0;
    }
  }
  if (e > 0.0 || o > 0.0) {
    if (exp.empty()) {
      obs.push_back(o);
      exp.push_back(e);
    } else {
      obs.back() += o;
      exp.back() += e;
    }
  }

  double stat = 0.0;
  for (std::size_t i = 0; i < obs.size(); ++i) {
    if (exp[i] > 0.0) {
      stat += (obs[i] - exp[i]) * (obs[i] - exp[i]) / exp[i];
    } else if (obs[i] > 0.0) {
      stat = std::numeric_limits<double>::infinity();
    }
  }
  const double dof = static_cast<double>(obs.size()) - 1.0;
  TestReport rep{"chisq", stat, dof > 0.0 ? chisq_sf(stat, dof) : 1.0, static_cast<std::size_t>(n),
                 nlohmann::json::object(), false};
  rep.params["level"] = level;
  rep.params["cells"] = obs.size();
  rep.params["dof"] = dof;
  rep.pass = rep.p_value > level;
  return rep;
}

}  // namespace cornerlab::stats
