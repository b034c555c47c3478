#include "cornerlab/scaling.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <fmt/format.h>

#include "cornerlab/error.hpp"

namespace cornerlab::scaling {

const char* field_regime_name(FieldRegime r) {
  switch (r) {
    case FieldRegime::super: return "alpha>1";
    case FieldRegime::critical: return "alpha=1";
    case FieldRegime::sub: return "alpha<1";
    case FieldRegime::kpz: return "kpz";
  }
  return "?";
}

FieldRegime field_regime(const gibbs::ModelParams& params) {
  switch (params.regime()) {
    case gibbs::Regime::super: return FieldRegime::super;
    case gibbs::Regime::critical: return FieldRegime::critical;
    case gibbs::Regime::sub: return FieldRegime::sub;
  }
  return FieldRegime::critical;
}

double interpolate(const std::vector<double>& values, double pos) {
  const double last = static_cast<double>(values.size() - 1);
  if (!(pos >= 0.0 && pos <= last)) throw DomainError("position outside the lattice");
  const auto k = static_cast<std::size_t>(std::floor(pos));
  if (k + 1 >= values.size()) return values.back();
  const double f = pos - static_cast<double>(k);
  return (1.0 - f) * values[k] + f * values[k + 1];
}

double height_at(const lattice::BridgeConfig& cfg, double pos) {
  const double len = static_cast<double>(cfg.length());
  if (!(pos >= 0.0 && pos <= len)) throw DomainError("position outside the lattice");
  const auto k = static_cast<std::size_t>(std::floor(pos));
  if (k >= cfg.length()) return cfg.height(cfg.length());
  const double f = pos - static_cast<double>(k);
  return (1.0 - f) * cfg.height(k) + f * cfg.height(k + 1);
}

double u_normalization(const gibbs::ModelParams& params) {
  const double n2 = static_cast<double>(params.length());
  return params.alpha >= 1.0 ? std::sqrt(n2) : std::pow(n2, 0.5 * params.alpha);
}

RescaledField u_field(const lattice::BridgeConfig& cfg, const gibbs::ModelParams& params,
                      const gibbs::Profile& profile, double t) {
  if (cfg.n_half() != params.n_half) throw BadParam("configuration and parameters disagree on N");
  RescaledField f{"u", field_regime(params), t, {}, {}};
  const double norm = u_normalization(params);
  f.grid.resize(cfg.length() + 1);
  f.values.resize(cfg.length() + 1);
  for (std::size_t k = 0; k <= cfg.length(); ++k) {
    f.grid[k] = params.grid_point(k);
    f.values[k] = (cfg.height(k) - profile.sigma[k]) / norm;
  }
  return f;
}

RescaledField u_field(const lattice::BridgeConfig& cfg, const gibbs::ModelParams& params, double t) {
  return u_field(cfg, params, gibbs::sigma_profile(params), t);
}

double u_at(const lattice::BridgeConfig& cfg, const gibbs::ModelParams& params, const gibbs::Profile& profile,
            double x) {
  const double pos = params.lattice_coordinate(x);
  return (height_at(cfg, pos) - interpolate(profile.sigma, pos)) / u_normalization(params);
}

RescaledField m_field(const lattice::BridgeConfig& cfg, double t) {
  const double n2 = static_cast<double>(cfg.length());
  RescaledField f{"m", FieldRegime::critical, t, {}, {}};
  f.grid.resize(cfg.length() + 1);
  f.values.resize(cfg.length() + 1);
  for (std::size_t k = 0; k <= cfg.length(); ++k) {
    f.grid[k] = static_cast<double>(k) / n2;
    f.values[k] = cfg.height(k) / n2;
  }
  return f;
}

RescaledField v_field(const lattice::BridgeConfig& cfg, const gibbs::ModelParams& params, double t) {
  const double n2 = static_cast<double>(cfg.length());
  const double div = std::pow(n2, 2.0 - params.alpha);
  RescaledField f{"v", field_regime(params), t, {}, {}};
  f.grid.resize(cfg.length() + 1);
  f.values.resize(cfg.length() + 1);
  for (std::size_t k = 0; k <= cfg.length(); ++k) {
    f.grid[k] = static_cast<double>(k) / n2;
    f.values[k] = cfg.height(k) / div;
  }
  return f;
}

double DensityMeasure::mass_below(double x) const {
  const auto it = std::upper_bound(atoms.begin(), atoms.end(), x);
  return atom_mass * static_cast<double>(it - atoms.begin());
}

DensityMeasure rho_measure(const lattice::BridgeConfig& cfg) {
  DensityMeasure rho;
  const double n2 = static_cast<double>(cfg.length());
  rho.atom_mass = 1.0 / n2;
  for (std::size_t k = 1; k <= cfg.length(); ++k)
    if (cfg.step(k) > 0) rho.atoms.push_back(static_cast<double>(k) / n2);
  return rho;
}

double xi_at(const lattice::BridgeConfig& cfg, const gibbs::ModelParams& params, double t, std::size_t k) {
  return std::exp(-(params.gamma * cfg.height(k) - params.lambda * t));
}

KpzFields kpz_fields(const lattice::BridgeConfig& cfg, const gibbs::ModelParams& params, double t) {
  if (cfg.n_half() != params.n_half) throw BadParam("configuration and parameters disagree on N");
  const double n2 = static_cast<double>(cfg.length());
  const double width = std::pow(n2, 2.0 * params.alpha);
  KpzFields out{{"h", FieldRegime::kpz, t, {}, {}}, {"xi", FieldRegime::kpz, t, {}, {}}};
  out.h.grid.resize(cfg.length() + 1);
  out.h.values.resize(cfg.length() + 1);
  for (std::size_t k = 0; k <= cfg.length(); ++k) {
    out.h.grid[k] = (static_cast<double>(k) - static_cast<double>(cfg.n_half())) / width;
    out.h.values[k] = params.gamma * cfg.height(k) - params.lambda * t;
  }
  out.xi.grid = out.h.grid;
  out.xi.values.resize(out.h.values.size());
  for (std::size_t k = 0; k < out.h.values.size(); ++k) out.xi.values[k] = std::exp(-out.h.values[k]);
  return out;
}

namespace {

void check_interior(const lattice::BridgeConfig& cfg, std::size_t k) {
  if (k == 0 || k >= cfg.length()) throw DomainError("bracket needs 1 <= k <= 2N-1");
}

double factor_at(const lattice::BridgeConfig& cfg, std::size_t k, const gibbs::ModelParams& params) {
  return bracket_factor(cfg.height(k - 1), cfg.height(k), cfg.height(k + 1), params);
}

}  // namespace

double bracket_factor(int s_minus, int s, int s_plus, const gibbs::ModelParams& params) {
  const double g = params.gamma;
  const double rp = std::exp(-g * (s_plus - s));
  const double rm = std::exp(-g * (s_minus - s));
  const double speed = std::pow(static_cast<double>(params.length()), 4.0 * params.alpha);
  const double xi2 = std::exp(-2.0 * g * s);
  return xi2 * (params.lambda * (rp + rm) - speed * (rp - 1.0) * (1.0 - rm));
}

double bracket_rate(const lattice::BridgeConfig& cfg, std::size_t k, const gibbs::ModelParams& params, double t) {
  check_interior(cfg, k);
  return factor_at(cfg, k, params) * std::exp(2.0 * params.lambda * t);
}

double jump_variance_rate(const lattice::BridgeConfig& cfg, std::size_t k, const gibbs::ModelParams& params,
                          double t) {
  check_interior(cfg, k);
  const double speed = std::pow(static_cast<double>(cfg.length()), 4.0 * params.alpha);
  const double xi = xi_at(cfg, params, t, k);
  switch (cfg.corner_at(k)) {
    case lattice::Corner::down: {
      const double jump = xi * std::expm1(-2.0 * params.gamma);
      return speed * params.p * jump * jump;
    }
    case lattice::Corner::up: {
      const double jump = xi * std::expm1(2.0 * params.gamma);
      return speed * params.one_minus_p * jump * jump;
    }
    case lattice::Corner::none: return 0.0;
  }
  return 0.0;
}

double integrated_bracket(const lattice::BridgeConfig& cfg, std::size_t k, const gibbs::ModelParams& params,
                          double t0, double t1) {
  check_interior(cfg, k);
  if (t1 <= t0) return 0.0;
  const double f = factor_at(cfg, k, params);
  const double two_lambda = 2.0 * params.lambda;
  if (two_lambda == 0.0) return f * (t1 - t0);
  // e^{2λ t0} (e^{2λ(t1−t0)} − 1)/(2λ)
  return f * std::exp(two_lambda * t0) * std::expm1(two_lambda * (t1 - t0)) / two_lambda;
}

BarrierWindow barrier_and_window(const gibbs::ModelParams& params, double t, double eps) {
  if (!(t >= 0.0)) throw DomainError("time must be nonnegative");
  if (!(eps > 0.0)) throw DomainError("epsilon must be positive");
  const double n = static_cast<double>(params.n_half);
  const double front = params.gamma > 0.0 ? params.lambda * t / params.gamma : 0.0;
  BarrierWindow w;
  w.lo = front + eps * n;
  w.hi = 2.0 * n - front - eps * n;
  if (w.lo >= w.hi) throw EmptyWindow(fmt::format("window closed at t = {} (lo {} >= hi {})", t, w.lo, w.hi));
  w.barrier.resize(params.length() + 1);
  for (std::size_t l = 0; l <= params.length(); ++l) {
    const double d = static_cast<double>(std::min(l, params.length() - l));
    w.barrier[l] = 2.0 + std::exp(params.lambda * t - params.gamma * d);
  }
  return w;
}

double window_merge_time(const gibbs::ModelParams& params, double eps) {
  return params.gamma * (1.0 - eps) * static_cast<double>(params.n_half) / params.lambda;
}

void write_field_csv(std::ostream& out, const RescaledField& field, bool header) {
  if (header) out << "t,x,value,regime\n";
  const char* regime = field_regime_name(field.regime);
  for (std::size_t i = 0; i < field.grid.size(); ++i)
    out << fmt::format("{},{},{},{}\n", field.t, field.grid[i], field.values[i], regime);
}

}  // namespace cornerlab::scaling
