#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "cornerlab/gibbs.hpp"
#include "cornerlab/lattice.hpp"

namespace cornerlab::scaling {

enum class FieldRegime { super, critical, sub, kpz };

const char* field_regime_name(FieldRegime r);
FieldRegime field_regime(const gibbs::ModelParams& params);

struct RescaledField {
  std::string name;
  FieldRegime regime = FieldRegime::critical;
  double t = 0.0;
  std::vector<double> grid;
  std::vector<double> values;
};

/// Piecewise-linear S at a real lattice position in [0, 2N].
double height_at(const lattice::BridgeConfig& cfg, double pos);
/// Same interpolation for any array indexed by lattice site.
double interpolate(const std::vector<double>& values, double pos);

/// Fluctuation field on the lattice points of the regime grid.
RescaledField u_field(const lattice::BridgeConfig& cfg, const gibbs::ModelParams& params,
                      const gibbs::Profile& profile, double t);
RescaledField u_field(const lattice::BridgeConfig& cfg, const gibbs::ModelParams& params, double t);
/// u^N at a macroscopic abscissa, interpolating both S and Σ.
double u_at(const lattice::BridgeConfig& cfg, const gibbs::ModelParams& params, const gibbs::Profile& profile,
            double x);
/// Divisor of the fluctuation field: √(2N) for α ≥ 1, (2N)^{α/2} otherwise.
double u_normalization(const gibbs::ModelParams& params);

/// m^N(x) = S(2N x)/2N on x = k/2N.
RescaledField m_field(const lattice::BridgeConfig& cfg, double t);
/// v^N(x) = S(2N x)/(2N)^{2−α}.
RescaledField v_field(const lattice::BridgeConfig& cfg, const gibbs::ModelParams& params, double t);

/// Empirical particle density: an atom of mass 1/2N at k/2N for each occupied k.
struct DensityMeasure {
  std::vector<double> atoms;
  double atom_mass = 0.0;

  double total_mass() const { return atom_mass * static_cast<double>(atoms.size()); }
  /// ⟨ρ, 1_{[0, x]}⟩
  double mass_below(double x) const;
};
DensityMeasure rho_measure(const lattice::BridgeConfig& cfg);

/// h^N = γ S − λ t and ξ^N = e^{−h^N} on x = (k − N)/(2N)^{2α}, k = 0..2N.
struct KpzFields {
  RescaledField h;
  RescaledField xi;
};
KpzFields kpz_fields(const lattice::BridgeConfig& cfg, const gibbs::ModelParams& params, double t);
double xi_at(const lattice::BridgeConfig& cfg, const gibbs::ModelParams& params, double t, std::size_t k);

/// λ(ξΔξ + 2ξ²) − (2N)^{4α} ∇⁺ξ ∇⁻ξ at site k (1 ≤ k ≤ 2N−1).  Computed from
/// neighbour ratios so the bracket stays accurate when ξ is large.
double bracket_rate(const lattice::BridgeConfig& cfg, std::size_t k, const gibbs::ModelParams& params, double t);
/// e^{−2λt} × bracket rate, from the heights S(k−1), S(k), S(k+1).
double bracket_factor(int s_minus, int s, int s_plus, const gibbs::ModelParams& params);
/// Σ over possible flips at k of rate × (jump of ξ)², the direct form of the same quantity.
double jump_variance_rate(const lattice::BridgeConfig& cfg, std::size_t k, const gibbs::ModelParams& params,
                          double t);
/// ∫_{t0}^{t1} bracket_rate ds for a configuration held fixed on [t0, t1].
double integrated_bracket(const lattice::BridgeConfig& cfg, std::size_t k, const gibbs::ModelParams& params,
                          double t0, double t1);

struct BarrierWindow {
  std::vector<double> barrier;  // b^N(t, ℓ), ℓ = 0..2N
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double ell) const { return ell >= lo && ell <= hi; }
};
/// Throws EmptyWindow once λt/γ + εN ≥ 2N − λt/γ − εN.
BarrierWindow barrier_and_window(const gibbs::ModelParams& params, double t, double eps);
/// Time at which the window closes: γ(1−ε)N/λ.
double window_merge_time(const gibbs::ModelParams& params, double eps);

/// CSV rows t,x,value,regime.
void write_field_csv(std::ostream& out, const RescaledField& field, bool header);

}  // namespace cornerlab::scaling
