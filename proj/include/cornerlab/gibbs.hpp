#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "cornerlab/lattice.hpp"
#include "cornerlab/rng.hpp"

namespace cornerlab::gibbs {

struct LogLaplace {
  double value;   // log cosh h
  double first;   // tanh h
  double second;  // sech^2 h
};

LogLaplace log_laplace(double h);
double log_cosh(double h);

enum class Regime { super, critical, sub };  // α > 1, α = 1, α < 1

Regime regime_of(double alpha);
const char* regime_name(Regime r);

struct ModelParams {
  std::size_t n_half = 0;
  double alpha = 1.0;
  double sigma = 0.0;
  double p = 0.5;
  double one_minus_p = 0.5;  // computed on its own, not as 1 - p
  double gamma = 0.0;
  double c = 0.0;
  double lambda = 0.0;
  double rho = 0.0;
  std::vector<double> tilt;     // h_k at index k = 1..2N; index 0 unused
  std::vector<double> weights;  // P(X_k = +1) under ν, same indexing

  std::size_t length() const { return 2 * n_half; }
  Regime regime() const { return regime_of(alpha); }
  /// (2N)^α
  double window() const;
  /// Macroscopic abscissa of lattice point k: k/2N (α ≥ 1) or (k − N)/(2N)^α.
  double grid_point(std::size_t k) const;
  /// Inverse of grid_point, not rounded.
  double lattice_coordinate(double x) const;
};

/// Rejects N = 0, α ≤ 0, σ < 0 and non-finite input.  σ = 0 is the
/// symmetric walk.
ModelParams make_params(std::size_t n_half, double alpha, double sigma);

/// Independent steps, X_k = +1 with probability weights[k].
class NuSampler {
 public:
  explicit NuSampler(const ModelParams& params);
  void draw(CounterRng& rng, std::vector<std::int8_t>& steps) const;

 private:
  std::vector<std::uint64_t> thresholds_;
};

/// Exact μ_N draws: ν_N paths kept only if S(2N) = 0.  A partial path is
/// abandoned as soon as |S(k)| exceeds the 2N − k steps left, which cannot
/// change the accepted law.
class MuSampler {
 public:
  explicit MuSampler(const ModelParams& params);
  /// Fills steps with an accepted path, returns the number of attempts.
  std::size_t draw(CounterRng& rng, std::vector<std::int8_t>& steps) const;
  lattice::BridgeConfig sample(CounterRng& rng, std::size_t* attempts = nullptr) const;

 private:
  std::vector<std::uint64_t> thresholds_;
};

std::vector<std::int8_t> sample_nu(const ModelParams& params, CounterRng& rng);
lattice::BridgeConfig sample_mu(const ModelParams& params, CounterRng& rng, std::size_t* attempts = nullptr);

struct ExactMeasure {
  lattice::BridgeEnumeration bridges;
  std::vector<double> prob;
  double log_z = 0.0;
};

/// μ_N on every bridge (N ≤ 12), weights (p/(1−p))^{A/2} normalized in log space.
ExactMeasure mu_exact(const ModelParams& params);
/// ν_N restricted to bridges and renormalized, on the same enumeration order.
std::vector<double> nu_conditioned_exact(const ModelParams& params);

/// Log-domain transfer over (k, S(k)) with weight e^{γ S(k)} per step.
double log_partition_exact(const ModelParams& params);

struct PartitionViaNu {
  double log_nu_hat = 0.0;    // log ν_N(S(2N) = 0)
  double laplace_sum = 0.0;   // Σ_k L(h_k)
  double log_z = 0.0;         // 2N log 2 + log ν̂ + Σ L(h_k)
};
PartitionViaNu log_partition_via_nu(const ModelParams& params);

struct PartitionAsymptotic {
  double log_z_minus_entropy = 0.0;  // prediction for log Z_N − 2N log 2
  double log_z = 0.0;
};
PartitionAsymptotic log_partition_asymptotic(const ModelParams& params);
/// ∫₀¹ L(σ(1−2x)) dx by adaptive Simpson.
double critical_partition_coefficient(double sigma);

struct Profile {
  std::vector<double> x;
  std::vector<double> sigma;       // Σ_{i≤k} L′(h_i)
  std::vector<double> asymptotic;  // leading-order prediction at x
};

Profile sigma_profile(const ModelParams& params);
/// Piecewise-linear interpolation of the profile at macroscopic x.
double sigma_at(const ModelParams& params, const Profile& profile, double x);
/// Leading-order Σ^N_α(x) in lattice height units.
double sigma_asymptotic(const ModelParams& params, double x);
/// ∫_{−x}^∞ (L′(2σy) − 1) dy with the tail cut where the integrand drops below tolerance.
double sub_tail_integral(double sigma, double x, double tol = 1e-10);
void write_profile_csv(const ModelParams& params, std::ostream& out);

/// Covariance kernel of the limiting bridge B_α.
class BridgeCovariance {
 public:
  BridgeCovariance(double alpha, double sigma);

  Regime regime() const { return regime_; }
  double sigma() const { return sigma_; }
  /// q_α(x, y) = ∫_x^y L″ along the regime tilt; ±infinity allowed for α < 1.
  double q(double x, double y) const;
  double q_total() const { return total_; }
  double cov(double x, double y) const;
  bool in_domain(double x) const;

 private:
  double integrand(double u) const;
  Regime regime_;
  double sigma_;
  double cutoff_ = 0.0;  // tail truncation for α < 1
  double total_ = 1.0;
};

BridgeCovariance bridge_covariance(double alpha, double sigma);

/// Exact first and second moments of S(k1), S(k2) under μ_N, by forward and
/// backward transfer in log space.  O(N²).
struct HeightMoments {
  double mean1 = 0.0, mean2 = 0.0;
  double var1 = 0.0, var2 = 0.0;
  double cov = 0.0;
};
HeightMoments height_moments_exact(const ModelParams& params, std::size_t k1, std::size_t k2);

}  // namespace cornerlab::gibbs
