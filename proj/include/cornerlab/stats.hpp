#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "cornerlab/dynamics.hpp"
#include "cornerlab/gibbs.hpp"
#include "cornerlab/scaling.hpp"

namespace cornerlab::stats {

struct MeanEstimate {
  double mean = 0.0;
  double se = 0.0;
  std::size_t n = 0;
};
MeanEstimate mean_se(std::span<const double> xs);

struct CovEstimate {
  std::vector<double> points;
  std::vector<double> cov;  // row-major, points × points
  std::vector<double> se;   // jackknife
  std::size_t n_samples = 0;

  std::size_t dim() const { return points.size(); }
  double operator()(std::size_t i, std::size_t j) const { return cov[i * dim() + j]; }
  double se_at(std::size_t i, std::size_t j) const { return se[i * dim() + j]; }
};

/// Rows are samples, columns the observables at `points`.  The SE of each
/// entry is the delete-one jackknife, computed in O(n) per entry.
CovEstimate empirical_cov(const std::vector<std::vector<double>>& samples, const std::vector<double>& points);
/// Fields are evaluated at the points by linear interpolation on their grid.
CovEstimate empirical_cov(const std::vector<scaling::RescaledField>& fields, const std::vector<double>& points);
double field_value(const scaling::RescaledField& field, double x);

/// Mean of η over sites {i−ℓ..i+ℓ}, wrapped onto 1..2N.  η(site) is stored
/// at index site − 1.
double block_average(std::span<const std::uint8_t> eta, long long i, std::size_t l);

/// A function of η(k+1..k+r) stored as a table over the 2^r patterns; bit j
/// of the pattern is η(k+1+j).
class CylinderFunction {
 public:
  static constexpr std::size_t kMaxSites = 20;

  CylinderFunction(std::size_t r, std::vector<double> table);
  static CylinderFunction from(std::size_t r, const std::function<double(std::uint32_t pattern)>& f);
  static CylinderFunction constant(double value);
  /// η(1)(1 − η(2)) + (1 − η(1))η(2)
  static CylinderFunction disagreement();

  std::size_t sites() const { return r_; }
  double at(std::uint32_t pattern) const { return table_[pattern]; }
  /// Φ(τ_k η), indices wrapped.
  double operator()(std::span<const std::uint8_t> eta, long long k) const;

 private:
  std::size_t r_;
  std::vector<double> table_;
};

/// Expectation under the product Bernoulli(a) measure.
double phi_tilde(const CylinderFunction& phi, double a);
/// Expectation under ∏ Bernoulli(q_j), q_j for site j = 1..r.
double product_expectation(const CylinderFunction& phi, std::span<const double> q);
/// ∂/∂q_1 of product_expectation.  The expectation is affine in each q_j,
/// so this is the exact difference of the two conditional expectations.
double product_expectation_derivative(const CylinderFunction& phi, std::span<const double> q);

/// |M_{T_ℓ(i)} Φ(τ·η) − Φ̃(M_{T_ℓ(i)} η)|; i = 0 gives V_ℓ(η).
double replacement_v(std::span<const std::uint8_t> eta, const CylinderFunction& phi, std::size_t l,
                     long long i = 0);
/// (1/N) Σ_{k=1}^{2N} V_ℓ(τ_k η), O(N r) by prefix sums.
double replacement_average(std::span<const std::uint8_t> eta, const CylinderFunction& phi, std::size_t l);

/// Ψ(τ_kη) − ν[Ψ∘τ_k] − r ∂_{q_{k+1}}ν[Ψ∘τ_k] (η(k+1) − q_{k+1}), with ν the
/// inhomogeneous product measure of the parameters.  Exploratory.
double bg_fluctuation(std::span<const std::uint8_t> eta, const CylinderFunction& psi,
                      const gibbs::ModelParams& params, long long k);

/// Σ over flips at `site` up to t of (f(S after, τ) − f(S before, τ))².
double realized_qv(const dynamics::EventLog& log, std::size_t site,
                   const std::function<double(int height, double t)>& transform, double t);
/// ∫_0^t of the bracket rate of ξ at `site` along the recorded path.
double integrated_bracket_path(const dynamics::EventLog& log, std::size_t site, const gibbs::ModelParams& params,
                               double t);

/// Streaming version of the two quantities above for ξ at one site, fed
/// from a Simulator callback so that no event log is kept.
class QvTracker {
 public:
  QvTracker(const gibbs::ModelParams& params, const lattice::BridgeConfig& init, std::size_t site);

  void on_event(const dynamics::FlipEvent& ev, const lattice::BridgeConfig& after);
  /// Closes the bracket integral at t.
  void finish(double t);

  double qv() const { return qv_; }
  double bracket() const { return bracket_; }

 private:
  const gibbs::ModelParams* params_;
  std::size_t site_;
  int hm_, h_, hp_;
  double last_ = 0.0;
  double qv_ = 0.0;
  double bracket_ = 0.0;

  void integrate_to(double t);
};

struct TestReport {
  std::string test;
  double statistic = 0.0;
  double p_value = 0.0;
  std::size_t n = 0;
  nlohmann::json params = nlohmann::json::object();
  bool pass = false;

  nlohmann::json to_json() const;
};

/// Survival function of the Kolmogorov distribution.
double kolmogorov_sf(double lambda);

TestReport ks_test(std::vector<double> samples, const std::function<double(double)>& cdf,
                   double level = 1e-3);
TestReport ks_two_sample(std::vector<double> a, std::vector<double> b, double level = 1e-3);
/// Pearson test of counts against a pmf.  Cells with expected count below
/// min_expected are pooled, in order, into their neighbours.
TestReport chisq_test(const std::vector<double>& counts, const std::vector<double>& pmf, double level = 1e-3,
                      double min_expected = 5.0);
/// Chi-square upper tail with the given degrees of freedom.
double chisq_sf(double x, double dof);

}  // namespace cornerlab::stats
