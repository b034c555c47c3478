#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "cornerlab/gibbs.hpp"

namespace cornerlab::kernel {

enum class Representation { spectral, uniformization, image_sum };

const char* representation_name(Representation r);

/// Heat kernel of c Δ on {0..2N}, absorbed at 0 and 2N.  Stored as a dense
/// (2N+1)² matrix whose boundary rows and columns are zero.
struct KernelEval {
  std::size_t n_half = 0;
  double c = 0.0;
  double t = 0.0;
  Representation rep = Representation::spectral;
  std::vector<double> p;

  std::size_t dim() const { return 2 * n_half + 1; }
  double operator()(std::size_t k, std::size_t l) const { return p[k * dim() + l]; }
};

KernelEval kernel_dirichlet(std::size_t n_half, double c, double t, Representation rep = Representation::spectral);
KernelEval kernel_dirichlet(const gibbs::ModelParams& params, double t,
                            Representation rep = Representation::spectral);

/// One row p_t(k, ·) by uniformization of the killed walk.
std::vector<double> dirichlet_row_uniformization(std::size_t n_half, double c, double t, std::size_t k);
/// One entry from the sine expansion.
double dirichlet_entry_spectral(std::size_t n_half, double c, double t, std::size_t k, std::size_t l);

/// p̄_t(j) for j = 0..size()-1, by uniformization of the walk on ℤ (even in j).
/// The table runs until the remaining mass is negligible.
std::vector<double> line_kernel_table(double c, double t);
double line_kernel(double c, double t, long long j);
/// log p̄_t(j) from the series e^{−2ct} Σ_m (ct)^{2m+|j|}/(m!(m+|j|)!), usable deep in the tail.
double log_line_kernel(double c, double t, long long j);
/// log Σ_{k ≥ a} p̄_t(k).
double log_line_tail(double c, double t, long long a);

/// g(x) = √(1+x²) − x asinh x − 1.
double g_rate(double x);
/// exp(2ct g(a/(2ct))), an upper bound for Σ_{k≥a} p̄_t(k).
double tail_bound(double a, double t, double c);
double log_tail_bound(double a, double t, double c);

struct ImageSum {
  double value = 0.0;
  long long images = 0;  // J: |j| ≤ J terms kept
};
/// Σ_{|j|≤J} p̄(k + 4Nj − ℓ) − p̄(−k + 4Nj − ℓ), J large enough that the
/// dropped images are below 1e-13 by the tail bound.
ImageSum image_sum(std::size_t n_half, double c, double t, long long k, long long l);
ImageSum image_sum(std::size_t n_half, double c, double t, long long k, long long l,
                   const std::vector<double>& line_table);
double image_sum_residual(const gibbs::ModelParams& params, double t, std::size_t k, std::size_t l);

/// K_t(k, ℓ) = ∇⁺p_t(k, ·)(ℓ) ∇⁻p_t(k, ·)(ℓ).
double gradient_product(const KernelEval& p, std::size_t k, std::size_t l);
/// K̄_t(j) = ∇⁺p̄_t(j) ∇⁻p̄_t(j) with j = ℓ − k.
double line_gradient_product(const std::vector<double>& line_table, long long j);

/// Solution at time t of ∂_t u = cΔu on {1..2N−1} with u(0) ≡ 1 and
/// boundary value e^{λs}, from the sine expansion; index ℓ = 0..2N.
std::vector<double> mild_boundary_term(std::size_t n_half, double c, double lambda, double t);
/// I(t, ℓ) = boundary term + Σ_k p_t(k, ℓ)(ξ0(k) − 1).  xi0 is indexed 0..2N.
std::vector<double> mild_initial_term(std::size_t n_half, double c, double lambda, double t,
                                      const std::vector<double>& xi0);
std::vector<double> mild_initial_term(const gibbs::ModelParams& params, double t, const std::vector<double>& xi0);

/// Header (u64 N, f64 t, f64 c, u32 representation) then the matrix as f64, little-endian.
void write_kernel_binary(std::ostream& out, const KernelEval& k);
KernelEval read_kernel_binary(std::istream& in);

}  // namespace cornerlab::kernel
