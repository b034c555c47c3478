#include "cornerlab/kernel.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>

#include "cornerlab/error.hpp"
#include "cornerlab/numerics.hpp"

namespace cornerlab::kernel {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kPoissonTail = 1e-16;

void check_time(double c, double t) {
  if (!(t >= 0.0)) throw DomainError("time must be nonnegative");
  if (!(c >= 0.0)) throw DomainError("speed must be nonnegative");
}

}  // namespace

const char* representation_name(Representation r) {
  switch (r) {
    case Representation::spectral: return "spectral";
    case Representation::uniformization: return "uniformization";
    case Representation::image_sum: return "image-sum";
  }
  return "?";
}

double dirichlet_entry_spectral(std::size_t n_half, double c, double t, std::size_t k, std::size_t l) {
  const std::size_t len = 2 * n_half;
  if (k == 0 || l == 0 || k >= len || l >= len) return 0.0;
  const double theta = std::numbers::pi / static_cast<double>(len);
  double acc = 0.0;
  for (std::size_t j = 1; j < len; ++j) {
    const double mu = 2.0 * c * (1.0 - std::cos(theta * static_cast<double>(j)));
    acc += std::sin(theta * static_cast<double>(j * k)) * std::sin(theta * static_cast<double>(j * l)) *
           std::exp(-mu * t);
  }
  return acc / static_cast<double>(n_half);
}

std::vector<double> dirichlet_row_uniformization(std::size_t n_half, double c, double t, std::size_t k) {
  check_time(c, t);
  const std::size_t len = 2 * n_half;
  std::vector<double> out(len + 1, 0.0);
  if (k == 0 || k >= len) return out;
  const std::vector<double> w = numerics::poisson_weights(2.0 * c * t, kPoissonTail);
  std::vector<double> v(len + 1, 0.0), next(len + 1, 0.0);
  v[k] = 1.0;
  // After n steps only sites within n of k carry mass.
  for (std::size_t n = 0; n < w.size(); ++n) {
    const std::size_t lo = k > n ? k - n : 1, hi = std::min(len - 1, k + n);
    for (std::size_t i = lo; i <= hi; ++i) out[i] += w[n] * v[i];
    if (n + 1 == w.size()) break;
    const std::size_t nlo = lo > 1 ? lo - 1 : 1, nhi = std::min(len - 1, hi + 1);
    for (std::size_t i = nlo; i <= nhi; ++i) next[i] = 0.5 * (v[i - 1] + v[i + 1]);
    std::swap(v, next);
  }
  return out;
}

std::vector<double> line_kernel_table(double c, double t) {
  check_time(c, t);
  const double mean = 2.0 * c * t;
  if (mean == 0.0) return {1.0};
  // Width: first a with the tail bound below 1e-18; mass beyond is dropped.
  std::size_t width = 1;
  while (log_tail_bound(static_cast<double>(width), t, c) > std::log(1e-18)) width *= 2;
  const std::vector<double> w = numerics::poisson_weights(mean, kPoissonTail);
  std::vector<double> v(width + 2, 0.0), next(width + 2, 0.0), out(width + 1, 0.0);
  v[0] = 1.0;
  for (std::size_t n = 0; n < w.size(); ++n) {
    const std::size_t reach = std::min(n, width);
    for (std::size_t j = 0; j <= reach; ++j) out[j] += w[n] * v[j];
    if (n + 1 == w.size()) break;
    next[0] = v[1];
    for (std::size_t j = 1; j <= std::min(n + 1, width); ++j) next[j] = 0.5 * (v[j - 1] + v[j + 1]);
    std::swap(v, next);
  }
  return out;
}

double log_line_kernel(double c, double t, long long j) {
  check_time(c, t);
  const long long a = j < 0 ? -j : j;
  const double x = c * t;
  if (x == 0.0) return a == 0 ? 0.0 : kNegInf;
  const double lx = std::log(x);
  const double ad = static_cast<double>(a);
  const double peak = 0.5 * (-ad + std::sqrt(ad * ad + 4.0 * x * x));
  double acc = kNegInf;
  for (long long m = 0;; ++m) {
    const double md = static_cast<double>(m);
    const double term = (2.0 * md + ad) * lx - std::lgamma(md + 1.0) - std::lgamma(md + ad + 1.0);
    acc = numerics::log_add(acc, term);
    if (md > peak && term < acc - 40.0) break;
  }
  return acc - 2.0 * x;
}

double line_kernel(double c, double t, long long j) { return std::exp(log_line_kernel(c, t, j)); }

double log_line_tail(double c, double t, long long a) {
  // By symmetry Σ_{k<a} = Σ_{k≥1−a}, which is a positive-index tail.
  if (a <= 0) return std::log1p(-std::exp(log_line_tail(c, t, 1 - a)));
  double acc = kNegInf;
  for (long long k = a;; ++k) {
    const double term = log_line_kernel(c, t, k);
    acc = numerics::log_add(acc, term);
    if (term == kNegInf || term < acc - 40.0) break;
  }
  return acc;
}

double g_rate(double x) {
  const double r = std::sqrt(1.0 + x * x);
  return x * x / (r + 1.0) - x * std::asinh(x);
}

double log_tail_bound(double a, double t, double c) {
  const double s = 2.0 * c * t;
  if (s == 0.0) return a > 0.0 ? kNegInf : 0.0;
  return s * g_rate(a / s);
}

double tail_bound(double a, double t, double c) {
  if (!(a > 0.0)) throw DomainError("tail bound needs a > 0");
  return std::exp(log_tail_bound(a, t, c));
}

ImageSum image_sum(std::size_t n_half, double c, double t, long long k, long long l,
                   const std::vector<double>& line_table) {
  const long long four_n = 4 * static_cast<long long>(n_half);
  ImageSum out;
  long long J = 1;
  while (std::log(4.0) + log_tail_bound(static_cast<double>(four_n * J), t, c) > std::log(1e-13)) ++J;
  out.images = J;
  auto pbar = [&](long long m) {
    const auto a = static_cast<std::size_t>(m < 0 ? -m : m);
    return a < line_table.size() ? line_table[a] : 0.0;
  };
  double acc = 0.0;
  for (long long j = -J; j <= J; ++j) acc += pbar(k + four_n * j - l) - pbar(-k + four_n * j - l);
  out.value = acc;
  return out;
}

ImageSum image_sum(std::size_t n_half, double c, double t, long long k, long long l) {
  return image_sum(n_half, c, t, k, l, line_kernel_table(c, t));
}

double image_sum_residual(const gibbs::ModelParams& params, double t, std::size_t k, std::size_t l) {
  const double direct = dirichlet_entry_spectral(params.n_half, params.c, t, k, l);
  const ImageSum s = image_sum(params.n_half, params.c, t, static_cast<long long>(k), static_cast<long long>(l));
  return std::abs(direct - s.value);
}

KernelEval kernel_dirichlet(std::size_t n_half, double c, double t, Representation rep) {
  check_time(c, t);
  if (n_half == 0) throw BadParam("N must be positive");
  KernelEval out{n_half, c, t, rep, {}};
  const std::size_t d = out.dim(), len = 2 * n_half;
  out.p.assign(d * d, 0.0);
  switch (rep) {
    case Representation::spectral: {
      const double theta = std::numbers::pi / static_cast<double>(len);
      std::vector<double> decay(len), sines(len * d);
      for (std::size_t j = 1; j < len; ++j) {
        decay[j] = std::exp(-2.0 * c * t * (1.0 - std::cos(theta * static_cast<double>(j))));
        for (std::size_t k = 0; k < d; ++k)
          sines[j * d + k] = std::sin(theta * static_cast<double>((j * k) % (2 * len)));
      }
      for (std::size_t k = 1; k < len; ++k)
        for (std::size_t l = k; l < len; ++l) {
          double acc = 0.0;
          for (std::size_t j = 1; j < len; ++j) acc += sines[j * d + k] * sines[j * d + l] * decay[j];
          acc /= static_cast<double>(n_half);
          out.p[k * d + l] = acc;
          out.p[l * d + k] = acc;
        }
      break;
    }
    case Representation::uniformization:
      for (std::size_t k = 1; k < len; ++k) {
        const std::vector<double> row = dirichlet_row_uniformization(n_half, c, t, k);
        std::copy(row.begin(), row.end(), out.p.begin() + static_cast<std::ptrdiff_t>(k * d));
      }
      break;
    case Representation::image_sum: {
      const std::vector<double> table = line_kernel_table(c, t);
      for (std::size_t k = 1; k < len; ++k)
        for (std::size_t l = 1; l < len; ++l)
          out.p[k * d + l] =
              image_sum(n_half, c, t, static_cast<long long>(k), static_cast<long long>(l), table).value;
      break;
    }
  }
  return out;
}

KernelEval kernel_dirichlet(const gibbs::ModelParams& params, double t, Representation rep) {
  return kernel_dirichlet(params.n_half, params.c, t, rep);
}

double gradient_product(const KernelEval& p, std::size_t k, std::size_t l) {
  const std::size_t len = 2 * p.n_half;
  if (l == 0 || l >= len) throw DomainError("gradient product needs 1 <= l <= 2N-1");
  const double here = p(k, l);
  return (p(k, l + 1) - here) * (here - p(k, l - 1));
}

double line_gradient_product(const std::vector<double>& table, long long j) {
  auto pbar = [&](long long m) {
    const auto a = static_cast<std::size_t>(m < 0 ? -m : m);
    return a < table.size() ? table[a] : 0.0;
  };
  const double here = pbar(j);
  return (pbar(j + 1) - here) * (here - pbar(j - 1));
}

std::vector<double> mild_boundary_term(std::size_t n_half, double c, double lambda, double t) {
  const std::size_t len = 2 * n_half;
  const double theta = std::numbers::pi / static_cast<double>(len);
  const double e_lt = std::exp(lambda * t);
  std::vector<double> out(len + 1, e_lt);
  std::vector<double> coef(len, 0.0);
  for (std::size_t j = 1; j < len; ++j) {
    double s = 0.0;
    for (std::size_t k = 1; k < len; ++k) s += std::sin(theta * static_cast<double>((j * k) % (2 * len)));
    const double mu = 2.0 * c * (1.0 - std::cos(theta * static_cast<double>(j)));
    coef[j] = s / static_cast<double>(n_half) * lambda * (e_lt - std::exp(-mu * t)) / (lambda + mu);
  }
  for (std::size_t l = 1; l < len; ++l) {
    double acc = 0.0;
    for (std::size_t j = 1; j < len; ++j) acc += coef[j] * std::sin(theta * static_cast<double>((j * l) % (2 * len)));
    out[l] = e_lt - acc;
  }
  return out;
}

std::vector<double> mild_initial_term(std::size_t n_half, double c, double lambda, double t,
                                      const std::vector<double>& xi0) {
  const std::size_t len = 2 * n_half;
  if (xi0.size() != len + 1) throw BadParam("initial data must be indexed 0..2N");
  std::vector<double> out = mild_boundary_term(n_half, c, lambda, t);
  const KernelEval p = kernel_dirichlet(n_half, c, t, Representation::spectral);
  for (std::size_t l = 1; l < len; ++l) {
    double acc = 0.0;
    for (std::size_t k = 1; k < len; ++k) acc += p(k, l) * (xi0[k] - 1.0);
    out[l] += acc;
  }
  return out;
}

std::vector<double> mild_initial_term(const gibbs::ModelParams& params, double t, const std::vector<double>& xi0) {
  return mild_initial_term(params.n_half, params.c, params.lambda, t, xi0);
}

void write_kernel_binary(std::ostream& out, const KernelEval& k) {
  static_assert(std::endian::native == std::endian::little, "binary kernel format assumes a little-endian host");
  const std::uint64_t n = k.n_half;
  const std::uint32_t rep = static_cast<std::uint32_t>(k.rep);
  out.write(reinterpret_cast<const char*>(&n), 8);
  out.write(reinterpret_cast<const char*>(&k.t), 8);
  out.write(reinterpret_cast<const char*>(&k.c), 8);
  out.write(reinterpret_cast<const char*>(&rep), 4);
  out.write(reinterpret_cast<const char*>(k.p.data()), static_cast<std::streamsize>(k.p.size() * sizeof(double)));
}

KernelEval read_kernel_binary(std::istream& in) {
  KernelEval k;
  std::uint64_t n = 0;
  std::uint32_t rep = 0;
  in.read(reinterpret_cast<char*>(&n), 8);
  in.read(reinterpret_cast<char*>(&k.t), 8);
  in.read(reinterpret_cast<char*>(&k.c), 8);
  in.read(reinterpret_cast<char*>(&rep), 4);
  if (!in || rep > 2) throw MissingData("bad kernel header");
  k.n_half = n;
  k.rep = static_cast<Representation>(rep);
  k.p.resize(k.dim() * k.dim());
  in.read(reinterpret_cast<char*>(k.p.data()), static_cast<std::streamsize>(k.p.size() * sizeof(double)));
  if (!in) throw MissingData("truncated kernel matrix");
  return k;
}

}  // namespace cornerlab::kernel
