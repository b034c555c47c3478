#include <gtest/gtest.h>

#include <boost/math/special_functions/bessel.hpp>
#include <cmath>
#include <numbers>
#include <sstream>

#include "cornerlab/gibbs.hpp"
#include "cornerlab/kernel.hpp"
#include "cornerlab/scaling.hpp"

using namespace cornerlab;
using namespace cornerlab::kernel;

namespace {

double line_at(const std::vector<double>& table, long long j) {
  const auto a = static_cast<std::size_t>(std::llabs(j));
  return a < table.size() ? table[a] : 0.0;
}

}  // namespace

TEST(Dirichlet, IdentityAtZero) {
  const auto k = kernel_dirichlet(8, 3.0, 0.0);
  for (std::size_t i = 1; i < 16; ++i)
    for (std::size_t j = 1; j < 16; ++j) EXPECT_NEAR(k(i, j), i == j ? 1.0 : 0.0, 1e-12);
}

TEST(Dirichlet, SymmetricAndSubstochastic) {
  const auto k = kernel_dirichlet(16, 1.0, 7.0);
  for (std::size_t i = 0; i <= 32; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j <= 32; ++j) {
      EXPECT_NEAR(k(i, j), k(j, i), 1e-15);
      EXPECT_GE(k(i, j), -1e-15);
      row += k(i, j);
    }
    EXPECT_LE(row, 1.0 + 1e-12);
  }
  EXPECT_EQ(k(0, 5), 0.0);
  EXPECT_EQ(k(32, 5), 0.0);
}

TEST(Dirichlet, AbsorptionGrows) {
  double prev = 0.0;
  for (double t : {0.5, 2.0, 10.0, 50.0, 200.0}) {
    const auto row = dirichlet_row_uniformization(10, 1.0, t, 3);
    double mass = 0.0;
    for (double v : row) mass += v;
    const double deficit = 1.0 - mass;
    EXPECT_GE(deficit, prev);
    EXPECT_LE(deficit, 1.0);
    prev = deficit;
  }
  EXPECT_GT(prev, 0.9);
}

TEST(Dirichlet, RepresentationsAgree) {
  for (double t : {0.01, 1.0, 30.0}) {
    const auto s = kernel_dirichlet(12, 2.0, t, Representation::spectral);
    const auto u = kernel_dirichlet(12, 2.0, t, Representation::uniformization);
    const auto m = kernel_dirichlet(12, 2.0, t, Representation::image_sum);
    for (std::size_t i = 0; i < s.p.size(); ++i) {
      EXPECT_NEAR(s.p[i], u.p[i], 1e-10);
      EXPECT_NEAR(s.p[i], m.p[i], 1e-10);
    }
    EXPECT_NEAR(dirichlet_entry_spectral(12, 2.0, t, 4, 9), u(4, 9), 1e-10);
  }
}

TEST(Dirichlet, ChapmanKolmogorov) {
  const auto a = kernel_dirichlet(10, 1.0, 0.7);
  const auto b = kernel_dirichlet(10, 1.0, 1.1);
  const auto ab = kernel_dirichlet(10, 1.0, 1.8);
  for (std::size_t i = 0; i <= 20; ++i)
    for (std::size_t j = 0; j <= 20; ++j) {
      double s = 0.0;
      for (std::size_t m = 0; m <= 20; ++m) s += a(i, m) * b(m, j);
      EXPECT_NEAR(s, ab(i, j), 1e-10);
    }
}

TEST(Line, MatchesBessel) {
  for (double ct : {0.3, 5.0, 40.0}) {
    const auto table = line_kernel_table(1.0, ct);
    double total = table[0];
    for (std::size_t j = 1; j < table.size(); ++j) total += 2 * table[j];
    EXPECT_NEAR(total, 1.0, 1e-12);
    for (long long j : {0, 1, 3, 10}) {
      const double bessel = std::exp(-2 * ct) * boost::math::cyl_bessel_i(static_cast<double>(j), 2 * ct);
      EXPECT_NEAR(line_kernel(1.0, ct, j), bessel, 1e-14);
      EXPECT_EQ(line_kernel(1.0, ct, j), line_kernel(1.0, ct, -j));
      if (bessel > 1e-300) EXPECT_NEAR(log_line_kernel(1.0, ct, j), std::log(bessel), 1e-10);
    }
  }
}

TEST(Line, GradientTelescopes) {
  for (double ct : {0.5, 3.0, 50.0}) {
    const auto table = line_kernel_table(1.0, ct);
    const long long n = static_cast<long long>(table.size());
    double s = 0.0;
    for (long long j = -n; j <= n; ++j) s += std::abs(line_at(table, j + 1) - line_at(table, j));
    EXPECT_NEAR(s, 2 * table[0], 1e-12);
  }
}

TEST(Line, GradientProductBelowKernel) {
  const auto table = line_kernel_table(1.0, 4.0);
  for (long long j = -40; j <= 40; ++j) EXPECT_LE(std::abs(line_gradient_product(table, j)), line_at(table, j));
}

TEST(Tail, RateFunction) {
  EXPECT_EQ(g_rate(0.0), 0.0);
  for (double x = 0.01; x < 1e4; x *= 1.7) EXPECT_LT(g_rate(x), 0.0);
  // large x keeps its leading behaviour −x log(2x) + x
  const double x = 1e8;
  EXPECT_NEAR(g_rate(x) / (-x * std::log(2 * x) + x), 1.0, 1e-6);
}

TEST(Tail, BoundDominates) {
  for (double ct : {1.0, 10.0, 100.0})
    for (long long a = 1; a <= 200; ++a) EXPECT_LE(log_line_tail(1.0, ct, a), log_tail_bound(a, ct, 1.0) + 1e-12);
}

TEST(ImageSum, MatchesDirichlet) {
  const auto p = gibbs::make_params(32, 1.0 / 3.0, 1.0);
  for (double ct : {0.5, 20.0, 600.0}) {
    const double t = ct / p.c;
    for (std::size_t k : {1u, 17u, 32u, 60u})
      for (std::size_t l : {0u, 2u, 31u, 45u, 64u}) EXPECT_LT(image_sum_residual(p, t, k, l), 1e-10);
  }
}

TEST(ImageSum, SingleImageAndEnds) {
  const auto k = kernel_dirichlet(32, 1.0, 3.0);
  const auto table = line_kernel_table(1.0, 3.0);
  for (long long l = 28; l <= 36; ++l) EXPECT_NEAR(k(32, l), line_at(table, 32 - l), 1e-10);
  for (long long l : {0LL, 64LL}) EXPECT_NEAR(image_sum(32, 1.0, 3.0, 20, l).value, 0.0, 1e-15);
}

TEST(GradientProduct, MirrorSymmetric) {
  const auto k = kernel_dirichlet(16, 1.0, 9.0);
  for (std::size_t l = 1; l < 32; ++l) EXPECT_NEAR(gradient_product(k, 16, l), gradient_product(k, 16, 32 - l), 1e-15);
}

TEST(GradientProduct, IntegratedWeightBelowOne) {
  // ∫₀^∞ (2N)^{4α} Σ_j |K̄_s(j)| ds = 2cosh(γ) ∫₀^∞ Σ_j |K̄(u, j)| du in units u = c s
  const auto p = gibbs::make_params(64, 1.0 / 3.0, 1.0);
  auto weight = [](double u) {
    const auto table = line_kernel_table(1.0, u);
    const long long n = static_cast<long long>(table.size());
    double s = 0.0;
    for (long long j = -n; j <= n; ++j) s += std::abs(line_gradient_product(table, j));
    return s;
  };
  // substitute u = e^v, rectangle rule in v; past U the integrand decays like u^{-3/2}, tail 2U w(U)
  double integral = 0.0;
  const double dv = 0.05, vmax = 7.0;
  for (double v = -14; v < vmax; v += dv) integral += weight(std::exp(v)) * std::exp(v) * dv;
  integral += 2 * std::exp(vmax) * weight(std::exp(vmax));
  const double total = 2 * std::cosh(p.gamma) * integral;
  EXPECT_LT(total, 1.0);
  EXPECT_GT(total, 0.0);
}

TEST(Mild, ConstantDataStaysOne) {
  const std::vector<double> ones(33, 1.0);
  for (double t : {0.0, 0.3, 5.0}) {
    const auto i = mild_initial_term(16, 2.0, 0.0, t, ones);
    for (double v : i) EXPECT_NEAR(v, 1.0, 1e-12);
  }
}

TEST(Mild, BoundaryAndBarrier) {
  const auto p = gibbs::make_params(64, 1.0 / 3.0, 1.0);
  const auto flat = lattice::BridgeConfig::flat(64);
  std::vector<double> xi0(129);
  for (std::size_t k = 0; k <= 128; ++k) xi0[k] = scaling::xi_at(flat, p, 0.0, k);
  for (double t : {0.05, 0.2, 0.4}) {
    const auto i = mild_initial_term(p, t, xi0);
    EXPECT_NEAR(i[0], std::exp(p.lambda * t), 1e-12 * i[0]);
    EXPECT_NEAR(i[128], std::exp(p.lambda * t), 1e-12 * i[128]);
    const auto w = scaling::barrier_and_window(p, t, 0.05);
    for (std::size_t l = 0; l <= 128; ++l) EXPECT_LE(i[l], 10 * w.barrier[l]);
  }
}

TEST(Mild, CentreIsFlat) {
  // oscillation of I over the window shrinks with N at least like N^{-α}
  const double alpha = 1.0 / 3.0, t = 0.1;
  std::vector<double> scaled;
  for (std::size_t n : {32u, 64u, 128u}) {
    const auto p = gibbs::make_params(n, alpha, 1.0);
    const auto flat = lattice::BridgeConfig::flat(n);
    std::vector<double> xi0(2 * n + 1);
    for (std::size_t k = 0; k <= 2 * n; ++k) xi0[k] = scaling::xi_at(flat, p, 0.0, k);
    const auto i = mild_initial_term(p, t, xi0);
    const auto w = scaling::barrier_and_window(p, t, 0.1);
    double lo = INFINITY, hi = -INFINITY;
    for (std::size_t l = 0; l <= 2 * n; ++l)
      if (w.contains(static_cast<double>(l))) {
        lo = std::min(lo, i[l]);
        hi = std::max(hi, i[l]);
      }
    scaled.push_back((hi - lo) * std::pow(static_cast<double>(n), alpha));
  }
  for (double s : scaled) EXPECT_LE(s, 10.0);
}

TEST(KernelIo, BinaryRoundTrip) {
  const auto k = kernel_dirichlet(6, 1.5, 0.4, Representation::uniformization);
  std::stringstream buf;
  write_kernel_binary(buf, k);
  EXPECT_EQ(buf.str().size(), 8 + 8 + 8 + 4 + 13 * 13 * 8u);
  const auto back = read_kernel_binary(buf);
  EXPECT_EQ(back.n_half, 6u);
  EXPECT_EQ(back.t, 0.4);
  EXPECT_EQ(back.c, 1.5);
  EXPECT_EQ(back.rep, Representation::uniformization);
  EXPECT_EQ(back.p, k.p);
}
