#include "cornerlab/numerics.hpp"

#include <algorithm>
#include <limits>

namespace cornerlab::numerics {

namespace {

double simpson_step(const std::function<double(double)>& f, double a, double fa, double b, double fb, double m,
                    double fm, double whole, double tol, int depth) {
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return simpson_step(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) +
         simpson_step(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
}

}  // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol, int max_depth) {
  if (a == b) return 0.0;
  // Start from a few panels so a narrow feature cannot hide between three samples.
  constexpr int kPanels = 16;
  const double h = (b - a) / kPanels;
  double total = 0.0;
  for (int i = 0; i < kPanels; ++i) {
    const double lo = a + i * h, hi = i + 1 == kPanels ? b : a + (i + 1) * h;
    const double mid = 0.5 * (lo + hi);
    const double flo = f(lo), fhi = f(hi), fmid = f(mid);
    const double whole = (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi);
    total += simpson_step(f, lo, flo, hi, fhi, mid, fmid, whole, tol / kPanels, max_depth);
  }
  return total;
}

std::vector<double> poisson_weights(double mean, double tail) {
  if (mean <= 0.0) return {1.0};
  const auto mode = static_cast<std::size_t>(std::floor(mean));
  auto log_w = [mean](std::size_t n) {
    const double nd = static_cast<double>(n);
    return -mean + nd * std::log(mean) - std::lgamma(nd + 1.0);
  };
  // Upper end: walk right from the mode until the geometric bound on the
  // remaining tail, w_n * (n+1) / (n+1-mean), drops below tail.
  std::size_t hi = mode;
  while (true) {
    const double w = std::exp(log_w(hi));
    const double ratio = mean / static_cast<double>(hi + 1);
    if (ratio < 1.0 && w * ratio / (1.0 - ratio) < tail) break;
    ++hi;
  }
  std::vector<double> out(hi + 1);
  for (std::size_t n = 0; n <= hi; ++n) out[n] = std::exp(log_w(n));
  return out;
}

double log_add(double a, double b) {
  constexpr double neg_inf = -std::numeric_limits<double>::infinity();
  if (a == neg_inf) return b;
  if (b == neg_inf) return a;
  return std::max(a, b) + std::log1p(std::exp(-std::abs(a - b)));
}

}  // namespace cornerlab::numerics
