#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

namespace cornerlab::numerics {

/// Adaptive Simpson on [a, b] with absolute tolerance tol (Richardson-corrected).
double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol = 1e-10,
                        int max_depth = 50);

/// Poisson(mean) probabilities for n = 0..size()-1, cut where the remaining
/// upper tail is below tail.  Evaluated from the mode outwards in log space.
std::vector<double> poisson_weights(double mean, double tail = 1e-15);

/// Natural log of the sum of exponentials, safe for -inf entries.
double log_add(double a, double b);

}  // namespace cornerlab::numerics
