#pragma once

// Small numeric helpers shared across modules. Internal, not installed.

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>

namespace ruq::detail {

// Pairwise (cascade) summation: O(log n) error growth and a fixed
// association order, so reductions stay deterministic.
inline double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 32) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t half = v.size() / 2;
  return pairwise_sum(v.subspan(0, half)) + pairwise_sum(v.subspan(half));
}

inline double softplus(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  const double v = std::log1p(std::exp(x));
  // exp underflows to 0 below x ~ -745; keep the output strictly positive,
  // as the true softplus is.
  return v > 0.0 ? v : std::numeric_limits<double>::denorm_min();
}

inline double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace ruq::detail
