#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "mixlab/errors.hpp"

namespace mixlab {

/// log C(n, k) via lgamma; 0 <= k <= n.
inline double log_choose(std::int64_t n, std::int64_t k) {
  return std::lgamma(static_cast<double>(n) + 1.0) - std::lgamma(static_cast<double>(k) + 1.0) -
         std::lgamma(static_cast<double>(n - k) + 1.0);
}

/// C(n, k) as a double. Exact while the value fits in 53 bits, correctly
/// rounded products beyond that.
inline double choose(std::int64_t n, std::int64_t k) {
  if (k < 0 || k > n) return 0.0;
  k = std::min(k, n - k);
  if (n > 1020) return std::exp(log_choose(n, k));
  double c = 1.0;
  // Every partial product is C(n-k+i, i), an integer.
  for (std::int64_t i = 1; i <= k; ++i) c = c * static_cast<double>(n - k + i) / static_cast<double>(i);
  return c;
}

/// Probability mass function of Bin(n, 1/2) on {0, ..., n}.
inline std::vector<double> binomial_half_pmf(std::int64_t n) {
  if (n < 0) throw ArgumentError("binomial_half_pmf: negative n");
  std::vector<double> pmf(static_cast<std::size_t>(n) + 1);
  const double log_half_n = -static_cast<double>(n) * std::log(2.0);
  for (std::int64_t k = 0; k <= n; ++k) {
    pmf[static_cast<std::size_t>(k)] =
        n <= 1020 ? std::ldexp(choose(n, k), static_cast<int>(-n)) : std::exp(log_choose(n, k) + log_half_n);
  }
  return pmf;
}

/// P(S_t = k) for simple random walk on Z started at 0; zero off the parity class.
inline double srw_position_probability(std::int64_t t, std::int64_t k) {
  if (t < 0) throw ArgumentError("srw_position_probability: negative t");
  if (k < -t || k > t || ((t + k) % 2) != 0) return 0.0;
  const std::int64_t ups = (t + k) / 2;
  if (t <= 1020) return std::ldexp(choose(t, ups), static_cast<int>(-t));
  return std::exp(log_choose(t, ups) - static_cast<double>(t) * std::log(2.0));
}

}  // namespace mixlab
