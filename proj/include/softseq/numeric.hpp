#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

namespace softseq {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();
inline constexpr double kPosInf = std::numeric_limits<double>::infinity();
inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/**
 * log(exp(a) + exp(b)) without overflow. Either argument may be -inf;
 * both -inf yields -inf.
 */
inline double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

/**
 * log(sum(exp(v))) via max-shift. The shift is taken over finite entries
 * only; an empty or all-(-inf) input yields -inf exactly.
 */
inline double log_sum_exp(std::span<const double> v) {
  double m = kNegInf;
  for (double x : v) m = std::max(m, x);
  if (m == kNegInf) return kNegInf;
  double acc = 0.0;
  for (double x : v) {
    if (x != kNegInf) acc += std::exp(x - m);
  }
  return m + std::log(acc);
}

/**
 * Subtracts the mean of the finite entries from each finite entry; -inf
 * entries pass through. A vector with no finite entries is returned as is.
 */
inline std::vector<double> center_finite(std::span<const double> v) {
  double sum = 0.0;
  std::size_t n = 0;
  for (double x : v) {
    if (x != kNegInf) {
      sum += x;
      ++n;
    }
  }
  std::vector<double> out(v.begin(), v.end());
  if (n == 0) return out;
  const double mean = sum / static_cast<double>(n);
  for (double& x : out) {
    if (x != kNegInf) x -= mean;
  }
  return out;
}

/**
 * Max absolute difference between two equal-length vectors. Positions where
 * both entries are -inf contribute 0; a position where exactly one entry is
 * -inf contributes +inf.
 */
inline double linf_diff(std::span<const double> a, std::span<const double> b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const bool ia = a[i] == kNegInf;
    const bool ib = b[i] == kNegInf;
    if (ia && ib) continue;
    if (ia != ib) return kPosInf;
    worst = std::max(worst, std::abs(a[i] - b[i]));
  }
  return worst;
}

}  // namespace softseq
