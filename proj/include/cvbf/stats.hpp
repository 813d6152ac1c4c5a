#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "cvbf/core.hpp"

namespace cvbf::stats {

/// Type-7 (linear interpolation) quantile of already sorted data:
/// h = (n - 1) p, Q = x[floor h] + (h - floor h)(x[floor h + 1] - x[floor h]).
inline double quantile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw InputError("quantile of an empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw InputError("quantile probability outside [0, 1]");
  const double h = static_cast<double>(sorted.size() - 1) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

inline double quantile(std::span<const double> data, double p) {
  std::vector<double> s(data.begin(), data.end());
  std::sort(s.begin(), s.end());
  return quantile_sorted(s, p);
}

inline double median(std::span<const double> data) { return quantile(data, 0.5); }

inline double iqr(std::span<const double> data) {
  std::vector<double> s(data.begin(), data.end());
  std::sort(s.begin(), s.end());
  return quantile_sorted(s, 0.75) - quantile_sorted(s, 0.25);
}

inline double mean(std::span<const double> data) {
  if (data.empty()) throw InputError("mean of an empty sample");
  detail::CompensatedSum s;
  for (double v : data) s.add(v);
  return s.value() / static_cast<double>(data.size());
}

// Sample standard deviation (n - 1 denominator).
inline double sd(std::span<const double> data) {
  if (data.size() < 2) throw InputError("standard deviation needs two values");
  const double m = mean(data);
  detail::CompensatedSum s;
  for (double v : data) s.add((v - m) * (v - m));
  return std::sqrt(s.value() / static_cast<double>(data.size() - 1));
}

// Average ranks (ties share the mean rank), 1-based.
inline std::vector<double> ranks(std::span<const double> data) {
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return data[a] < data[b]; });
  std::vector<double> r(data.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && data[order[j + 1]] == data[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[order[k]] = avg;
    i = j + 1;
  }
  return r;
}

inline double pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) throw InputError("pearson needs paired data");
  const double ma = mean(a), mb = mean(b);
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

inline double spearman(std::span<const double> a, std::span<const double> b) {
  const auto ra = ranks(a);
  const auto rb = ranks(b);
  return pearson(ra, rb);
}

}  // namespace cvbf::stats
