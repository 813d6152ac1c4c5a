#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <boost/math/distributions/cauchy.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "cvbf/core.hpp"
#include "cvbf/stats.hpp"

namespace cvbf {

/// Centers both samples at the pooled median and divides by pooled IQR / 1.35.
inline std::pair<Sample, Sample> robust_standardize(const Sample& x, const Sample& y) {
  const Sample pooled = concat(x, y);
  require_size(pooled, 4, "robust standardization (combined)");
  const auto sorted = pooled.sorted();
  const double med = stats::quantile_sorted(sorted.values(), 0.5);
  const double iqr =
      stats::quantile_sorted(sorted.values(), 0.75) - stats::quantile_sorted(sorted.values(), 0.25);
  if (!(iqr > 0.0)) throw InputError("robust standardization needs a positive combined IQR");
  const double scale = iqr / 1.35;
  auto apply = [&](const Sample& s) {
    std::vector<double> out(s.begin(), s.end());
    for (auto& v : out) v = (v - med) / scale;
    return Sample(std::move(out));
  };
  return {apply(x), apply(y)};
}

enum class PolyaBase { Normal, Cauchy };

inline std::string_view to_string(PolyaBase b) {
  return b == PolyaBase::Normal ? "normal" : "cauchy";
}

inline PolyaBase parse_polya_base(std::string_view s) {
  if (s == "normal") return PolyaBase::Normal;
  if (s == "cauchy") return PolyaBase::Cauchy;
  throw InputError("unknown base distribution '" + std::string(s) +
                   "' (expected normal or cauchy)");
}

struct PolyaTreeConfig {
  PolyaBase base = PolyaBase::Normal;
  double precision_c = 1.0;
  // Number of partition levels; unset means ceil(log2(m + n)) capped at 12.
  std::optional<int> depth;
  // Location and scale of the base distribution (standard by default).
  double location = 0.0;
  double scale = 1.0;
};

inline constexpr int polya_default_depth_cap = 12;
inline constexpr int polya_max_depth = 62;

inline int polya_default_depth(std::size_t total) {
  int d = 1;
  while (d < polya_default_depth_cap && (std::size_t{1} << d) < total) ++d;
  return d;
}

struct PolyaResult {
  double log_bf = 0.0;  // > 0 favors different distributions
  int depth = 0;
};

namespace detail {

class PolyaPartition {
 public:
  PolyaPartition(const PolyaTreeConfig& cfg, int depth)
      : cfg_(cfg), depth_(depth), cells_(std::uint64_t{1} << depth) {}

  // Boundary k of the finest partition, k = 1 .. cells - 1.
  [[nodiscard]] double boundary(std::uint64_t k) const {
    const double p = std::ldexp(static_cast<double>(k), -depth_);
    double z = 0.0;
    if (cfg_.base == PolyaBase::Normal) {
      z = boost::math::quantile(boost::math::normal_distribution<double>(), p);
    } else {
      z = boost::math::quantile(boost::math::cauchy_distribution<double>(), p);
    }
    return cfg_.location + cfg_.scale * z;
  }

  [[nodiscard]] double cdf(double x) const {
    const double z = (x - cfg_.location) / cfg_.scale;
    if (cfg_.base == PolyaBase::Normal) {
      return boost::math::cdf(boost::math::normal_distribution<double>(), z);
    }
    return boost::math::cdf(boost::math::cauchy_distribution<double>(), z);
  }

  // Number of boundaries strictly below x (points on a boundary go left).
  [[nodiscard]] std::uint64_t cell(double x) const {
    const double guess = std::floor(cdf(x) * static_cast<double>(cells_));
    std::uint64_t c =
        guess <= 0.0 ? 0
                     : std::min<std::uint64_t>(cells_ - 1, static_cast<std::uint64_t>(guess));
    while (c > 0 && boundary(c) >= x) --c;
    while (c + 1 < cells_ && boundary(c + 1) < x) ++c;
    return c;
  }

 private:
  PolyaTreeConfig cfg_;
  int depth_;
  std::uint64_t cells_;
};

inline double log_beta(double a, double b) {
  return boost::math::lgamma(a) + boost::math::lgamma(b) - boost::math::lgamma(a + b);
}

}  // namespace detail

/// Two-sample Polya tree Bayes factor (separate models over the pooled one),
/// with Beta(c j^2, c j^2) branch probabilities at level j = 1 .. depth and
/// partitions at dyadic quantiles of the base distribution.
inline PolyaResult polya_tree_log_bf(const Sample& x, const Sample& y,
                                     const PolyaTreeConfig& cfg = {}) {
  require_size(x, 1, "Polya tree sample x");
  require_size(y, 1, "Polya tree sample y");
  if (!(cfg.precision_c > 0.0) || !std::isfinite(cfg.precision_c)) {
    throw InputError("Polya tree precision c must be positive");
  }
  if (!(cfg.scale > 0.0)) throw InputError("Polya tree base scale must be positive");
  const int depth = cfg.depth.value_or(polya_default_depth(x.size() + y.size()));
  if (depth < 1) throw InputError("Polya tree depth must be at least 1");
  if (depth > polya_max_depth) {
    throw InputError("Polya tree depth " + std::to_string(depth) + " exceeds the maximum " +
                     std::to_string(polya_max_depth));
  }
  const detail::PolyaPartition part(cfg, depth);
  auto cells = [&](const Sample& s) {
    std::vector<std::uint64_t> c(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) c[i] = part.cell(s[i]);
    std::sort(c.begin(), c.end());
    return c;
  };
  const auto cx = cells(x), cy = cells(y);

  detail::CompensatedSum total;
  for (int j = 1; j <= depth; ++j) {
    const double alpha = cfg.precision_c * static_cast<double>(j) * static_cast<double>(j);
    const double prior_term = detail::log_beta(alpha, alpha);
    const int parent_shift = depth - j + 1;
    const int child_shift = depth - j;
    std::size_t ix = 0, iy = 0;
    while (ix < cx.size() || iy < cy.size()) {
      const std::uint64_t kx = ix < cx.size() ? cx[ix] >> parent_shift : UINT64_MAX;
      const std::uint64_t ky = iy < cy.size() ? cy[iy] >> parent_shift : UINT64_MAX;
      const std::uint64_t node = std::min(kx, ky);
      double lx = 0, rx = 0, ly = 0, ry = 0;
      for (; ix < cx.size() && (cx[ix] >> parent_shift) == node; ++ix) {
        ((cx[ix] >> child_shift) & 1 ? rx : lx) += 1.0;
      }
      for (; iy < cy.size() && (cy[iy] >> parent_shift) == node; ++iy) {
        ((cy[iy] >> child_shift) & 1 ? ry : ly) += 1.0;
      }
      total.add(detail::log_beta(alpha + lx, alpha + rx) +
                detail::log_beta(alpha + ly, alpha + ry) -
                detail::log_beta(alpha + lx + ly, alpha + rx + ry) - prior_term);
    }
  }
  return {total.value(), depth};
}

struct KsResult {
  double d_statistic = 0.0;
  double p_value = 1.0;
};

/// Asymptotic Kolmogorov survival function P(K > lambda).
inline double kolmogorov_survival(double lambda) {
  if (!(lambda > 0.0)) return 1.0;
  constexpr double pi = std::numbers::pi;
  if (lambda < 1.18) {
    // CDF = sqrt(2 pi) / lambda * sum_k exp(-(2k - 1)^2 pi^2 / (8 lambda^2))
    double s = 0.0;
    for (int k = 1; k <= 20; ++k) {
      const double a = 2.0 * k - 1.0;
      s += std::exp(-a * a * pi * pi / (8.0 * lambda * lambda));
    }
    return std::clamp(1.0 - std::sqrt(2.0 * pi) / lambda * s, 0.0, 1.0);
  }
  double s = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    s += (k % 2 == 1 ? 2.0 : -2.0) * term;
    if (term < 1e-300) break;
  }
  return std::clamp(s, 0.0, 1.0);
}

/// Two-sample Kolmogorov-Smirnov test with the asymptotic p-value at
/// lambda = sqrt(mn / (m + n)) D.
inline KsResult ks_test(const Sample& x, const Sample& y) {
  require_size(x, 1, "KS sample x");
  require_size(y, 1, "KS sample y");
  const auto a = x.sorted(), b = y.sorted();
  const double m = static_cast<double>(a.size()), n = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == v) ++i;
    while (j < b.size() && b[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / m - static_cast<double>(j) / n));
  }
  KsResult r;
  r.d_statistic = d;
  r.p_value = d == 0.0 ? 1.0 : kolmogorov_survival(std::sqrt(m * n / (m + n)) * d);
  return r;
}

}  // namespace cvbf
