#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cvbf/core.hpp"
#include "cvbf/detail/vector_math.hpp"
#include "cvbf/kernels.hpp"
#include "cvbf/optimize.hpp"
#include "cvbf/parallel.hpp"
#include "cvbf/quadrature.hpp"
#include "cvbf/stats.hpp"

namespace cvbf {

/// A density handle with its support. `pdf` must integrate to one.
struct Density {
  std::function<double(double)> pdf;
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();
};

namespace detail {

// Unscaled kernel sums over the training points for one evaluation point.
// These are the hot loops of the whole library; keep them branch-free.
template <KernelKind Kind>
inline double kernel_sum(const double* z, std::size_t n, double x, double invh) noexcept {
  double sk = 0.0;
  CVBF_SIMD_REDUCE(sk)
  for (std::size_t i = 0; i < n; ++i) {
    const double u = std::abs(x - z[i]) * invh;
    if constexpr (Kind == KernelKind::Hall) {
      const double t = std::log1p(u);
      sk += std::exp(-0.5 * t * t);
    } else {
      sk += std::exp(-0.5 * u * u);
    }
  }
  return sk;
}

struct Sums3 {
  double k = 0.0, j = 0.0, l = 0.0;
};

template <KernelKind Kind>
inline Sums3 kernel_sums3(const double* z, std::size_t n, double x, double invh) noexcept {
  double sk = 0.0, sj = 0.0, sl = 0.0;
  CVBF_SIMD_REDUCE(sk, sj, sl)
  for (std::size_t i = 0; i < n; ++i) {
    const double u = std::abs(x - z[i]) * invh;
    if constexpr (Kind == KernelKind::Hall) {
      const double t = std::log1p(u);
      const double k = std::exp(-0.5 * t * t);
      const double inv = 1.0 / (1.0 + u);
      sk += k;
      sj += k * u * t * inv;
      sl += k * u * (u * t * t - t - u) * inv * inv;
    } else {
      const double u2 = u * u;
      const double k = std::exp(-0.5 * u2);
      sk += k;
      sj += k * u2;
      sl += k * (u2 * u2 - 2.0 * u2);
    }
  }
  return {sk, sj, sl};
}

inline double kernel_sum(KernelKind kind, std::span<const double> z, double x, double invh) {
  return kind == KernelKind::Hall
             ? kernel_sum<KernelKind::Hall>(z.data(), z.size(), x, invh)
             : kernel_sum<KernelKind::Gaussian>(z.data(), z.size(), x, invh);
}

inline Sums3 kernel_sums3(KernelKind kind, std::span<const double> z, double x, double invh) {
  return kind == KernelKind::Hall
             ? kernel_sums3<KernelKind::Hall>(z.data(), z.size(), x, invh)
             : kernel_sums3<KernelKind::Gaussian>(z.data(), z.size(), x, invh);
}

/// log f(x) computed in the log domain (for points where the plain kernel
/// sum underflows).
inline double log_kde_stable(KernelKind kind, std::span<const double> z, double h, double x) {
  const double s = kernel_sum(kind, z, x, 1.0 / h);
  const double lognorm = std::log(kernel_norm(kind) / (static_cast<double>(z.size()) * h));
  if (s > 1e-280) return lognorm + std::log(s);
  std::vector<double> logs(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double u = std::abs(x - z[i]) / h;
    logs[i] = kind == KernelKind::Hall ? hall_log_unscaled(u) : gauss_log_unscaled(u);
  }
  return lognorm + log_sum_exp(logs);
}

/// Log-likelihood of validation points under the KDE of `train` at bandwidth
/// h, with (optionally) the first two derivatives in theta = log h:
///   with a = e/f and b = g/f per point (e, g: KDEs with kernels J, L),
///   d/dtheta log f = a - 1,   d2/dtheta2 log f = b - a^2.
struct PassResult {
  double loglik = 0.0;
  double d1_theta = 0.0;
  double d2_theta = 0.0;
  bool underflow = false;
};

inline constexpr std::size_t pass_chunk = 256;

// Below this kernel sum the plain pass loses precision; stable passes redo
// the point in the log domain.
inline constexpr double stable_threshold = 1e-250;

struct PointTerms {
  double log_sum;  // log of the unscaled kernel sum
  double a;        // sum J / sum K
  double b;        // sum L / sum K
};

inline PointTerms log_domain_point(KernelKind kind, std::span<const double> z, double x,
                                   double invh) {
  std::vector<double> logs(z.size());
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double u = std::abs(x - z[i]) * invh;
    logs[i] = kind == KernelKind::Hall ? hall_log_unscaled(u) : gauss_log_unscaled(u);
    mx = std::max(mx, logs[i]);
  }
  CompensatedSum sk, sj, sl;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double u = std::abs(x - z[i]) * invh;
    const double w = std::exp(logs[i] - mx);
    double jr = 0.0, lr = 0.0;
    if (kind == KernelKind::Hall) {
      const double t = std::log1p(u);
      const double inv = 1.0 / (1.0 + u);
      const double wu = u * inv;
      jr = wu * t;
      lr = wu * (wu * t * t - (t + u) * inv);
    } else {
      jr = u * u;
      lr = u * u * u * u - 2.0 * u * u;
    }
    sk.add(w);
    sj.add(w * jr);
    sl.add(w * lr);
  }
  return {mx + std::log(sk.value()), sj.value() / sk.value(), sl.value() / sk.value()};
}

inline PassResult likelihood_pass(std::span<const double> train, std::span<const double> valid,
                                  KernelKind kind, double h, bool derivatives,
                                  bool stable = false) {
  const double invh = 1.0 / h;
  // The Hall kernel's log is O(log^2 u), so its log-domain pass never
  // underflows; for the Gaussian an exact zero is reported unless asked.
  stable = stable || kind == KernelKind::Hall;
  const std::size_t chunks = (valid.size() + pass_chunk - 1) / pass_chunk;
  struct Partial {
    double logsum = 0.0, d1 = 0.0, d2 = 0.0;
    bool underflow = false;
  };
  std::vector<Partial> parts(chunks);
  auto run_chunk = [&](std::size_t c) {
    CompensatedSum ls, s1, s2;
    Partial p;
    const std::size_t end = std::min(valid.size(), (c + 1) * pass_chunk);
    for (std::size_t i = c * pass_chunk; i < end; ++i) {
      double sk = 0.0, a = 0.0, b = 0.0;
      if (derivatives) {
        const Sums3 s = kernel_sums3(kind, train, valid[i], invh);
        sk = s.k;
        a = s.j / s.k;
        b = s.l / s.k;
      } else {
        sk = kernel_sum(kind, train, valid[i], invh);
      }
      double log_sk = std::log(sk);
      if (stable && !(sk >= stable_threshold)) {
        const auto t = log_domain_point(kind, train, valid[i], invh);
        log_sk = t.log_sum;
        a = t.a;
        b = t.b;
      } else if (!(sk > 0.0)) {
        p.underflow = true;
        continue;
      }
      ls.add(log_sk);
      if (derivatives) {
        s1.add(a - 1.0);
        s2.add(b - a * a);
      }
    }
    p.logsum = ls.value();
    p.d1 = s1.value();
    p.d2 = s2.value();
    parts[c] = p;
  };
  if (train.size() * valid.size() >= (std::size_t{1} << 22)) {
    parallel_for(chunks, run_chunk);
  } else {
    for (std::size_t c = 0; c < chunks; ++c) run_chunk(c);
  }
  CompensatedSum ls, s1, s2;
  PassResult out;
  for (const auto& p : parts) {
    ls.add(p.logsum);
    s1.add(p.d1);
    s2.add(p.d2);
    out.underflow = out.underflow || p.underflow;
  }
  const double lognorm = std::log(kernel_norm(kind) / (static_cast<double>(train.size()) * h));
  out.loglik = out.underflow ? -std::numeric_limits<double>::infinity()
                             : ls.value() + static_cast<double>(valid.size()) * lognorm;
  out.d1_theta = s1.value();
  out.d2_theta = s2.value();
  return out;
}

inline void require_bandwidth(double h) {
  if (!(h > 0.0) || !std::isfinite(h)) {
    throw InputError("bandwidth must be positive and finite, got " + std::to_string(h));
  }
}

}  // namespace detail

/// Kernel density estimate: training data, bandwidth and kernel.
class KdeModel {
 public:
  KdeModel(Sample train, double bandwidth, KernelKind kernel)
      : train_(std::move(train)), bandwidth_(bandwidth), kernel_(kernel) {
    require_size(train_, 1, "KDE training data");
    detail::require_bandwidth(bandwidth_);
  }

  [[nodiscard]] const Sample& train() const noexcept { return train_; }
  [[nodiscard]] double bandwidth() const noexcept { return bandwidth_; }
  [[nodiscard]] KernelKind kernel() const noexcept { return kernel_; }

  /// (1 / (n h)) sum_i K((x - Z_i) / h)
  [[nodiscard]] double operator()(double x) const {
    const double s = detail::kernel_sum(kernel_, train_.values(), x, 1.0 / bandwidth_);
    return detail::kernel_norm(kernel_) * s /
           (static_cast<double>(train_.size()) * bandwidth_);
  }

  [[nodiscard]] double log_density(double x) const {
    return detail::log_kde_stable(kernel_, train_.values(), bandwidth_, x);
  }

  [[nodiscard]] Density as_density() const {
    return {[m = *this](double x) { return m(x); }};
  }

 private:
  Sample train_;
  double bandwidth_;
  KernelKind kernel_;
};

inline double kde_eval(const KdeModel& model, double x) { return model(x); }

/// Sum of log f(x_j) over the validation points. Throws NumericalError when a
/// density evaluates to exactly zero (Gaussian kernel, far tails).
inline double log_likelihood(const KdeModel& model, const Sample& valid) {
  require_size(valid, 1, "validation data");
  const auto r = detail::likelihood_pass(model.train().values(), valid.values(), model.kernel(),
                                         model.bandwidth(), false);
  if (r.underflow) {
    throw NumericalError("degenerate underflow: a validation point has zero density under the " +
                         std::string(to_string(model.kernel())) + " kernel at h=" +
                         std::to_string(model.bandwidth()));
  }
  return r.loglik;
}

/// Log-likelihood with its first and second derivatives in h.
struct LikelihoodDerivatives {
  double loglik;
  double d1_h;
  double d2_h;
};

inline LikelihoodDerivatives log_likelihood_derivatives(const Sample& train, const Sample& valid,
                                                        KernelKind kernel, double h) {
  require_size(train, 1, "training data");
  require_size(valid, 1, "validation data");
  detail::require_bandwidth(h);
  const auto r = detail::likelihood_pass(train.values(), valid.values(), kernel, h, true);
  if (r.underflow) throw NumericalError("degenerate underflow in likelihood derivatives");
  // d/dh = (1/h) d/dtheta;  d2/dh2 = (d2/dtheta2 - d/dtheta) / h^2.
  return {r.loglik, r.d1_theta / h, (r.d2_theta - r.d1_theta) / (h * h)};
}

/// Leave-one-out likelihood criterion: sum_i log f(X_i | h, X without X_i).
inline double loo_cv_criterion(const Sample& train, KernelKind kernel, double h) {
  require_size(train, 2, "leave-one-out training data");
  detail::require_bandwidth(h);
  const auto z = train.values();
  const double invh = 1.0 / h;
  detail::CompensatedSum ls;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double s = detail::kernel_sum(kernel, z.first(i), z[i], invh) +
                     detail::kernel_sum(kernel, z.subspan(i + 1), z[i], invh);
    if (kernel == KernelKind::Hall && !(s >= detail::stable_threshold)) {
      std::vector<double> rest(z.begin(), z.end());
      rest.erase(rest.begin() + static_cast<std::ptrdiff_t>(i));
      ls.add(detail::log_domain_point(kernel, rest, z[i], invh).log_sum);
      continue;
    }
    if (!(s > 0.0)) {
      throw NumericalError("degenerate underflow in leave-one-out criterion");
    }
    ls.add(std::log(s));
  }
  const double lognorm =
      std::log(detail::kernel_norm(kernel) / (static_cast<double>(z.size() - 1) * h));
  return ls.value() + static_cast<double>(z.size()) * lognorm;
}

struct BandwidthInterval {
  double lower;
  double upper;
};

/// [1e-3 s, 10 (max - min)] with s = min(sd, IQR / 1.349) of the training data.
inline BandwidthInterval default_bandwidth_interval(const Sample& train) {
  require_size(train, 2, "training data");
  const double sd = stats::sd(train.values());
  const double iqr_scale = stats::iqr(train.values()) / 1.349;
  double s = std::min(sd, iqr_scale);
  if (!(s > 0.0)) s = std::max(sd, iqr_scale);
  const auto [mn, mx] = std::minmax_element(train.begin(), train.end());
  const double range = *mx - *mn;
  if (!(s > 0.0) || !(range > 0.0)) {
    throw InputError("training data has zero spread; no bandwidth interval");
  }
  return {1e-3 * s, 10.0 * range};
}

struct SearchOptions {
  int coarse_points = 64;
  // Relative tolerance on the maximizing bandwidth.
  double rel_tol = 1e-6;
  // The coarse scan evaluates on an evenly strided subset of at most this many
  // validation points (0 = all). Refinement always uses every point.
  std::size_t scan_valid_cap = 1024;
};

struct BandwidthFit {
  double h = 0.0;
  double loglik = 0.0;
  // -d2/dh2 log L at h (the Laplace curvature), when derivatives were used.
  double curvature = std::numeric_limits<double>::quiet_NaN();
  bool at_lower = false;
  bool at_upper = false;
  BandwidthInterval interval{};
  int evaluations = 0;

  [[nodiscard]] bool at_boundary() const noexcept { return at_lower || at_upper; }
};

namespace detail {

inline std::vector<double> strided_subset(std::span<const double> v, std::size_t cap) {
  if (cap == 0 || v.size() <= cap) return {v.begin(), v.end()};
  std::vector<double> out(cap);
  for (std::size_t k = 0; k < cap; ++k) out[k] = v[k * v.size() / cap];
  return out;
}

inline void check_interval(const BandwidthInterval& b) {
  if (!(b.lower > 0.0) || !(b.upper > b.lower) || !std::isfinite(b.upper)) {
    throw InputError("bandwidth interval must satisfy 0 < lower < upper");
  }
}

}  // namespace detail

/// Maximizes the held-out log-likelihood over the bandwidth: coarse log-spaced
/// scan, then a safeguarded Newton iteration on log h using the analytic
/// derivatives. The returned fit carries the curvature at the maximizer.
inline BandwidthFit maximize_bandwidth(const Sample& train, const Sample& valid, KernelKind kernel,
                                       std::optional<BandwidthInterval> bounds = std::nullopt,
                                       const SearchOptions& opts = {}) {
  require_size(train, 1, "training data");
  require_size(valid, 1, "validation data");
  const BandwidthInterval iv = bounds ? *bounds : default_bandwidth_interval(train);
  detail::check_interval(iv);
  const double lo = std::log(iv.lower), hi = std::log(iv.upper);
  const auto scan_valid = detail::strided_subset(valid.values(), opts.scan_valid_cap);
  const double nv_scan = static_cast<double>(scan_valid.size());
  const double nv = static_cast<double>(valid.size());

  BandwidthFit fit;
  fit.interval = iv;
  auto scan_fn = [&](double theta) {
    ++fit.evaluations;
    return detail::likelihood_pass(train.values(), scan_valid, kernel, std::exp(theta), false,
                                   true)
               .loglik /
           nv_scan;
  };
  const auto scan = opt::coarse_scan(scan_fn, lo, hi, opts.coarse_points);
  const double step = (hi - lo) / (opts.coarse_points - 1);
  const std::size_t k = scan.best;
  const double a = scan.grid[k == 0 ? 0 : k - 1];
  const double b = scan.grid[std::min(k + 1, scan.grid.size() - 1)];

  auto refine_fn = [&](double theta) {
    const auto r = detail::likelihood_pass(train.values(), valid.values(), kernel,
                                           std::exp(theta), true, true);
    if (r.underflow) {
      return opt::Taylor2{-std::numeric_limits<double>::infinity(),
                          std::numeric_limits<double>::quiet_NaN(), 0.0};
    }
    return opt::Taylor2{r.loglik / nv, r.d1_theta / nv, r.d2_theta / nv};
  };
  const double tol = std::log1p(opts.rel_tol) * 0.1;
  opt::Taylor2 at{};
  const auto m = opt::newton_maximize(refine_fn, scan.grid[k], a, b, step, tol, lo, hi, &at);
  fit.evaluations += m.evaluations;
  fit.h = std::exp(m.theta);
  fit.loglik = at.value * nv;
  // -d2/dh2 log L = -(d2/dtheta2 - d/dtheta) / h^2
  fit.curvature = -(at.d2 - at.d1) * nv / (fit.h * fit.h);
  fit.at_lower = m.at_lower;
  fit.at_upper = m.at_upper;
  return fit;
}

namespace detail {

// Scan + golden-section maximization of a derivative-free objective in log h.
template <class F>
BandwidthFit golden_bandwidth(F&& objective, const BandwidthInterval& iv, const SearchOptions& opts) {
  detail::check_interval(iv);
  const double lo = std::log(iv.lower), hi = std::log(iv.upper);
  BandwidthFit fit;
  fit.interval = iv;
  auto f = [&](double theta) {
    ++fit.evaluations;
    return objective(std::exp(theta));
  };
  const auto scan = opt::coarse_scan(f, lo, hi, opts.coarse_points);
  const std::size_t k = scan.best;
  const double a = scan.grid[k == 0 ? 0 : k - 1];
  const double b = scan.grid[std::min(k + 1, scan.grid.size() - 1)];
  const double tol = std::log1p(opts.rel_tol) * 0.1;
  const auto m = opt::golden_maximize(f, a, b, tol, lo, hi);
  fit.h = std::exp(m.theta);
  fit.loglik = m.value;
  fit.at_lower = m.at_lower;
  fit.at_upper = m.at_upper;
  return fit;
}

}  // namespace detail

/// Maximizer of the leave-one-out criterion (golden section after a scan).
inline BandwidthFit maximize_loo_bandwidth(const Sample& train, KernelKind kernel,
                                           std::optional<BandwidthInterval> bounds = std::nullopt,
                                           const SearchOptions& opts = {}) {
  const BandwidthInterval iv = bounds ? *bounds : default_bandwidth_interval(train);
  auto objective = [&](double h) {
    try {
      return loo_cv_criterion(train, kernel, h) / static_cast<double>(train.size());
    } catch (const NumericalError&) {
      return -std::numeric_limits<double>::infinity();
    }
  };
  auto fit = detail::golden_bandwidth(objective, iv, opts);
  fit.loglik *= static_cast<double>(train.size());
  return fit;
}

struct KlOptions {
  double abs_tol = 1e-7;
  int max_panels = 4000;
};

/// KL(f, fhat) = int f log(f / fhat) over the support of f, floored at 0.
/// The region spanned by the training data (padded by 10 bandwidths) is
/// split at the data points; the remaining tails are integrated on a sinh
/// substitution. Throws NumericalError if refinement runs out of panels.
inline double kl_divergence(const Density& f, const KdeModel& model, const KlOptions& opts = {}) {
  const auto z = model.train().sorted();
  const double h = model.bandwidth();
  const double core_lo = std::max(f.lower, z[0] - 10.0 * h);
  const double core_hi = std::min(f.upper, z[z.size() - 1] + 10.0 * h);

  auto integrand = [&](double x) {
    if (x < f.lower || x > f.upper) return 0.0;
    const double fx = f.pdf(x);
    if (!(fx > 0.0)) return 0.0;
    return fx * (std::log(fx) - model.log_density(x));
  };

  QuadratureOptions q;
  q.abs_tol = opts.abs_tol / 3.0;
  q.rel_tol = 1e-12;
  q.max_panels = opts.max_panels;

  double total = 0.0;
  auto accumulate = [&](const QuadratureResult& r, const char* piece) {
    if (!r.converged) {
      throw NumericalError(std::string("KL quadrature did not converge on the ") + piece +
                           " (error estimate " + std::to_string(r.abs_error) + ")");
    }
    total += r.value;
  };

  if (core_lo < core_hi) {
    std::vector<double> breaks;
    double last = -std::numeric_limits<double>::infinity();
    for (double v : z) {
      if (v - last >= h) {
        breaks.push_back(v);
        last = v;
      }
    }
    accumulate(integrate(integrand, core_lo, core_hi, q, breaks), "core");
  }
  const double tail_scale = std::max(h, 0.1 * (core_hi - core_lo));
  if (f.lower < core_lo) {
    if (std::isfinite(f.lower)) {
      accumulate(integrate(integrand, f.lower, core_lo, q), "lower tail");
    } else {
      accumulate(integrate_half_line(integrand, core_lo, -1, tail_scale, q), "lower tail");
    }
  }
  if (f.upper > core_hi) {
    if (std::isfinite(f.upper)) {
      accumulate(integrate(integrand, core_hi, f.upper, q), "upper tail");
    } else {
      accumulate(integrate_half_line(integrand, core_hi, +1, tail_scale, q), "upper tail");
    }
  }
  return std::max(total, 0.0);
}

struct KlFit {
  double h = 0.0;
  double kl = 0.0;
  bool at_lower = false;
  bool at_upper = false;
  int evaluations = 0;
};

/// Bandwidth minimizing KL(f, fhat(. | h, train)), same search as the
/// derivative-free bandwidth maximizers.
inline KlFit kl_optimal_bandwidth(const Density& f, const Sample& train, KernelKind kernel,
                                  std::optional<BandwidthInterval> bounds = std::nullopt,
                                  const SearchOptions& opts = {}, const KlOptions& kl_opts = {}) {
  const BandwidthInterval iv = bounds ? *bounds : default_bandwidth_interval(train);
  auto objective = [&](double h) {
    try {
      return -kl_divergence(f, KdeModel(train, h, kernel), kl_opts);
    } catch (const NumericalError&) {
      return -std::numeric_limits<double>::infinity();
    }
  };
  const auto fit = detail::golden_bandwidth(objective, iv, opts);
  return {fit.h, -fit.loglik, fit.at_lower, fit.at_upper, fit.evaluations};
}

/// Boundary reflection for data on (0, 1): {-log x_i} followed by {log x_i}.
inline Sample reflect_transform(const Sample& s) {
  std::vector<double> out;
  out.reserve(2 * s.size());
  for (double v : s) {
    if (!(v > 0.0 && v < 1.0)) {
      throw InputError("reflect_transform needs values strictly inside (0, 1), got " +
                       std::to_string(v));
    }
    out.push_back(-std::log(v));
  }
  for (std::size_t i = 0; i < s.size(); ++i) out.push_back(-out[i]);
  return Sample(std::move(out));
}

/// -log x for data on (0, 1), without reflection (target side of the
/// reflected CVBF).
inline Sample neg_log_transform(const Sample& s) {
  std::vector<double> out;
  out.reserve(s.size());
  for (double v : s) {
    if (!(v > 0.0 && v < 1.0)) {
      throw InputError("log transform needs values strictly inside (0, 1)");
    }
    out.push_back(-std::log(v));
  }
  return Sample(std::move(out));
}

}  // namespace cvbf
