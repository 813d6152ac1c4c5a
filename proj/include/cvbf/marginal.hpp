#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cvbf/core.hpp"
#include "cvbf/kde.hpp"
#include "cvbf/quadrature.hpp"

namespace cvbf {

/// pi(h | gamma) = 2 gamma / (sqrt(pi) h^2) exp(-gamma^2 / h^2), h > 0.
/// Its mode is gamma.
struct BandwidthPrior {
  double gamma = 1.0;
};

inline double prior_logpdf(const BandwidthPrior& p, double h) {
  if (!(p.gamma > 0.0) || !std::isfinite(p.gamma)) {
    throw InputError("bandwidth prior needs gamma > 0");
  }
  if (!(h > 0.0)) throw InputError("bandwidth prior is defined for h > 0 only");
  const double g = p.gamma / h;
  return std::log(2.0 * p.gamma / std::sqrt(std::numbers::pi)) - 2.0 * std::log(h) - g * g;
}

/// -d2/dh2 log L(h) assembled from the K, J and L kernel estimates.
inline double hessian_at(const Sample& train, const Sample& valid, KernelKind kernel, double h) {
  return -log_likelihood_derivatives(train, valid, kernel, h).d2_h;
}

enum class MarginalMethod { Laplace, Quadrature };

inline std::string_view to_string(MarginalMethod m) {
  return m == MarginalMethod::Laplace ? "laplace" : "quadrature";
}

inline MarginalMethod parse_method(std::string_view s) {
  if (s == "laplace") return MarginalMethod::Laplace;
  if (s == "quadrature") return MarginalMethod::Quadrature;
  throw InputError("unknown marginal method '" + std::string(s) +
                   "' (expected laplace or quadrature)");
}

struct MarginalResult {
  double log_marginal = 0.0;
  MarginalMethod method = MarginalMethod::Laplace;
  double h_hat = 0.0;
  double curvature = 0.0;
  double prior_gamma = 0.0;
  double loglik = 0.0;  // log L at h_hat
  bool at_boundary = false;
};

struct MarginalOptions {
  std::optional<BandwidthInterval> bounds;
  SearchOptions search;
  // Absolute tolerance on the stabilized integrand exp(log L - log L(h_hat)).
  double quad_abs_tol = 1e-8;
  // Stabilizing constant; defaults to log L(h_hat).
  std::optional<double> stabilizer;
  int quad_max_panels = 4000;
};

namespace detail {

inline BandwidthFit fit_for_marginal(const Sample& train, const Sample& valid, KernelKind kernel,
                                     const MarginalOptions& opts) {
  require_size(train, 1, "marginal training data");
  require_size(valid, 1, "marginal validation data");
  return maximize_bandwidth(train, valid, kernel, opts.bounds, opts.search);
}

}  // namespace detail

/// log M ~ 0.5 log(2 pi / H) + log pi(h_hat | h_hat) + log L(h_hat).
inline MarginalResult laplace_log_marginal(const Sample& train, const Sample& valid,
                                           KernelKind kernel, const MarginalOptions& opts = {}) {
  const auto fit = detail::fit_for_marginal(train, valid, kernel, opts);
  if (fit.at_boundary()) {
    throw NumericalError("Laplace approximation needs an interior maximum; the likelihood peaks "
                         "on the search boundary at h=" + std::to_string(fit.h));
  }
  if (!(fit.curvature > 0.0) || !std::isfinite(fit.curvature)) {
    throw NumericalError("Laplace approximation needs a strict maximum: curvature " +
                         std::to_string(fit.curvature) + " at h=" + std::to_string(fit.h));
  }
  MarginalResult r;
  r.method = MarginalMethod::Laplace;
  r.h_hat = fit.h;
  r.curvature = fit.curvature;
  r.prior_gamma = fit.h;
  r.loglik = fit.loglik;
  r.at_boundary = fit.at_boundary();
  r.log_marginal = 0.5 * std::log(2.0 * std::numbers::pi / fit.curvature) +
                   prior_logpdf({fit.h}, fit.h) + fit.loglik;
  return r;
}

/// log of int pi(h | h_hat) L(h) dh by adaptive quadrature in log h, on
/// [h_hat / 50, 50 h_hat], widened while the end panels still matter.
inline MarginalResult quadrature_log_marginal(const Sample& train, const Sample& valid,
                                              KernelKind kernel,
                                              const MarginalOptions& opts = {}) {
  const auto fit = detail::fit_for_marginal(train, valid, kernel, opts);
  const double gamma = fit.h;
  const double c = opts.stabilizer.value_or(fit.loglik);
  const double theta_hat = std::log(fit.h);
  const double sigma = fit.curvature > 0.0 && std::isfinite(fit.curvature)
                           ? std::min(1.0, 1.0 / (fit.h * std::sqrt(fit.curvature)))
                           : 0.1;

  auto integrand = [&](double theta) {
    const double h = std::exp(theta);
    const auto pass =
        detail::likelihood_pass(train.values(), valid.values(), kernel, h, false, true);
    if (pass.underflow) return 0.0;
    return std::exp(prior_logpdf({gamma}, h) + theta + pass.loglik - c);
  };

  QuadratureOptions q;
  q.abs_tol = opts.quad_abs_tol * std::exp(fit.loglik - c);
  q.rel_tol = 0.0;
  q.max_panels = opts.quad_max_panels;

  const double half = std::log(50.0);
  double lo = theta_hat - half, hi = theta_hat + half;
  std::vector<double> breaks;
  for (double k : {-8.0, -4.0, -2.0, -1.0, 0.0, 1.0, 2.0, 4.0, 8.0}) {
    breaks.push_back(theta_hat + k * sigma);
  }
  auto r = integrate(integrand, lo, hi, q, breaks);
  double total = r.value;
  bool converged = r.converged;
  // Endpoint check: extend a side while its end value, spread over one
  // sigma, is not negligible against the running total.
  for (int round = 0; round < 20; ++round) {
    const bool grow_lo = integrand(lo) * sigma >= 1e-12 * total;
    const bool grow_hi = integrand(hi) * sigma >= 1e-12 * total;
    if (!grow_lo && !grow_hi) break;
    if (grow_lo) {
      const auto e = integrate(integrand, lo - half, lo, q);
      total += e.value;
      converged = converged && e.converged;
      lo -= half;
    }
    if (grow_hi) {
      const auto e = integrate(integrand, hi, hi + half, q);
      total += e.value;
      converged = converged && e.converged;
      hi += half;
    }
  }
  if (!converged || !(total > 0.0) || !std::isfinite(total)) {
    throw NumericalError("marginal quadrature did not converge (estimate " +
                         std::to_string(total) + ")");
  }
  MarginalResult out;
  out.method = MarginalMethod::Quadrature;
  out.h_hat = fit.h;
  out.curvature = fit.curvature;
  out.prior_gamma = gamma;
  out.loglik = fit.loglik;
  out.at_boundary = fit.at_boundary();
  out.log_marginal = c + std::log(total);
  return out;
}

inline MarginalResult log_marginal(const Sample& train, const Sample& valid, KernelKind kernel,
                                   MarginalMethod method, const MarginalOptions& opts = {}) {
  return method == MarginalMethod::Laplace ? laplace_log_marginal(train, valid, kernel, opts)
                                           : quadrature_log_marginal(train, valid, kernel, opts);
}

}  // namespace cvbf
