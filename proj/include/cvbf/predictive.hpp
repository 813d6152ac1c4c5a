#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "cvbf/core.hpp"
#include "cvbf/kde.hpp"
#include "cvbf/marginal.hpp"
#include "cvbf/random.hpp"

namespace cvbf {

template <class State>
struct Chain {
  std::vector<State> states;
  double acceptance_rate = 0.0;
  std::size_t steps = 0;
};

/// Independence-sampler Metropolis-Hastings. `propose(rng)` draws from the
/// proposal q, `log_q` is log q up to a constant and `log_target` is the log
/// target density up to a constant. Acceptance is counted over every step,
/// burn-in included.
template <class State, class LogTarget, class Propose, class LogQ>
Chain<State> independence_sampler(LogTarget&& log_target, Propose&& propose, LogQ&& log_q,
                                  State start, std::size_t n_draws, std::size_t burn_in,
                                  Rng& rng) {
  Chain<State> out;
  out.states.reserve(n_draws);
  State cur = start;
  double cur_w = log_target(cur) - log_q(cur);
  if (!std::isfinite(cur_w)) throw NumericalError("sampler start has zero target density");
  std::size_t accepted = 0;
  const std::size_t total = burn_in + n_draws;
  for (std::size_t i = 0; i < total; ++i) {
    State cand = propose(rng);
    const double w = log_target(cand) - log_q(cand);
    const double log_alpha = w - cur_w;
    if (std::isfinite(w) && (log_alpha >= 0.0 || std::log(rng.uniform()) < log_alpha)) {
      cur = cand;
      cur_w = w;
      ++accepted;
    }
    if (i >= burn_in) out.states.push_back(cur);
  }
  out.steps = total;
  out.acceptance_rate = static_cast<double>(accepted) / static_cast<double>(total);
  return out;
}

struct PredictiveConfig {
  std::size_t n_draws = 250;
  std::size_t burn_in = 500;
  // Normal proposal (mean, sd) on h; default Normal(h_hat, 1 / sqrt(H)).
  std::optional<double> proposal_mean;
  std::optional<double> proposal_sd;
  std::uint64_t seed = 0;
  double min_acceptance = 0.01;
  MarginalOptions marginal;
};

struct PosteriorBandwidths {
  std::vector<double> draws;
  double acceptance_rate = 0.0;
  double h_hat = 0.0;
  double curvature = 0.0;
  double proposal_mean = 0.0;
  double proposal_sd = 0.0;
};

/// Draws from pi(h | valid) proportional to pi(h | h_hat) prod f(valid_i | h, train),
/// with gamma = h_hat as in the marginal likelihood.
inline PosteriorBandwidths sample_posterior_bandwidths(const Sample& train, const Sample& valid,
                                                       KernelKind kernel,
                                                       const PredictiveConfig& cfg = {}) {
  if (cfg.n_draws < 1) throw InputError("posterior sampling needs n_draws >= 1");
  const auto lap = laplace_log_marginal(train, valid, kernel, cfg.marginal);
  PosteriorBandwidths out;
  out.h_hat = lap.h_hat;
  out.curvature = lap.curvature;
  out.proposal_mean = cfg.proposal_mean.value_or(lap.h_hat);
  out.proposal_sd = cfg.proposal_sd.value_or(1.0 / std::sqrt(lap.curvature));
  if (!(out.proposal_sd > 0.0) || !std::isfinite(out.proposal_sd)) {
    throw InputError("proposal sd must be positive");
  }
  const BandwidthPrior prior{lap.h_hat};
  const double mu = out.proposal_mean, sd = out.proposal_sd;
  auto log_target = [&](double h) {
    if (!(h > 0.0)) return -std::numeric_limits<double>::infinity();
    const auto pass =
        detail::likelihood_pass(train.values(), valid.values(), kernel, h, false, true);
    return prior_logpdf(prior, h) + pass.loglik;
  };
  auto log_q = [&](double h) {
    const double z = (h - mu) / sd;
    return -0.5 * z * z;
  };
  auto propose = [&](Rng& rng) {
    // Truncated at h > 0 by rejection.
    for (int i = 0; i < 1000000; ++i) {
      const double h = mu + sd * rng.normal();
      if (h > 0.0) return h;
    }
    throw NumericalError("proposal puts almost no mass on h > 0");
  };
  Rng rng(derive_seed(cfg.seed, streams::chain, 0));
  const auto chain =
      independence_sampler<double>(log_target, propose, log_q, lap.h_hat, cfg.n_draws,
                                   cfg.burn_in, rng);
  out.acceptance_rate = chain.acceptance_rate;
  if (chain.acceptance_rate < cfg.min_acceptance) {
    throw NumericalError("independence sampler acceptance rate " +
                         std::to_string(chain.acceptance_rate) +
                         " is below the minimum; the proposal does not match the posterior");
  }
  out.draws = chain.states;
  return out;
}

/// p_pred(x) = (1 / N) sum_i fhat(x | h_i, train).
class PredictiveDensity {
 public:
  PredictiveDensity(Sample train, std::vector<double> bandwidths, KernelKind kernel)
      : train_(std::move(train)), bandwidths_(std::move(bandwidths)), kernel_(kernel) {
    require_size(train_, 1, "predictive training data");
    if (bandwidths_.empty()) throw InputError("posterior predictive needs at least one draw");
    for (double h : bandwidths_) detail::require_bandwidth(h);
  }

  [[nodiscard]] double operator()(double x) const {
    detail::CompensatedSum s;
    const double n = static_cast<double>(train_.size());
    for (double h : bandwidths_) {
      s.add(detail::kernel_norm(kernel_) * detail::kernel_sum(kernel_, train_.values(), x, 1.0 / h) /
            (n * h));
    }
    return s.value() / static_cast<double>(bandwidths_.size());
  }

  [[nodiscard]] const std::vector<double>& bandwidths() const noexcept { return bandwidths_; }
  [[nodiscard]] const Sample& train() const noexcept { return train_; }
  [[nodiscard]] KernelKind kernel() const noexcept { return kernel_; }

  [[nodiscard]] Density as_density() const {
    return {[p = *this](double x) { return p(x); }};
  }

 private:
  Sample train_;
  std::vector<double> bandwidths_;
  KernelKind kernel_;
};

inline PredictiveDensity posterior_predictive_density(const Sample& train,
                                                      std::vector<double> draws,
                                                      KernelKind kernel = KernelKind::Hall) {
  return PredictiveDensity(train, std::move(draws), kernel);
}

}  // namespace cvbf
