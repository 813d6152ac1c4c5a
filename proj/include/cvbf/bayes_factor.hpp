#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cvbf/core.hpp"
#include "cvbf/kde.hpp"
#include "cvbf/marginal.hpp"
#include "cvbf/parallel.hpp"
#include "cvbf/random.hpp"

namespace cvbf {

/// How data with bounded support are handled before density estimation.
/// LogReflect maps (0, 1) data to -log x and reflects it about 0, for both the
/// training and the validation part of each sample. The Jacobian of the map
/// is the same for every model evaluated on a given validation point, so it
/// cancels in the Bayes factor.
enum class BoundaryTreatment { None, LogReflect };

struct CvbfConfig {
  // Training sizes; unset means the default rule (see resolve_training_sizes).
  std::optional<std::size_t> r;
  std::optional<std::size_t> s;
  int n_splits = 30;
  std::uint64_t seed = 0;
  KernelKind kernel = KernelKind::Hall;
  MarginalMethod method = MarginalMethod::Laplace;
  BoundaryTreatment boundary = BoundaryTreatment::None;
  MarginalOptions marginal;
};

/// Cap on the default training size once m + n reaches 5000.
inline constexpr std::size_t large_sample_threshold = 5000;
inline constexpr std::size_t large_sample_train_cap = 1250;

/// r = [m/2], s = [n/2]; for m + n >= 5000 each is capped at 1250.
inline std::pair<std::size_t, std::size_t> resolve_training_sizes(const CvbfConfig& cfg,
                                                                  std::size_t m, std::size_t n) {
  auto pick = [&](std::optional<std::size_t> v, std::size_t size) {
    if (v) return *v;
    std::size_t d = size / 2;
    if (m + n >= large_sample_threshold) d = std::min(d, large_sample_train_cap);
    return d;
  };
  const std::size_t r = pick(cfg.r, m), s = pick(cfg.s, n);
  if (r < 1 || r >= m) {
    throw InputError("training size r must satisfy 1 <= r < m = " + std::to_string(m) +
                     ", got " + std::to_string(r));
  }
  if (s < 1 || s >= n) {
    throw InputError("training size s must satisfy 1 <= s < n = " + std::to_string(n) +
                     ", got " + std::to_string(s));
  }
  return {r, s};
}

struct SplitMarginals {
  MarginalResult x;
  MarginalResult y;
  MarginalResult pooled;
};

struct SplitResult {
  double log_bf = 0.0;
  SplitMarginals marginals;
};

namespace detail {

template <class F>
MarginalResult labelled(const char* which, F&& f) {
  try {
    return f();
  } catch (const InputError& e) {
    throw InputError(std::string("marginal ") + which + ": " + e.what());
  } catch (const NumericalError& e) {
    throw NumericalError(std::string("marginal ") + which + ": " + e.what());
  }
}

struct PreparedSplit {
  Sample train, valid;
};

inline PreparedSplit prepare(const Sample& s, const SplitPlan& plan, BoundaryTreatment b) {
  auto [train, valid] = plan.apply(s);
  if (b == BoundaryTreatment::LogReflect) {
    return {reflect_transform(train), reflect_transform(valid)};
  }
  return {std::move(train), std::move(valid)};
}

}  // namespace detail

struct SplitOptions {
  KernelKind kernel = KernelKind::Hall;
  MarginalMethod method = MarginalMethod::Laplace;
  BoundaryTreatment boundary = BoundaryTreatment::None;
  MarginalOptions marginal;
};

/// log BF = log m_X + log m_Y - log m_0 for one split of each sample. The null
/// model pools both training sets and is evaluated on both validation sets;
/// pooled data are put in sorted order so the result is symmetric in the two
/// samples bit for bit.
inline SplitResult cvbf_single_split(const Sample& x, const Sample& y, const SplitPlan& split_x,
                                     const SplitPlan& split_y, const SplitOptions& opts = {}) {
  const auto px = detail::prepare(x, split_x, opts.boundary);
  const auto py = detail::prepare(y, split_y, opts.boundary);
  const Sample pooled_train = concat(px.train, py.train).sorted();
  const Sample pooled_valid = concat(px.valid, py.valid).sorted();
  auto marginal = [&](const Sample& t, const Sample& v) {
    return log_marginal(t, v, opts.kernel, opts.method, opts.marginal);
  };
  SplitResult r;
  r.marginals.x = detail::labelled("m_X", [&] { return marginal(px.train, px.valid); });
  r.marginals.y = detail::labelled("m_Y", [&] { return marginal(py.train, py.valid); });
  r.marginals.pooled =
      detail::labelled("m_0", [&] { return marginal(pooled_train, pooled_valid); });
  r.log_bf = r.marginals.x.log_marginal + r.marginals.y.log_marginal -
             r.marginals.pooled.log_marginal;
  return r;
}

struct SplitRecord {
  int index = 0;
  SplitPlan split_x;
  SplitPlan split_y;
  bool ok = false;
  std::string error;
  SplitResult result;
};

struct CvbfReport {
  std::vector<double> per_split_log_bf;  // successful splits, in split order
  double log_bf_geo = 0.0;              // mean of per_split_log_bf
  std::size_t r = 0;
  std::size_t s = 0;
  CvbfConfig config;
  std::vector<SplitRecord> splits;
  int failed = 0;
  std::vector<std::string> warnings;
};

inline constexpr double max_failed_split_fraction = 0.2;

/// Averages the log CVBF over cfg.n_splits independent random splits. Split k
/// uses seeds derive_seed(cfg.seed, split_x / split_y, k).
inline CvbfReport cvbf_multi_split(const Sample& x, const Sample& y, const CvbfConfig& cfg) {
  require_size(x, 2, "sample x");
  require_size(y, 2, "sample y");
  if (cfg.n_splits < 1) throw InputError("n_splits must be positive");
  const auto [r, s] = resolve_training_sizes(cfg, x.size(), y.size());
  CvbfReport rep;
  rep.r = r;
  rep.s = s;
  rep.config = cfg;
  rep.config.r = r;
  rep.config.s = s;
  rep.splits.resize(static_cast<std::size_t>(cfg.n_splits));
  const SplitOptions so{cfg.kernel, cfg.method, cfg.boundary, cfg.marginal};
  std::vector<std::exception_ptr> errors(rep.splits.size());
  parallel_for(rep.splits.size(), [&](std::size_t k) {
    auto& rec = rep.splits[k];
    rec.index = static_cast<int>(k);
    rec.split_x = random_split(x.size(), r, derive_seed(cfg.seed, streams::split_x, k));
    rec.split_y = random_split(y.size(), s, derive_seed(cfg.seed, streams::split_y, k));
    try {
      rec.result = cvbf_single_split(x, y, rec.split_x, rec.split_y, so);
      rec.ok = true;
    } catch (const Error& e) {
      rec.error = e.what();
      errors[k] = std::current_exception();
    }
  });
  detail::CompensatedSum sum;
  for (const auto& rec : rep.splits) {
    if (rec.ok) {
      rep.per_split_log_bf.push_back(rec.result.log_bf);
      sum.add(rec.result.log_bf);
    } else {
      ++rep.failed;
      rep.warnings.push_back("split " + std::to_string(rec.index) + " failed: " + rec.error);
    }
  }
  if (rep.failed > max_failed_split_fraction * cfg.n_splits) {
    for (auto& e : errors) {
      if (e) {
        try {
          std::rethrow_exception(e);
        } catch (const InputError& err) {
          throw InputError(std::to_string(rep.failed) + " of " + std::to_string(cfg.n_splits) +
                           " splits failed; first: " + err.what());
        } catch (const Error& err) {
          throw NumericalError(std::to_string(rep.failed) + " of " +
                               std::to_string(cfg.n_splits) + " splits failed; first: " +
                               err.what());
        }
      }
    }
  }
  rep.log_bf_geo = sum.value() / static_cast<double>(rep.per_split_log_bf.size());
  return rep;
}

/// Candidate training sizes with prior probabilities.
struct TrainSizePrior {
  std::vector<std::size_t> sizes;
  std::vector<double> probs;

  static TrainSizePrior uniform(std::vector<std::size_t> sizes) {
    TrainSizePrior p;
    p.probs.assign(sizes.size(), 1.0 / static_cast<double>(sizes.size()));
    p.sizes = std::move(sizes);
    return p;
  }

  void validate(std::size_t pool_size) const {
    if (sizes.empty() || sizes.size() != probs.size()) {
      throw InputError("training-size prior needs matching nonempty sizes and probabilities");
    }
    double total = 0.0;
    for (std::size_t i = 0; i < sizes.size(); ++i) {
      if (sizes[i] < 1 || (i > 0 && sizes[i] <= sizes[i - 1])) {
        throw InputError("training sizes must be positive and strictly increasing");
      }
      if (sizes[i] > pool_size) {
        throw InputError("training size " + std::to_string(sizes[i]) +
                         " exceeds the training pool size " + std::to_string(pool_size));
      }
      if (!(probs[i] >= 0.0)) throw InputError("training-size probabilities must be >= 0");
      total += probs[i];
    }
    if (std::abs(total - 1.0) > 1e-9) {
      throw InputError("training-size probabilities must sum to 1");
    }
  }
};

struct MixtureTerm {
  std::size_t r = 0;
  double log_alt = 0.0;   // log m_X,r + log m_Y,r
  double log_null = 0.0;  // log m_0,r
  double log_bf = 0.0;
};

struct MixtureResult {
  double log_bf = 0.0;
  std::size_t pool_size = 0;
  std::vector<MixtureTerm> terms;
};

struct MixtureOptions {
  std::optional<std::size_t> pool_size;  // default [m/2]
  std::uint64_t seed = 0;
  SplitOptions split;
};

/// Training-size-mixture Bayes factor for m = n:
///   log sum_r p(r) m_r - log sum_r p(r) m_0,r
/// with one training pool of size K and one shared validation set per sample;
/// each r subsamples r points from the pools.
inline MixtureResult bf_train_size_mixture(const Sample& x, const Sample& y,
                                           const TrainSizePrior& prior,
                                           const MixtureOptions& opts = {}) {
  if (x.size() != y.size()) {
    throw InputError("training-size mixture is defined for equal sample sizes only (m = " +
                     std::to_string(x.size()) + ", n = " + std::to_string(y.size()) + ")");
  }
  require_size(x, 2, "sample x");
  const std::size_t m = x.size();
  const std::size_t pool = opts.pool_size.value_or(m / 2);
  if (pool < 1 || pool >= m) throw InputError("training pool size must satisfy 1 <= K < m");
  prior.validate(pool);

  const auto pool_x = random_split(m, pool, derive_seed(opts.seed, streams::split_x, 0));
  const auto pool_y = random_split(m, pool, derive_seed(opts.seed, streams::split_y, 0));

  MixtureResult out;
  out.pool_size = pool;
  out.terms.resize(prior.sizes.size());
  parallel_for(prior.sizes.size(), [&](std::size_t i) {
    const std::size_t r = prior.sizes[i];
    auto subsample = [&](const SplitPlan& p, std::uint64_t stream_index) {
      SplitPlan q = p;
      if (r < pool) {
        Rng rng(derive_seed(opts.seed, streams::mixture, stream_index));
        auto pick = sample_without_replacement(pool, r, rng);
        std::sort(pick.begin(), pick.end());
        q.train_idx.clear();
        for (auto k : pick) q.train_idx.push_back(p.train_idx[k]);
      }
      return q;
    };
    const SplitPlan sx = subsample(pool_x, 2 * i);
    const SplitPlan sy = subsample(pool_y, 2 * i + 1);
    // The plans deliberately leave the unused pool points out of both sets.
    auto part = [&](const Sample& s, const SplitPlan& p) {
      auto train = s.subset(p.train_idx);
      auto valid = s.subset(p.valid_idx);
      if (opts.split.boundary == BoundaryTreatment::LogReflect) {
        return detail::PreparedSplit{reflect_transform(train), reflect_transform(valid)};
      }
      return detail::PreparedSplit{std::move(train), std::move(valid)};
    };
    const auto px = part(x, sx), py = part(y, sy);
    const Sample pooled_train = concat(px.train, py.train).sorted();
    const Sample pooled_valid = concat(px.valid, py.valid).sorted();
    auto marginal = [&](const Sample& t, const Sample& v) {
      return log_marginal(t, v, opts.split.kernel, opts.split.method, opts.split.marginal);
    };
    const auto mx = detail::labelled("m_X", [&] { return marginal(px.train, px.valid); });
    const auto my = detail::labelled("m_Y", [&] { return marginal(py.train, py.valid); });
    const auto m0 = detail::labelled("m_0", [&] { return marginal(pooled_train, pooled_valid); });
    auto& t = out.terms[i];
    t.r = r;
    t.log_alt = mx.log_marginal + my.log_marginal;
    t.log_null = m0.log_marginal;
    t.log_bf = t.log_alt - t.log_null;
  });
  std::vector<double> alt, null;
  for (std::size_t i = 0; i < out.terms.size(); ++i) {
    if (prior.probs[i] == 0.0) continue;
    const double lp = std::log(prior.probs[i]);
    alt.push_back(lp + out.terms[i].log_alt);
    null.push_back(lp + out.terms[i].log_null);
  }
  out.log_bf = detail::log_sum_exp(alt) - detail::log_sum_exp(null);
  return out;
}

}  // namespace cvbf
