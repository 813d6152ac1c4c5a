#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>
#include <string_view>
#include <vector>

#include "cvbf/baselines.hpp"
#include "cvbf/bayes_factor.hpp"
#include "cvbf/core.hpp"
#include "cvbf/kde.hpp"
#include "cvbf/marginal.hpp"
#include "cvbf/parallel.hpp"
#include "cvbf/random.hpp"
#include "cvbf/stats.hpp"

namespace cvbf::sim {

// Closed-form densities used by the simulation settings.
inline double normal_pdf(double x, double sd = 1.0) {
  const double z = x / sd;
  return std::exp(-0.5 * z * z) / (sd * std::sqrt(2.0 * std::numbers::pi));
}

inline double cauchy_pdf(double x, double loc = 0.0) {
  const double z = x - loc;
  return 1.0 / (std::numbers::pi * (1.0 + z * z));
}

inline double uniform01_pdf(double x) { return x >= 0.0 && x <= 1.0 ? 1.0 : 0.0; }

inline double arcsine_pdf(double x) {
  return x > 0.0 && x < 1.0 ? 1.0 / (std::numbers::pi * std::sqrt(x * (1.0 - x))) : 0.0;
}

enum class AltSetting { ScaleChange, LocationShift, TailDifference, FiniteSupport };

inline std::string_view to_string(AltSetting s) {
  switch (s) {
    case AltSetting::ScaleChange:
      return "scale";
    case AltSetting::LocationShift:
      return "location";
    case AltSetting::TailDifference:
      return "tail";
    case AltSetting::FiniteSupport:
      return "finite";
  }
  return "";
}

inline AltSetting parse_setting(std::string_view s) {
  if (s == "scale") return AltSetting::ScaleChange;
  if (s == "location") return AltSetting::LocationShift;
  if (s == "tail") return AltSetting::TailDifference;
  if (s == "finite") return AltSetting::FiniteSupport;
  throw InputError("unknown setting '" + std::string(s) +
                   "' (expected scale, location, tail or finite)");
}

// Scale of the normal g in the tail setting: 0.6745 phi(0.6745 x) has the
// quartiles of the standard Cauchy.
inline constexpr double tail_normal_rate = 0.6745;

inline Density density_f(AltSetting s) {
  switch (s) {
    case AltSetting::ScaleChange:
      return {[](double x) { return normal_pdf(x); }};
    case AltSetting::LocationShift:
    case AltSetting::TailDifference:
      return {[](double x) { return cauchy_pdf(x); }};
    case AltSetting::FiniteSupport:
      return {uniform01_pdf, 0.0, 1.0};
  }
  throw InputError("unknown setting");
}

inline Density density_g(AltSetting s) {
  switch (s) {
    case AltSetting::ScaleChange:
      return {[](double x) { return normal_pdf(x, 2.0); }};
    case AltSetting::LocationShift:
      return {[](double x) { return cauchy_pdf(x, -1.0); }};
    case AltSetting::TailDifference:
      return {[](double x) { return normal_pdf(x, 1.0 / tail_normal_rate); }};
    case AltSetting::FiniteSupport:
      return {arcsine_pdf, 0.0, 1.0};
  }
  throw InputError("unknown setting");
}

/// (1 - p) f + p g.
inline Density density_mixture(AltSetting s, double p) {
  const auto f = density_f(s), g = density_g(s);
  return {[f, g, p](double x) { return (1.0 - p) * f.pdf(x) + p * g.pdf(x); }, f.lower, f.upper};
}

inline double draw_f(AltSetting s, Rng& rng) {
  switch (s) {
    case AltSetting::ScaleChange:
      return rng.normal();
    case AltSetting::LocationShift:
    case AltSetting::TailDifference:
      return rng.cauchy();
    case AltSetting::FiniteSupport:
      return rng.uniform();
  }
  return 0.0;
}

inline double draw_g(AltSetting s, Rng& rng) {
  switch (s) {
    case AltSetting::ScaleChange:
      return 2.0 * rng.normal();
    case AltSetting::LocationShift:
      return rng.cauchy() - 1.0;
    case AltSetting::TailDifference:
      return rng.normal() / tail_normal_rate;
    case AltSetting::FiniteSupport:
      return rng.arcsine();
  }
  return 0.0;
}

/// x ~ f (m points); each of the n y-points comes from g with probability p,
/// otherwise from f.
inline std::pair<Sample, Sample> generate(AltSetting s, double p, std::size_t m, std::size_t n,
                                          std::uint64_t seed) {
  if (!(p >= 0.0 && p <= 1.0)) throw InputError("mixing proportion must lie in [0, 1]");
  Rng rng(seed);
  std::vector<double> x(m), y(n);
  for (auto& v : x) v = draw_f(s, rng);
  for (auto& v : y) v = rng.bernoulli(p) ? draw_g(s, rng) : draw_f(s, rng);
  return {Sample(std::move(x)), Sample(std::move(y))};
}

struct BayesSimDraw {
  double p = 0.0;
  Sample x;
  Sample y;
};

/// Draw d of a BayesSim run: p ~ Beta(1/2, 1/2), then generate().
inline BayesSimDraw bayes_sim_draw(AltSetting s, std::size_t m, std::size_t n,
                                   std::uint64_t seed, std::uint64_t d) {
  Rng prng(derive_seed(seed, streams::mixture, d));
  BayesSimDraw out;
  out.p = prng.arcsine();
  auto [x, y] = generate(s, out.p, m, n, derive_seed(seed, streams::data, d));
  out.x = std::move(x);
  out.y = std::move(y);
  return out;
}

inline std::vector<double> normal_sample(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = rng.normal();
  return v;
}

inline std::vector<double> cauchy_sample(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = rng.cauchy();
  return v;
}

/// sqrt(sum_{i>=2} (b_i - b_{i-1})^2 / (2 (N - 1))) for values ordered by p.
inline double nonparametric_sd(std::span<const double> b) {
  if (b.size() < 2) throw InputError("nonparametric sd needs at least two values");
  detail::CompensatedSum s;
  for (std::size_t i = 1; i < b.size(); ++i) s.add((b[i] - b[i - 1]) * (b[i] - b[i - 1]));
  return std::sqrt(s.value() / (2.0 * static_cast<double>(b.size() - 1)));
}

struct Summary {
  std::size_t count = 0;
  double mean = 0.0;
  double median = 0.0;
  double sd = 0.0;
  double frac_below_zero = 0.0;
  double frac_below_log20 = 0.0;  // fraction < -log 20
  double frac_above_zero = 0.0;
};

inline Summary summarize(std::span<const double> v) {
  Summary s;
  s.count = v.size();
  if (v.empty()) return s;
  s.mean = stats::mean(v);
  s.median = stats::median(v);
  s.sd = v.size() > 1 ? stats::sd(v) : 0.0;
  const double n = static_cast<double>(v.size());
  const double thr = -std::log(20.0);
  s.frac_below_zero = static_cast<double>(std::count_if(v.begin(), v.end(), [](double a) { return a < 0.0; })) / n;
  s.frac_below_log20 = static_cast<double>(std::count_if(v.begin(), v.end(), [&](double a) { return a < thr; })) / n;
  s.frac_above_zero = static_cast<double>(std::count_if(v.begin(), v.end(), [](double a) { return a > 0.0; })) / n;
  return s;
}

// ---------------------------------------------------------------- null study

struct NullStudyConfig {
  std::vector<std::size_t> n_list{200, 400, 800};
  std::vector<std::size_t> r_list{50, 75, 112};
  int reps = 100;
  int n_splits = 30;
  std::uint64_t seed = 0;
  KernelKind kernel = KernelKind::Hall;
  bool polya = true;
};

struct NullRow {
  std::size_t n = 0;
  std::size_t r = 0;
  int rep = 0;
  double log_cvbf = 0.0;
  double polya_log_bf = std::numeric_limits<double>::quiet_NaN();
  int polya_depth = 0;
  int failed_splits = 0;
};

struct NullGroup {
  std::size_t n = 0;
  std::size_t r = 0;
  Summary cvbf;
  Summary polya;
};

struct NullStudy {
  std::vector<NullRow> rows;
  std::vector<NullGroup> groups;
};

/// Both samples N(0, 1) of size n; replication k of size n uses data seed
/// derive_seed(derive_seed(seed, replication, k), data, n).
inline NullStudy run_null_study(const NullStudyConfig& cfg) {
  if (cfg.n_list.size() != cfg.r_list.size() || cfg.n_list.empty()) {
    throw InputError("null study needs matching nonempty n and r lists");
  }
  if (cfg.reps < 1) throw InputError("null study needs reps >= 1");
  NullStudy out;
  const auto reps = static_cast<std::size_t>(cfg.reps);
  out.rows.resize(cfg.n_list.size() * reps);
  parallel_for(out.rows.size(), [&](std::size_t idx) {
    const std::size_t g = idx / reps, k = idx % reps;
    const std::size_t n = cfg.n_list[g], r = cfg.r_list[g];
    const std::uint64_t rep_seed = derive_seed(cfg.seed, streams::replication, k);
    const std::uint64_t data_seed = derive_seed(rep_seed, streams::data, n);
    auto v = normal_sample(2 * n, data_seed);
    const Sample x(std::vector<double>(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(n)));
    const Sample y(std::vector<double>(v.begin() + static_cast<std::ptrdiff_t>(n), v.end()));
    CvbfConfig c;
    c.r = r;
    c.s = r;
    c.n_splits = cfg.n_splits;
    c.seed = derive_seed(rep_seed, streams::split_x, n);
    c.kernel = cfg.kernel;
    const auto rep = cvbf_multi_split(x, y, c);
    auto& row = out.rows[idx];
    row.n = n;
    row.r = r;
    row.rep = static_cast<int>(k);
    row.log_cvbf = rep.log_bf_geo;
    row.failed_splits = rep.failed;
    if (cfg.polya) {
      const auto [sx, sy] = robust_standardize(x, y);
      const auto pt = polya_tree_log_bf(sx, sy);
      row.polya_log_bf = pt.log_bf;
      row.polya_depth = pt.depth;
    }
  });
  for (std::size_t g = 0; g < cfg.n_list.size(); ++g) {
    std::vector<double> a, b;
    for (std::size_t k = 0; k < reps; ++k) {
      const auto& row = out.rows[g * reps + k];
      a.push_back(row.log_cvbf);
      if (cfg.polya) b.push_back(row.polya_log_bf);
    }
    out.groups.push_back({cfg.n_list[g], cfg.r_list[g], summarize(a), summarize(b)});
  }
  return out;
}

// --------------------------------------------------------- alternative study

struct AltStudyConfig {
  AltSetting setting = AltSetting::ScaleChange;
  std::size_t m = 280, n = 280, r = 120, s = 120;
  int n_draws = 100;
  int n_splits = 30;
  std::uint64_t seed = 0;
  KernelKind kernel = KernelKind::Hall;
  bool baselines = true;
};

struct AltRow {
  int draw = 0;
  double p = 0.0;
  double log_cvbf = 0.0;
  double polya_normal = std::numeric_limits<double>::quiet_NaN();
  double polya_cauchy = std::numeric_limits<double>::quiet_NaN();
  double ks_log_p = std::numeric_limits<double>::quiet_NaN();
  // Reflected -log CVBF; finite-support setting only.
  double log_cvbf_reflected = std::numeric_limits<double>::quiet_NaN();
};

struct AltStudy {
  AltStudyConfig config;
  std::vector<AltRow> rows;  // in draw order
};

inline AltStudy run_alt_study(const AltStudyConfig& cfg) {
  if (cfg.n_draws < 1) throw InputError("alternative study needs n_draws >= 1");
  AltStudy out;
  out.config = cfg;
  out.rows.resize(static_cast<std::size_t>(cfg.n_draws));
  parallel_for(out.rows.size(), [&](std::size_t d) {
    const auto draw = bayes_sim_draw(cfg.setting, cfg.m, cfg.n, cfg.seed, d);
    CvbfConfig c;
    c.r = cfg.r;
    c.s = cfg.s;
    c.n_splits = cfg.n_splits;
    c.seed = derive_seed(cfg.seed, streams::replication, d);
    c.kernel = cfg.kernel;
    auto& row = out.rows[d];
    row.draw = static_cast<int>(d);
    row.p = draw.p;
    row.log_cvbf = cvbf_multi_split(draw.x, draw.y, c).log_bf_geo;
    if (cfg.setting == AltSetting::FiniteSupport) {
      c.boundary = BoundaryTreatment::LogReflect;
      row.log_cvbf_reflected = cvbf_multi_split(draw.x, draw.y, c).log_bf_geo;
    }
    if (cfg.baselines) {
      const auto [sx, sy] = robust_standardize(draw.x, draw.y);
      PolyaTreeConfig pc;
      row.polya_normal = polya_tree_log_bf(sx, sy, pc).log_bf;
      pc.base = PolyaBase::Cauchy;
      row.polya_cauchy = polya_tree_log_bf(sx, sy, pc).log_bf;
      row.ks_log_p = std::log(ks_test(draw.x, draw.y).p_value);
    }
  });
  return out;
}

/// Values of `field` ordered by ascending p.
template <class Field>
std::vector<double> ordered_by_p(const AltStudy& st, Field field) {
  std::vector<std::size_t> idx(st.rows.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return st.rows[a].p < st.rows[b].p; });
  std::vector<double> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(field(st.rows[i]));
  return out;
}

/// Mean of `field` over the draws whose p is in the top `fraction` of the run.
template <class Field>
double top_fraction_mean(const AltStudy& st, Field field, double fraction = 0.1) {
  const auto v = ordered_by_p(st, field);
  const auto k = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(v.size()))));
  return stats::mean(std::span<const double>(v).last(k));
}

// ----------------------------------------------------------- bandwidth study

struct BandwidthStudyConfig {
  std::vector<std::pair<std::size_t, std::size_t>> pairs{{200, 300}, {400, 600}};
  int reps = 100;
  std::uint64_t seed = 0;
  KernelKind kernel = KernelKind::Hall;
  bool loo = true;
  bool kl = true;
  // Gaussian-kernel run on the first pair with the fixed interval below.
  bool gaussian_variant = true;
  BandwidthInterval gaussian_bounds{0.001, 30.0};
};

struct BandwidthRow {
  std::size_t r = 0;
  std::size_t v = 0;
  int rep = 0;
  double h_lo = std::numeric_limits<double>::quiet_NaN();
  double h_cv = 0.0;
  double h_kl = std::numeric_limits<double>::quiet_NaN();
  bool cv_at_boundary = false;
};

struct BandwidthGroup {
  std::size_t r = 0, v = 0;
  Summary h_lo, h_cv, h_kl;
};

struct GaussianVariantRow {
  int rep = 0;
  double h = 0.0;
  bool at_upper = false;
};

struct BandwidthStudy {
  std::vector<BandwidthRow> rows;
  std::vector<BandwidthGroup> groups;
  std::vector<GaussianVariantRow> gaussian;
  Summary gaussian_summary;
  double gaussian_frac_at_bound = 0.0;
};

/// Cauchy data; replication k of pair (r, v) draws r + v points with seed
/// derive_seed(derive_seed(seed, replication, k), data, r); the first r are
/// training data. The Gaussian variant reuses the data of the first pair.
inline BandwidthStudy run_bandwidth_study(const BandwidthStudyConfig& cfg) {
  if (cfg.pairs.empty() || cfg.reps < 1) throw InputError("bandwidth study needs pairs and reps");
  const auto reps = static_cast<std::size_t>(cfg.reps);
  auto data = [&](std::size_t r, std::size_t v, std::size_t k) {
    const auto all =
        cauchy_sample(r + v, derive_seed(derive_seed(cfg.seed, streams::replication, k),
                                         streams::data, r));
    return std::pair{Sample(std::vector<double>(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(r))),
                     Sample(std::vector<double>(all.begin() + static_cast<std::ptrdiff_t>(r), all.end()))};
  };
  const Density truth{[](double x) { return cauchy_pdf(x); }};
  BandwidthStudy out;
  out.rows.resize(cfg.pairs.size() * reps);
  parallel_for(out.rows.size(), [&](std::size_t idx) {
    const auto [r, v] = cfg.pairs[idx / reps];
    const std::size_t k = idx % reps;
    const auto [train, valid] = data(r, v, k);
    auto& row = out.rows[idx];
    row.r = r;
    row.v = v;
    row.rep = static_cast<int>(k);
    const auto fit = maximize_bandwidth(train, valid, cfg.kernel);
    row.h_cv = fit.h;
    row.cv_at_boundary = fit.at_boundary();
    if (cfg.loo) row.h_lo = maximize_loo_bandwidth(train, cfg.kernel).h;
    if (cfg.kl) row.h_kl = kl_optimal_bandwidth(truth, train, cfg.kernel).h;
  });
  for (std::size_t g = 0; g < cfg.pairs.size(); ++g) {
    std::vector<double> lo, cv, kl;
    for (std::size_t k = 0; k < reps; ++k) {
      const auto& row = out.rows[g * reps + k];
      lo.push_back(row.h_lo);
      cv.push_back(row.h_cv);
      kl.push_back(row.h_kl);
    }
    BandwidthGroup grp;
    grp.r = cfg.pairs[g].first;
    grp.v = cfg.pairs[g].second;
    grp.h_cv = summarize(cv);
    if (cfg.loo) grp.h_lo = summarize(lo);
    if (cfg.kl) grp.h_kl = summarize(kl);
    out.groups.push_back(grp);
  }
  if (cfg.gaussian_variant) {
    const auto [r, v] = cfg.pairs.front();
    out.gaussian.resize(reps);
    parallel_for(reps, [&](std::size_t k) {
      const auto [train, valid] = data(r, v, k);
      const auto fit = maximize_bandwidth(train, valid, KernelKind::Gaussian, cfg.gaussian_bounds);
      out.gaussian[k] = {static_cast<int>(k), fit.h, fit.at_upper};
    });
    std::vector<double> h;
    int at = 0;
    for (const auto& g : out.gaussian) {
      h.push_back(g.h);
      at += g.at_upper;
    }
    out.gaussian_summary = summarize(h);
    out.gaussian_frac_at_bound = static_cast<double>(at) / static_cast<double>(reps);
  }
  return out;
}

// ------------------------------------------------------------ Laplace check

struct LaplaceCheckConfig {
  std::vector<std::size_t> n_list{200, 500, 1000};
  int reps = 100;
  std::uint64_t seed = 0;
  KernelKind kernel = KernelKind::Hall;
};

struct LaplaceCheckRow {
  std::size_t n = 0;
  int rep = 0;
  double laplace = 0.0;
  double quadrature = 0.0;
  double rel_error = 0.0;
};

struct LaplaceCheckGroup {
  std::size_t n = 0;
  double median_rel_error = 0.0;
  double max_rel_error = 0.0;
};

struct LaplaceCheck {
  std::vector<LaplaceCheckRow> rows;
  std::vector<LaplaceCheckGroup> groups;
};

/// N(0, 1) data of size n, training fraction 1/4; relative error of the
/// Laplace log marginal against the quadrature value.
inline LaplaceCheck run_laplace_check(const LaplaceCheckConfig& cfg) {
  if (cfg.n_list.empty() || cfg.reps < 1) throw InputError("Laplace check needs sizes and reps");
  const auto reps = static_cast<std::size_t>(cfg.reps);
  LaplaceCheck out;
  out.rows.resize(cfg.n_list.size() * reps);
  parallel_for(out.rows.size(), [&](std::size_t idx) {
    const std::size_t n = cfg.n_list[idx / reps], k = idx % reps;
    const std::uint64_t rep_seed = derive_seed(cfg.seed, streams::replication, k);
    const Sample data(normal_sample(n, derive_seed(rep_seed, streams::data, n)));
    const auto plan = random_split(n, n / 4, derive_seed(rep_seed, streams::split_x, n));
    const auto [train, valid] = plan.apply(data);
    auto& row = out.rows[idx];
    row.n = n;
    row.rep = static_cast<int>(k);
    row.laplace = laplace_log_marginal(train, valid, cfg.kernel).log_marginal;
    row.quadrature = quadrature_log_marginal(train, valid, cfg.kernel).log_marginal;
    row.rel_error = std::abs((row.laplace - row.quadrature) / row.quadrature);
  });
  for (std::size_t g = 0; g < cfg.n_list.size(); ++g) {
    std::vector<double> e;
    for (std::size_t k = 0; k < reps; ++k) e.push_back(out.rows[g * reps + k].rel_error);
    out.groups.push_back({cfg.n_list[g], stats::median(e), *std::max_element(e.begin(), e.end())});
  }
  return out;
}

}  // namespace cvbf::sim
