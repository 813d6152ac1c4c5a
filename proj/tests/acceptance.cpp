// Acceptance runs. Usage: cvbf_acceptance <laplace|bandwidth|null|alt|oracle|surrogate|all>
// Prints one PASS/FAIL line per criterion; exits nonzero if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include <boost/math/quadrature/exp_sinh.hpp>

#include "cvbf.hpp"

namespace {

using Clock = std::chrono::steady_clock;
using cvbf::KernelKind;
using cvbf::Sample;

int failures = 0;

void report(const char* id, bool ok, const std::string& what) {
  std::printf("%s [%s] %s\n", ok ? "PASS" : "FAIL", id, what.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double minutes_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count() / 60.0;
}

bool in(double v, double lo, double hi) { return v >= lo && v <= hi; }

// ---------------------------------------------------------------- criterion 1

void laplace() {
  const auto t0 = Clock::now();
  cvbf::sim::LaplaceCheckConfig c;
  c.n_list = {200, 500};
  c.reps = 100;
  c.seed = 20240101;
  const auto st = cvbf::sim::run_laplace_check(c);
  const double e200 = st.groups[0].median_rel_error, e500 = st.groups[1].median_rel_error;
  const double mins = minutes_since(t0);
  report("1", e200 <= 2e-3 && e500 <= 1e-3 && mins <= 10.0,
         fmt("Laplace median rel. error n=200 %.3g (<= 2e-3), n=500 %.3g (<= 1e-3); "
             "max %.3g / %.3g; %.2f min (<= 10)",
             e200, e500, st.groups[0].max_rel_error, st.groups[1].max_rel_error, mins));
}

// ------------------------------------------------------------- criteria 2, 3

void bandwidth() {
  const auto t0 = Clock::now();
  cvbf::sim::BandwidthStudyConfig c;
  c.reps = 100;
  c.seed = 20240202;
  const auto st = cvbf::sim::run_bandwidth_study(c);
  const double mins = minutes_since(t0);
  const auto& small = st.groups[0];
  const auto& large = st.groups[1];
  const bool ok2 = in(large.h_cv.mean, 0.245, 0.285) && large.h_cv.sd <= 0.08 &&
                   std::abs(large.h_cv.mean - large.h_kl.mean) <= 0.02 &&
                   in(small.h_cv.mean, 0.29, 0.34) && mins <= 15.0;
  report("2", ok2,
         fmt("Cauchy bandwidths (400,600): h_CV %.4f sd %.4f (in [0.245,0.285], sd <= 0.08), "
             "h_KL %.4f sd %.4f (|diff| %.4f <= 0.02); (200,300): h_CV %.4f (in [0.29,0.34]); "
             "h_LO %.4f/%.4f; %.2f min (<= 15)",
             large.h_cv.mean, large.h_cv.sd, large.h_kl.mean, large.h_kl.sd,
             std::abs(large.h_cv.mean - large.h_kl.mean), small.h_cv.mean, small.h_lo.mean,
             large.h_lo.mean, mins));
  report("2b", small.h_kl.sd < small.h_cv.sd && large.h_kl.sd < large.h_cv.sd,
         fmt("KL-optimal bandwidths vary less than CV ones: sd %.4f < %.4f and %.4f < %.4f",
             small.h_kl.sd, small.h_cv.sd, large.h_kl.sd, large.h_cv.sd));
  report("3", st.gaussian_summary.mean > 5.0 && st.gaussian_frac_at_bound >= 0.05,
         fmt("Gaussian kernel on Cauchy data, bounds (0.001, 30): mean h %.2f (> 5), "
             "%.0f%% at the bound 30 (>= 5%%)",
             st.gaussian_summary.mean, 100.0 * st.gaussian_frac_at_bound));
}

// ---------------------------------------------------------- criteria 4, 5, 6

void null_study() {
  const auto t0 = Clock::now();
  cvbf::sim::NullStudyConfig c;
  c.reps = 100;
  c.seed = 20240303;
  const auto st = cvbf::sim::run_null_study(c);
  const double mins = minutes_since(t0);
  const auto& g200 = st.groups[0];
  const auto& g400 = st.groups[1];
  const auto& g800 = st.groups[2];
  report("4", g400.cvbf.frac_below_zero >= 0.99 && in(g400.cvbf.median, -14.0, -7.0) &&
                  in(g400.cvbf.sd, 1.0, 3.5) && g800.cvbf.frac_below_log20 == 1.0 && mins <= 30.0,
         fmt("Null CVBF n=400: %.0f%% < 0 (>= 99%%), median %.2f (in [-14,-7]), sd %.2f "
             "(in [1,3.5]); n=800: %.0f%% < -log 20 (100%%); %.2f min (<= 30)",
             100 * g400.cvbf.frac_below_zero, g400.cvbf.median, g400.cvbf.sd,
             100 * g800.cvbf.frac_below_log20, mins));
  report("5", g200.cvbf.mean > g400.cvbf.mean && g400.cvbf.mean > g800.cvbf.mean,
         fmt("Null mean log CVBF decreasing in n: %.2f > %.2f > %.2f", g200.cvbf.mean,
             g400.cvbf.mean, g800.cvbf.mean));
  const double ladder[3] = {2.05, 2.52, 3.31};
  bool sd_ok = true;
  for (int i = 0; i < 3; ++i) sd_ok = sd_ok && std::abs(st.groups[i].polya.sd / ladder[i] - 1.0) <= 0.3;
  report("6", in(g400.polya.median, -5.6, -2.5) && in(g800.polya.frac_above_zero, 0.01, 0.15) && sd_ok,
         fmt("Polya null n=400 median %.2f (in [-5.6,-2.5]); n=800 %.0f%% > 0 (in [1%%,15%%]); "
             "sd %.2f/%.2f/%.2f vs 2.05/2.52/3.31 +-30%%; depth %d/%d/%d",
             g400.polya.median, 100 * g800.polya.frac_above_zero, g200.polya.sd, g400.polya.sd,
             g800.polya.sd, st.rows[0].polya_depth, st.rows[100].polya_depth,
             st.rows[200].polya_depth));
}

// ------------------------------------------------------------- criteria 7, 8

void alt_study() {
  using cvbf::sim::AltRow;
  const auto t0 = Clock::now();
  cvbf::sim::AltStudyConfig c;
  c.n_draws = 100;
  c.seed = 20240404;
  const auto scale = cvbf::sim::run_alt_study(c);
  c.setting = cvbf::sim::AltSetting::FiniteSupport;
  c.baselines = false;
  const auto finite = cvbf::sim::run_alt_study(c);
  const double mins = minutes_since(t0);

  const auto cv = [](const AltRow& r) { return r.log_cvbf; };
  const auto rf = [](const AltRow& r) { return r.log_cvbf_reflected; };
  std::vector<double> p, b;
  for (const auto& r : scale.rows) {
    p.push_back(r.p);
    b.push_back(r.log_cvbf);
  }
  const double rho = cvbf::stats::spearman(p, b);
  const double top = cvbf::sim::top_fraction_mean(scale, cv);
  const double top_plain = cvbf::sim::top_fraction_mean(finite, cv);
  const double top_refl = cvbf::sim::top_fraction_mean(finite, rf);
  report("7", rho > 0.5 && top > 0.0 && top_refl > top_plain,
         fmt("ScaleChange: Spearman(p, log CVBF) %.3f (> 0.5), top-decile mean %.2f (> 0); "
             "FiniteSupport top-decile mean reflected %.2f > plain %.2f; %.2f min",
             rho, top, top_refl, top_plain, mins));
  const double sd_scale = cvbf::sim::nonparametric_sd(cvbf::sim::ordered_by_p(scale, cv));
  const double sd_refl = cvbf::sim::nonparametric_sd(cvbf::sim::ordered_by_p(finite, rf));
  report("8", in(sd_scale, 2.0, 4.8) && std::abs(sd_refl / 5.06 - 1.0) <= 0.4,
         fmt("Nonparametric sd: ScaleChange %.2f (in [2.0,4.8]), reflected FiniteSupport %.2f "
             "(5.06 +- 40%%)",
             sd_scale, sd_refl));
}

// ---------------------------------------------------------------- criterion 9

double integrate_even(const std::function<double(double)>& f) {
  boost::math::quadrature::exp_sinh<double> q;
  return 2.0 * q.integrate(f, 0.0, INFINITY);
}

void oracle_suite() {
  const auto t0 = Clock::now();
  std::vector<std::string> bad;
  auto check = [&](bool ok, const std::string& name) {
    if (!ok) bad.push_back(name);
  };
  for (auto kind : {KernelKind::Hall, KernelKind::Gaussian}) {
    for (auto part : {cvbf::KernelPart::K, cvbf::KernelPart::J, cvbf::KernelPart::L}) {
      const double v = integrate_even([&](double z) { return cvbf::kernel_eval(kind, part, z); });
      check(std::abs(v - 1.0) <= 1e-4, "kernel normalization");
    }
  }
  for (double g : {0.1, 1.0, 7.0}) {
    boost::math::quadrature::exp_sinh<double> q;
    const double v = q.integrate([&](double h) { return h > 0 ? std::exp(cvbf::prior_logpdf({g}, h)) : 0.0; },
                                 0.0, INFINITY);
    check(std::abs(v - 1.0) <= 1e-8, "prior normalization");
    const double at = cvbf::prior_logpdf({g}, g);
    check(at > cvbf::prior_logpdf({g}, g * (1 + 1e-4)) && at > cvbf::prior_logpdf({g}, g * (1 - 1e-4)),
          "prior mode");
  }
  auto data = [](std::size_t n, std::uint64_t seed) {
    return Sample(cvbf::sim::normal_sample(n, seed));
  };
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto train = data(60, 100 + s), valid = data(150, 200 + s);
    const auto fit = cvbf::maximize_bandwidth(train, valid, KernelKind::Hall);
    auto ll = [&](double h) {
      return cvbf::log_likelihood(cvbf::KdeModel(train, h, KernelKind::Hall), valid);
    };
    const double st = fit.h * 1e-3;
    auto d2 = [&](double e) { return (ll(fit.h + e) - 2 * ll(fit.h) + ll(fit.h - e)) / (e * e); };
    const double fd = -(4 * d2(st / 2) - d2(st)) / 3;
    check(std::abs(cvbf::hessian_at(train, valid, KernelKind::Hall, fit.h) / fd - 1) <= 1e-4,
          "Hessian vs finite differences");
  }
  const auto x = data(150, 300), y = data(130, 301);
  const auto sx = cvbf::random_split(150, 60, 1), sy = cvbf::random_split(130, 50, 2);
  const auto r = cvbf::cvbf_single_split(x, y, sx, sy);
  const auto [tx, vx] = sx.apply(x);
  const auto [ty, vy] = sy.apply(y);
  const double m0 =
      cvbf::laplace_log_marginal(concat(tx, ty), concat(vx, vy), KernelKind::Hall).log_marginal;
  const double joint = cvbf::laplace_log_marginal(tx, vx, KernelKind::Hall).log_marginal +
                       cvbf::laplace_log_marginal(ty, vy, KernelKind::Hall).log_marginal - m0;
  check(std::abs(joint - r.log_bf) <= 1e-12 * std::abs(m0), "three-marginal decomposition");
  check(std::abs(cvbf::cvbf_single_split(y, x, sy, sx).log_bf - r.log_bf) <= 1e-10,
        "label-swap symmetry");
  cvbf::CvbfConfig cfg;
  cfg.n_splits = 5;
  const auto rep = cvbf::cvbf_multi_split(x, y, cfg);
  const double mean = std::accumulate(rep.per_split_log_bf.begin(), rep.per_split_log_bf.end(), 0.0) / 5;
  check(std::abs(rep.log_bf_geo - mean) <= 1e-12 * std::abs(mean), "geometric-mean identity");
  check(std::abs(cvbf::ks_test({1, 2, 3}, {1.5, 2.5, 3.5}).d_statistic - 1.0 / 3.0) < 1e-15,
        "KS D = 1/3");
  {
    std::vector<double> lw(200);
    for (int i = 0; i < 200; ++i) lw[i] = -0.5 * std::pow((i - 100) / 15.0, 2);
    std::vector<double> w(200);
    for (int i = 0; i < 200; ++i) w[i] = std::exp(lw[i]);
    std::discrete_distribution<int> dist(w.begin(), w.end());
    std::mt19937_64 eng(3);
    auto lt = [&](int i) { return lw[i]; };
    cvbf::Rng rng(4);
    const auto chain = cvbf::independence_sampler<int>(lt, [&](cvbf::Rng&) { return dist(eng); },
                                                       lt, 100, 5000, 100, rng);
    check(chain.acceptance_rate >= 0.999, "MH perfect-proposal acceptance");
  }
  {
    const auto pred = cvbf::posterior_predictive_density(tx, {0.2, 0.3, 0.35});
    boost::math::quadrature::exp_sinh<double> q;
    const double v = q.integrate([&](double t) { return pred(t) + pred(-t); }, 0.0, INFINITY);
    check(std::abs(v - 1.0) <= 1e-4, "p_pred integrates to 1");
  }
  const double secs = minutes_since(t0) * 60.0;
  std::string failed;
  for (const auto& b : bad) failed += " " + b + ";";
  report("9", bad.empty() && secs < 60.0,
         fmt("oracle/property checks: %zu failed%s %.1f s (< 60)", bad.size(),
             bad.empty() ? "" : (":" + failed).c_str(), secs));
}

// --------------------------------------------------------------- criterion 10

bool increasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (!(v[i] > v[i - 1])) return false;
  }
  return true;
}

bool decreasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (!(v[i] < v[i - 1])) return false;
  }
  return true;
}

std::string join(const std::vector<double>& v) {
  std::string s;
  for (double x : v) s += fmt("%s%.2f", s.empty() ? "" : ",", x);
  return s;
}

void surrogate() {
  const auto t0 = Clock::now();
  const std::vector<std::size_t> r_list{1000, 2000, 3000, 4000, 5000};
  cvbf::io::SweepOptions so;
  so.n_splits = 20;
  so.seed = 20240505;
  cvbf::Rng rng(so.seed);

  // Null-like pair with the group sizes of a 20000-row labelled subsample.
  std::vector<double> a(9543), b(10457);
  for (auto& v : a) v = rng.normal();
  for (auto& v : b) v = rng.normal();
  const auto null_t = cvbf::io::run_split_sweep(Sample(a), Sample(b), r_list, so);
  std::vector<double> null_means;
  bool all_neg = true;
  for (const auto& m : null_t.means) null_means.push_back(m.mean);
  for (const auto& row : null_t.rows) all_neg = all_neg && row.log_bf < 0.0;
  report("10a", all_neg && increasing(null_means) && null_t.rows.size() == 100,
         fmt("null surrogate sweep: all %zu log CVBFs < 0: %s; means by r %s increasing",
             null_t.rows.size(), all_neg ? "yes" : "no", join(null_means).c_str()));

  // Alternative surrogate: shifted second group.
  std::vector<double> c(9543), d(10457);
  for (auto& v : c) v = rng.normal();
  for (auto& v : d) v = 0.25 + rng.normal();
  const auto alt_t = cvbf::io::run_split_sweep(Sample(c), Sample(d), r_list, so);
  std::vector<double> alt_means;
  bool all_pos = true;
  for (const auto& m : alt_t.means) alt_means.push_back(m.mean);
  for (const auto& row : alt_t.rows) all_pos = all_pos && row.log_bf > 0.0;
  report("10b", all_pos && decreasing(alt_means),
         fmt("alternative surrogate sweep: all log CVBFs > 0: %s; means by r %s decreasing",
             all_pos ? "yes" : "no", join(alt_means).c_str()));

  // Training-size mixture on a null-like pair, 10 repeats.
  const auto prior = cvbf::TrainSizePrior::uniform(
      {1000, 1190, 1415, 1684, 2003, 2383, 2834, 3372, 4011, 4772});
  std::vector<double> mix;
  for (int rep = 0; rep < 10; ++rep) {
    cvbf::Rng g(cvbf::derive_seed(so.seed, cvbf::streams::replication, rep));
    std::vector<double> u(10000), v(10000);
    for (auto& t : u) t = g.normal();
    for (auto& t : v) t = g.normal();
    cvbf::MixtureOptions mo;
    mo.pool_size = 5000;
    mo.seed = cvbf::derive_seed(so.seed, cvbf::streams::mixture, rep);
    mix.push_back(cvbf::bf_train_size_mixture(Sample(u), Sample(v), prior, mo).log_bf);
  }
  const double mix_mean = cvbf::stats::mean(mix);
  const double mins = minutes_since(t0);
  report("10c", mix_mean < -10.0 * std::log(20.0),
         fmt("training-size mixture on null surrogate (m=n=10000, K=5000): mean of 10 = %.2f "
             "(far below -log 20); range [%.2f, %.2f]",
             mix_mean, *std::min_element(mix.begin(), mix.end()),
             *std::max_element(mix.begin(), mix.end())));
  report("10", mins <= 60.0, fmt("surrogate pipelines finished in %.1f min (<= 60)", mins));
}

}  // namespace

int main(int argc, char** argv) {
  const std::map<std::string, void (*)()> groups{
      {"laplace", laplace}, {"bandwidth", bandwidth}, {"null", null_study},
      {"alt", alt_study},   {"oracle", oracle_suite}, {"surrogate", surrogate}};
  const std::string which = argc > 1 ? argv[1] : "all";
  try {
    if (which == "all") {
      for (const char* g : {"oracle", "laplace", "bandwidth", "null", "alt", "surrogate"}) {
        groups.at(g)();
      }
    } else if (auto it = groups.find(which); it != groups.end()) {
      it->second();
    } else {
      std::fprintf(stderr, "unknown group '%s'\n", which.c_str());
      return 2;
    }
  } catch (const std::exception& e) {
    std::printf("FAIL [%s] aborted: %s\n", which.c_str(), e.what());
    return 1;
  }
  return failures == 0 ? 0 : 1;
}
