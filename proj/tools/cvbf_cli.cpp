// cvbf: command-line front end for the cross-validation Bayes factor library.

#include <chrono>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cvbf.hpp"

namespace {

using cvbf::io::Json;
using cvbf::io::format_double;

struct InputArgs {
  std::string data;
  std::string x_path;
  std::string y_path;
  int label_col = 1;
  int value_col = 2;
  std::string delimiter = ",";
  bool header = false;
  std::optional<std::size_t> subsample;
};

void add_input_options(CLI::App* cmd, InputArgs& in) {
  cmd->add_option("--data", in.data, "Labelled CSV file (label column + value column)");
  cmd->add_option("--x", in.x_path, "Single-column file for sample x");
  cmd->add_option("--y", in.y_path, "Single-column file for sample y");
  cmd->add_option("--label-col", in.label_col, "1-based label column")->capture_default_str();
  cmd->add_option("--value-col", in.value_col, "1-based value column")->capture_default_str();
  cmd->add_option("--delimiter", in.delimiter, "Field delimiter")->capture_default_str();
  cmd->add_flag("--header", in.header, "First line is a header");
  cmd->add_option("--subsample", in.subsample, "Draw this many rows without replacement");
}

struct Loaded {
  cvbf::Sample x, y;
  Json echo;
};

Loaded load_input(const InputArgs& in, std::uint64_t seed) {
  if (in.delimiter.size() != 1) throw cvbf::InputError("delimiter must be a single character");
  cvbf::io::CsvOptions o;
  o.label_col = in.label_col;
  o.value_col = in.value_col;
  o.delimiter = in.delimiter[0];
  o.header = in.header;
  o.subsample = in.subsample;
  o.seed = cvbf::derive_seed(seed, cvbf::streams::data, 0);
  Loaded out;
  if (!in.data.empty()) {
    if (!in.x_path.empty() || !in.y_path.empty()) {
      throw cvbf::InputError("give either --data or --x/--y, not both");
    }
    auto t = cvbf::io::ingest_csv(in.data, o);
    out.echo = {{"data", in.data},       {"label_x", t.label_x}, {"label_y", t.label_y},
                {"rows", t.rows},        {"m", t.x.size()},      {"n", t.y.size()}};
    out.x = std::move(t.x);
    out.y = std::move(t.y);
    return out;
  }
  if (in.x_path.empty() || in.y_path.empty()) {
    throw cvbf::InputError("input needs --data, or both --x and --y");
  }
  cvbf::io::CsvOptions col = o;
  col.value_col = in.value_col == 2 && in.label_col == 1 ? 1 : in.value_col;
  out.x = cvbf::io::read_column(in.x_path, col);
  out.y = cvbf::io::read_column(in.y_path, col);
  out.echo = {{"x", in.x_path}, {"y", in.y_path}, {"m", out.x.size()}, {"n", out.y.size()}};
  return out;
}

std::vector<std::size_t> parse_size_list(const std::string& s, const char* what) {
  std::vector<std::size_t> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto pos = s.find(',', start);
    const auto tok = s.substr(start, pos == std::string::npos ? std::string::npos : pos - start);
    try {
      std::size_t used = 0;
      const long long v = std::stoll(tok, &used);
      if (used != tok.size() || v < 1) throw std::invalid_argument(tok);
      out.push_back(static_cast<std::size_t>(v));
    } catch (const std::exception&) {
      throw cvbf::InputError(std::string("bad ") + what + " entry '" + tok + "'");
    }
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

Json marginal_json(const cvbf::MarginalResult& m) {
  return {{"log_marginal", m.log_marginal}, {"h_hat", m.h_hat},
          {"curvature", m.curvature},       {"prior_gamma", m.prior_gamma},
          {"loglik", m.loglik},             {"at_boundary", m.at_boundary}};
}

void emit(const cvbf::io::ResultEnvelope& env, const std::string& json_out) {
  const auto text = env.dump();
  if (json_out.empty()) {
    std::cout << text << '\n';
  } else {
    std::ofstream f(json_out);
    if (!f) throw cvbf::InputError("cannot write '" + json_out + "'");
    f << text << '\n';
  }
}

std::string argv_echo(int argc, char** argv) {
  std::string s;
  for (int i = 0; i < argc; ++i) {
    if (i) s += ' ';
    s += argv[i];
  }
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cross-validation Bayes factor two-sample tests and studies"};
  app.require_subcommand(1);

  std::uint64_t seed = 0;
  int threads = 0;
  std::string json_out;
  bool no_timing = false;
  app.add_option("--seed", seed, "Master RNG seed")->capture_default_str();
  app.add_option("--threads", threads, "Worker threads (0 = CVBF_THREADS or all cores)");
  app.add_option("--json-out", json_out, "Write the JSON envelope here instead of stdout");
  app.add_flag("--no-timing", no_timing, "Report zero elapsed time (byte-stable output)");

  // ---- test
  InputArgs test_in;
  std::optional<std::size_t> opt_r, opt_s;
  int splits = 30;
  std::string kernel_name = "hall", method_name = "laplace";
  bool reflect = false, train_mixture = false;
  std::string sizes_str;
  std::optional<std::size_t> pool;
  auto* test = app.add_subcommand("test", "CVBF test of equal densities");
  add_input_options(test, test_in);
  test->add_option("--r", opt_r, "Training size for x (default [m/2])");
  test->add_option("--s", opt_s, "Training size for y (default [n/2])");
  test->add_option("--splits", splits, "Number of random splits")->capture_default_str();
  test->add_option("--kernel", kernel_name, "hall or gaussian")->capture_default_str();
  test->add_option("--method", method_name, "laplace or quadrature")->capture_default_str();
  test->add_flag("--reflect", reflect, "-log transform and reflect data on (0, 1)");
  test->add_flag("--train-mixture", train_mixture, "Training-size-mixture Bayes factor");
  test->add_option("--sizes", sizes_str, "Comma-separated training sizes for --train-mixture");
  test->add_option("--pool", pool, "Training pool size K for --train-mixture (default [m/2])");
  std::optional<double> h_min, h_max;
  test->add_option("--h-min", h_min, "Lower end of the bandwidth search interval");
  test->add_option("--h-max", h_max, "Upper end of the bandwidth search interval");

  // ---- polya
  InputArgs polya_in;
  std::string base_name = "normal";
  double precision = 1.0;
  std::optional<int> depth;
  bool no_standardize = false;
  auto* polya = app.add_subcommand("polya", "Polya tree two-sample Bayes factor");
  add_input_options(polya, polya_in);
  polya->add_option("--base", base_name, "normal or cauchy")->capture_default_str();
  polya->add_option("--c", precision, "Precision parameter")->capture_default_str();
  polya->add_option("--depth", depth, "Partition levels (default ceil(log2(m+n)), max 12)");
  polya->add_flag("--no-standardize", no_standardize, "Skip robust standardization");

  // ---- ks
  InputArgs ks_in;
  auto* ks = app.add_subcommand("ks", "Two-sample Kolmogorov-Smirnov test");
  add_input_options(ks, ks_in);

  // ---- simulate
  std::string setting_name = "scale";
  int draws = 100, sim_splits = 30, reps = 100;
  std::size_t sim_m = 280, sim_n = 280, sim_r = 120, sim_s = 120;
  std::string n_list_str = "200,400,800", r_list_str = "50,75,112";
  std::string sim_out;
  bool sim_no_baselines = false;
  auto* simulate = app.add_subcommand("simulate", "Null or BayesSim alternative study");
  simulate->add_option("--setting", setting_name, "null, scale, location, tail or finite")
      ->capture_default_str();
  simulate->add_option("--draws", draws, "BayesSim draws")->capture_default_str();
  simulate->add_option("--reps", reps, "Null-study replications")->capture_default_str();
  simulate->add_option("--splits", sim_splits, "Splits per CVBF")->capture_default_str();
  simulate->add_option("--m", sim_m, "Size of x")->capture_default_str();
  simulate->add_option("--n", sim_n, "Size of y")->capture_default_str();
  simulate->add_option("--r", sim_r, "Training size for x")->capture_default_str();
  simulate->add_option("--s", sim_s, "Training size for y")->capture_default_str();
  simulate->add_option("--n-list", n_list_str, "Null study sample sizes")->capture_default_str();
  simulate->add_option("--r-list", r_list_str, "Null study training sizes")->capture_default_str();
  simulate->add_flag("--no-baselines", sim_no_baselines, "Skip Polya tree and KS");
  simulate->add_option("--out", sim_out, "CSV table path");

  // ---- bandwidth-study
  int bw_reps = 100;
  std::string bw_out;
  bool bw_no_loo = false, bw_no_kl = false, bw_no_gauss = false;
  auto* bandwidth = app.add_subcommand("bandwidth-study", "Cauchy bandwidth study");
  bandwidth->add_option("--reps", bw_reps, "Replications per pair")->capture_default_str();
  bandwidth->add_flag("--no-loo", bw_no_loo, "Skip leave-one-out bandwidths");
  bandwidth->add_flag("--no-kl", bw_no_kl, "Skip KL-optimal bandwidths");
  bandwidth->add_flag("--no-gaussian", bw_no_gauss, "Skip the Gaussian-kernel variant");
  bandwidth->add_option("--out", bw_out, "CSV table path");

  // ---- laplace-check
  int lc_reps = 100;
  std::string lc_sizes = "200,500,1000", lc_out;
  auto* laplace = app.add_subcommand("laplace-check", "Laplace vs quadrature marginal accuracy");
  laplace->add_option("--reps", lc_reps, "Replications per size")->capture_default_str();
  laplace->add_option("--n-list", lc_sizes, "Sample sizes")->capture_default_str();
  laplace->add_option("--out", lc_out, "CSV table path");

  // ---- predictive
  InputArgs pred_in;
  std::optional<std::size_t> pred_r;
  std::size_t pred_draws = 250, pred_burn = 500;
  std::size_t grid_points = 401;
  std::optional<double> grid_min, grid_max;
  std::string grid_out, pred_group = "x";
  auto* predictive = app.add_subcommand("predictive", "Posterior predictive density");
  add_input_options(predictive, pred_in);
  predictive->add_option("--group", pred_group, "Which sample to model: x or y")
      ->capture_default_str();
  predictive->add_option("--r", pred_r, "Training size (default half)");
  predictive->add_option("--draws", pred_draws, "Posterior draws")->capture_default_str();
  predictive->add_option("--burn-in", pred_burn, "Burn-in steps")->capture_default_str();
  predictive->add_option("--grid-points", grid_points, "Grid size")->capture_default_str();
  predictive->add_option("--grid-min", grid_min, "Grid start (default data min)");
  predictive->add_option("--grid-max", grid_max, "Grid end (default data max)");
  predictive->add_option("--grid-out", grid_out, "CSV of x, p_pred(x), raw-data KDE");

  // ---- sweep
  InputArgs sweep_in;
  std::string sweep_r = "1000,2000,3000,4000,5000", sweep_out;
  int sweep_splits = 20;
  auto* sweep = app.add_subcommand("sweep", "Split-size sweep of the log CVBF");
  add_input_options(sweep, sweep_in);
  sweep->add_option("--r-list", sweep_r, "Training sizes (r = s)")->capture_default_str();
  sweep->add_option("--splits", sweep_splits, "Splits per size")->capture_default_str();
  sweep->add_option("--out", sweep_out, "CSV table path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  const auto t0 = std::chrono::steady_clock::now();
  try {
    if (threads < 0) throw cvbf::InputError("--threads must be >= 0");
    if (threads > 0) cvbf::set_thread_count(threads);
    cvbf::io::ResultEnvelope env;
    env.command = argv_echo(argc, argv);
    env.seed = seed;

    if (test->parsed()) {
      const auto in = load_input(test_in, seed);
      const auto kernel = cvbf::parse_kernel(kernel_name);
      const auto method = cvbf::parse_method(method_name);
      const auto boundary =
          reflect ? cvbf::BoundaryTreatment::LogReflect : cvbf::BoundaryTreatment::None;
      env.config = {{"input", in.echo},
                    {"kernel", cvbf::to_string(kernel)},
                    {"method", cvbf::to_string(method)},
                    {"reflect", reflect}};
      cvbf::MarginalOptions marginal;
      if (h_min || h_max) {
        if (!h_min || !h_max) throw cvbf::InputError("--h-min and --h-max go together");
        marginal.bounds = cvbf::BandwidthInterval{*h_min, *h_max};
        env.config["h_min"] = *h_min;
        env.config["h_max"] = *h_max;
      }
      if (train_mixture) {
        if (sizes_str.empty()) throw cvbf::InputError("--train-mixture needs --sizes");
        cvbf::MixtureOptions mo;
        mo.pool_size = pool;
        mo.seed = seed;
        mo.split = {kernel, method, boundary, marginal};
        const auto prior = cvbf::TrainSizePrior::uniform(parse_size_list(sizes_str, "--sizes"));
        const auto res = cvbf::bf_train_size_mixture(in.x, in.y, prior, mo);
        env.config["train_mixture"] = true;
        env.config["sizes"] = prior.sizes;
        env.config["pool_size"] = res.pool_size;
        env.results = {{"log_bf", res.log_bf}};
        Json terms = Json::array();
        for (const auto& t : res.terms) {
          terms.push_back({{"r", t.r},
                           {"log_alt", t.log_alt},
                           {"log_null", t.log_null},
                           {"log_bf", t.log_bf}});
        }
        env.details = {{"terms", terms}};
      } else {
        cvbf::CvbfConfig cfg;
        cfg.r = opt_r;
        cfg.s = opt_s;
        cfg.n_splits = splits;
        cfg.seed = seed;
        cfg.kernel = kernel;
        cfg.method = method;
        cfg.boundary = boundary;
        cfg.marginal = marginal;
        const auto rep = cvbf::cvbf_multi_split(in.x, in.y, cfg);
        env.config["r"] = rep.r;
        env.config["s"] = rep.s;
        env.config["splits"] = splits;
        env.results = {{"log_bf_geo", rep.log_bf_geo},
                       {"per_split_log_bf", rep.per_split_log_bf},
                       {"failed_splits", rep.failed}};
        Json per = Json::array();
        for (const auto& s : rep.splits) {
          Json j = {{"index", s.index},
                    {"seed_x", s.split_x.seed},
                    {"seed_y", s.split_y.seed},
                    {"ok", s.ok}};
          if (s.ok) {
            j["log_bf"] = s.result.log_bf;
            j["m_x"] = marginal_json(s.result.marginals.x);
            j["m_y"] = marginal_json(s.result.marginals.y);
            j["m_0"] = marginal_json(s.result.marginals.pooled);
          } else {
            j["error"] = s.error;
          }
          per.push_back(j);
        }
        env.details = {{"splits", per}, {"warnings", rep.warnings}};
        for (const auto& w : rep.warnings) std::cerr << "warning: " << w << '\n';
      }
    } else if (polya->parsed()) {
      auto in = load_input(polya_in, seed);
      cvbf::PolyaTreeConfig pc;
      pc.base = cvbf::parse_polya_base(base_name);
      pc.precision_c = precision;
      pc.depth = depth;
      if (!no_standardize) std::tie(in.x, in.y) = cvbf::robust_standardize(in.x, in.y);
      const auto r = cvbf::polya_tree_log_bf(in.x, in.y, pc);
      env.config = {{"input", in.echo},
                    {"base", cvbf::to_string(pc.base)},
                    {"c", precision},
                    {"standardize", !no_standardize}};
      env.results = {{"log_bf", r.log_bf}, {"depth", r.depth}};
    } else if (ks->parsed()) {
      const auto in = load_input(ks_in, seed);
      const auto r = cvbf::ks_test(in.x, in.y);
      env.config = {{"input", in.echo}};
      env.results = {{"d", r.d_statistic}, {"p_value", r.p_value}};
    } else if (simulate->parsed()) {
      if (setting_name == "null") {
        cvbf::sim::NullStudyConfig c;
        c.n_list = parse_size_list(n_list_str, "--n-list");
        c.r_list = parse_size_list(r_list_str, "--r-list");
        c.reps = reps;
        c.n_splits = sim_splits;
        c.seed = seed;
        c.polya = !sim_no_baselines;
        const auto st = cvbf::sim::run_null_study(c);
        env.config = {{"setting", "null"}, {"n_list", c.n_list}, {"r_list", c.r_list},
                      {"reps", reps},      {"splits", sim_splits}};
        Json groups = Json::array();
        for (const auto& g : st.groups) {
          groups.push_back({{"n", g.n},
                            {"r", g.r},
                            {"mean", g.cvbf.mean},
                            {"median", g.cvbf.median},
                            {"sd", g.cvbf.sd},
                            {"frac_below_zero", g.cvbf.frac_below_zero},
                            {"frac_below_minus_log20", g.cvbf.frac_below_log20},
                            {"polya_median", g.polya.median},
                            {"polya_sd", g.polya.sd},
                            {"polya_frac_above_zero", g.polya.frac_above_zero}});
        }
        env.results = {{"groups", groups}};
        if (!sim_out.empty()) {
          cvbf::io::CsvWriter w({"n", "r", "rep", "log_cvbf", "polya_log_bf", "polya_depth"});
          for (const auto& row : st.rows) {
            w.add({std::to_string(row.n), std::to_string(row.r), std::to_string(row.rep),
                   format_double(row.log_cvbf), format_double(row.polya_log_bf),
                   std::to_string(row.polya_depth)});
          }
          w.write(sim_out);
        }
      } else {
        cvbf::sim::AltStudyConfig c;
        c.setting = cvbf::sim::parse_setting(setting_name);
        c.m = sim_m;
        c.n = sim_n;
        c.r = sim_r;
        c.s = sim_s;
        c.n_draws = draws;
        c.n_splits = sim_splits;
        c.seed = seed;
        c.baselines = !sim_no_baselines;
        const auto st = cvbf::sim::run_alt_study(c);
        const auto cv = [](const cvbf::sim::AltRow& r) { return r.log_cvbf; };
        std::vector<double> p, b;
        for (const auto& r : st.rows) {
          p.push_back(r.p);
          b.push_back(r.log_cvbf);
        }
        env.config = {{"setting", setting_name}, {"m", sim_m},         {"n", sim_n},
                      {"r", sim_r},              {"s", sim_s},         {"draws", draws},
                      {"splits", sim_splits}};
        env.results = {
            {"spearman_p_log_cvbf", st.rows.size() > 1 ? cvbf::stats::spearman(p, b) : 0.0},
            {"top_decile_mean_log_cvbf", cvbf::sim::top_fraction_mean(st, cv)},
            {"nonparametric_sd",
             st.rows.size() > 1 ? cvbf::sim::nonparametric_sd(cvbf::sim::ordered_by_p(st, cv))
                                : 0.0}};
        if (c.setting == cvbf::sim::AltSetting::FiniteSupport) {
          const auto rf = [](const cvbf::sim::AltRow& r) { return r.log_cvbf_reflected; };
          env.results["top_decile_mean_reflected"] = cvbf::sim::top_fraction_mean(st, rf);
          if (st.rows.size() > 1) {
            env.results["nonparametric_sd_reflected"] =
                cvbf::sim::nonparametric_sd(cvbf::sim::ordered_by_p(st, rf));
          }
        }
        if (!sim_out.empty()) {
          cvbf::io::CsvWriter w({"draw", "p", "log_cvbf", "polya_normal", "polya_cauchy",
                                 "ks_log_p", "log_cvbf_reflected"});
          for (const auto& r : st.rows) {
            w.add({std::to_string(r.draw), format_double(r.p), format_double(r.log_cvbf),
                   format_double(r.polya_normal), format_double(r.polya_cauchy),
                   format_double(r.ks_log_p), format_double(r.log_cvbf_reflected)});
          }
          w.write(sim_out);
        }
      }
    } else if (bandwidth->parsed()) {
      cvbf::sim::BandwidthStudyConfig c;
      c.reps = bw_reps;
      c.seed = seed;
      c.loo = !bw_no_loo;
      c.kl = !bw_no_kl;
      c.gaussian_variant = !bw_no_gauss;
      const auto st = cvbf::sim::run_bandwidth_study(c);
      env.config = {{"reps", bw_reps}, {"loo", c.loo}, {"kl", c.kl}};
      Json groups = Json::array();
      for (const auto& g : st.groups) {
        groups.push_back({{"r", g.r},
                          {"v", g.v},
                          {"h_lo_mean", g.h_lo.mean},
                          {"h_lo_sd", g.h_lo.sd},
                          {"h_cv_mean", g.h_cv.mean},
                          {"h_cv_sd", g.h_cv.sd},
                          {"h_kl_mean", g.h_kl.mean},
                          {"h_kl_sd", g.h_kl.sd}});
      }
      env.results = {{"groups", groups}};
      if (c.gaussian_variant) {
        env.results["gaussian"] = {{"mean", st.gaussian_summary.mean},
                                   {"frac_at_bound", st.gaussian_frac_at_bound}};
      }
      if (!bw_out.empty()) {
        cvbf::io::CsvWriter w({"r", "v", "rep", "h_lo", "h_cv", "h_kl"});
        for (const auto& r : st.rows) {
          w.add({std::to_string(r.r), std::to_string(r.v), std::to_string(r.rep),
                 format_double(r.h_lo), format_double(r.h_cv), format_double(r.h_kl)});
        }
        w.write(bw_out);
      }
    } else if (laplace->parsed()) {
      cvbf::sim::LaplaceCheckConfig c;
      c.n_list = parse_size_list(lc_sizes, "--n-list");
      c.reps = lc_reps;
      c.seed = seed;
      const auto st = cvbf::sim::run_laplace_check(c);
      env.config = {{"n_list", c.n_list}, {"reps", lc_reps}};
      Json groups = Json::array();
      for (const auto& g : st.groups) {
        groups.push_back({{"n", g.n},
                          {"median_rel_error", g.median_rel_error},
                          {"max_rel_error", g.max_rel_error}});
      }
      env.results = {{"groups", groups}};
      if (!lc_out.empty()) {
        cvbf::io::CsvWriter w({"n", "rep", "laplace", "quadrature", "rel_error"});
        for (const auto& r : st.rows) {
          w.add({std::to_string(r.n), std::to_string(r.rep), format_double(r.laplace),
                 format_double(r.quadrature), format_double(r.rel_error)});
        }
        w.write(lc_out);
      }
    } else if (predictive->parsed()) {
      const auto in = load_input(pred_in, seed);
      if (pred_group != "x" && pred_group != "y") throw cvbf::InputError("--group must be x or y");
      const cvbf::Sample& data = pred_group == "x" ? in.x : in.y;
      const std::size_t r = pred_r.value_or(data.size() / 2);
      const auto plan =
          cvbf::random_split(data.size(), r, cvbf::derive_seed(seed, cvbf::streams::split_x, 0));
      const auto [train, valid] = plan.apply(data);
      cvbf::PredictiveConfig pc;
      pc.n_draws = pred_draws;
      pc.burn_in = pred_burn;
      pc.seed = seed;
      const auto post = cvbf::sample_posterior_bandwidths(train, valid, cvbf::KernelKind::Hall, pc);
      const auto pred = cvbf::posterior_predictive_density(train, post.draws);
      env.config = {{"input", in.echo}, {"group", pred_group}, {"r", r},
                    {"draws", pred_draws}, {"burn_in", pred_burn}};
      env.results = {{"h_hat", post.h_hat},
                     {"curvature", post.curvature},
                     {"acceptance_rate", post.acceptance_rate},
                     {"proposal_mean", post.proposal_mean},
                     {"proposal_sd", post.proposal_sd},
                     {"draws", post.draws}};
      if (!grid_out.empty()) {
        if (grid_points < 2) throw cvbf::InputError("--grid-points must be >= 2");
        const auto [mn, mx] = std::minmax_element(data.begin(), data.end());
        const double lo = grid_min.value_or(*mn), hi = grid_max.value_or(*mx);
        if (!(hi > lo)) throw cvbf::InputError("grid needs max > min");
        // Raw-data KDE for comparison: all of the modelled sample at its
        // leave-one-out bandwidth.
        const auto loo = cvbf::maximize_loo_bandwidth(data, cvbf::KernelKind::Hall);
        const cvbf::KdeModel raw(data, loo.h, cvbf::KernelKind::Hall);
        cvbf::io::CsvWriter w({"x", "p_pred", "raw_kde"});
        for (std::size_t i = 0; i < grid_points; ++i) {
          const double x = lo + (hi - lo) * static_cast<double>(i) /
                                    static_cast<double>(grid_points - 1);
          w.add({format_double(x), format_double(pred(x)), format_double(raw(x))});
        }
        w.write(grid_out);
        env.results["raw_kde_bandwidth"] = loo.h;
      }
    } else if (sweep->parsed()) {
      const auto in = load_input(sweep_in, seed);
      cvbf::io::SweepOptions so;
      so.n_splits = sweep_splits;
      so.seed = seed;
      const auto r_list = parse_size_list(sweep_r, "--r-list");
      const auto t = cvbf::io::run_split_sweep(in.x, in.y, r_list, so);
      env.config = {{"input", in.echo}, {"r_list", r_list}, {"splits", sweep_splits}};
      Json means = Json::array();
      for (const auto& m : t.means) {
        means.push_back({{"r", m.r}, {"mean_log_bf", m.mean}, {"failed", m.failed}});
      }
      env.results = {{"means", means}};
      if (!sweep_out.empty()) {
        cvbf::io::CsvWriter w({"r", "split", "log_cvbf"});
        for (const auto& row : t.rows) {
          w.add({std::to_string(row.r), std::to_string(row.split), format_double(row.log_bf)});
        }
        w.write(sweep_out);
      }
    }
    env.seconds = no_timing ? 0.0
                            : std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                                  .count();
    emit(env, json_out);
  } catch (const cvbf::InputError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return 2;
  } catch (const cvbf::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 3;
  } catch (const cvbf::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
