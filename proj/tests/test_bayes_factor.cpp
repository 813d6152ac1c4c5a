#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "cvbf/bayes_factor.hpp"
#include "oracles.hpp"

using cvbf::KernelKind;
using cvbf::Sample;

namespace {

Sample normal(std::size_t n, unsigned seed, double mu = 0.0, double sd = 1.0) {
  return Sample(oracle::normal_data(n, seed, mu, sd));
}

}  // namespace

TEST(SingleSplit, DecomposesIntoThreeMarginals) {
  const auto x = normal(120, 1), y = normal(100, 2, 0.5);
  const auto sx = cvbf::random_split(x.size(), 50, 11), sy = cvbf::random_split(y.size(), 40, 12);
  const auto r = cvbf::cvbf_single_split(x, y, sx, sy);
  // Recompute each marginal from scratch.
  const auto [tx, vx] = sx.apply(x);
  const auto [ty, vy] = sy.apply(y);
  const double mx = cvbf::laplace_log_marginal(tx, vx, KernelKind::Hall).log_marginal;
  const double my = cvbf::laplace_log_marginal(ty, vy, KernelKind::Hall).log_marginal;
  const double m0 =
      cvbf::laplace_log_marginal(concat(tx, ty), concat(vx, vy), KernelKind::Hall).log_marginal;
  EXPECT_NEAR(r.log_bf, mx + my - m0, 1e-12 * std::abs(m0));
  EXPECT_EQ(r.log_bf, r.marginals.x.log_marginal + r.marginals.y.log_marginal -
                          r.marginals.pooled.log_marginal);
}

TEST(SingleSplit, LabelSwapSymmetry) {
  for (unsigned seed = 0; seed < 4; ++seed) {
    const auto x = normal(90 + seed, 20 + seed), y = normal(110, 30 + seed, 0.2, 1.3);
    const auto sx = cvbf::random_split(x.size(), 40, seed), sy = cvbf::random_split(y.size(), 55, seed + 9);
    for (auto method : {cvbf::MarginalMethod::Laplace, cvbf::MarginalMethod::Quadrature}) {
      cvbf::SplitOptions o;
      o.method = method;
      const double a = cvbf::cvbf_single_split(x, y, sx, sy, o).log_bf;
      const double b = cvbf::cvbf_single_split(y, x, sy, sx, o).log_bf;
      EXPECT_NEAR(a, b, 1e-10 * std::max(1.0, std::abs(a)));
    }
  }
}

TEST(SingleSplit, FailureNamesTheMarginal) {
  // All of x's validation data are tied with its training data far from y:
  // the Gaussian, with a cap far below the spread, fails first on m_0.
  const Sample x{0.0, 0.001, 0.002, 0.003}, y{50.0, 50.001, 50.002, 50.003};
  const auto sx = cvbf::random_split(4, 2, 1), sy = cvbf::random_split(4, 2, 2);
  cvbf::SplitOptions o;
  o.kernel = KernelKind::Gaussian;
  o.marginal.bounds = cvbf::BandwidthInterval{1e-4, 1e-3};
  try {
    (void)cvbf::cvbf_single_split(x, y, sx, sy, o);
    FAIL() << "expected a failure";
  } catch (const cvbf::Error& e) {
    EXPECT_NE(std::string(e.what()).find("marginal m_"), std::string::npos) << e.what();
  }
}

TEST(MultiSplit, GeometricMeanIdentity) {
  const auto x = normal(80, 40), y = normal(80, 41);
  cvbf::CvbfConfig c;
  c.n_splits = 7;
  c.seed = 5;
  const auto rep = cvbf::cvbf_multi_split(x, y, c);
  ASSERT_EQ(rep.per_split_log_bf.size(), 7u);
  const double mean =
      std::accumulate(rep.per_split_log_bf.begin(), rep.per_split_log_bf.end(), 0.0) / 7.0;
  EXPECT_NEAR(rep.log_bf_geo, mean, 1e-12 * std::abs(mean));
  EXPECT_EQ(rep.r, 40u);
  EXPECT_EQ(rep.s, 40u);
}

TEST(MultiSplit, OneSplitEqualsItsValue) {
  const auto x = normal(60, 42), y = normal(70, 43);
  cvbf::CvbfConfig c;
  c.n_splits = 1;
  const auto rep = cvbf::cvbf_multi_split(x, y, c);
  EXPECT_EQ(rep.log_bf_geo, rep.per_split_log_bf.at(0));
  const auto direct = cvbf::cvbf_single_split(x, y, rep.splits[0].split_x, rep.splits[0].split_y);
  EXPECT_EQ(direct.log_bf, rep.log_bf_geo);
}

TEST(MultiSplit, Deterministic) {
  const auto x = normal(70, 44), y = normal(70, 45, 1.0);
  cvbf::CvbfConfig c;
  c.n_splits = 5;
  c.seed = 99;
  const auto a = cvbf::cvbf_multi_split(x, y, c);
  const auto b = cvbf::cvbf_multi_split(x, y, c);
  EXPECT_EQ(a.per_split_log_bf, b.per_split_log_bf);
  for (std::size_t i = 0; i < a.splits.size(); ++i) {
    EXPECT_EQ(a.splits[i].split_x.train_idx, b.splits[i].split_x.train_idx);
  }
  c.seed = 100;
  EXPECT_NE(cvbf::cvbf_multi_split(x, y, c).per_split_log_bf, a.per_split_log_bf);
}

TEST(MultiSplit, ThreadCountDoesNotChangeResult) {
  const auto x = normal(70, 46), y = normal(70, 47);
  cvbf::CvbfConfig c;
  c.n_splits = 6;
  const int before = cvbf::thread_count();
  cvbf::set_thread_count(1);
  const auto a = cvbf::cvbf_multi_split(x, y, c);
  cvbf::set_thread_count(3);
  const auto b = cvbf::cvbf_multi_split(x, y, c);
  cvbf::set_thread_count(before);
  EXPECT_EQ(a.per_split_log_bf, b.per_split_log_bf);
}

TEST(MultiSplit, DetectsDifferenceAndNull) {
  cvbf::CvbfConfig c;
  c.n_splits = 10;
  EXPECT_GT(cvbf::cvbf_multi_split(normal(300, 48), normal(300, 49, 0.0, 2.0), c).log_bf_geo, 0.0);
  EXPECT_LT(cvbf::cvbf_multi_split(normal(300, 50), normal(300, 51), c).log_bf_geo, 0.0);
}

TEST(MultiSplit, TrainingSizeRules) {
  cvbf::CvbfConfig c;
  EXPECT_EQ(cvbf::resolve_training_sizes(c, 101, 60), (std::pair<std::size_t, std::size_t>{50, 30}));
  EXPECT_EQ(cvbf::resolve_training_sizes(c, 4000, 3000).first, 1250u);
  c.r = 0;
  EXPECT_THROW(cvbf::resolve_training_sizes(c, 10, 10), cvbf::InputError);
  c.r = 10;
  EXPECT_THROW(cvbf::resolve_training_sizes(c, 10, 10), cvbf::InputError);
  c.r = 3;
  c.n_splits = 0;
  EXPECT_THROW(cvbf::cvbf_multi_split(normal(10, 1), normal(10, 2), c), cvbf::InputError);
}

TEST(MultiSplit, MostSplitsFailingThrows) {
  // Two distinct values per sample: validation and training ties make the
  // scale degenerate for the default interval.
  const Sample x{1.0, 1.0, 1.0, 1.0, 2.0}, y{1.0, 1.0, 1.0, 1.0, 2.0};
  cvbf::CvbfConfig c;
  c.r = 2;
  c.s = 2;
  c.n_splits = 10;
  EXPECT_THROW(cvbf::cvbf_multi_split(x, y, c), cvbf::Error);
}

TEST(MultiSplit, ReflectionRequiresUnitInterval) {
  cvbf::CvbfConfig c;
  c.boundary = cvbf::BoundaryTreatment::LogReflect;
  c.n_splits = 2;
  EXPECT_THROW(cvbf::cvbf_multi_split(normal(40, 1), normal(40, 2), c), cvbf::InputError);
}

TEST(Mixture, SingleSizeCollapsesToSingleSplit) {
  const auto x = normal(100, 60), y = normal(100, 61, 0.3);
  cvbf::MixtureOptions o;
  o.seed = 17;
  const auto res = cvbf::bf_train_size_mixture(x, y, cvbf::TrainSizePrior::uniform({50}), o);
  const auto sx = cvbf::random_split(100, 50, cvbf::derive_seed(17, cvbf::streams::split_x, 0));
  const auto sy = cvbf::random_split(100, 50, cvbf::derive_seed(17, cvbf::streams::split_y, 0));
  EXPECT_NEAR(res.log_bf, cvbf::cvbf_single_split(x, y, sx, sy).log_bf, 1e-12);
}

TEST(Mixture, BoundedByPerSizeValues) {
  const auto x = normal(160, 62), y = normal(160, 63);
  const auto prior = cvbf::TrainSizePrior::uniform({20, 35, 50, 80});
  const auto res = cvbf::bf_train_size_mixture(x, y, prior, {});
  double lo = INFINITY, hi = -INFINITY;
  for (const auto& t : res.terms) {
    lo = std::min(lo, t.log_bf);
    hi = std::max(hi, t.log_bf);
  }
  EXPECT_GE(res.log_bf, lo - std::log(4.0));
  EXPECT_LE(res.log_bf, hi + std::log(4.0));
  EXPECT_EQ(res.pool_size, 80u);
}

TEST(Mixture, SharedValidationAcrossSizes) {
  // With sizes {K/2, K}, the validation log-likelihood normalizers differ
  // only through training; a zero-probability size is ignored.
  const auto x = normal(100, 64), y = normal(100, 65);
  cvbf::TrainSizePrior p{{25, 50}, {0.0, 1.0}};
  const auto a = cvbf::bf_train_size_mixture(x, y, p, {});
  const auto b = cvbf::bf_train_size_mixture(x, y, cvbf::TrainSizePrior::uniform({50}), {});
  EXPECT_NEAR(a.log_bf, b.log_bf, 1e-12);
}

TEST(Mixture, Rejections) {
  const auto x = normal(100, 66), y = normal(90, 67);
  EXPECT_THROW(cvbf::bf_train_size_mixture(x, y, cvbf::TrainSizePrior::uniform({10}), {}),
               cvbf::InputError);
  const auto y2 = normal(100, 68);
  EXPECT_THROW(cvbf::bf_train_size_mixture(x, y2, cvbf::TrainSizePrior::uniform({60}), {}),
               cvbf::InputError);
  EXPECT_THROW(cvbf::bf_train_size_mixture(x, y2, cvbf::TrainSizePrior::uniform({20, 10}), {}),
               cvbf::InputError);
  EXPECT_THROW(cvbf::bf_train_size_mixture(x, y2, cvbf::TrainSizePrior{{10, 20}, {0.5, 0.6}}, {}),
               cvbf::InputError);
}

TEST(Splits, RandomSplitIsAPartition) {
  const auto p = cvbf::random_split(50, 17, 3);
  EXPECT_NO_THROW(p.validate(50));
  EXPECT_EQ(p.train_idx.size(), 17u);
  EXPECT_TRUE(std::is_sorted(p.train_idx.begin(), p.train_idx.end()));
  EXPECT_THROW(cvbf::random_split(5, 5, 1), cvbf::InputError);
  EXPECT_THROW(cvbf::random_split(5, 0, 1), cvbf::InputError);
  cvbf::SplitPlan bad{{0, 1}, {1, 2}, 0};
  EXPECT_THROW(bad.validate(3), cvbf::InputError);
}
