#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "cvbf/kernels.hpp"
#include "oracles.hpp"

using cvbf::KernelKind;
using cvbf::KernelPart;
using cvbf::kernel_eval;

TEST(Kernels, HallAtZeroMatchesHighPrecisionConstant) {
  EXPECT_NEAR(kernel_eval(KernelKind::Hall, KernelPart::K, 0.0), oracle::hall_constant(), 1e-15);
}

TEST(Kernels, HallMatchesDefiningFormula) {
  for (double z : {-40.0, -3.0, -0.2, 0.0, 0.7, 1.0, 5.5, 1e6}) {
    EXPECT_NEAR(kernel_eval(KernelKind::Hall, KernelPart::K, z) / oracle::hall(z), 1.0, 1e-13);
  }
}

TEST(Kernels, GaussianAtZero) {
  EXPECT_NEAR(kernel_eval(KernelKind::Gaussian, KernelPart::K, 0.0), 0.3989422804014327, 1e-15);
}

TEST(Kernels, Symmetric) {
  for (auto kind : {KernelKind::Hall, KernelKind::Gaussian}) {
    for (auto part : {KernelPart::K, KernelPart::J, KernelPart::L}) {
      for (double z : {0.5, 1.0, 3.0}) {
        EXPECT_EQ(kernel_eval(kind, part, z), kernel_eval(kind, part, -z));
      }
    }
  }
}

TEST(Kernels, JVanishesAtZero) {
  EXPECT_EQ(kernel_eval(KernelKind::Hall, KernelPart::J, 0.0), 0.0);
  EXPECT_EQ(kernel_eval(KernelKind::Hall, KernelPart::L, 0.0), 0.0);
}

class KernelIntegrals : public ::testing::TestWithParam<std::tuple<KernelKind, KernelPart>> {};

TEST_P(KernelIntegrals, IntegrateToOne) {
  const auto [kind, part] = GetParam();
  const double v = oracle::integrate_even([&](double z) { return kernel_eval(kind, part, z); });
  EXPECT_NEAR(v, 1.0, 1e-6);
}

INSTANTIATE_TEST_SUITE_P(All, KernelIntegrals,
                         ::testing::Combine(::testing::Values(KernelKind::Hall, KernelKind::Gaussian),
                                            ::testing::Values(KernelPart::K, KernelPart::J,
                                                              KernelPart::L)));

TEST(Kernels, JHasZeroFirstMomentAndIntegratesOnWideInterval) {
  for (auto kind : {KernelKind::Hall, KernelKind::Gaussian}) {
    auto j = [&](double z) { return kernel_eval(kind, KernelPart::J, z); };
    boost::math::quadrature::tanh_sinh<double> q;
    // Odd integrand: symmetric pieces cancel.
    const double m1 = q.integrate([&](double z) { return z * j(z); }, -1e6, 0.0) +
                      q.integrate([&](double z) { return z * j(z); }, 0.0, 1e6);
    EXPECT_NEAR(m1, 0.0, 1e-8);
    const double total = 2.0 * q.integrate(j, 0.0, 1e6);
    EXPECT_NEAR(total, 1.0, 1e-4);
  }
}

TEST(Kernels, DerivedKernelsMatchFiniteDifferences) {
  std::mt19937 g(11);
  std::uniform_real_distribution<double> d(-12.0, 12.0);
  for (auto kind : {KernelKind::Hall, KernelKind::Gaussian}) {
    for (int i = 0; i < 50; ++i) {
      double u = d(g);
      if (std::abs(u) < 0.05) u = 0.05 + std::abs(u);
      const double s = 1e-3 * std::max(1.0, std::abs(u));
      auto k = [&](double z) { return kernel_eval(kind, KernelPart::K, z); };
      auto j = [&](double z) { return kernel_eval(kind, KernelPart::J, z); };
      const double j_fd = -u * oracle::first_derivative(k, u, s);
      const double l_fd = -u * oracle::first_derivative(j, u, s);
      const double scale_j = std::max(std::abs(j(u)), 1e-12);
      const double scale_l = std::max(std::abs(kernel_eval(kind, KernelPart::L, u)), 1e-12);
      EXPECT_LT(std::abs(j(u) - j_fd) / scale_j, 1e-5) << "u=" << u;
      EXPECT_LT(std::abs(kernel_eval(kind, KernelPart::L, u) - l_fd) / scale_l, 1e-5) << "u=" << u;
    }
  }
}

TEST(Kernels, HallPositiveAndDecreasing) {
  double prev = kernel_eval(KernelKind::Hall, KernelPart::K, 0.0);
  for (double z = 0.25; z < 1e12; z *= 1.7) {
    const double k = kernel_eval(KernelKind::Hall, KernelPart::K, z);
    EXPECT_GT(k, 0.0);
    EXPECT_LT(k, prev);
    prev = k;
  }
}

TEST(Kernels, LogKernelConsistent) {
  for (double z : {0.0, 0.3, 2.0, 30.0}) {
    for (auto kind : {KernelKind::Hall, KernelKind::Gaussian}) {
      const double direct = std::log(kernel_eval(kind, KernelPart::K, z));
      EXPECT_NEAR(cvbf::kernel_log(kind, z), direct, 1e-14 * std::max(1.0, std::abs(direct)));
    }
  }
}

TEST(Kernels, RejectsNonFinite) {
  EXPECT_THROW(kernel_eval(KernelKind::Hall, KernelPart::K, std::nan("")), cvbf::InputError);
  EXPECT_THROW(kernel_eval(KernelKind::Gaussian, KernelPart::J, INFINITY), cvbf::InputError);
}

TEST(Kernels, NameRoundTrip) {
  EXPECT_EQ(cvbf::parse_kernel("hall"), KernelKind::Hall);
  EXPECT_EQ(cvbf::parse_kernel(cvbf::to_string(KernelKind::Gaussian)), KernelKind::Gaussian);
  EXPECT_THROW(cvbf::parse_kernel("epanechnikov"), cvbf::InputError);
}
