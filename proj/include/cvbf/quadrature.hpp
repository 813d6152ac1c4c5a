#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <span>
#include <tuple>
#include <vector>

#include "cvbf/core.hpp"

namespace cvbf {

struct QuadratureOptions {
  double abs_tol = 1e-10;
  double rel_tol = 1e-10;
  int max_panels = 2000;
};

struct QuadratureResult {
  double value = 0.0;
  double abs_error = 0.0;
  int panels = 0;
  int evaluations = 0;
  bool converged = false;
};

namespace detail {

// 7-point Gauss / 15-point Kronrod abscissae and weights on [-1, 1].
inline constexpr std::array<double, 8> gk15_x = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> gk15_wk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> gk15_wg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
  double a, b, value, error;
};

// QUADPACK-style error estimate for one panel.
template <class F>
Panel gk15(F& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double hw = 0.5 * (b - a);
  std::array<double, 15> fv{};
  fv[7] = f(c);
  for (int i = 0; i < 7; ++i) {
    const double dx = hw * gk15_x[static_cast<std::size_t>(i)];
    fv[static_cast<std::size_t>(i)] = f(c - dx);
    fv[static_cast<std::size_t>(14 - i)] = f(c + dx);
  }
  double rk = gk15_wk[7] * fv[7];
  double rg = gk15_wg[3] * fv[7];
  double rabs = std::abs(rk);
  for (int i = 0; i < 7; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    const double pair = fv[ui] + fv[14 - ui];
    rk += gk15_wk[ui] * pair;
    rabs += gk15_wk[ui] * (std::abs(fv[ui]) + std::abs(fv[14 - ui]));
    if (i % 2 == 1) rg += gk15_wg[ui / 2] * pair;
  }
  const double mean = 0.5 * rk;
  double rasc = gk15_wk[7] * std::abs(fv[7] - mean);
  for (int i = 0; i < 7; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    rasc += gk15_wk[ui] * (std::abs(fv[ui] - mean) + std::abs(fv[14 - ui] - mean));
  }
  rk *= hw;
  rg *= hw;
  rabs *= std::abs(hw);
  rasc *= std::abs(hw);
  double err = std::abs(rk - rg);
  if (rasc != 0.0 && err != 0.0) {
    err = rasc * std::min(1.0, std::pow(200.0 * err / rasc, 1.5));
  }
  constexpr double eps = std::numeric_limits<double>::epsilon();
  if (rabs > std::numeric_limits<double>::min() / (50.0 * eps)) {
    err = std::max(50.0 * eps * rabs, err);
  }
  if (!std::isfinite(rk)) err = std::numeric_limits<double>::infinity();
  return {a, b, rk, err};
}

}  // namespace detail

/// Globally adaptive 15-point Gauss-Kronrod quadrature over [a, b], with
/// optional interior break points. Bisects the panel with the largest error
/// estimate until the total error is within max(abs_tol, rel_tol |I|) or the
/// panel budget is exhausted (then `converged` is false).
template <class F>
QuadratureResult integrate(F&& f, double a, double b,
                           const QuadratureOptions& opts = {},
                           std::span<const double> breaks = {}) {
  QuadratureResult out;
  if (!(a < b)) {
    out.converged = a == b;
    return out;
  }
  int evals = 0;
  auto counted = [&](double x) {
    ++evals;
    return f(x);
  };
  std::vector<double> pts{a};
  for (double x : breaks) {
    if (x > a && x < b) pts.push_back(x);
  }
  pts.push_back(b);
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());

  auto by_error = [](const detail::Panel& p, const detail::Panel& q) {
    return p.error < q.error;
  };
  std::vector<detail::Panel> heap;
  heap.reserve(static_cast<std::size_t>(opts.max_panels) + pts.size());
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    heap.push_back(detail::gk15(counted, pts[i], pts[i + 1]));
  }
  std::make_heap(heap.begin(), heap.end(), by_error);

  auto totals = [&] {
    double v = 0.0, e = 0.0;
    for (const auto& p : heap) {
      v += p.value;
      e += p.error;
    }
    return std::pair{v, e};
  };
  auto [value, error] = totals();
  int iterations = 0;
  while (error > std::max(opts.abs_tol, opts.rel_tol * std::abs(value)) &&
         static_cast<int>(heap.size()) < opts.max_panels) {
    std::pop_heap(heap.begin(), heap.end(), by_error);
    const auto worst = heap.back();
    heap.pop_back();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) {
      heap.push_back(worst);
      std::push_heap(heap.begin(), heap.end(), by_error);
      break;  // panel cannot be split further in floating point
    }
    const auto left = detail::gk15(counted, worst.a, mid);
    const auto right = detail::gk15(counted, mid, worst.b);
    value += left.value + right.value - worst.value;
    error += left.error + right.error - worst.error;
    heap.push_back(left);
    std::push_heap(heap.begin(), heap.end(), by_error);
    heap.push_back(right);
    std::push_heap(heap.begin(), heap.end(), by_error);
    if (++iterations % 64 == 0) std::tie(value, error) = totals();
  }

  // Deterministic final total: panels in order of position.
  std::sort(heap.begin(), heap.end(),
            [](const detail::Panel& p, const detail::Panel& q) { return p.a < q.a; });
  detail::CompensatedSum sv, se;
  for (const auto& p : heap) {
    sv.add(p.value);
    se.add(p.error);
  }
  out.value = sv.value();
  out.abs_error = se.value();
  out.panels = static_cast<int>(heap.size());
  out.evaluations = evals;
  out.converged = std::isfinite(out.value) &&
                  out.abs_error <= std::max(opts.abs_tol, opts.rel_tol * std::abs(out.value));
  return out;
}

/// Integral over the real line through x = center + scale sinh(t), truncated
/// at |t| <= t_max. The substitution turns power-law and log-normal-like tails
/// into Gaussian or exponential tails in t.
template <class F>
QuadratureResult integrate_real_line(F&& f, double center, double scale,
                                     const QuadratureOptions& opts = {},
                                     double t_max = 40.0) {
  auto g = [&](double t) {
    const double x = center + scale * std::sinh(t);
    const double v = f(x);
    return v == 0.0 ? 0.0 : v * scale * std::cosh(t);
  };
  std::vector<double> breaks;
  for (int k = -8; k <= 8; ++k) breaks.push_back(t_max * k / 8.0);
  for (double t : {-2.0, -1.0, -0.5, 0.5, 1.0, 2.0}) breaks.push_back(t);
  return integrate(g, -t_max, t_max, opts, breaks);
}

/// Integral over [a, +inf) (direction > 0) or (-inf, a] (direction < 0)
/// via x = a +/- scale sinh(t), t in [0, t_max].
template <class F>
QuadratureResult integrate_half_line(F&& f, double a, int direction, double scale,
                                     const QuadratureOptions& opts = {},
                                     double t_max = 40.0) {
  const double sgn = direction >= 0 ? 1.0 : -1.0;
  auto g = [&](double t) {
    const double x = a + sgn * scale * std::sinh(t);
    const double v = f(x);
    return v == 0.0 ? 0.0 : v * scale * std::cosh(t);
  };
  std::vector<double> breaks;
  for (double t : {0.5, 1.0, 2.0, 4.0, 8.0, 16.0}) breaks.push_back(t);
  return integrate(g, 0.0, t_max, opts, breaks);
}

}  // namespace cvbf
