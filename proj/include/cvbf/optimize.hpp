#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "cvbf/core.hpp"

// One-dimensional maximization used for bandwidth selection. Everything here
// works on a log-scale coordinate theta = log(h): a coarse scan picks the best
// grid cell (objectives may be multimodal) and a refinement step converges
// inside the neighbouring cells.

namespace cvbf::opt {

struct ScanResult {
  std::vector<double> grid;
  std::vector<double> values;
  std::size_t best = 0;
};

/// Evaluates f on `points` evenly spaced nodes of [lo, hi]. Non-finite values
/// count as -inf. The first maximal node wins ties.
template <class F>
ScanResult coarse_scan(F&& f, double lo, double hi, int points) {
  if (points < 2) throw InputError("coarse scan needs at least two points");
  ScanResult s;
  s.grid.resize(static_cast<std::size_t>(points));
  s.values.resize(s.grid.size());
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < s.grid.size(); ++k) {
    const double t = static_cast<double>(k) / static_cast<double>(points - 1);
    s.grid[k] = k + 1 == s.grid.size() ? hi : lo + (hi - lo) * t;
    double v = f(s.grid[k]);
    if (!std::isfinite(v)) v = -std::numeric_limits<double>::infinity();
    s.values[k] = v;
    if (v > best) {
      best = v;
      s.best = k;
    }
  }
  if (!std::isfinite(best)) {
    throw NumericalError("objective is not finite anywhere on the search grid");
  }
  return s;
}

struct Maximum {
  double theta = 0.0;
  double value = 0.0;
  bool at_lower = false;
  bool at_upper = false;
  int evaluations = 0;
};

/// Golden-section search for a maximum of f on [a, b], stopping when the
/// bracket is narrower than `tol`. `lo`/`hi` are the outer search limits used
/// to flag a boundary maximum.
template <class F>
Maximum golden_maximize(F&& f, double a, double b, double tol, double lo, double hi) {
  constexpr double inv_phi = 0.6180339887498948482;
  Maximum m;
  auto eval = [&](double t) {
    ++m.evaluations;
    const double v = f(t);
    return std::isfinite(v) ? v : -std::numeric_limits<double>::infinity();
  };
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = eval(c), fd = eval(d);
  while (b - a > tol) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = eval(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = eval(d);
    }
  }
  // Compare the two interior points with the bracket ends so that a monotone
  // objective reports its boundary.
  double best_t = fc >= fd ? c : d;
  double best_v = std::max(fc, fd);
  for (double t : {a, b}) {
    const double v = eval(t);
    if (v > best_v) {
      best_v = v;
      best_t = t;
    }
  }
  m.theta = best_t;
  m.value = best_v;
  m.at_lower = best_t - lo <= tol;
  m.at_upper = hi - best_t <= tol;
  return m;
}

/// Objective value with first and second derivatives in theta.
struct Taylor2 {
  double value;
  double d1;
  double d2;
};

/// Safeguarded Newton iteration on the derivative of f, kept inside the
/// bracket [a, b] by bisection. The bracket is widened by `step` toward the
/// gradient when the iterate pins against an edge that is not an outer limit,
/// so a slightly wrong starting cell still converges. Returns the last
/// evaluated point, which carries the derivative information at the optimum.
template <class F>
Maximum newton_maximize(F&& f, double theta0, double a, double b, double step,
                        double tol, double lo, double hi, Taylor2* at_opt = nullptr,
                        int max_iter = 200) {
  Maximum m;
  auto eval = [&](double t) {
    ++m.evaluations;
    return f(t);
  };
  double theta = std::clamp(theta0, a, b);
  double a_edge = a, b_edge = b;
  // Set once a non-finite trial point caps that side of the search.
  bool hard_lo = false, hard_hi = false;
  double last_move = std::numeric_limits<double>::infinity();
  Taylor2 cur = eval(theta);
  if (!std::isfinite(cur.value) || !std::isfinite(cur.d1)) {
    throw NumericalError("bandwidth objective not finite at the refinement start");
  }
  for (int it = 0; it < max_iter; ++it) {
    if (cur.d1 > 0) {
      a = theta;
    } else {
      b = theta;
    }
    const bool pinned_hi = cur.d1 > 0 && b_edge - theta <= tol;
    const bool pinned_lo = cur.d1 < 0 && theta - a_edge <= tol;
    if (pinned_hi) {
      if (b_edge >= hi || hard_hi) break;
      b_edge = std::min(hi, b_edge + step);
      b = b_edge;
    } else if (pinned_lo) {
      if (a_edge <= lo || hard_lo) break;
      a_edge = std::max(lo, a_edge - step);
      a = a_edge;
    } else if (last_move < tol || b - a < tol) {
      break;
    }
    double next = std::numeric_limits<double>::quiet_NaN();
    if (cur.d2 < 0) next = theta - cur.d1 / cur.d2;
    if (!(next > a && next < b)) next = 0.5 * (a + b);
    const Taylor2 trial = eval(next);
    if (!std::isfinite(trial.value) || !std::isfinite(trial.d1)) {
      if (next > theta) {
        b = b_edge = next;
        hard_hi = true;
      } else {
        a = a_edge = next;
        hard_lo = true;
      }
      continue;
    }
    last_move = std::abs(next - theta);
    theta = next;
    cur = trial;
  }
  m.theta = theta;
  m.value = cur.value;
  m.at_lower = theta - lo <= tol && cur.d1 <= 0;
  m.at_upper = hi - theta <= tol && cur.d1 >= 0;
  if (at_opt) *at_opt = cur;
  return m;
}

}  // namespace cvbf::opt
