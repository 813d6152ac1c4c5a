#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>

#include "cvbf/core.hpp"
#include "cvbf/detail/vector_math.hpp"

namespace cvbf {

enum class KernelKind { Hall, Gaussian };

/// Base kernel K and its companions J(u) = -u K'(u), L(u) = -u J'(u).
enum class KernelPart { K, J, L };

inline std::string_view to_string(KernelKind k) {
  return k == KernelKind::Hall ? "hall" : "gaussian";
}

inline KernelKind parse_kernel(std::string_view s) {
  if (s == "hall") return KernelKind::Hall;
  if (s == "gaussian") return KernelKind::Gaussian;
  throw InputError("unknown kernel '" + std::string(s) + "' (expected hall or gaussian)");
}

namespace detail {

// 1 / (sqrt(8 pi e) Phi(1)), evaluated to 40 digits.
inline constexpr double hall_norm = 0.14379998546958918061;
inline constexpr double gauss_norm = 0.39894228040143267794;  // 1/sqrt(2 pi)

inline constexpr double kernel_norm(KernelKind k) noexcept {
  return k == KernelKind::Hall ? hall_norm : gauss_norm;
}

// Hall kernel K0(z) = c exp(-t^2/2), t = log(1 + u), u = |z|.
//
// For u > 0, d/du K0 = -K0 t / (1 + u), so
//   J(u) = -u K0'(u) = K0 u t / (1 + u).
// With w(u) = u t / (1 + u), w'(u) = (t + u) / (1 + u)^2 and
//   J'(u) = K0' w + K0 w' = K0 (t + u - u t^2) / (1 + u)^2,
//   L(u) = -u J'(u) = K0 u (u t^2 - t - u) / (1 + u)^2.
// All three are even in z, so the kink at 0 is handled by working in |z|;
// K0'(0) is taken as 0, giving J(0) = L(0) = 0.
//
// The unscaled forms below omit the constant c; callers multiply it back in.
struct UnscaledKJL {
  double k, j, l;
};

inline UnscaledKJL hall_kjl(double u) noexcept {
  const double t = std::log1p(u);
  const double k = std::exp(-0.5 * t * t);
  const double inv = 1.0 / (1.0 + u);
  const double w = u * inv;  // stays in [0, 1) so nothing overflows for huge u
  return {k, k * w * t, k * w * (w * t * t - (t + u) * inv)};
}

// Gaussian: K = phi, J = z^2 phi, L = (z^4 - 2 z^2) phi.
inline UnscaledKJL gauss_kjl(double u) noexcept {
  const double u2 = u * u;
  const double k = std::exp(-0.5 * u2);
  if (k == 0.0) return {0.0, 0.0, 0.0};
  return {k, k * u2, k * (u2 * u2 - 2.0 * u2)};
}

inline double hall_log_unscaled(double u) noexcept {
  const double t = std::log1p(u);
  return -0.5 * t * t;
}

inline double gauss_log_unscaled(double u) noexcept { return -0.5 * u * u; }

}  // namespace detail

/// Evaluates K, J or L of the given kernel at z.
inline double kernel_eval(KernelKind kind, KernelPart which, double z) {
  if (!std::isfinite(z)) throw InputError("kernel_eval needs a finite argument");
  const double u = std::abs(z);
  const auto v = kind == KernelKind::Hall ? detail::hall_kjl(u) : detail::gauss_kjl(u);
  const double c = detail::kernel_norm(kind);
  switch (which) {
    case KernelPart::K:
      return c * v.k;
    case KernelPart::J:
      return c * v.j;
    case KernelPart::L:
      return c * v.l;
  }
  return 0.0;
}

inline double kernel_log(KernelKind kind, double z) noexcept {
  const double u = std::abs(z);
  return std::log(detail::kernel_norm(kind)) +
         (kind == KernelKind::Hall ? detail::hall_log_unscaled(u)
                                   : detail::gauss_log_unscaled(u));
}

}  // namespace cvbf
