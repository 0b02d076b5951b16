#pragma once

// Real Lambert W on its two real branches.
//
// W_0  : z >= -1/e,        W >= -1
// W_-1 : -1/e <= z < 0,    W <= -1
//
// Near the branch point both branches come from the series in
// p = +-sqrt(2(e z + 1)). Elsewhere Halley iteration refines an asymptotic or
// series guess; the W_-1 branch and large-argument W_0 iterate on the log form
// of w e^w = z, which stays well conditioned for |z| -> 0 and z -> inf.

#include <array>
#include <cmath>
#include <concepts>
#include <limits>
#include <numbers>
#include <sstream>

#include <Eigen/Core>

#include "nbody/error.hpp"

namespace nbody {

enum class BranchId { principal, minus_one };

constexpr const char* to_string(BranchId b) {
  return b == BranchId::principal ? "principal" : "minus_one";
}

namespace detail {

template <typename Scalar>
struct LambertTraits {
  static constexpr Scalar e = std::numbers::e_v<Scalar>;
  // 1/e split so that z + 1/e keeps full precision next to the branch point.
  static constexpr Scalar inv_e_hi = static_cast<Scalar>(0.36787944117144233);
  static constexpr Scalar inv_e_lo = static_cast<Scalar>(-1.2428753672788363e-17);
  static constexpr Scalar eps = std::numeric_limits<Scalar>::epsilon();
  // Termination |dw| <= step_tol * (1 + |w|); 1e-15 for double.
  static constexpr Scalar step_tol = Scalar(4.5) * eps;
  // Slack on the -1/e endpoint of the domain.
  static constexpr Scalar domain_slack = Scalar(4.5) * eps;
  // Below this |p| the branch-point series is used as the answer.
  static constexpr Scalar series_cutoff = Scalar(0.05);
  static constexpr int max_iterations = 50;
};

// e*z + 1, accurate for z close to -1/e.
template <typename Scalar>
Scalar branch_distance(Scalar z) {
  using T = LambertTraits<Scalar>;
  return T::e * ((z + T::inv_e_hi) + T::inv_e_lo);
}

// W = -1 + p - p^2/3 + 11/72 p^3 - ...; p > 0 gives W_0, p < 0 gives W_-1.
template <typename Scalar>
Scalar branch_point_series(Scalar p) {
  static constexpr std::array<Scalar, 10> c = {
      Scalar(-1),
      Scalar(1),
      Scalar(-1) / Scalar(3),
      Scalar(11) / Scalar(72),
      Scalar(-43) / Scalar(540),
      Scalar(769) / Scalar(17280),
      Scalar(-221) / Scalar(8505),
      Scalar(680863) / Scalar(43545600),
      Scalar(-1963) / Scalar(204120),
      Scalar(226287557) / Scalar(37623398400)};
  Scalar acc = c.back();
  for (int i = static_cast<int>(c.size()) - 2; i >= 0; --i) acc = acc * p + c[i];
  return acc;
}

[[noreturn]] inline void throw_domain(BranchId b, double z) {
  std::ostringstream os;
  os.precision(17);
  os << "z = " << z << " outside the " << to_string(b) << " branch domain";
  throw Error(ErrorKind::DomainError, os.str());
}

// Halley iteration on g(x) = 0 where `eval(x)` returns {g, g', g''}.
// Converges when the step is below step_tol*(1+|x|), or when the step stops
// shrinking at a level that is already round-off (cubic convergence means a
// non-shrinking step is noise).
template <typename Scalar, typename Eval>
Scalar halley(Scalar x, Eval eval) {
  using T = LambertTraits<Scalar>;
  using std::abs;
  Scalar last_step = std::numeric_limits<Scalar>::infinity();
  for (int it = 0; it < T::max_iterations; ++it) {
    const auto [g, dg, d2g] = eval(x);
    if (g == Scalar(0)) return x;
    const Scalar newton = g / dg;
    const Scalar step = newton / (Scalar(1) - newton * d2g / (Scalar(2) * dg));
    if (!std::isfinite(step)) break;
    x -= step;
    const Scalar scale = Scalar(1) + abs(x);
    if (abs(step) <= T::step_tol * scale) return x;
    if (abs(step) >= abs(last_step) && abs(step) <= Scalar(1e4) * T::step_tol * scale) {
      return x;
    }
    last_step = step;
  }
  throw Error(ErrorKind::ConvergenceFailure, "Halley iteration did not converge");
}

// W_0 for z away from the branch point.
template <typename Scalar>
Scalar principal_halley(Scalar z, Scalar p) {
  using std::exp;
  using std::log;
  if (z >= Scalar(3)) {
    // Log form: w + ln w = ln z.
    const Scalar lz = log(z);
    const Scalar llz = log(lz);
    const Scalar guess = lz - llz + llz / lz;
    return halley(guess, [lz](Scalar w) {
      return std::array<Scalar, 3>{w + log(w) - lz, Scalar(1) + Scalar(1) / w,
                                   Scalar(-1) / (w * w)};
    });
  }
  Scalar guess;
  if (z < Scalar(-0.25)) {
    guess = branch_point_series(p);
  } else if (z <= Scalar(0.25)) {
    guess = z * (Scalar(1) - z * (Scalar(1) - Scalar(1.5) * z));
  } else {
    const Scalar l = std::log1p(z);
    guess = l * (Scalar(1) - std::log1p(l) / (Scalar(2) + l));
  }
  return halley(guess, [z](Scalar w) {
    const Scalar ew = exp(w);
    const Scalar f = w * ew - z;
    return std::array<Scalar, 3>{f, ew * (w + Scalar(1)), ew * (w + Scalar(2))};
  });
}

// u = -W_-1(-e^{-L}) solves u - ln u = L, u >= 1.
template <typename Scalar>
Scalar minus_one_log_halley(Scalar L, Scalar p) {
  using std::log;
  Scalar guess;
  if (L < Scalar(2.5)) {
    guess = -branch_point_series(-p);
  } else {
    guess = L + log(L);
    guess = L + log(guess);
  }
  return halley(guess, [L](Scalar u) {
    return std::array<Scalar, 3>{u - log(u) - L, Scalar(1) - Scalar(1) / u,
                                 Scalar(1) / (u * u)};
  });
}

}  // namespace detail

/// Lambert W on the requested real branch. Throws DomainError outside the
/// branch domain and ConvergenceFailure if Halley does not settle.
template <std::floating_point Scalar>
Scalar lambert_w(BranchId branch, Scalar z) {
  using T = detail::LambertTraits<Scalar>;
  using std::sqrt;
  if (!std::isfinite(z)) detail::throw_domain(branch, static_cast<double>(z));
  const Scalar d = detail::branch_distance(z);
  if (d < -T::domain_slack) detail::throw_domain(branch, static_cast<double>(z));
  if (branch == BranchId::minus_one && !(z < Scalar(0))) {
    detail::throw_domain(branch, static_cast<double>(z));
  }
  if (d <= Scalar(0)) return Scalar(-1);
  const Scalar p = sqrt(Scalar(2) * d);

  if (branch == BranchId::principal) {
    if (z == Scalar(0)) return Scalar(0);
    if (p < T::series_cutoff) return detail::branch_point_series(p);
    return detail::principal_halley(z, p);
  }
  if (p < T::series_cutoff) return detail::branch_point_series(-p);
  return -detail::minus_one_log_halley(-std::log(-z), p);
}

/// W_-1(-e^{-L}) for L >= 1, without forming e^{-L}. Equivalent to
/// lambert_w(minus_one, -exp(-L)) but usable for L far beyond exp underflow.
template <typename Scalar>
Scalar lambert_wm1_neg_exp(Scalar L) {
  using T = detail::LambertTraits<Scalar>;
  if (!(L >= Scalar(1) - T::domain_slack) || std::isinf(L)) {
    detail::throw_domain(BranchId::minus_one, -std::exp(-static_cast<double>(L)));
  }
  // e z + 1 = 1 - e^{1-L}
  const Scalar d = -std::expm1(Scalar(1) - L);
  if (d <= Scalar(0)) return Scalar(-1);
  const Scalar p = std::sqrt(Scalar(2) * d);
  if (p < T::series_cutoff) return detail::branch_point_series(-p);
  return -detail::minus_one_log_halley(L, p);
}

/// W_0(-e^{-L}) for L >= 1, accurate next to the branch point.
template <typename Scalar>
Scalar lambert_w0_neg_exp(Scalar L) {
  using T = detail::LambertTraits<Scalar>;
  if (!(L >= Scalar(1) - T::domain_slack)) {
    detail::throw_domain(BranchId::principal, -std::exp(-static_cast<double>(L)));
  }
  const Scalar d = -std::expm1(Scalar(1) - L);
  if (d <= Scalar(0)) return Scalar(-1);
  const Scalar p = std::sqrt(Scalar(2) * d);
  if (p < T::series_cutoff) return detail::branch_point_series(p);
  const Scalar z = -std::exp(-L);
  if (z == Scalar(0)) return Scalar(0);
  return detail::principal_halley(z, p);
}

/// dW/dz = W / (z (1 + W)); 1 at z = 0 on the principal branch.
template <typename Scalar>
Scalar lambert_w_derivative(BranchId branch, Scalar z) {
  using T = detail::LambertTraits<Scalar>;
  const Scalar w = lambert_w(branch, z);
  if (detail::branch_distance(z) <= T::domain_slack) {
    throw Error(ErrorKind::BranchPointSingularity,
                "dW/dz is unbounded at z = -1/e");
  }
  if (z == Scalar(0)) return Scalar(1);
  return w / (z * (Scalar(1) + w));
}

/// Coefficient-wise W over an Eigen array expression.
template <typename Derived>
auto lambert_w(BranchId branch, const Eigen::ArrayBase<Derived>& z) {
  using Scalar = typename Derived::Scalar;
  return z.unaryExpr([branch](Scalar v) { return lambert_w(branch, v); });
}

}  // namespace nbody
