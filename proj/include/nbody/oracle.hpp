#pragma once

// Numerical ground truth: direct N-body integration of the full pairwise
// equations, integration of the scalar separation equations, and adaptive
// quadrature for the radial and angular integrals.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <queue>
#include <span>
#include <string>
#include <vector>

#include "nbody/core_model.hpp"
#include "nbody/error.hpp"
#include "nbody/propagator.hpp"

namespace nbody {

enum class IntegratorMethod { rk4_fixed, rk45_adaptive };

const char* to_string(IntegratorMethod m);

struct IntegratorConfig {
  IntegratorMethod method{IntegratorMethod::rk45_adaptive};
  double tolerance{1e-10};  // rk45: relative and absolute local tolerance
  double step{1e-3};        // rk4: fixed step
  long max_steps{10'000'000};
  // Collision threshold as a fraction of the initial minimum pairwise distance.
  double collision_epsilon_factor{1e-6};
  // Return partial results instead of throwing on collision / step limits.
  bool truncate_on_failure{false};
};

void validate(const IntegratorConfig& config);

/// a_k = sum_{n != k} G m_n (r_n - r_k) / |r_n - r_k|^3, pairs visited in
/// ascending index order. Throws CollisionDetected if any separation is at or
/// below `collision_epsilon`.
std::vector<Vector2<double>> nbody_accelerations(const SystemState<double>& state,
                                                 double collision_epsilon = 0.0);

double min_pairwise_distance(const SystemState<double>& state);
double total_energy(const SystemState<double>& state);
Vector2<double> total_momentum(const SystemState<double>& state);
double total_angular_momentum(const SystemState<double>& state);

struct CartesianSample {
  Vector2<double> position = Vector2<double>::Zero();
  Vector2<double> velocity = Vector2<double>::Zero();
};

struct Trajectory {
  std::size_t body_index{};
  std::vector<double> times;
  std::vector<CartesianSample> samples;
  std::optional<double> truncated_at;
  std::optional<ErrorKind> truncation_reason;
};

/// Integrates the full N-body problem and samples every body at `times`
/// (ascending, first >= state.epoch).
std::vector<Trajectory> integrate_nbody(const SystemState<double>& state,
                                        std::span<const double> times,
                                        const IntegratorConfig& config = {});

/// Reassembles the system state at sample `i` of an integrate_nbody result.
SystemState<double> snapshot(const SystemState<double>& initial,
                             const std::vector<Trajectory>& trajectories,
                             std::size_t i);

enum class ScalarForm {
  ode_4c,  // x'' = -A / (2 x^2) from (x0, x_dot0)
  ode_5a,  // x'  = sign * sqrt(A/x + B) from x0
};

struct ScalarTrajectory {
  std::vector<double> times;
  std::vector<double> x;
  std::vector<double> x_dot;
  std::optional<double> truncated_at;
};

/// Integrates the separation scalar from constants.t0. Halts cleanly (and marks
/// the trajectory truncated) at a turning point or when x reaches zero.
ScalarTrajectory integrate_scalar_x(const PropagatorConstants& constants,
                                    double x0, double x_dot0,
                                    std::span<const double> times,
                                    const IntegratorConfig& config,
                                    ScalarForm form);

namespace detail {

struct KronrodSegment {
  double a, b, value, error;
  bool operator<(const KronrodSegment& o) const { return error < o.error; }
};

template <typename F>
KronrodSegment gauss_kronrod_15(F& f, double a, double b) {
  static constexpr std::array<double, 8> xgk = {
      0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
      0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
      0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
      0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
  static constexpr std::array<double, 8> wgk = {
      0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
      0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
      0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
      0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
  static constexpr std::array<double, 4> wg = {
      0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
      0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = f(center);
  double kronrod = fc * wgk[7];
  double gauss = fc * wg[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = half * xgk[j];
    const double fsum = f(center - dx) + f(center + dx);
    kronrod += wgk[j] * fsum;
    if (j % 2 == 1) gauss += wg[j / 2] * fsum;
  }
  return {a, b, kronrod * half, std::abs((kronrod - gauss) * half)};
}

}  // namespace detail

/// Globally adaptive Gauss-Kronrod (7/15) quadrature of f over [a, b] to
/// absolute error `tolerance`. Throws ToleranceNotMet when `max_segments`
/// bisections do not suffice.
template <typename F>
double quadrature(F&& f, double a, double b, double tolerance,
                  int max_segments = 4000) {
  if (!(tolerance > 0.0)) {
    throw Error(ErrorKind::ValidationError, "quadrature tolerance must be > 0");
  }
  if (a == b) return 0.0;
  std::priority_queue<detail::KronrodSegment> heap;
  auto first = detail::gauss_kronrod_15(f, a, b);
  double total = first.value;
  double error = first.error;
  heap.push(first);
  int segments = 1;
  while (error > tolerance) {
    if (segments >= max_segments) {
      throw Error(ErrorKind::ToleranceNotMet,
                  "adaptive quadrature exhausted its segment budget");
    }
    const auto worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    const auto left = detail::gauss_kronrod_15(f, worst.a, mid);
    const auto right = detail::gauss_kronrod_15(f, mid, worst.b);
    total += left.value + right.value - worst.value;
    error += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
    ++segments;
    if (!std::isfinite(total)) {
      throw Error(ErrorKind::ToleranceNotMet, "integrand is not finite");
    }
  }
  // Re-sum from the segments to shed the drift of the running updates.
  double sum = 0.0;
  std::vector<detail::KronrodSegment> all;
  all.reserve(heap.size());
  while (!heap.empty()) {
    all.push_back(heap.top());
    heap.pop();
  }
  std::sort(all.begin(), all.end(),
            [](const auto& l, const auto& r) { return l.a < r.a; });
  for (const auto& s : all) sum += s.value;
  return sum;
}

}  // namespace nbody
