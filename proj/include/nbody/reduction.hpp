#pragma once

// Per-body two-body analogue: body k paired with the aggregate of every other
// body, placed at their center of mass.

#include <cstddef>
#include <string>
#include <utility>

#include "nbody/core_model.hpp"

namespace nbody {

/// How the initial separation scalar x0 is seeded.
///  consistent: x0 = r0 + |r_M(0)|, the scalar identity x = r + r_M.
///  paper:      x0 = r0, as stated alongside the angular-momentum relation.
enum class X0Mode { consistent, paper };

template <typename Scalar>
struct ReducedPair {
  std::size_t body_index{};
  Scalar companion_mass{};
  Vector2<Scalar> companion_com_position = Vector2<Scalar>::Zero();
  Vector2<Scalar> companion_com_velocity = Vector2<Scalar>::Zero();
  Scalar x0{};
  Scalar x_dot0{};
  Scalar r0{};
  Scalar r_dot0{};
  Scalar theta0{};
  Scalar theta_dot0{};
};

namespace detail {
template <typename Scalar>
void check_index(std::size_t k, const SystemState<Scalar>& state) {
  if (k >= state.bodies.size()) {
    throw Error(ErrorKind::IndexOutOfRange,
                "body index " + std::to_string(k) + " out of range for N = " +
                    std::to_string(state.bodies.size()));
  }
  if (state.bodies.size() < 2) {
    throw Error(ErrorKind::FewerThanTwoBodies, "need at least two bodies");
  }
}
}  // namespace detail

/// Sum of every mass except m_k, ascending index order.
template <typename Scalar>
Scalar companion_mass(std::size_t k, const SystemState<Scalar>& state) {
  detail::check_index(k, state);
  Scalar m(0);
  for (std::size_t n = 0; n < state.bodies.size(); ++n) {
    if (n != k) m += state.bodies[n].mass;
  }
  return m;
}

/// Center of mass (position, velocity) of every body except k.
template <typename Scalar>
std::pair<Vector2<Scalar>, Vector2<Scalar>> companion_com(
    std::size_t k, const SystemState<Scalar>& state) {
  detail::check_index(k, state);
  Vector2<Scalar> p = Vector2<Scalar>::Zero();
  Vector2<Scalar> v = Vector2<Scalar>::Zero();
  Scalar m(0);
  for (std::size_t n = 0; n < state.bodies.size(); ++n) {
    if (n == k) continue;
    const auto& b = state.bodies[n];
    p += b.mass * b.position;
    v += b.mass * b.velocity;
    m += b.mass;
  }
  return {p / m, v / m};
}

/// Expects `state` already in the COM frame. Throws OriginSingularity when
/// body k or its companion COM sits at the origin.
template <typename Scalar>
ReducedPair<Scalar> build_reduced_pair(std::size_t k,
                                       const SystemState<Scalar>& state,
                                       X0Mode mode = X0Mode::consistent) {
  const auto& body = state.bodies.at(k);
  const auto [cp, cv] = companion_com(k, state);

  PolarState<Scalar> self;
  PolarState<Scalar> comp;
  try {
    self = cartesian_to_polar(body.position, body.velocity);
    comp = cartesian_to_polar(cp, cv);
  } catch (Error& e) {
    throw e.with_body(k);
  }

  ReducedPair<Scalar> out;
  out.body_index = k;
  out.companion_mass = companion_mass(k, state);
  out.companion_com_position = cp;
  out.companion_com_velocity = cv;
  out.r0 = self.r;
  out.r_dot0 = self.r_dot;
  out.theta0 = self.theta;
  out.theta_dot0 = self.theta_dot;
  if (mode == X0Mode::consistent) {
    out.x0 = self.r + comp.r;
    out.x_dot0 = self.r_dot + comp.r_dot;
  } else {
    out.x0 = self.r;
    out.x_dot0 = self.r_dot;
  }
  return out;
}

}  // namespace nbody
