#pragma once

// Planar point-mass state types, the center-of-mass frame and polar
// coordinates about the origin of that frame.

#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "nbody/error.hpp"

namespace nbody {

template <typename Scalar>
using Vector2 = Eigen::Matrix<Scalar, 2, 1>;

template <typename Scalar>
struct Body {
  std::string name;
  Scalar mass{};
  Vector2<Scalar> position = Vector2<Scalar>::Zero();
  Vector2<Scalar> velocity = Vector2<Scalar>::Zero();
};

template <typename Scalar>
struct SystemState {
  Scalar gravitational_constant{1};
  std::vector<Body<Scalar>> bodies;
  Scalar epoch{0};

  std::size_t size() const { return bodies.size(); }
};

/// Radial/angular state of one point about the frame origin. `theta` is
/// reported in (-pi, pi] by cartesian_to_polar; propagated angles are
/// cumulative and may leave that interval.
template <typename Scalar>
struct PolarState {
  Scalar r{};
  Scalar theta{};
  Scalar r_dot{};
  Scalar theta_dot{};
};

/// Throws FewerThanTwoBodies, NonPositiveMass, NonPositiveG or NonFiniteState.
template <typename Scalar>
void validate(const SystemState<Scalar>& state) {
  using std::isfinite;
  if (state.bodies.size() < 2) {
    throw Error(ErrorKind::FewerThanTwoBodies,
                "need at least two bodies, got " +
                    std::to_string(state.bodies.size()));
  }
  if (!isfinite(state.gravitational_constant) ||
      !(state.gravitational_constant > Scalar(0))) {
    throw Error(ErrorKind::NonPositiveG, "gravitational constant must be > 0");
  }
  if (!isfinite(state.epoch)) {
    throw Error(ErrorKind::NonFiniteState, "epoch is not finite");
  }
  for (std::size_t k = 0; k < state.bodies.size(); ++k) {
    const auto& b = state.bodies[k];
    if (!isfinite(b.mass) || !(b.mass > Scalar(0))) {
      throw Error(ErrorKind::NonPositiveMass, "mass > 0 required for body '" +
                                                  b.name + "'")
          .with_body(k);
    }
    if (!b.position.allFinite() || !b.velocity.allFinite()) {
      throw Error(ErrorKind::NonFiniteState,
                  "non-finite position or velocity for body '" + b.name + "'")
          .with_body(k);
    }
  }
}

template <typename Scalar>
Scalar total_mass(const SystemState<Scalar>& state) {
  Scalar m(0);
  for (const auto& b : state.bodies) m += b.mass;
  return m;
}

/// Mass-weighted mean position and velocity, summed in ascending index order.
template <typename Scalar>
std::pair<Vector2<Scalar>, Vector2<Scalar>> center_of_mass(
    const SystemState<Scalar>& state) {
  Vector2<Scalar> p = Vector2<Scalar>::Zero();
  Vector2<Scalar> v = Vector2<Scalar>::Zero();
  Scalar m(0);
  for (const auto& b : state.bodies) {
    p += b.mass * b.position;
    v += b.mass * b.velocity;
    m += b.mass;
  }
  return {p / m, v / m};
}

/// Translates and boosts the state so the center of mass sits at the origin
/// at rest. Pairwise separations and relative velocities are unchanged.
template <typename Scalar>
SystemState<Scalar> to_com_frame(const SystemState<Scalar>& state) {
  validate(state);
  const auto [com_p, com_v] = center_of_mass(state);
  SystemState<Scalar> out = state;
  for (auto& b : out.bodies) {
    b.position -= com_p;
    b.velocity -= com_v;
  }
  return out;
}

template <typename Scalar>
Scalar cross(const Vector2<Scalar>& a, const Vector2<Scalar>& b) {
  return a.x() * b.y() - a.y() * b.x();
}

template <typename Scalar>
PolarState<Scalar> cartesian_to_polar(const Vector2<Scalar>& position,
                                      const Vector2<Scalar>& velocity) {
  const Scalar r = position.norm();
  if (!(r > Scalar(0))) {
    throw Error(ErrorKind::OriginSingularity,
                "polar coordinates undefined at the origin");
  }
  Scalar theta = std::atan2(position.y(), position.x());
  // atan2 gives -pi for (x<0, y=-0); report in (-pi, pi].
  if (theta <= -std::numbers::pi_v<Scalar>) theta = std::numbers::pi_v<Scalar>;
  return PolarState<Scalar>{r, theta, position.dot(velocity) / r,
                            cross(position, velocity) / (r * r)};
}

template <typename Scalar>
std::pair<Vector2<Scalar>, Vector2<Scalar>> polar_to_cartesian(
    const PolarState<Scalar>& p) {
  if (!(p.r > Scalar(0))) {
    throw Error(ErrorKind::OriginSingularity, "polar state requires r > 0");
  }
  const Vector2<Scalar> e_r(std::cos(p.theta), std::sin(p.theta));
  const Vector2<Scalar> e_theta(-e_r.y(), e_r.x());
  return {p.r * e_r, p.r_dot * e_r + p.r * p.theta_dot * e_theta};
}

}  // namespace nbody
