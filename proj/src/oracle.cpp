#include "nbody/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Core>

namespace nbody {

const char* to_string(IntegratorMethod m) {
  return m == IntegratorMethod::rk4_fixed ? "rk4_fixed" : "rk45_adaptive";
}

void validate(const IntegratorConfig& config) {
  if (!(config.tolerance > 0.0)) {
    throw Error(ErrorKind::ValidationError, "integrator tolerance must be > 0");
  }
  if (!(config.step > 0.0)) {
    throw Error(ErrorKind::ValidationError, "integrator step must be > 0");
  }
  if (config.max_steps <= 0) {
    throw Error(ErrorKind::ValidationError, "integrator max_steps must be > 0");
  }
  if (!(config.collision_epsilon_factor >= 0.0)) {
    throw Error(ErrorKind::ValidationError,
                "collision epsilon factor must be >= 0");
  }
}

std::vector<Vector2<double>> nbody_accelerations(const SystemState<double>& state,
                                                 double collision_epsilon) {
  const auto n = state.size();
  const double G = state.gravitational_constant;
  std::vector<Vector2<double>> acc(n, Vector2<double>::Zero());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const Vector2<double> d = state.bodies[j].position - state.bodies[i].position;
      const double dist = d.norm();
      if (!(dist > collision_epsilon)) {
        std::ostringstream os;
        os.precision(17);
        os << "bodies " << i << " and " << j << " at distance " << dist;
        throw Error(ErrorKind::CollisionDetected, os.str()).with_body(i);
      }
      const Vector2<double> g = d * (G / (dist * dist * dist));
      acc[i] += state.bodies[j].mass * g;
      acc[j] -= state.bodies[i].mass * g;
    }
  }
  return acc;
}

double min_pairwise_distance(const SystemState<double>& state) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < state.size(); ++i) {
    for (std::size_t j = i + 1; j < state.size(); ++j) {
      best = std::min(best, (state.bodies[j].position - state.bodies[i].position).norm());
    }
  }
  return best;
}

double total_energy(const SystemState<double>& state) {
  double kinetic = 0.0;
  double potential = 0.0;
  for (std::size_t i = 0; i < state.size(); ++i) {
    const auto& bi = state.bodies[i];
    kinetic += 0.5 * bi.mass * bi.velocity.squaredNorm();
    for (std::size_t j = i + 1; j < state.size(); ++j) {
      const auto& bj = state.bodies[j];
      potential -= state.gravitational_constant * bi.mass * bj.mass /
                   (bj.position - bi.position).norm();
    }
  }
  return kinetic + potential;
}

Vector2<double> total_momentum(const SystemState<double>& state) {
  Vector2<double> p = Vector2<double>::Zero();
  for (const auto& b : state.bodies) p += b.mass * b.velocity;
  return p;
}

double total_angular_momentum(const SystemState<double>& state) {
  double l = 0.0;
  for (const auto& b : state.bodies) l += b.mass * cross(b.position, b.velocity);
  return l;
}

namespace {

using Eigen::VectorXd;

struct OdeRun {
  std::vector<double> times;
  std::vector<VectorXd> states;
  std::optional<double> truncated_at;
  std::optional<ErrorKind> reason;
  std::string message;
};

void check_times(std::span<const double> times, double t0) {
  if (times.empty()) {
    throw Error(ErrorKind::ValidationError, "output times must be nonempty");
  }
  if (times.front() < t0) {
    throw Error(ErrorKind::ValidationError, "output times must start at or after t0");
  }
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (!(times[i] > times[i - 1])) {
      throw Error(ErrorKind::ValidationError, "output times must be strictly ascending");
    }
  }
}

// Scaled max norm used for step control.
double error_norm(const VectorXd& err, const VectorXd& y, const VectorXd& y_new,
                  double tol) {
  const VectorXd scale =
      (tol + tol * y.cwiseAbs().cwiseMax(y_new.cwiseAbs()).array()).matrix();
  return err.cwiseQuotient(scale).cwiseAbs().maxCoeff();
}

// Dormand-Prince 5(4) or classic RK4 from (t0, y0), recording the state at
// each requested time. `rhs` may throw nbody::Error, which ends the run.
// `halt(t, y)` is checked after every accepted step.
template <typename Rhs, typename Halt>
OdeRun integrate_ode(Rhs&& rhs, VectorXd y, double t0,
                     std::span<const double> times, const IntegratorConfig& config,
                     Halt&& halt) {
  OdeRun run;
  double t = t0;
  const double span = std::max(times.back() - t0, 0.0);
  long steps = 0;

  auto stop = [&](ErrorKind kind, const std::string& msg) {
    run.truncated_at = t;
    run.reason = kind;
    run.message = msg;
  };

  double h = config.step;
  if (config.method == IntegratorMethod::rk45_adaptive) {
    try {
      const VectorXd f0 = rhs(t, y);
      const double d0 = y.norm();
      const double d1 = f0.norm();
      h = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    } catch (const Error& e) {
      stop(e.kind(), e.what());
      return run;
    }
    if (span > 0.0) h = std::min(h, span);
  }

  for (const double target : times) {
    while (t < target) {
      if (++steps > config.max_steps) {
        stop(ErrorKind::MaxStepsExceeded, "integrator exceeded max_steps");
        return run;
      }
      const double remaining = target - t;
      try {
        if (config.method == IntegratorMethod::rk4_fixed) {
          const double hs = std::min(config.step, remaining);
          const VectorXd k1 = rhs(t, y);
          const VectorXd k2 = rhs(t + 0.5 * hs, y + 0.5 * hs * k1);
          const VectorXd k3 = rhs(t + 0.5 * hs, y + 0.5 * hs * k2);
          const VectorXd k4 = rhs(t + hs, y + hs * k3);
          y += (hs / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
          t = hs == remaining ? target : t + hs;
        } else {
          const bool last = h >= remaining;
          const double hs = last ? remaining : h;
          const VectorXd k1 = rhs(t, y);
          const VectorXd k2 = rhs(t + hs / 5.0, y + hs * (k1 / 5.0));
          const VectorXd k3 =
              rhs(t + 3.0 * hs / 10.0, y + hs * (3.0 / 40.0 * k1 + 9.0 / 40.0 * k2));
          const VectorXd k4 = rhs(t + 4.0 * hs / 5.0,
                                  y + hs * (44.0 / 45.0 * k1 - 56.0 / 15.0 * k2 +
                                            32.0 / 9.0 * k3));
          const VectorXd k5 =
              rhs(t + 8.0 * hs / 9.0,
                  y + hs * (19372.0 / 6561.0 * k1 - 25360.0 / 2187.0 * k2 +
                            64448.0 / 6561.0 * k3 - 212.0 / 729.0 * k4));
          const VectorXd k6 =
              rhs(t + hs, y + hs * (9017.0 / 3168.0 * k1 - 355.0 / 33.0 * k2 +
                                    46732.0 / 5247.0 * k3 + 49.0 / 176.0 * k4 -
                                    5103.0 / 18656.0 * k5));
          const VectorXd y_new =
              y + hs * (35.0 / 384.0 * k1 + 500.0 / 1113.0 * k3 + 125.0 / 192.0 * k4 -
                        2187.0 / 6784.0 * k5 + 11.0 / 84.0 * k6);
          const VectorXd k7 = rhs(t + hs, y_new);
          const VectorXd err =
              hs * (71.0 / 57600.0 * k1 - 71.0 / 16695.0 * k3 + 71.0 / 1920.0 * k4 -
                    17253.0 / 339200.0 * k5 + 22.0 / 525.0 * k6 - 1.0 / 40.0 * k7);
          const double en = error_norm(err, y, y_new, config.tolerance);
          if (!std::isfinite(en)) {
            h = 0.25 * hs;
          } else {
            const double factor =
                en == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(en, -0.2), 0.2, 5.0);
            if (en <= 1.0) {
              y = y_new;
              t = last ? target : t + hs;
              if (!last) h = hs * factor;
              else h = std::max(h, hs * factor);
            } else {
              h = hs * std::min(factor, 1.0);
            }
          }
          if (h < 1e-14 * std::max(1.0, std::abs(t))) {
            stop(ErrorKind::ToleranceNotMet, "step size underflow");
            return run;
          }
        }
      } catch (const Error& e) {
        stop(e.kind(), e.what());
        return run;
      }
      if (halt(t, y)) {
        stop(ErrorKind::RadicandNegative, "halt condition reached");
        if (t >= target) {
          run.times.push_back(target);
          run.states.push_back(y);
        }
        return run;
      }
    }
    run.times.push_back(target);
    run.states.push_back(y);
  }
  return run;
}

}  // namespace

std::vector<Trajectory> integrate_nbody(const SystemState<double>& state,
                                        std::span<const double> times,
                                        const IntegratorConfig& config) {
  validate(state);
  validate(config);
  check_times(times, state.epoch);
  const auto n = state.size();
  const double eps = config.collision_epsilon_factor * min_pairwise_distance(state);
  if (!(min_pairwise_distance(state) > 0.0)) {
    throw Error(ErrorKind::CollisionDetected, "coincident bodies at t0");
  }

  VectorXd y(4 * n);
  for (std::size_t k = 0; k < n; ++k) {
    y.segment<2>(2 * k) = state.bodies[k].position;
    y.segment<2>(2 * (n + k)) = state.bodies[k].velocity;
  }

  SystemState<double> scratch = state;
  auto rhs = [&](double, const VectorXd& s) {
    for (std::size_t k = 0; k < n; ++k) scratch.bodies[k].position = s.segment<2>(2 * k);
    const auto acc = nbody_accelerations(scratch, eps);
    VectorXd d(4 * n);
    d.head(2 * n) = s.tail(2 * n);
    for (std::size_t k = 0; k < n; ++k) d.segment<2>(2 * (n + k)) = acc[k];
    return d;
  };

  const auto run = integrate_ode(rhs, y, state.epoch, times, config,
                                 [](double, const VectorXd&) { return false; });
  if (run.truncated_at && !config.truncate_on_failure) {
    throw Error(*run.reason, run.message).at_time(*run.truncated_at);
  }

  std::vector<Trajectory> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    auto& traj = out[k];
    traj.body_index = k;
    traj.times = run.times;
    traj.truncated_at = run.truncated_at;
    traj.truncation_reason = run.reason;
    traj.samples.reserve(run.states.size());
    for (const auto& s : run.states) {
      traj.samples.push_back({s.segment<2>(2 * k), s.segment<2>(2 * (n + k))});
    }
  }
  return out;
}

SystemState<double> snapshot(const SystemState<double>& initial,
                             const std::vector<Trajectory>& trajectories,
                             std::size_t i) {
  SystemState<double> s = initial;
  for (std::size_t k = 0; k < s.size(); ++k) {
    s.bodies[k].position = trajectories.at(k).samples.at(i).position;
    s.bodies[k].velocity = trajectories.at(k).samples.at(i).velocity;
  }
  s.epoch = trajectories.at(0).times.at(i);
  return s;
}

ScalarTrajectory integrate_scalar_x(const PropagatorConstants& constants,
                                    double x0, double x_dot0,
                                    std::span<const double> times,
                                    const IntegratorConfig& config,
                                    ScalarForm form) {
  validate(config);
  check_times(times, constants.t0);
  if (!(x0 > 0.0)) throw Error(ErrorKind::NonPositiveX0, "x0 must be > 0");
  const double A = constants.A;
  const double B = constants.B;
  const double s = constants.sign == Sign::plus ? 1.0 : -1.0;
  const double floor = 1e-14 * std::abs(B);

  ScalarTrajectory out;
  OdeRun run;
  if (form == ScalarForm::ode_5a) {
    if (A / x0 + B < 0.0) {
      throw Error(ErrorKind::RadicandNegative, "A/x0 + B < 0 at t0");
    }
    VectorXd y(1);
    y[0] = x0;
    auto rhs = [=](double, const VectorXd& v) {
      VectorXd d(1);
      d[0] = s * std::sqrt(A / v[0] + B);
      return d;
    };
    auto halt = [=](double, const VectorXd& v) {
      return !(v[0] > 0.0) || A / v[0] + B < floor;
    };
    run = integrate_ode(rhs, y, constants.t0, times, config, halt);
    for (const auto& v : run.states) {
      out.x.push_back(v[0]);
      out.x_dot.push_back(s * std::sqrt(std::max(A / v[0] + B, 0.0)));
    }
  } else {
    VectorXd y(2);
    y << x0, x_dot0;
    auto rhs = [=](double, const VectorXd& v) {
      VectorXd d(2);
      d << v[1], -A / (2.0 * v[0] * v[0]);
      return d;
    };
    auto halt = [](double, const VectorXd& v) { return !(v[0] > 0.0); };
    run = integrate_ode(rhs, y, constants.t0, times, config, halt);
    for (const auto& v : run.states) {
      out.x.push_back(v[0]);
      out.x_dot.push_back(v[1]);
    }
  }
  if (run.reason == ErrorKind::MaxStepsExceeded && !config.truncate_on_failure) {
    throw Error(ErrorKind::MaxStepsExceeded, run.message).at_time(*run.truncated_at);
  }
  out.times = run.times;
  out.truncated_at = run.truncated_at;
  return out;
}

}  // namespace nbody
