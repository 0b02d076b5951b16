#include "nbody/validity.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "nbody/reduction.hpp"

namespace nbody {

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::valid: return "valid";
    case Verdict::warned: return "warned";
    case Verdict::invalid: return "invalid";
  }
  return "invalid";
}

const char* to_string(Severity s) { return s == Severity::hard ? "hard" : "soft"; }

bool ValidityReport::has_code(const std::string& code) const {
  return std::any_of(findings.begin(), findings.end(),
                     [&](const Finding& f) { return f.code == code; });
}

Verdict verdict_of(const std::vector<Finding>& findings) {
  bool soft = false;
  for (const auto& f : findings) {
    if (f.severity == Severity::hard) return Verdict::invalid;
    soft = true;
  }
  return soft ? Verdict::warned : Verdict::valid;
}

namespace {

std::string num(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

void add(std::vector<Finding>& out, Severity s, std::string code,
         std::optional<std::size_t> body, std::string detail) {
  out.push_back({s, std::move(code), body, std::move(detail)});
}

}  // namespace

ValidityReport check_scenario(const SystemState<double>& input,
                              const ValidityOptions& options) {
  ValidityReport report;
  auto& findings = report.findings;

  SystemState<double> state;
  try {
    state = to_com_frame(input);
  } catch (const Error& e) {
    add(findings, Severity::hard, to_string(e.kind()), e.body_index, e.what());
    report.verdict = verdict_of(findings);
    return report;
  }

  for (std::size_t i = 0; i < state.size(); ++i) {
    for (std::size_t j = i + 1; j < state.size(); ++j) {
      const double d = (state.bodies[j].position - state.bodies[i].position).norm();
      if (!(d > options.collision_distance)) {
        add(findings, Severity::hard, "CollisionDetected", i,
            "bodies " + std::to_string(i) + " and " + std::to_string(j) +
                " at distance " + num(d));
      }
    }
  }

  const auto& prop = options.propagation;
  const double G = state.gravitational_constant;
  for (std::size_t k = 0; k < state.size(); ++k) {
    BodyValidity bv;
    bv.body_index = k;

    ReducedPair<double> reduced;
    try {
      reduced = build_reduced_pair(k, state, prop.xk0_mode);
      bv.reduced_ok = true;
    } catch (const Error& e) {
      add(findings, Severity::hard, to_string(e.kind()), k, e.what());
      report.bodies.push_back(bv);
      continue;
    }

    bv.x0 = reduced.x0;
    bv.A = 2.0 * G * (state.bodies[k].mass + reduced.companion_mass);
    bv.B = energy_constant(prop.b_mode, bv.A, reduced.x0, reduced.x_dot0);
    bv.B_positive = bv.B > 0.0 && std::isfinite(bv.B);
    if (!bv.B_positive) {
      add(findings, Severity::hard, "NonPositiveB", k, "B = " + num(bv.B));
    }

    bv.binomial_margin = std::abs(reduced.x0) * bv.B / bv.A;
    bv.binomial_ok = bv.B_positive && bv.binomial_margin > 1.0;
    if (bv.B_positive && !bv.binomial_ok) {
      add(findings, Severity::hard, "BinomialViolated", k,
          "|x0| = " + num(reduced.x0) + " <= A/B = " + num(bv.A / bv.B));
    }
    if (prop.b_mode == BMode::paper && reduced.x0 >= 1.0) {
      add(findings, Severity::soft, "RescaleLengths", k,
          "x0 = " + num(reduced.x0) +
              " >= 1 with B = A/x0^2; rescale lengths so x0 < 1");
    }

    bv.theta_dot_max = std::abs(reduced.theta_dot0);
    bv.theta_dot_ok = bv.theta_dot_max <= options.theta_dot_soft_limit;
    if (bv.theta_dot_max >= options.theta_dot_hard_limit) {
      add(findings, Severity::hard, "AngularVelocityTooLarge", k,
          "|theta_dot0| = " + num(bv.theta_dot_max) + " >= " +
              num(options.theta_dot_hard_limit));
    } else if (!bv.theta_dot_ok) {
      add(findings, Severity::soft, "AngularVelocityLarge", k,
          "|theta_dot0| = " + num(bv.theta_dot_max) + " > " +
              num(options.theta_dot_soft_limit));
    }

    if (prop.sign_mode == SignMode::automatic && reduced.x_dot0 == 0.0) {
      add(findings, Severity::soft, "SignDefaultedToMinus", k,
          "x_dot0 = 0; infalling branch chosen");
    }

    if (bv.binomial_ok) {
      try {
        const BodySolution sol = build_body_solution(k, state, prop);
        bv.constructible = true;
        if (std::isfinite(sol.window_end())) bv.window_end = sol.window_end();
      } catch (const Error& e) {
        add(findings, Severity::hard, to_string(e.kind()), k, e.what());
      }
    }
    report.bodies.push_back(bv);
  }

  report.verdict = verdict_of(findings);
  return report;
}

ValidityReport check_trajectory(ValidityReport report,
                                const SystemState<double>& state,
                                std::span<const BodyTrack> closed_form,
                                std::span<const Trajectory> oracle,
                                const ValidityOptions& options) {
  const auto n = state.size();

  if (oracle.size() == n && n >= 2) {
    std::vector<double> dev_max(n, 0.0);
    std::vector<double> force_max(n, 0.0);
    std::vector<double> thd_max(n, 0.0);
    const std::size_t samples = oracle.front().samples.size();
    for (std::size_t i = 0; i < samples; ++i) {
      SystemState<double> at = state;
      for (std::size_t k = 0; k < n; ++k) at.bodies[k].position = oracle[k].samples[i].position;
      std::vector<Vector2<double>> accel;
      try {
        accel = nbody_accelerations(at);
      } catch (const Error&) {
      }
      for (std::size_t k = 0; k < n; ++k) {
        const Vector2<double> rk = oracle[k].samples[i].position;
        const Vector2<double> vk = oracle[k].samples[i].velocity;
        Vector2<double> rm = Vector2<double>::Zero();
        double m = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          if (j == k) continue;
          rm += state.bodies[j].mass * oracle[j].samples[i].position;
          m += state.bodies[j].mass;
        }
        rm /= m;
        const Vector2<double> anti = -rm;
        if (rk.norm() > 0.0 && anti.norm() > 0.0) {
          const double angle = std::atan2(std::abs(cross(rk, anti)), rk.dot(anti));
          dev_max[k] = std::max(dev_max[k], angle);
        }
        const Vector2<double> toward = rm - rk;
        if (!accel.empty() && accel[k].norm() > 0.0 && toward.norm() > 0.0) {
          const double angle =
              std::atan2(std::abs(cross(accel[k], toward)), accel[k].dot(toward));
          force_max[k] = std::max(force_max[k], angle);
        }
        const double r2 = rk.squaredNorm();
        if (r2 > 0.0) thd_max[k] = std::max(thd_max[k], std::abs(cross(rk, vk)) / r2);
      }
    }
    for (auto& bv : report.bodies) {
      const auto k = bv.body_index;
      bv.collinearity_deviation_max = dev_max[k];
      bv.force_deviation_max = force_max[k];
      bv.theta_dot_max = std::max(bv.theta_dot_max, thd_max[k]);
      if (dev_max[k] > options.collinearity_warn) {
        report.findings.push_back({Severity::soft, "CollinearityDrift", k,
                                   "max angle between r_k and -r_Mk = " +
                                       num(dev_max[k]) + " rad"});
      }
      if (force_max[k] > options.collinearity_warn) {
        report.findings.push_back({Severity::soft, "CompanionForceDrift", k,
                                   "max angle between the pull on body k and r_Mk - r_k = " +
                                       num(force_max[k]) + " rad"});
      }
      if (thd_max[k] > options.theta_dot_soft_limit) {
        bv.theta_dot_ok = false;
        report.findings.push_back({Severity::soft, "AngularVelocityLarge", k,
                                   "max |theta_dot| along trajectory = " +
                                       num(thd_max[k])});
      }
    }
  }

  for (const auto& track : closed_form) {
    auto it = std::find_if(report.bodies.begin(), report.bodies.end(),
                           [&](const BodyValidity& b) {
                             return b.body_index == track.body_index;
                           });
    if (it == report.bodies.end() || !track.solution) continue;
    const auto& c = track.solution->constants();
    for (const auto& s : track.samples) {
      if (!s.valid) continue;
      const double margin = std::abs(s.x) * c.B / c.A;
      it->binomial_margin = std::min(it->binomial_margin, margin);
      if (!(margin > 1.0) && !it->binomial_violation_time) {
        it->binomial_violation_time = s.t;
        it->binomial_ok = false;
        report.findings.push_back({Severity::soft, "BinomialViolatedAlongTrajectory",
                                   track.body_index,
                                   "|x| B / A <= 1 first at t = " + num(s.t)});
      }
    }
  }

  report.verdict = verdict_of(report.findings);
  return report;
}

}  // namespace nbody
