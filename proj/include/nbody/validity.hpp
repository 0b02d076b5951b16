#pragma once

// Evaluates the assumptions the closed-form solution rests on and records a
// verdict. Never throws on a bad scenario: every finding is a report entry.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nbody/core_model.hpp"
#include "nbody/oracle.hpp"
#include "nbody/propagator.hpp"

namespace nbody {

enum class Verdict { valid, warned, invalid };
enum class Severity { hard, soft };

const char* to_string(Verdict v);
const char* to_string(Severity s);

struct ValidityOptions {
  PropagationOptions propagation;
  double theta_dot_hard_limit{1.0};
  double theta_dot_soft_limit{0.1};
  double collinearity_warn{0.1};  // radians, also bounds force_deviation_max
  double collision_distance{0.0};  // absolute, at t0
};

struct Finding {
  Severity severity{Severity::hard};
  std::string code;
  std::optional<std::size_t> body_index;
  std::string detail;
};

struct BodyValidity {
  std::size_t body_index{};
  bool reduced_ok{false};
  double x0{};
  double A{};
  double B{};
  bool B_positive{false};
  double binomial_margin{};  // |x| B / A, must exceed 1
  bool binomial_ok{false};
  std::optional<double> binomial_violation_time;
  double theta_dot_max{};
  bool theta_dot_ok{false};
  bool constructible{false};
  std::optional<double> window_end;  // nullopt = unbounded
  double collinearity_deviation_max{};
  // Angle between the true acceleration of body k and the direction to r_Mk.
  double force_deviation_max{};
};

struct ValidityReport {
  std::vector<BodyValidity> bodies;
  Verdict verdict{Verdict::valid};
  std::vector<Finding> findings;

  bool has_code(const std::string& code) const;
};

ValidityReport check_scenario(const SystemState<double>& state,
                              const ValidityOptions& options = {});

/// Amends `report` with diagnostics measured along sampled trajectories:
/// collinearity of r_k with -r_Mk, the direction of the true pull on body k
/// relative to r_Mk - r_k, and |theta_dot_k| from the oracle run, and the
/// binomial margin along the closed-form x(t). `state` is the initial
/// state used for both runs (COM frame).
ValidityReport check_trajectory(ValidityReport report,
                                const SystemState<double>& state,
                                std::span<const BodyTrack> closed_form,
                                std::span<const Trajectory> oracle,
                                const ValidityOptions& options = {});

/// Recomputes the verdict from the findings.
Verdict verdict_of(const std::vector<Finding>& findings);

}  // namespace nbody
