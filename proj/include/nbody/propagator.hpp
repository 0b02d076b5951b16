#pragma once

// Closed-form per-body propagation. Each body is treated as one half of a
// two-body problem against the rest of the system; its separation scalar
// x(t) comes from Lambert W, and r(t), theta(t) from integrating the reduced
// radial and angular equations over that x(t).

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nbody/core_model.hpp"
#include "nbody/error.hpp"
#include "nbody/lambertw.hpp"
#include "nbody/reduction.hpp"

namespace nbody {

/// How B (the constant of the radial first integral) is fixed.
///  paper:      B = A / x0^2
///  consistent: B = x_dot0^2 - A / x0, the energy integral of x'' = -A/(2x^2)
enum class BMode { paper, consistent };
enum class SignMode { automatic, plus, minus };
enum class Sign { plus, minus };
/// as_printed evaluates the published r(t), theta(t) expressions verbatim
/// (positive powers of W); rederived evaluates the exact antiderivatives.
enum class EvalMode { as_printed, rederived };

const char* to_string(BMode m);
const char* to_string(SignMode m);
const char* to_string(Sign s);
const char* to_string(EvalMode m);
const char* to_string(X0Mode m);

struct PropagatorConstants {
  double A{};
  double B{};
  double h{};
  double c1{};
  double c2{};
  double c4{};
  double c5{};
  double h_a{};
  double h1{};
  double h2{};
  Sign sign{Sign::minus};
  bool sign_defaulted{false};  // auto mode met x_dot0 == 0 and chose minus
  BranchId branch{BranchId::minus_one};
  BMode b_mode{BMode::paper};
  EvalMode eval_mode{EvalMode::rederived};

  // Inputs retained for evaluation.
  double G{};
  double companion_mass{};
  double x0{};
  double t0{};
  double w0{};  // -x0/h, the value W takes at t0 on the right branch
};

/// B for the given mode, without the positivity check.
double energy_constant(BMode mode, double A, double x0, double x_dot0);

PropagatorConstants derive_constants(const ReducedPair<double>& reduced,
                                     double G, double pair_mass, double t0,
                                     BMode b_mode, SignMode sign_mode,
                                     EvalMode eval_mode,
                                     BranchId branch = BranchId::minus_one);

/// A body's closed-form solution. Immutable; every evaluation is const and
/// safe to call concurrently.
class BodySolution {
 public:
  /// Throws InitialConditionOffBranch when the branch cannot reproduce x0.
  BodySolution(PropagatorConstants constants, ReducedPair<double> reduced,
               double t0);

  const PropagatorConstants& constants() const { return constants_; }
  const ReducedPair<double>& reduced() const { return reduced_; }
  double t0() const { return t0_; }

  /// Open interval on which the W argument stays inside the branch domain.
  /// Infinite ends are +-infinity.
  double window_begin() const { return window_begin_; }
  double window_end() const { return window_end_; }
  bool in_window(double t) const;

  /// L(t) = -ln(-z(t)) with z = c4 e^{c5 t}.
  double log_argument(double t) const;
  /// W(c4 e^{c5 t}); throws WArgOutOfDomain outside the window.
  double w(double t) const;

  double x(double t) const;
  double r(double t) const;
  double theta(double t) const;
  /// Analytic time derivatives of the rederived r and theta.
  double r_dot(double t) const;
  double theta_dot(double t) const;

  /// Residual of x - h ln x = f(t), the implicit relation x(t) solves.
  double implicit_residual(double t) const;
  double implicit_rhs(double t) const;

 private:
  double r_as_printed(double t, double w) const;
  double r_rederived(double t, double w) const;
  double theta_as_printed(double w) const;
  double theta_rederived(double w) const;

  PropagatorConstants constants_;
  ReducedPair<double> reduced_;
  double t0_;
  double window_begin_;
  double window_end_;
  double r_slope_;     // r_dot0 - (h_a/c5) F(w0)
  double theta_gain_;  // x0^2 theta_dot0 / (h^2 c5)
};

double x_of_t(const BodySolution& sol, double t);
double r_of_t(const BodySolution& sol, double t);
double theta_of_t(const BodySolution& sol, double t);

struct PropagationOptions {
  X0Mode xk0_mode{X0Mode::consistent};
  BMode b_mode{BMode::paper};
  SignMode sign_mode{SignMode::automatic};
  EvalMode eval_mode{EvalMode::rederived};
  BranchId branch{BranchId::minus_one};
};

struct ApproxSample {
  double t{};
  bool valid{false};
  double x{};
  double r{};
  double theta{};
  Vector2<double> position = Vector2<double>::Zero();
};

struct BodyTrack {
  std::size_t body_index{};
  std::optional<BodySolution> solution;
  std::optional<Error> failure;  // construction failure; samples empty then
  std::vector<ApproxSample> samples;
  std::optional<double> truncated_at;  // first requested time outside window
};

/// Builds every body's solution from `state` (expected in the COM frame) and
/// samples it at `times`. A body that cannot be constructed carries its error
/// and does not affect the others.
std::vector<BodyTrack> propagate_system(const SystemState<double>& state,
                                        std::span<const double> times,
                                        const PropagationOptions& options = {});

BodySolution build_body_solution(std::size_t k, const SystemState<double>& state,
                                 const PropagationOptions& options);

}  // namespace nbody
