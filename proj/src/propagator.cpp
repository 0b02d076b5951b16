#include "nbody/propagator.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <utility>

namespace nbody {

const char* to_string(BMode m) { return m == BMode::paper ? "paper" : "consistent"; }

const char* to_string(SignMode m) {
  switch (m) {
    case SignMode::automatic: return "auto";
    case SignMode::plus: return "plus";
    case SignMode::minus: return "minus";
  }
  return "auto";
}

const char* to_string(Sign s) { return s == Sign::plus ? "plus" : "minus"; }

const char* to_string(EvalMode m) {
  return m == EvalMode::as_printed ? "as_printed" : "rederived";
}

const char* to_string(X0Mode m) {
  return m == X0Mode::paper ? "paper" : "consistent";
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

// F(w) = -(1 + 2w) / (2 w^2): antiderivative of (1+w)/w^3, i.e. of W^-2 dt
// after the substitution dt = (1+w)/(c5 w) dw.
double diff_F(double w, double w0) {
  const double inv = 1.0 / w;
  const double inv0 = 1.0 / w0;
  return -0.5 * (inv * inv - inv0 * inv0) - (inv - inv0);
}

// G(w) = -1/(2w^2) - 3/w + 2 ln(-w): antiderivative of F(w)(1+w)/w times -2.
double diff_G(double w, double w0) {
  const double inv = 1.0 / w;
  const double inv0 = 1.0 / w0;
  return -0.5 * (inv * inv - inv0 * inv0) - 3.0 * (inv - inv0) +
         2.0 * std::log(w / w0);
}

// Polynomial of the published radial solution: W^4/2 + W^3 + W^2/2.
double printed_Q(double w) {
  const double w2 = w * w;
  return 0.5 * w2 * w2 + w2 * w + 0.5 * w2;
}

double branch_w(BranchId branch, double L) {
  return branch == BranchId::minus_one ? lambert_wm1_neg_exp(L)
                                       : lambert_w0_neg_exp(L);
}

}  // namespace

double energy_constant(BMode mode, double A, double x0, double x_dot0) {
  if (mode == BMode::paper) return A / (x0 * x0);
  return x_dot0 * x_dot0 - A / x0;
}

PropagatorConstants derive_constants(const ReducedPair<double>& reduced,
                                     double G, double pair_mass, double t0,
                                     BMode b_mode, SignMode sign_mode,
                                     EvalMode eval_mode, BranchId branch) {
  const double x0 = reduced.x0;
  if (!(x0 > 0.0) || !std::isfinite(x0)) {
    throw Error(ErrorKind::NonPositiveX0, "x0 = " + fmt(x0) + " must be > 0")
        .with_body(reduced.body_index);
  }
  if (!(G > 0.0)) {
    throw Error(ErrorKind::NonPositiveG, "G must be > 0").with_body(reduced.body_index);
  }

  PropagatorConstants c;
  c.G = G;
  c.companion_mass = reduced.companion_mass;
  c.x0 = x0;
  c.t0 = t0;
  c.b_mode = b_mode;
  c.eval_mode = eval_mode;
  c.branch = branch;

  c.A = 2.0 * G * pair_mass;
  c.B = energy_constant(b_mode, c.A, x0, reduced.x_dot0);
  if (!(c.B > 0.0) || !std::isfinite(c.B)) {
    throw Error(ErrorKind::NonPositiveB,
                "B = " + fmt(c.B) + " (B > 0 is required for a real solution)")
        .with_body(reduced.body_index);
  }
  c.h = c.A / (2.0 * c.B);

  switch (sign_mode) {
    case SignMode::plus: c.sign = Sign::plus; break;
    case SignMode::minus: c.sign = Sign::minus; break;
    case SignMode::automatic:
      if (reduced.x_dot0 > 0.0) {
        c.sign = Sign::plus;
      } else {
        c.sign = Sign::minus;
        c.sign_defaulted = reduced.x_dot0 == 0.0;
      }
      break;
  }
  const double s = c.sign == Sign::plus ? 1.0 : -1.0;

  const double k = 2.0 * c.B / c.A;  // 1/h
  c.c2 = s * k * std::sqrt(c.B);
  c.c5 = -c.c2;
  c.c1 = -k * std::exp(-k * (x0 - c.h * std::log(x0)));
  c.c4 = c.c1 * std::exp(c.c2 * t0);
  c.h_a = -(4.0 * c.B * c.B * G * reduced.companion_mass) / (c.A * c.A);

  const double u0 = x0 / c.h;
  c.w0 = -u0;
  c.h2 = c.h_a / (2.0 * c.c5);
  c.h1 = reduced.r_dot0 - c.h2 * (1.0 + 2.0 * c.w0);
  return c;
}

BodySolution::BodySolution(PropagatorConstants constants,
                           ReducedPair<double> reduced, double t0)
    : constants_(std::move(constants)), reduced_(std::move(reduced)), t0_(t0) {
  const auto& c = constants_;
  const double u0 = c.x0 / c.h;
  const bool on_branch = c.branch == BranchId::minus_one ? u0 >= 1.0 : u0 <= 1.0;
  if (!on_branch) {
    throw Error(ErrorKind::InitialConditionOffBranch,
                std::string("x0/h = ") + fmt(u0) + " cannot be recovered on the " +
                    to_string(c.branch) + " branch")
        .with_body(reduced_.body_index);
  }
  // Distance of L(t0) from the branch point L = 1.
  const double room = u0 - 1.0 - std::log(u0);
  if (c.c2 > 0.0) {
    window_begin_ = t0_ - room / c.c2;
    window_end_ = kInf;
  } else {
    window_begin_ = -kInf;
    window_end_ = t0_ + room / -c.c2;
  }
  r_slope_ = reduced_.r_dot0 + c.h2 * (1.0 + 2.0 * c.w0) / (c.w0 * c.w0);
  theta_gain_ =
      c.x0 * c.x0 * reduced_.theta_dot0 / (c.h * c.h * c.c5);
}

bool BodySolution::in_window(double t) const {
  return t == t0_ || (t > window_begin_ && t < window_end_);
}

double BodySolution::log_argument(double t) const {
  const double u0 = constants_.x0 / constants_.h;
  return (u0 - std::log(u0)) + constants_.c2 * (t - t0_);
}

double BodySolution::w(double t) const {
  if (!in_window(t)) {
    throw Error(ErrorKind::WArgOutOfDomain,
                "t = " + fmt(t) + " leaves the Lambert W domain")
        .with_body(reduced_.body_index)
        .at_time(t);
  }
  if (t == t0_) return constants_.w0;
  try {
    return branch_w(constants_.branch, log_argument(t));
  } catch (Error& e) {
    throw e.with_body(reduced_.body_index).at_time(t);
  }
}

double BodySolution::x(double t) const {
  const double wt = w(t);
  return t == t0_ ? constants_.x0 : -constants_.h * wt;
}

double BodySolution::r(double t) const {
  const double wt = w(t);
  return constants_.eval_mode == EvalMode::as_printed ? r_as_printed(t, wt)
                                                      : r_rederived(t, wt);
}

double BodySolution::theta(double t) const {
  const double wt = w(t);
  return constants_.eval_mode == EvalMode::as_printed ? theta_as_printed(wt)
                                                      : theta_rederived(wt);
}

double BodySolution::r_as_printed(double t, double wt) const {
  const auto& c = constants_;
  // h1 multiplies t; grouped so that t = t0 returns r0 exactly.
  return reduced_.r0 + c.h1 * (t - t0_) +
         (c.h2 / c.c5) * (printed_Q(wt) - printed_Q(c.w0));
}

double BodySolution::r_rederived(double t, double wt) const {
  const auto& c = constants_;
  return reduced_.r0 + r_slope_ * (t - t0_) -
         (c.h_a / (2.0 * c.c5 * c.c5)) * diff_G(wt, c.w0);
}

double BodySolution::theta_as_printed(double wt) const {
  const auto& c = constants_;
  const double before = (1.0 + 2.0 * c.w0) * c.w0 * c.w0;
  const double now = (1.0 + 2.0 * wt) * wt * wt;
  return reduced_.theta0 + theta_gain_ * (before - now);
}

double BodySolution::theta_rederived(double wt) const {
  return reduced_.theta0 + theta_gain_ * diff_F(wt, constants_.w0);
}

double BodySolution::r_dot(double t) const {
  const auto& c = constants_;
  const double wt = w(t);
  if (c.eval_mode == EvalMode::as_printed) {
    return c.h1 + c.h2 * wt * wt * (2.0 * wt + 1.0);
  }
  return reduced_.r_dot0 + (c.h_a / c.c5) * diff_F(wt, c.w0);
}

double BodySolution::theta_dot(double t) const {
  const auto& c = constants_;
  const double wt = w(t);
  if (c.eval_mode == EvalMode::as_printed) {
    return -theta_gain_ * (2.0 * wt + 6.0 * wt * wt) * c.c5 * wt / (1.0 + wt);
  }
  const double xt = -c.h * wt;
  return c.x0 * c.x0 * reduced_.theta_dot0 / (xt * xt);
}

double BodySolution::implicit_rhs(double t) const {
  const auto& c = constants_;
  const double s = c.sign == Sign::plus ? 1.0 : -1.0;
  return s * std::sqrt(c.B) * (t - t0_) + c.x0 - c.h * std::log(c.x0);
}

double BodySolution::implicit_residual(double t) const {
  const double xt = x(t);
  return xt - constants_.h * std::log(xt) - implicit_rhs(t);
}

double x_of_t(const BodySolution& sol, double t) { return sol.x(t); }
double r_of_t(const BodySolution& sol, double t) { return sol.r(t); }
double theta_of_t(const BodySolution& sol, double t) { return sol.theta(t); }

BodySolution build_body_solution(std::size_t k, const SystemState<double>& state,
                                 const PropagationOptions& options) {
  try {
    const auto reduced = build_reduced_pair(k, state, options.xk0_mode);
    const double pair_mass = state.bodies[k].mass + reduced.companion_mass;
    auto constants = derive_constants(reduced, state.gravitational_constant,
                                      pair_mass, state.epoch, options.b_mode,
                                      options.sign_mode, options.eval_mode,
                                      options.branch);
    return BodySolution(std::move(constants), reduced, state.epoch);
  } catch (Error& e) {
    throw e.with_body(k);
  }
}

std::vector<BodyTrack> propagate_system(const SystemState<double>& state,
                                        std::span<const double> times,
                                        const PropagationOptions& options) {
  validate(state);
  std::vector<BodyTrack> tracks(state.size());
  for (std::size_t k = 0; k < state.size(); ++k) {
    auto& track = tracks[k];
    track.body_index = k;
    try {
      track.solution.emplace(build_body_solution(k, state, options));
    } catch (const Error& e) {
      track.failure = e;
      continue;
    }
    const auto& sol = *track.solution;
    track.samples.reserve(times.size());
    for (const double t : times) {
      ApproxSample s;
      s.t = t;
      if (sol.in_window(t)) {
        try {
          s.x = sol.x(t);
          s.r = sol.r(t);
          s.theta = sol.theta(t);
          s.valid = std::isfinite(s.x) && std::isfinite(s.r) &&
                    std::isfinite(s.theta) && s.r > 0.0;
          if (s.valid) {
            s.position = t == sol.t0()
                             ? state.bodies[k].position
                             : polar_to_cartesian(PolarState<double>{s.r, s.theta, 0, 0}).first;
          }
        } catch (const Error&) {
          s.valid = false;
        }
      }
      if (!s.valid && !track.truncated_at) track.truncated_at = t;
      track.samples.push_back(s);
    }
  }
  return tracks;
}

}  // namespace nbody
