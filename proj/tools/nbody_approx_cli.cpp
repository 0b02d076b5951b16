// nbody-approx: batch front end.
//
//   nbody-approx check   --scenario FILE [--out DIR] [overrides]
//   nbody-approx approx  --scenario FILE [--out DIR] [overrides]
//   nbody-approx oracle  --scenario FILE [--out DIR] [overrides]
//   nbody-approx compare --scenario FILE [--out DIR] [overrides]
//
// Exit codes: 0 ok, 1 internal error, 2 invalid scenario, 3 truncated run.

#include <iostream>
#include <optional>
#include <string>
#include <utility>

#include "CLI11.hpp"
#include "nbody/harness.hpp"

namespace {

struct Overrides {
  std::optional<std::string> xk0_mode, b_mode, sign_mode, eval_mode, branch;
  std::optional<double> theta_dot_hard, theta_dot_soft, collinearity_warn,
      collision_distance;
  std::optional<std::string> integrator;
  std::optional<double> tolerance, step, collision_epsilon_factor;
  std::optional<long> max_steps;
  bool fd_velocity = false;
};

void add_overrides(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--xk0-mode", o.xk0_mode, "consistent|paper");
  cmd->add_option("--b-mode", o.b_mode, "paper|consistent");
  cmd->add_option("--sign-mode", o.sign_mode, "auto|plus|minus");
  cmd->add_option("--eval-mode", o.eval_mode, "rederived|as_printed");
  cmd->add_option("--branch", o.branch, "minus_one|principal");
  cmd->add_option("--theta-dot-hard", o.theta_dot_hard, "hard angular velocity limit");
  cmd->add_option("--theta-dot-soft", o.theta_dot_soft, "soft angular velocity limit");
  cmd->add_option("--collinearity-warn", o.collinearity_warn, "radians");
  cmd->add_option("--collision-distance", o.collision_distance, "absolute, at t0");
  cmd->add_option("--integrator", o.integrator, "rk45_adaptive|rk4_fixed");
  cmd->add_option("--tolerance", o.tolerance, "rk45 local tolerance");
  cmd->add_option("--step", o.step, "rk4 fixed step");
  cmd->add_option("--max-steps", o.max_steps, "integrator step budget");
  cmd->add_option("--collision-epsilon-factor", o.collision_epsilon_factor,
                  "fraction of the initial minimum separation");
  cmd->add_flag("--fd-velocity", o.fd_velocity,
                "closed-form Cartesian velocity by finite differences");
}

void apply(const Overrides& o, nbody::Scenario& sc) {
  auto& v = sc.options.validity;
  auto& p = v.propagation;
  auto& c = sc.options.integrator;
  if (o.xk0_mode) p.xk0_mode = nbody::parse_x0_mode(*o.xk0_mode);
  if (o.b_mode) p.b_mode = nbody::parse_b_mode(*o.b_mode);
  if (o.sign_mode) p.sign_mode = nbody::parse_sign_mode(*o.sign_mode);
  if (o.eval_mode) p.eval_mode = nbody::parse_eval_mode(*o.eval_mode);
  if (o.branch) p.branch = nbody::parse_branch(*o.branch);
  if (o.theta_dot_hard) v.theta_dot_hard_limit = *o.theta_dot_hard;
  if (o.theta_dot_soft) v.theta_dot_soft_limit = *o.theta_dot_soft;
  if (o.collinearity_warn) v.collinearity_warn = *o.collinearity_warn;
  if (o.collision_distance) v.collision_distance = *o.collision_distance;
  if (o.integrator) c.method = nbody::parse_integrator_method(*o.integrator);
  if (o.tolerance) c.tolerance = *o.tolerance;
  if (o.step) c.step = *o.step;
  if (o.max_steps) c.max_steps = *o.max_steps;
  if (o.collision_epsilon_factor) c.collision_epsilon_factor = *o.collision_epsilon_factor;
  if (o.fd_velocity) sc.options.fd_velocity = true;
  nbody::validate(sc);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Closed-form approximate N-body propagation with numerical oracles"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::string out_dir = ".";
  Overrides overrides;

  const std::pair<const char*, const char*> commands[] = {
      {"check", "validity report only"},
      {"approx", "closed-form trajectories"},
      {"oracle", "direct N-body integration"},
      {"compare", "closed form against the oracle, with error report"}};
  for (const auto& [name, help] : commands) {
    auto* cmd = app.add_subcommand(name, help);
    cmd->add_option("--scenario", scenario_path, "scenario JSON file")->required();
    cmd->add_option("--out", out_dir, "output directory");
    add_overrides(cmd, overrides);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : nbody::exit_code::internal_error;
  }

  const auto mode = nbody::parse_run_mode(app.get_subcommands().front()->get_name());
  nbody::Scenario scenario;
  try {
    scenario = nbody::load_scenario(scenario_path);
    apply(overrides, scenario);
  } catch (const nbody::Error& e) {
    std::cerr << "invalid scenario: " << e.what() << '\n';
    return e.kind() == nbody::ErrorKind::IoError ? nbody::exit_code::internal_error
                                                 : nbody::exit_code::invalid_scenario;
  }
  return nbody::run(scenario, mode, out_dir, std::cerr);
}
