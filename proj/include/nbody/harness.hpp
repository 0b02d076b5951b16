#pragma once

// Batch driver: scenario files in, CSV time series, reports and plot-data
// files out.

#include <array>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "nbody/core_model.hpp"
#include "nbody/oracle.hpp"
#include "nbody/propagator.hpp"
#include "nbody/validity.hpp"

namespace nbody {

struct ScenarioOptions {
  ValidityOptions validity;  // carries the propagation options
  IntegratorConfig integrator;
  bool fd_velocity{false};
};

struct Scenario {
  std::string name;
  SystemState<double> state;
  std::vector<double> times;
  ScenarioOptions options;
};

enum class RunMode { check, approx, oracle, compare };

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int internal_error = 1;
inline constexpr int invalid_scenario = 2;
inline constexpr int truncated = 3;
}  // namespace exit_code

X0Mode parse_x0_mode(std::string_view s);
BMode parse_b_mode(std::string_view s);
SignMode parse_sign_mode(std::string_view s);
EvalMode parse_eval_mode(std::string_view s);
BranchId parse_branch(std::string_view s);
IntegratorMethod parse_integrator_method(std::string_view s);
RunMode parse_run_mode(std::string_view s);
const char* to_string(RunMode m);

/// Parses scenario JSON. Throws ParseError (with line or field) for malformed
/// input and ValidationError naming the violated invariant.
Scenario parse_scenario(std::string_view text, const std::string& default_name);
Scenario load_scenario(const std::filesystem::path& path);

/// Re-checks every parse-level invariant; used after CLI overrides.
void validate(const Scenario& scenario);

/// The full resolved option set as (key, value) pairs, in a fixed order.
std::vector<std::pair<std::string, std::string>> resolved_options(
    const Scenario& scenario);

/// Shortest round-trip decimal; "nan", "inf", "-inf" for non-finite values.
std::string format_number(double v);

struct QuantityError {
  std::string quantity;  // x, r, theta, pos
  std::size_t count{};
  double window_begin{};
  double window_end{};
  double max_abs{};
  double max_rel{};
  double rms{};
  double time_of_max{};
  std::vector<std::pair<double, double>> series;  // (t, |error|)
};

struct BodyErrors {
  std::size_t body_index{};
  std::string body_name;
  std::vector<QuantityError> quantities;
};

struct ErrorReport {
  std::vector<BodyErrors> bodies;
};

/// Oracle-side quantities for one body at one sample.
struct OracleDerived {
  double r{};
  double theta{};  // unwrapped along the samples
  double x_scalar{};  // |r_k - r_Mk|
};

std::vector<std::vector<OracleDerived>> derive_oracle_series(
    const SystemState<double>& state, const std::vector<Trajectory>& oracle);

ErrorReport compute_error_report(const SystemState<double>& state,
                                 const std::vector<BodyTrack>& closed_form,
                                 const std::vector<Trajectory>& oracle);

struct PathSeries {
  std::string body_name;
  std::vector<std::array<double, 3>> rows;  // t, x, y
};

/// Writes {scenario}_{body}_path.dat per path and
/// {scenario}_{body}_err_{quantity}.dat per error series. Returns the paths
/// written, in order.
std::vector<std::filesystem::path> emit_plot_data(
    const Scenario& scenario, const std::vector<PathSeries>& paths,
    const ErrorReport* errors, const std::filesystem::path& out_dir,
    std::ostream& log);

/// Runs one mode and writes its artifacts under out_dir. Never throws;
/// returns one of the exit_code values.
int run(const Scenario& scenario, RunMode mode,
        const std::filesystem::path& out_dir, std::ostream& log);

}  // namespace nbody
