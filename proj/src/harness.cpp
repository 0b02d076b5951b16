#include "nbody/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <ostream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace nbody {

using json = nlohmann::json;
namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Enum parsing

namespace {

[[noreturn]] void bad_choice(std::string_view field, std::string_view value,
                             std::string_view allowed) {
  throw Error(ErrorKind::ValidationError,
              std::string(field) + ": '" + std::string(value) +
                  "' is not one of " + std::string(allowed));
}

}  // namespace

X0Mode parse_x0_mode(std::string_view s) {
  if (s == "consistent") return X0Mode::consistent;
  if (s == "paper") return X0Mode::paper;
  bad_choice("xk0_mode", s, "consistent|paper");
}

BMode parse_b_mode(std::string_view s) {
  if (s == "paper") return BMode::paper;
  if (s == "consistent") return BMode::consistent;
  bad_choice("b_mode", s, "paper|consistent");
}

SignMode parse_sign_mode(std::string_view s) {
  if (s == "auto") return SignMode::automatic;
  if (s == "plus") return SignMode::plus;
  if (s == "minus") return SignMode::minus;
  bad_choice("sign_mode", s, "auto|plus|minus");
}

EvalMode parse_eval_mode(std::string_view s) {
  if (s == "rederived") return EvalMode::rederived;
  if (s == "as_printed") return EvalMode::as_printed;
  bad_choice("eval_mode", s, "rederived|as_printed");
}

BranchId parse_branch(std::string_view s) {
  if (s == "minus_one") return BranchId::minus_one;
  if (s == "principal") return BranchId::principal;
  bad_choice("branch", s, "minus_one|principal");
}

IntegratorMethod parse_integrator_method(std::string_view s) {
  if (s == "rk45_adaptive") return IntegratorMethod::rk45_adaptive;
  if (s == "rk4_fixed") return IntegratorMethod::rk4_fixed;
  bad_choice("integrator.method", s, "rk45_adaptive|rk4_fixed");
}

RunMode parse_run_mode(std::string_view s) {
  if (s == "check") return RunMode::check;
  if (s == "approx") return RunMode::approx;
  if (s == "oracle") return RunMode::oracle;
  if (s == "compare") return RunMode::compare;
  bad_choice("mode", s, "check|approx|oracle|compare");
}

const char* to_string(RunMode m) {
  switch (m) {
    case RunMode::check: return "check";
    case RunMode::approx: return "approx";
    case RunMode::oracle: return "oracle";
    case RunMode::compare: return "compare";
  }
  return "check";
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

// ---------------------------------------------------------------------------
// Scenario parsing

namespace {

[[noreturn]] void parse_fail(const std::string& field, const std::string& what) {
  throw Error(ErrorKind::ParseError, field + ": " + what);
}

[[noreturn]] void invalid(const std::string& what) {
  throw Error(ErrorKind::ValidationError, what);
}

void reject_unknown_keys(const json& obj, const std::string& where,
                         std::initializer_list<std::string_view> allowed) {
  for (const auto& [key, _] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      parse_fail(where.empty() ? key : where + "." + key, "unknown key");
    }
  }
}

double number_at(const json& obj, const std::string& key, const std::string& where) {
  const auto& v = obj.at(key);
  if (!v.is_number()) parse_fail(where + key, "expected a number");
  return v.get<double>();
}

std::string string_at(const json& obj, const std::string& key,
                      const std::string& where) {
  const auto& v = obj.at(key);
  if (!v.is_string()) parse_fail(where + key, "expected a string");
  return v.get<std::string>();
}

Vector2<double> planar_vector(const json& v, const std::string& field) {
  if (!v.is_array()) parse_fail(field, "expected an array of 2 numbers");
  if (v.size() == 3) invalid(field + ": planar only (got 3 components)");
  if (v.size() != 2) parse_fail(field, "expected an array of 2 numbers");
  for (const auto& c : v) {
    if (!c.is_number()) parse_fail(field, "expected numeric components");
  }
  return {v[0].get<double>(), v[1].get<double>()};
}

bool safe_name(const std::string& s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' ||
           c == '.';
  });
}

std::vector<double> expand_times(const json& j, double t0) {
  if (j.is_array()) {
    std::vector<double> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
      if (!j[i].is_number()) parse_fail("times[" + std::to_string(i) + "]", "expected a number");
      out.push_back(j[i].get<double>());
    }
    return out;
  }
  if (!j.is_object()) parse_fail("times", "expected a list or {t_end, dt_output}");
  reject_unknown_keys(j, "times", {"t_end", "dt_output"});
  if (!j.contains("t_end") || !j.contains("dt_output")) {
    parse_fail("times", "requires both t_end and dt_output");
  }
  const double t_end = number_at(j, "t_end", "times.");
  const double dt = number_at(j, "dt_output", "times.");
  if (!(dt > 0.0)) invalid("times.dt_output must be > 0");
  if (!(t_end >= t0)) invalid("times.t_end must be >= t0");
  const auto n = static_cast<long>(std::floor((t_end - t0) / dt + 1e-9));
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(n) + 2);
  for (long i = 0; i <= n; ++i) out.push_back(t0 + static_cast<double>(i) * dt);
  if (t_end - out.back() > 1e-9 * dt) out.push_back(t_end);
  return out;
}

void parse_options(const json& o, ScenarioOptions& opts) {
  if (!o.is_object()) parse_fail("options", "expected an object");
  reject_unknown_keys(o, "options",
                      {"xk0_mode", "b_mode", "sign_mode", "eval_mode", "branch",
                       "theta_dot_hard_limit", "theta_dot_soft_limit",
                       "collinearity_warn", "collision_distance", "integrator",
                       "fd_velocity"});
  auto& v = opts.validity;
  auto& p = v.propagation;
  if (o.contains("xk0_mode")) p.xk0_mode = parse_x0_mode(string_at(o, "xk0_mode", "options."));
  if (o.contains("b_mode")) p.b_mode = parse_b_mode(string_at(o, "b_mode", "options."));
  if (o.contains("sign_mode")) p.sign_mode = parse_sign_mode(string_at(o, "sign_mode", "options."));
  if (o.contains("eval_mode")) p.eval_mode = parse_eval_mode(string_at(o, "eval_mode", "options."));
  if (o.contains("branch")) p.branch = parse_branch(string_at(o, "branch", "options."));
  if (o.contains("theta_dot_hard_limit")) {
    v.theta_dot_hard_limit = number_at(o, "theta_dot_hard_limit", "options.");
  }
  if (o.contains("theta_dot_soft_limit")) {
    v.theta_dot_soft_limit = number_at(o, "theta_dot_soft_limit", "options.");
  }
  if (o.contains("collinearity_warn")) {
    v.collinearity_warn = number_at(o, "collinearity_warn", "options.");
  }
  if (o.contains("collision_distance")) {
    v.collision_distance = number_at(o, "collision_distance", "options.");
  }
  if (o.contains("fd_velocity")) {
    if (!o["fd_velocity"].is_boolean()) parse_fail("options.fd_velocity", "expected a boolean");
    opts.fd_velocity = o["fd_velocity"].get<bool>();
  }
  if (o.contains("integrator")) {
    const auto& ij = o["integrator"];
    if (!ij.is_object()) parse_fail("options.integrator", "expected an object");
    reject_unknown_keys(ij, "options.integrator",
                        {"method", "tolerance", "step", "max_steps",
                         "collision_epsilon_factor"});
    auto& c = opts.integrator;
    const std::string w = "options.integrator.";
    if (ij.contains("method")) c.method = parse_integrator_method(string_at(ij, "method", w));
    if (ij.contains("tolerance")) c.tolerance = number_at(ij, "tolerance", w);
    if (ij.contains("step")) c.step = number_at(ij, "step", w);
    if (ij.contains("max_steps")) {
      if (!ij["max_steps"].is_number_integer()) parse_fail(w + "max_steps", "expected an integer");
      c.max_steps = ij["max_steps"].get<long>();
    }
    if (ij.contains("collision_epsilon_factor")) {
      c.collision_epsilon_factor = number_at(ij, "collision_epsilon_factor", w);
    }
  }
}

}  // namespace

void validate(const Scenario& sc) {
  if (!safe_name(sc.name)) {
    invalid("scenario name '" + sc.name + "' must be nonempty [A-Za-z0-9_.-]");
  }
  try {
    validate(sc.state);
  } catch (const Error& e) {
    switch (e.kind()) {
      case ErrorKind::NonPositiveMass: invalid(std::string("mass > 0 required: ") + e.what());
      case ErrorKind::FewerThanTwoBodies: invalid(std::string("N >= 2 required: ") + e.what());
      case ErrorKind::NonPositiveG: invalid("G > 0 required");
      default: invalid(std::string("finite state required: ") + e.what());
    }
  }
  std::set<std::string> names;
  for (const auto& b : sc.state.bodies) {
    if (!safe_name(b.name)) invalid("body name '" + b.name + "' must be nonempty [A-Za-z0-9_.-]");
    if (!names.insert(b.name).second) invalid("body names must be unique: '" + b.name + "'");
  }
  if (sc.times.empty()) invalid("times must be nonempty");
  if (sc.times.front() < sc.state.epoch) invalid("times must start at or after t0");
  for (std::size_t i = 0; i < sc.times.size(); ++i) {
    if (!std::isfinite(sc.times[i])) invalid("times must be finite");
    if (i > 0 && !(sc.times[i] > sc.times[i - 1])) invalid("times must be strictly ascending");
  }
  const auto& v = sc.options.validity;
  if (!(v.theta_dot_hard_limit > 0.0) || !(v.theta_dot_soft_limit > 0.0) ||
      v.theta_dot_soft_limit > v.theta_dot_hard_limit) {
    invalid("theta_dot limits require 0 < soft <= hard");
  }
  if (!(v.collinearity_warn >= 0.0)) invalid("collinearity_warn must be >= 0");
  if (!(v.collision_distance >= 0.0)) invalid("collision_distance must be >= 0");
  validate(sc.options.integrator);
}

Scenario parse_scenario(std::string_view text, const std::string& default_name) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto upto = std::min<std::size_t>(e.byte, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + upto, '\n');
    throw Error(ErrorKind::ParseError, "line " + std::to_string(line) + ": " + e.what());
  }
  if (!doc.is_object()) parse_fail("<root>", "expected an object");
  reject_unknown_keys(doc, "", {"name", "G", "t0", "bodies", "times", "options"});

  Scenario sc;
  sc.name = doc.contains("name") ? string_at(doc, "name", "") : default_name;
  try {
    if (doc.contains("G")) sc.state.gravitational_constant = number_at(doc, "G", "");
    if (doc.contains("t0")) sc.state.epoch = number_at(doc, "t0", "");
    if (!doc.contains("bodies") || !doc["bodies"].is_array()) {
      parse_fail("bodies", "expected a list of bodies");
    }
    const auto& bodies = doc["bodies"];
    for (std::size_t k = 0; k < bodies.size(); ++k) {
      const std::string where = "bodies[" + std::to_string(k) + "]";
      const auto& bj = bodies[k];
      if (!bj.is_object()) parse_fail(where, "expected an object");
      reject_unknown_keys(bj, where, {"name", "mass", "position", "velocity"});
      for (const char* key : {"mass", "position", "velocity"}) {
        if (!bj.contains(key)) parse_fail(where + "." + key, "missing");
      }
      Body<double> b;
      b.name = bj.contains("name") ? string_at(bj, "name", where + ".")
                                   : "body" + std::to_string(k);
      b.mass = number_at(bj, "mass", where + ".");
      if (!(b.mass > 0.0)) invalid(where + ".mass: mass > 0 required");
      b.position = planar_vector(bj["position"], where + ".position");
      b.velocity = planar_vector(bj["velocity"], where + ".velocity");
      sc.state.bodies.push_back(std::move(b));
    }
    if (!doc.contains("times")) parse_fail("times", "missing");
    sc.times = expand_times(doc["times"], sc.state.epoch);
    if (doc.contains("options")) parse_options(doc["options"], sc.options);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ParseError, e.what());
  }
  validate(sc);
  return sc;
}

Scenario load_scenario(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str(), path.stem().string());
}

std::vector<std::pair<std::string, std::string>> resolved_options(const Scenario& sc) {
  const auto& v = sc.options.validity;
  const auto& p = v.propagation;
  const auto& c = sc.options.integrator;
  return {
      {"xk0_mode", to_string(p.xk0_mode)},
      {"b_mode", to_string(p.b_mode)},
      {"sign_mode", to_string(p.sign_mode)},
      {"eval_mode", to_string(p.eval_mode)},
      {"branch", to_string(p.branch)},
      {"theta_dot_hard_limit", format_number(v.theta_dot_hard_limit)},
      {"theta_dot_soft_limit", format_number(v.theta_dot_soft_limit)},
      {"collinearity_warn", format_number(v.collinearity_warn)},
      {"collision_distance", format_number(v.collision_distance)},
      {"integrator.method", to_string(c.method)},
      {"integrator.tolerance", format_number(c.tolerance)},
      {"integrator.step", format_number(c.step)},
      {"integrator.max_steps", std::to_string(c.max_steps)},
      {"integrator.collision_epsilon_factor", format_number(c.collision_epsilon_factor)},
      {"fd_velocity", sc.options.fd_velocity ? "true" : "false"},
  };
}

// ---------------------------------------------------------------------------
// Comparison

std::vector<std::vector<OracleDerived>> derive_oracle_series(
    const SystemState<double>& state, const std::vector<Trajectory>& oracle) {
  const auto n = state.size();
  std::vector<std::vector<OracleDerived>> out(n);
  if (oracle.size() != n) return out;
  const std::size_t samples = oracle.front().samples.size();
  for (std::size_t k = 0; k < n; ++k) {
    out[k].reserve(samples);
    double last_raw = 0.0;
    double unwrapped = 0.0;
    for (std::size_t i = 0; i < samples; ++i) {
      const Vector2<double> rk = oracle[k].samples[i].position;
      Vector2<double> rm = Vector2<double>::Zero();
      double m = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == k) continue;
        rm += state.bodies[j].mass * oracle[j].samples[i].position;
        m += state.bodies[j].mass;
      }
      rm /= m;
      double raw = std::atan2(rk.y(), rk.x());
      if (raw <= -std::numbers::pi) raw = std::numbers::pi;
      unwrapped = i == 0 ? raw
                         : unwrapped + std::remainder(raw - last_raw, 2.0 * std::numbers::pi);
      last_raw = raw;
      out[k].push_back({rk.norm(), unwrapped, (rk - rm).norm()});
    }
  }
  return out;
}

namespace {

double relative(double abs_err, double reference) {
  const double ref = std::abs(reference);
  if (ref > 0.0) return abs_err / ref;
  return abs_err == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
}

void accumulate(QuantityError& q, double t, double abs_err, double reference) {
  if (q.count == 0) q.window_begin = t;
  q.window_end = t;
  ++q.count;
  q.rms += abs_err * abs_err;
  if (abs_err > q.max_abs || q.count == 1) {
    q.max_abs = abs_err;
    q.time_of_max = t;
  }
  q.max_rel = std::max(q.max_rel, relative(abs_err, reference));
  q.series.emplace_back(t, abs_err);
}

}  // namespace

ErrorReport compute_error_report(const SystemState<double>& state,
                                 const std::vector<BodyTrack>& closed_form,
                                 const std::vector<Trajectory>& oracle) {
  const auto derived = derive_oracle_series(state, oracle);
  ErrorReport report;
  for (const auto& track : closed_form) {
    BodyErrors be;
    be.body_index = track.body_index;
    be.body_name = state.bodies[track.body_index].name;
    QuantityError qx, qr, qt, qp;
    qx.quantity = "x";
    qr.quantity = "r";
    qt.quantity = "theta";
    qp.quantity = "pos";
    const auto k = track.body_index;
    const std::size_t oracle_n = k < derived.size() ? derived[k].size() : 0;
    for (std::size_t i = 0; i < track.samples.size() && i < oracle_n; ++i) {
      const auto& s = track.samples[i];
      if (!s.valid) continue;
      const auto& o = derived[k][i];
      const Vector2<double> op = oracle[k].samples[i].position;
      accumulate(qx, s.t, std::abs(s.x - o.x_scalar), o.x_scalar);
      accumulate(qr, s.t, std::abs(s.r - o.r), o.r);
      accumulate(qt, s.t, std::abs(s.theta - o.theta), o.theta);
      accumulate(qp, s.t, (s.position - op).norm(), op.norm());
    }
    for (auto* q : {&qx, &qr, &qt, &qp}) {
      if (q->count > 0) q->rms = std::sqrt(q->rms / static_cast<double>(q->count));
      be.quantities.push_back(std::move(*q));
    }
    report.bodies.push_back(std::move(be));
  }
  return report;
}

// ---------------------------------------------------------------------------
// Output

namespace {

using Header = std::vector<std::string>;

Header make_header(const Scenario& sc, std::string_view mode, std::string_view what) {
  Header h;
  h.push_back("nbody-approx " + std::string(mode) + " " + std::string(what));
  h.push_back("scenario = " + sc.name);
  h.push_back("G = " + format_number(sc.state.gravitational_constant));
  h.push_back("t0 = " + format_number(sc.state.epoch));
  h.push_back("N = " + std::to_string(sc.state.size()));
  for (std::size_t k = 0; k < sc.state.size(); ++k) {
    const auto& b = sc.state.bodies[k];
    h.push_back("body." + std::to_string(k) + " = " + b.name +
                " mass=" + format_number(b.mass) + " position=" +
                format_number(b.position.x()) + "," + format_number(b.position.y()) +
                " velocity=" + format_number(b.velocity.x()) + "," +
                format_number(b.velocity.y()));
  }
  h.push_back("times = " + std::to_string(sc.times.size()) + " samples from " +
              format_number(sc.times.front()) + " to " + format_number(sc.times.back()));
  for (const auto& [k, v] : resolved_options(sc)) h.push_back("option." + k + " = " + v);
  return h;
}

class OutFile {
 public:
  explicit OutFile(const fs::path& path) : path_(path), out_(path, std::ios::binary) {
    if (!out_) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  }
  void comments(const Header& lines) {
    for (const auto& l : lines) out_ << "# " << l << '\n';
  }
  std::ofstream& stream() { return out_; }
  ~OutFile() = default;

 private:
  fs::path path_;
  std::ofstream out_;
};

void write_row(std::ostream& out, const std::vector<std::string>& cells, char sep) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out << sep;
    out << cells[i];
  }
  out << '\n';
}

std::string yes_no(bool b) { return b ? "true" : "false"; }

std::string opt_time(const std::optional<double>& t, const char* none) {
  return t ? format_number(*t) : none;
}

void write_validity(const Scenario& sc, RunMode mode, const ValidityReport& rep,
                    const fs::path& path) {
  OutFile f(path);
  f.comments(make_header(sc, to_string(mode), "validity report"));
  auto& o = f.stream();
  o << "verdict = " << to_string(rep.verdict) << '\n';
  o << "findings = " << rep.findings.size() << '\n';
  for (std::size_t i = 0; i < rep.findings.size(); ++i) {
    const auto& fd = rep.findings[i];
    o << "finding." << i << " = " << to_string(fd.severity) << ' ' << fd.code;
    if (fd.body_index) o << " body=" << *fd.body_index;
    o << " : " << fd.detail << '\n';
  }
  for (const auto& b : rep.bodies) {
    o << "\n[body " << b.body_index << "]\n";
    o << "name = " << sc.state.bodies[b.body_index].name << '\n';
    o << "reduced_ok = " << yes_no(b.reduced_ok) << '\n';
    o << "x0 = " << format_number(b.x0) << '\n';
    o << "A = " << format_number(b.A) << '\n';
    o << "B = " << format_number(b.B) << '\n';
    o << "B_positive = " << yes_no(b.B_positive) << '\n';
    o << "binomial_margin = " << format_number(b.binomial_margin) << '\n';
    o << "binomial_ok = " << yes_no(b.binomial_ok) << '\n';
    o << "binomial_violation_time = " << opt_time(b.binomial_violation_time, "none") << '\n';
    o << "theta_dot_max = " << format_number(b.theta_dot_max) << '\n';
    o << "theta_dot_ok = " << yes_no(b.theta_dot_ok) << '\n';
    o << "constructible = " << yes_no(b.constructible) << '\n';
    o << "window_end = " << opt_time(b.window_end, "unbounded") << '\n';
    o << "collinearity_deviation_max = " << format_number(b.collinearity_deviation_max)
      << '\n';
    o << "force_deviation_max = " << format_number(b.force_deviation_max) << '\n';
  }
}

void write_error_report(const Scenario& sc, RunMode mode, const ErrorReport& rep,
                        const fs::path& path) {
  OutFile f(path);
  f.comments(make_header(sc, to_string(mode), "error report"));
  auto& o = f.stream();
  bool first = true;
  for (const auto& b : rep.bodies) {
    for (const auto& q : b.quantities) {
      if (!first) o << '\n';
      first = false;
      o << "[body " << b.body_index << ' ' << q.quantity << "]\n";
      o << "name = " << b.body_name << '\n';
      o << "samples = " << q.count << '\n';
      if (q.count == 0) {
        o << "window = empty\n";
        continue;
      }
      o << "window = " << format_number(q.window_begin) << ' '
        << format_number(q.window_end) << '\n';
      o << "max_abs = " << format_number(q.max_abs) << '\n';
      o << "max_rel = " << format_number(q.max_rel) << '\n';
      o << "rms = " << format_number(q.rms) << '\n';
      o << "time_of_max = " << format_number(q.time_of_max) << '\n';
    }
  }
}

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Closed-form Cartesian velocity by central differences of the position.
Vector2<double> fd_velocity(const BodySolution& sol, double t) {
  const double d = 1e-6 * std::max(1.0, std::abs(t));
  auto pos = [&](double s) {
    const PolarState<double> p{sol.r(s), sol.theta(s), 0.0, 0.0};
    return polar_to_cartesian(p).first;
  };
  try {
    if (sol.in_window(t - d) && sol.in_window(t + d)) return (pos(t + d) - pos(t - d)) / (2 * d);
    if (sol.in_window(t + d)) return (pos(t + d) - pos(t)) / d;
    if (sol.in_window(t - d)) return (pos(t) - pos(t - d)) / d;
  } catch (const Error&) {
  }
  return {kNaN, kNaN};
}

std::vector<std::string> approx_cells(const ApproxSample& s) {
  if (!s.valid) return {"nan", "nan", "nan", "nan", "nan"};
  return {format_number(s.r), format_number(s.theta), format_number(s.x),
          format_number(s.position.x()), format_number(s.position.y())};
}

Header truncation_notes(const Scenario& sc, const std::vector<BodyTrack>& tracks) {
  Header h;
  for (const auto& t : tracks) {
    const auto& name = sc.state.bodies[t.body_index].name;
    if (t.failure) {
      h.push_back("failure: body " + name + " " + t.failure->what());
    } else if (t.truncated_at) {
      h.push_back("truncated: body " + name + " closed form leaves its window at t = " +
                  format_number(*t.truncated_at) + " (window_end = " +
                  format_number(t.solution->window_end()) + ")");
    }
  }
  return h;
}

Header oracle_notes(const Scenario& sc, const std::vector<Trajectory>& oracle) {
  Header h;
  if (!oracle.empty() && oracle.front().truncated_at) {
    h.push_back(std::string("truncated: oracle stopped at t = ") +
                format_number(*oracle.front().truncated_at) + " (" +
                to_string(*oracle.front().truncation_reason) + ")");
  }
  (void)sc;
  return h;
}

void write_approx_csv(const Scenario& sc, RunMode mode,
                      const std::vector<BodyTrack>& tracks, const fs::path& path) {
  OutFile f(path);
  f.comments(make_header(sc, to_string(mode), "closed-form trajectories"));
  f.comments(truncation_notes(sc, tracks));
  auto& o = f.stream();
  std::vector<std::string> cols = {"t", "body", "r", "theta", "x_scalar", "pos_x", "pos_y"};
  if (sc.options.fd_velocity) {
    cols.push_back("vel_x");
    cols.push_back("vel_y");
  }
  write_row(o, cols, ',');
  for (std::size_t i = 0; i < sc.times.size(); ++i) {
    for (const auto& tr : tracks) {
      std::vector<std::string> row = {format_number(sc.times[i]),
                                      sc.state.bodies[tr.body_index].name};
      const ApproxSample blank{sc.times[i]};
      const auto& s = tr.failure ? blank : tr.samples[i];
      for (auto& c : approx_cells(s)) row.push_back(std::move(c));
      if (sc.options.fd_velocity) {
        Vector2<double> v(kNaN, kNaN);
        if (s.valid) v = fd_velocity(*tr.solution, s.t);
        row.push_back(format_number(v.x()));
        row.push_back(format_number(v.y()));
      }
      write_row(o, row, ',');
    }
  }
}

void write_oracle_csv(const Scenario& sc, RunMode mode, const SystemState<double>& state,
                      const std::vector<Trajectory>& oracle, const fs::path& path) {
  OutFile f(path);
  f.comments(make_header(sc, to_string(mode), "direct N-body trajectories"));
  f.comments(oracle_notes(sc, oracle));
  auto& o = f.stream();
  write_row(o, {"t", "body", "r", "theta", "x_scalar", "pos_x", "pos_y", "vel_x", "vel_y"},
            ',');
  const auto derived = derive_oracle_series(state, oracle);
  for (std::size_t i = 0; i < sc.times.size(); ++i) {
    for (std::size_t k = 0; k < state.size(); ++k) {
      std::vector<std::string> row = {format_number(sc.times[i]), state.bodies[k].name};
      if (i < oracle[k].samples.size()) {
        const auto& s = oracle[k].samples[i];
        const auto& d = derived[k][i];
        for (double v : {d.r, d.theta, d.x_scalar, s.position.x(), s.position.y(),
                         s.velocity.x(), s.velocity.y()}) {
          row.push_back(format_number(v));
        }
      } else {
        for (int c = 0; c < 7; ++c) row.emplace_back("nan");
      }
      write_row(o, row, ',');
    }
  }
}

void write_compare_csv(const Scenario& sc, RunMode mode, const SystemState<double>& state,
                       const std::vector<BodyTrack>& tracks,
                       const std::vector<Trajectory>& oracle, const fs::path& path) {
  OutFile f(path);
  f.comments(make_header(sc, to_string(mode), "closed form vs direct N-body"));
  f.comments(truncation_notes(sc, tracks));
  f.comments(oracle_notes(sc, oracle));
  auto& o = f.stream();
  write_row(o,
            {"t", "body", "r", "theta", "x_scalar", "pos_x", "pos_y", "oracle_r",
             "oracle_theta", "oracle_x_scalar", "oracle_pos_x", "oracle_pos_y",
             "err_x_scalar", "err_r", "err_theta", "err_pos"},
            ',');
  const auto derived = derive_oracle_series(state, oracle);
  for (std::size_t i = 0; i < sc.times.size(); ++i) {
    for (const auto& tr : tracks) {
      const auto k = tr.body_index;
      std::vector<std::string> row = {format_number(sc.times[i]), state.bodies[k].name};
      const ApproxSample blank{sc.times[i]};
      const auto& s = tr.failure ? blank : tr.samples[i];
      for (auto& c : approx_cells(s)) row.push_back(std::move(c));
      const bool have_oracle = i < oracle[k].samples.size();
      if (have_oracle) {
        const auto& d = derived[k][i];
        const auto& p = oracle[k].samples[i].position;
        for (double v : {d.r, d.theta, d.x_scalar, p.x(), p.y()}) {
          row.push_back(format_number(v));
        }
      } else {
        for (int c = 0; c < 5; ++c) row.emplace_back("nan");
      }
      if (have_oracle && s.valid) {
        const auto& d = derived[k][i];
        const auto& p = oracle[k].samples[i].position;
        for (double v : {std::abs(s.x - d.x_scalar), std::abs(s.r - d.r),
                         std::abs(s.theta - d.theta), (s.position - p).norm()}) {
          row.push_back(format_number(v));
        }
      } else {
        for (int c = 0; c < 4; ++c) row.emplace_back("nan");
      }
      write_row(o, row, ',');
    }
  }
}

std::vector<PathSeries> closed_form_paths(const SystemState<double>& state,
                                          const std::vector<BodyTrack>& tracks) {
  std::vector<PathSeries> out;
  for (const auto& tr : tracks) {
    PathSeries p{state.bodies[tr.body_index].name, {}};
    for (const auto& s : tr.samples) {
      if (s.valid) p.rows.push_back({s.t, s.position.x(), s.position.y()});
    }
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<PathSeries> oracle_paths(const SystemState<double>& state,
                                     const std::vector<Trajectory>& oracle) {
  std::vector<PathSeries> out;
  for (std::size_t k = 0; k < oracle.size(); ++k) {
    PathSeries p{state.bodies[k].name, {}};
    for (std::size_t i = 0; i < oracle[k].samples.size(); ++i) {
      const auto& pos = oracle[k].samples[i].position;
      p.rows.push_back({oracle[k].times[i], pos.x(), pos.y()});
    }
    out.push_back(std::move(p));
  }
  return out;
}

bool any_truncated(const std::vector<BodyTrack>& tracks) {
  return std::any_of(tracks.begin(), tracks.end(), [](const BodyTrack& t) {
    return t.failure.has_value() || t.truncated_at.has_value();
  });
}

bool oracle_truncated(const std::vector<Trajectory>& oracle) {
  return !oracle.empty() && oracle.front().truncated_at.has_value();
}

int run_impl(const Scenario& sc, RunMode mode, const fs::path& out_dir, std::ostream& log) {
  validate(sc);
  fs::create_directories(out_dir);
  const auto base = [&](const std::string& suffix) { return out_dir / (sc.name + suffix); };

  const SystemState<double> state = to_com_frame(sc.state);
  IntegratorConfig icfg = sc.options.integrator;
  icfg.truncate_on_failure = true;

  if (mode == RunMode::oracle) {
    if (!(min_pairwise_distance(state) > sc.options.validity.collision_distance)) {
      log << "invalid scenario: CollisionDetected at t0\n";
      return exit_code::invalid_scenario;
    }
    const auto oracle = integrate_nbody(state, sc.times, icfg);
    write_oracle_csv(sc, mode, state, oracle, base("_oracle.csv"));
    emit_plot_data(sc, oracle_paths(state, oracle), nullptr, out_dir, log);
    if (oracle_truncated(oracle)) {
      log << "oracle run truncated at t = " << format_number(*oracle.front().truncated_at) << '\n';
      return exit_code::truncated;
    }
    return exit_code::ok;
  }

  ValidityReport report = check_scenario(state, sc.options.validity);
  if (mode == RunMode::check || report.verdict == Verdict::invalid) {
    write_validity(sc, mode, report, base("_validity.txt"));
    for (const auto& f : report.findings) {
      log << to_string(f.severity) << ' ' << f.code;
      if (f.body_index) log << " body " << *f.body_index;
      log << ": " << f.detail << '\n';
    }
    log << "verdict: " << to_string(report.verdict) << '\n';
    return report.verdict == Verdict::invalid ? exit_code::invalid_scenario : exit_code::ok;
  }

  const auto tracks = propagate_system(state, sc.times, sc.options.validity.propagation);

  if (mode == RunMode::approx) {
    write_validity(sc, mode, report, base("_validity.txt"));
    write_approx_csv(sc, mode, tracks, base("_approx.csv"));
    emit_plot_data(sc, closed_form_paths(state, tracks), nullptr, out_dir, log);
    for (const auto& n : truncation_notes(sc, tracks)) log << n << '\n';
    return any_truncated(tracks) ? exit_code::truncated : exit_code::ok;
  }

  const auto oracle = integrate_nbody(state, sc.times, icfg);
  report = check_trajectory(std::move(report), state, tracks, oracle, sc.options.validity);
  const auto errors = compute_error_report(state, tracks, oracle);
  write_validity(sc, mode, report, base("_validity.txt"));
  write_approx_csv(sc, mode, tracks, base("_approx.csv"));
  write_oracle_csv(sc, mode, state, oracle, base("_oracle.csv"));
  write_compare_csv(sc, mode, state, tracks, oracle, base("_compare.csv"));
  write_error_report(sc, mode, errors, base("_errors.txt"));
  emit_plot_data(sc, closed_form_paths(state, tracks), &errors, out_dir, log);
  for (const auto& n : truncation_notes(sc, tracks)) log << n << '\n';
  for (const auto& n : oracle_notes(sc, oracle)) log << n << '\n';
  return any_truncated(tracks) || oracle_truncated(oracle) ? exit_code::truncated
                                                           : exit_code::ok;
}

}  // namespace

std::vector<fs::path> emit_plot_data(const Scenario& sc, const std::vector<PathSeries>& paths,
                                     const ErrorReport* errors, const fs::path& out_dir,
                                     std::ostream& log) {
  std::vector<fs::path> written;
  fs::create_directories(out_dir);
  const Header meta = make_header(sc, "plot", "data");
  for (const auto& p : paths) {
    const auto path = out_dir / (sc.name + "_" + p.body_name + "_path.dat");
    OutFile f(path);
    f.comments(meta);
    f.stream() << "# t x y\n";
    for (const auto& r : p.rows) {
      f.stream() << format_number(r[0]) << ' ' << format_number(r[1]) << ' '
                 << format_number(r[2]) << '\n';
    }
    written.push_back(path);
  }
  if (errors) {
    for (const auto& b : errors->bodies) {
      for (const auto& q : b.quantities) {
        const auto path =
            out_dir / (sc.name + "_" + b.body_name + "_err_" + q.quantity + ".dat");
        OutFile f(path);
        f.comments(meta);
        f.stream() << "# t error\n";
        if (q.series.empty()) {
          log << "warning: empty comparison window for body " << b.body_name << " "
              << q.quantity << '\n';
        }
        for (const auto& [t, e] : q.series) {
          f.stream() << format_number(t) << ' ' << format_number(e) << '\n';
        }
        written.push_back(path);
      }
    }
  }
  return written;
}

int run(const Scenario& scenario, RunMode mode, const fs::path& out_dir,
        std::ostream& log) {
  try {
    return run_impl(scenario, mode, out_dir, log);
  } catch (const Error& e) {
    log << "error: " << e.what() << '\n';
    if (e.kind() == ErrorKind::ValidationError || e.kind() == ErrorKind::ParseError) {
      return exit_code::invalid_scenario;
    }
    return exit_code::internal_error;
  } catch (const std::exception& e) {
    log << "internal error: " << e.what() << '\n';
    return exit_code::internal_error;
  }
}

}  // namespace nbody
