#include "perilps/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include <CLI11.hpp>

#include "perilps/error.hpp"
#include "perilps/harness.hpp"

namespace perilps {

const char* command_name(Command c) {
  switch (c) {
    case Command::Solve: return "solve";
    case Command::Converge: return "converge";
    case Command::Validate: return "validate";
  }
  return "?";
}

Command parse_command(const std::string& name) {
  if (name == "solve") return Command::Solve;
  if (name == "converge") return Command::Converge;
  if (name == "validate") return Command::Validate;
  throw InputError("command: unknown command '" + name + "'");
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {
      "command", "case",    "strategy", "kernel", "nu",      "grid",   "mirror",    "delta",         "delta_over_h",
      "dt",      "final_time", "out",   "cache",  "threads", "quick",  "method",    "rel_tol",       "snapshots",
      "export_matrix"};
  return keys;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad(const std::string& key, const std::string& value, const std::string& why) {
  throw InputError(key + ": invalid value '" + value + "' (" + why + ")");
}

double to_double(const std::string& key, const std::string& value) {
  double v = 0.0;
  const auto t = trim(value);
  const auto* end = t.data() + t.size();
  const auto [ptr, ec] = std::from_chars(t.data(), end, v);
  if (ec != std::errc() || ptr != end || t.empty()) bad(key, value, "expected a number");
  return v;
}

int to_int(const std::string& key, const std::string& value) {
  int v = 0;
  const auto t = trim(value);
  const auto* end = t.data() + t.size();
  const auto [ptr, ec] = std::from_chars(t.data(), end, v);
  if (ec != std::errc() || ptr != end || t.empty()) bad(key, value, "expected an integer");
  return v;
}

bool to_bool(const std::string& key, const std::string& value) {
  std::string t = trim(value);
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  bad(key, value, "expected true or false");
}

std::vector<double> to_list(const std::string& key, const std::string& value) {
  std::vector<double> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_double(key, item));
  if (out.empty()) bad(key, value, "expected a comma-separated list");
  return out;
}

std::string format_double(double v) {
  std::ostringstream s;
  s.precision(17);
  s << v;
  return s.str();
}

GridKind parse_grid(const std::string& key, const std::string& value) {
  if (value == "cartesian") return GridKind::Cartesian;
  if (value == "polar") return GridKind::Polar;
  bad(key, value, "expected cartesian or polar");
}

template <class F>
auto rethrow_with_key(const std::string& key, F&& f) {
  try {
    return f();
  } catch (const InputError& e) {
    const std::string msg = e.what();
    if (msg.rfind(key + ":", 0) == 0) throw;
    throw InputError(key + ": " + msg);
  }
}

}  // namespace

void apply_setting(RunConfig& c, const std::string& raw_key, const std::string& raw_value) {
  std::string key = trim(raw_key);
  std::replace(key.begin(), key.end(), '-', '_');
  const std::string value = trim(raw_value);
  if (key == "command") {
    c.command = rethrow_with_key(key, [&] { return parse_command(value); });
  } else if (key == "case") {
    c.case_name = value;
  } else if (key == "strategy") {
    c.strategy = rethrow_with_key(key, [&] { return parse_strategy(value); });
  } else if (key == "kernel") {
    c.kernel = rethrow_with_key(key, [&] { return parse_kernel(value); });
  } else if (key == "nu") {
    c.nu = to_double(key, value);
  } else if (key == "grid") {
    c.grid = parse_grid(key, value);
  } else if (key == "mirror") {
    if (value == "auto") {
      c.mirror.reset();
    } else {
      c.mirror = to_bool(key, value);
    }
  } else if (key == "delta" || key == "deltas") {
    c.deltas = value == "default" ? std::vector<double>{} : to_list("delta", value);
  } else if (key == "delta_over_h") {
    c.delta_over_h = to_double(key, value);
  } else if (key == "dt") {
    c.dt = to_double(key, value);
  } else if (key == "final_time" || key == "t") {
    c.final_time = to_double("final_time", value);
  } else if (key == "out") {
    if (value.empty()) bad(key, value, "expected a directory");
    c.out_dir = value;
  } else if (key == "cache") {
    c.cache = to_bool(key, value);
  } else if (key == "threads") {
    c.threads = to_int(key, value);
  } else if (key == "quick") {
    c.quick = to_bool(key, value);
  } else if (key == "method") {
    c.method = rethrow_with_key(key, [&] { return parse_method(value); });
  } else if (key == "rel_tol") {
    c.rel_tolerance = to_double(key, value);
  } else if (key == "snapshots") {
    c.snapshots = to_bool(key, value);
  } else if (key == "export_matrix") {
    c.export_matrix = to_bool(key, value);
  } else {
    throw InputError(key + ": unknown configuration key");
  }
}

void apply_config_text(RunConfig& config, const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw InputError("config line " + std::to_string(number) + ": expected key = value, got '" + line + "'");
    }
    apply_setting(config, line.substr(0, eq), line.substr(eq + 1));
  }
}

void apply_environment(RunConfig& config,
                       const std::function<std::optional<std::string>(const std::string&)>& lookup) {
  for (const auto& key : config_keys()) {
    if (key == "command") continue;
    std::string name = "PERILPS_" + key;
    std::transform(name.begin(), name.end(), name.begin(),
                   [](unsigned char ch) { return static_cast<char>(std::toupper(ch)); });
    if (const auto v = lookup(name)) apply_setting(config, key, *v);
  }
}

void validate_config(const RunConfig& c) {
  const auto names = case_names();
  if (std::find(names.begin(), names.end(), c.case_name) == names.end()) {
    throw InputError("case: unknown case '" + c.case_name + "'");
  }
  if (!(c.nu > 0.0 && c.nu < 0.5)) {
    throw InputError("nu: must satisfy 0 < nu < 0.5 (plane-strain lambda is singular at 0.5), got " +
                     format_double(c.nu));
  }
  if (c.strategy == ExtensionStrategy::Linear && c.mirror.has_value() && !*c.mirror) {
    throw InputError("mirror: linear extension requires a mirror grid (mirror=false given)");
  }
  for (const double d : c.deltas) {
    if (!(d > 0.0)) throw InputError("delta: values must be positive");
  }
  for (std::size_t k = 1; k < c.deltas.size(); ++k) {
    if (!(c.deltas[k] < c.deltas[k - 1])) throw InputError("delta: sequence must be strictly decreasing");
  }
  if (!(c.delta_over_h > 0.0)) throw InputError("delta_over_h: must be positive");
  if (!(c.dt > 0.0)) throw InputError("dt: must be positive");
  if (!(c.final_time >= 0.0)) throw InputError("final_time: must be non-negative");
  if (!(c.rel_tolerance > 0.0)) throw InputError("rel_tol: must be positive");
  if (c.threads < 0) throw InputError("threads: must be non-negative");
  const bool annulus = c.case_name.rfind("cylinder", 0) == 0;
  if (c.grid == GridKind::Polar && !annulus) throw InputError("grid: polar grids apply to the cylinder cases only");
  if (annulus) {
    for (const double d : c.deltas) {
      if (!(d < 0.25)) throw InputError("delta: cylinder cases need delta < 0.25");
    }
  }
}

std::string serialize(const RunConfig& c) {
  std::ostringstream s;
  s << "command = " << command_name(c.command) << '\n';
  s << "case = " << c.case_name << '\n';
  s << "strategy = " << strategy_name(c.strategy) << '\n';
  s << "kernel = " << kernel_name(c.kernel) << '\n';
  s << "nu = " << format_double(c.nu) << '\n';
  s << "grid = " << grid_name(c.grid) << '\n';
  s << "mirror = " << (c.mirror ? (*c.mirror ? "true" : "false") : "auto") << '\n';
  s << "delta = ";
  if (c.deltas.empty()) {
    s << "default";
  } else {
    for (std::size_t k = 0; k < c.deltas.size(); ++k) s << (k ? "," : "") << format_double(c.deltas[k]);
  }
  s << '\n';
  s << "delta_over_h = " << format_double(c.delta_over_h) << '\n';
  s << "dt = " << format_double(c.dt) << '\n';
  s << "final_time = " << format_double(c.final_time) << '\n';
  s << "out = " << c.out_dir << '\n';
  s << "cache = " << (c.cache ? "true" : "false") << '\n';
  s << "threads = " << c.threads << '\n';
  s << "quick = " << (c.quick ? "true" : "false") << '\n';
  s << "method = " << method_name(c.method) << '\n';
  s << "rel_tol = " << format_double(c.rel_tolerance) << '\n';
  s << "snapshots = " << (c.snapshots ? "true" : "false") << '\n';
  s << "export_matrix = " << (c.export_matrix ? "true" : "false") << '\n';
  return s.str();
}

ParseOutcome parse_command_line(int argc, const char* const* argv,
                                const std::function<std::optional<std::string>(const std::string&)>& env) {
  CLI::App app{"Meshfree LPS peridynamics solver and convergence study"};
  app.name("perilps");
  app.require_subcommand(1);

  std::string config_file;
  std::map<std::string, std::string> flags;
  struct Spec {
    const char* key;
    const char* flag;
    const char* help;
    bool is_switch;
  };
  const std::vector<Spec> specs = {
      {"case", "--case", "benchmark case", false},
      {"strategy", "--strategy", "smooth | constant | linear", false},
      {"kernel", "--kernel", "constant | inverse_r", false},
      {"nu", "--nu", "Poisson ratio, 0 < nu < 0.5", false},
      {"grid", "--grid", "cartesian | polar", false},
      {"mirror", "--mirror", "true | false | auto", false},
      {"delta", "--delta", "horizon or comma-separated decreasing sequence", false},
      {"delta_over_h", "--delta-over-h", "ratio delta/h", false},
      {"dt", "--dt", "time step (dynamic cases)", false},
      {"final_time", "--final-time,-T", "final time (dynamic cases)", false},
      {"out", "--out", "output directory", false},
      {"cache", "--cache", "reuse quadrature weights from OUT/cache (true | false)", false},
      {"threads", "--threads", "thread cap (0 = runtime default)", false},
      {"method", "--method", "auto | direct | cg | bicgstab", false},
      {"rel_tol", "--rel-tol", "relative solver tolerance", false},
      {"quick", "--quick", "validate: pure-function checks only", true},
      {"snapshots", "--snapshots", "solve: write per-step CSV snapshots", true},
      {"export_matrix", "--export-matrix", "solve: write the reduced matrix in COO format", true},
  };

  std::vector<std::pair<Command, CLI::App*>> subs = {
      {Command::Solve, app.add_subcommand("solve", "single solve at one delta")},
      {Command::Converge, app.add_subcommand("converge", "delta-convergence study")},
      {Command::Validate, app.add_subcommand("validate", "fast invariant suite")},
  };
  for (auto& [cmd, sub] : subs) {
    sub->add_option("--config", config_file, "key = value configuration file");
    for (const auto& spec : specs) {
      if (spec.is_switch) {
        sub->add_flag(std::string(spec.flag) + "{true}", flags[spec.key], spec.help);
      } else {
        sub->add_option(spec.flag, flags[spec.key], spec.help);
      }
    }
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    return {RunConfig{}, app.help()};
  } catch (const CLI::CallForAllHelp&) {
    return {RunConfig{}, app.help("", CLI::AppFormatMode::All)};
  } catch (const CLI::ParseError& e) {
    throw InputError(std::string("usage: ") + e.what());
  }

  ParseOutcome outcome;
  RunConfig& config = outcome.config;
  CLI::App* chosen = nullptr;
  for (auto& [cmd, sub] : subs) {
    if (sub->parsed()) {
      config.command = cmd;
      chosen = sub;
    }
  }
  if (!config_file.empty()) {
    std::ifstream in(config_file);
    if (!in) throw InputError("config: cannot read '" + config_file + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    apply_config_text(config, buffer.str());
    config.command = parse_command(chosen->get_name());
  }
  apply_environment(config, env);
  for (const auto& spec : specs) {
    const std::string first_flag = std::string(spec.flag).substr(0, std::string(spec.flag).find(','));
    if (chosen->count(first_flag) > 0) apply_setting(config, spec.key, flags[spec.key]);
  }
  validate_config(config);
  return outcome;
}

std::vector<double> resolved_deltas(const RunConfig& config) {
  if (!config.deltas.empty()) return config.deltas;
  if (config.command == Command::Solve) return {0.05};
  return find_case(config.case_name, Material::plane_strain(1.0, config.nu)).default_deltas;
}

}  // namespace perilps
