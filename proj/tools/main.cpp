#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "perilps/config.hpp"
#include "perilps/error.hpp"
#include "perilps/harness.hpp"
#include "perilps/validate.hpp"

namespace fs = std::filesystem;
using namespace perilps;

namespace {

std::string timestamp_line(const RunConfig& config) {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm utc{};
  gmtime_r(&now, &utc);
  std::ostringstream s;
  s << "# perilps " << command_name(config.command) << ' ' << std::put_time(&utc, "%Y-%m-%dT%H:%M:%SZ") << '\n';
  return s.str();
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw InputError("out: cannot write " + path.string());
  return out;
}

RunOptions run_options(const RunConfig& config) {
  RunOptions o;
  o.delta_over_h = config.delta_over_h;
  o.dt = config.dt;
  o.final_time = config.final_time;
  o.solve.method = config.method;
  o.solve.rel_tolerance = config.rel_tolerance;
  o.cache_dir = config.cache_dir();
  return o;
}

int command_solve(const RunConfig& config) {
  const auto deltas = resolved_deltas(config);
  if (deltas.size() != 1) throw InputError("delta: solve takes a single value");
  const double delta = deltas.front();
  const double h = delta / config.delta_over_h;
  const Material material = Material::plane_strain(1.0, config.nu);
  const BenchmarkCase bench = find_case(config.case_name, material);
  const RunOptions options = run_options(config);
  const fs::path out_dir(config.out_dir);
  fs::create_directories(out_dir);

  const auto setup = build_setup(bench.domain, config.grid, config.use_mirror(), config.kernel, delta, h,
                                 options.cache_dir);

  if (config.export_matrix) {
    const BoundaryPlan plan(config.strategy, bench.u0, setup->cloud);
    const StiffnessSystem sys = assemble(setup->op, material, plan, setup->cloud, bench.force, 0.0);
    auto out = open_output(out_dir / "matrix.coo");
    write_coo(out, sys.matrix);
  }

  std::function<void(std::size_t, const NewmarkState&)> on_step;
  if (config.snapshots && bench.dynamic) {
    fs::create_directories(out_dir / "snapshots");
    on_step = [&](std::size_t n, const NewmarkState& s) {
      char name[32];
      std::snprintf(name, sizeof name, "step_%04zu.csv", n);
      auto out = open_output(out_dir / "snapshots" / name);
      write_snapshot_csv(out, setup->cloud, s.u);
    };
  }

  const SingleRun run = run_single(bench, *setup, config.strategy, material, options, on_step);
  {
    auto out = open_output(out_dir / "solution.csv");
    write_snapshot_csv(out, setup->cloud, run.u);
  }

  ConvergenceReport report;
  report.case_name = config.case_name;
  report.strategy = config.strategy;
  report.kernel = config.kernel;
  report.nu = config.nu;
  report.grid = config.grid;
  report.mirror = config.use_mirror();
  report.theoretical = theoretical_rate(config.strategy);
  report.rows.push_back({run.delta, run.h, run.l2_error, run.g_inf, true, {}});
  {
    auto out = open_output(out_dir / "summary.csv");
    out << timestamp_line(config);
    write_report_csv(out, {report});
  }
  {
    auto out = open_output(out_dir / "config.txt");
    out << serialize(config);
  }

  std::cout << std::setprecision(6) << config.case_name << " strategy=" << strategy_name(config.strategy)
            << " delta=" << run.delta << " h=" << run.h << " nodes=" << setup->cloud.size()
            << "\n  l2_error=" << std::scientific << run.l2_error << " g_inf=" << run.g_inf
            << " residual=" << run.certified_residual << "\n";
  return 0;
}

int command_converge(const RunConfig& config) {
  const fs::path out_dir(config.out_dir);
  fs::create_directories(out_dir);
  StudyVariant variant{config.strategy, config.nu, config.mirror};
  const auto reports = run_study(config.case_name, {variant}, config.kernel, config.grid, resolved_deltas(config),
                                 run_options(config));
  const std::string stamp = timestamp_line(config);
  {
    auto out = open_output(out_dir / "report.csv");
    out << stamp;
    write_report_csv(out, reports);
  }
  {
    auto out = open_output(out_dir / "rates.csv");
    out << stamp;
    write_rates_csv(out, reports);
  }
  {
    auto out = open_output(out_dir / "config.txt");
    out << serialize(config);
  }
  write_rates_csv(std::cout, reports);

  bool ok = true;
  for (const auto& r : reports) {
    for (const auto& row : r.rows) {
      if (!row.ok) {
        std::cerr << "delta " << row.delta << " failed: " << row.message << '\n';
        ok = false;
      }
    }
  }
  return ok ? 0 : 1;
}

int command_validate(const RunConfig& config) {
  const auto checks = run_validation(config);
  print_checks(std::cout, checks);
  std::size_t failed = 0;
  for (const auto& c : checks) failed += c.passed ? 0 : 1;
  std::cout << (failed == 0 ? "all checks passed" : std::to_string(failed) + " check(s) failed") << '\n';
  return failed == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    const ParseOutcome parsed = parse_command_line(argc, argv, [](const std::string& name) -> std::optional<std::string> {
      if (const char* v = std::getenv(name.c_str())) return std::string(v);
      return std::nullopt;
    });
    if (parsed.help) {
      std::cout << *parsed.help;
      return 0;
    }
    const RunConfig& config = parsed.config;
#ifdef _OPENMP
    if (config.threads > 0) omp_set_num_threads(config.threads);
#endif
    switch (config.command) {
      case Command::Solve:
        return command_solve(config);
      case Command::Converge:
        return command_converge(config);
      case Command::Validate:
        return command_validate(config);
    }
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
