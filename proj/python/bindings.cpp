#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "perilps/error.hpp"
#include "perilps/harness.hpp"
#include "perilps/validate.hpp"

namespace py = pybind11;
using namespace perilps;

namespace {

using Field = Eigen::Matrix<double, Eigen::Dynamic, 2, Eigen::RowMajor>;

GridKind parse_grid(const std::string& name) {
  if (name == "cartesian") return GridKind::Cartesian;
  if (name == "polar") return GridKind::Polar;
  throw InputError("grid: unknown grid '" + name + "'");
}

Field as_field(const Eigen::VectorXd& v) {
  return Eigen::Map<const Field>(v.data(), v.size() / 2, 2);
}

Eigen::VectorXd as_vector(const PointCloud& cloud, const Field& f) {
  if (static_cast<std::size_t>(f.rows()) != cloud.size()) {
    throw InputError("u: expected an array of shape (" + std::to_string(cloud.size()) + ", 2)");
  }
  return Eigen::Map<const Eigen::VectorXd>(f.data(), f.size());
}

Field positions(const PointCloud& cloud) {
  Field p(static_cast<Eigen::Index>(cloud.size()), 2);
  for (std::size_t i = 0; i < cloud.size(); ++i) p.row(static_cast<Eigen::Index>(i)) = cloud.positions[i].transpose();
  return p;
}

struct PySetup {
  std::shared_ptr<const Setup> setup;
  std::string case_name;
};

PySetup make_setup(const std::string& case_name, const std::string& grid, bool mirror, const std::string& kernel,
                   double delta, double delta_over_h, const std::string& cache_dir) {
  const BenchmarkCase bench = find_case(case_name, Material::plane_strain(1.0, 0.3));
  return {build_setup(bench.domain, parse_grid(grid), mirror, parse_kernel(kernel), delta, delta / delta_over_h,
                      cache_dir),
          case_name};
}

py::dict row_dict(const ConvergenceRow& r) {
  py::dict d;
  d["delta"] = r.delta;
  d["h"] = r.h;
  d["l2_error"] = r.l2_error;
  d["g_inf"] = r.g_inf;
  d["ok"] = r.ok;
  d["message"] = r.message;
  return d;
}

py::dict fit_dict(const RateFit& f) {
  py::dict d;
  d["exact"] = f.exact;
  d["rate"] = f.rate;
  d["halfwidth"] = f.halfwidth;
  d["used"] = f.used;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Meshfree LPS peridynamics solver";
  py::register_exception<InputError>(m, "InputError", PyExc_ValueError);

  py::class_<Material>(m, "Material")
      .def_static("plane_strain", &Material::plane_strain, py::arg("E"), py::arg("nu"), py::arg("rho") = 1.0)
      .def_readonly("lam", &Material::lambda)
      .def_readonly("mu", &Material::mu)
      .def_readonly("rho", &Material::rho);

  m.def("case_names", &case_names);
  m.def("theoretical_rate", [](const std::string& s) { return theoretical_rate(parse_strategy(s)); },
        py::arg("strategy"));

  m.def(
      "fit_rate",
      [](const std::vector<double>& deltas, const std::vector<double>& errors) {
        if (deltas.size() != errors.size()) throw InputError("fit_rate: deltas and errors differ in length");
        std::vector<std::pair<double, double>> rows;
        for (std::size_t k = 0; k < deltas.size(); ++k) rows.emplace_back(deltas[k], errors[k]);
        return fit_dict(fit_rate(rows));
      },
      py::arg("deltas"), py::arg("errors"));

  py::class_<PySetup>(m, "Setup")
      .def_property_readonly("size", [](const PySetup& s) { return s.setup->cloud.size(); })
      .def_property_readonly("delta", [](const PySetup& s) { return s.setup->cloud.delta; })
      .def_property_readonly("h", [](const PySetup& s) { return s.setup->cloud.h; })
      .def_property_readonly("positions", [](const PySetup& s) { return positions(s.setup->cloud); })
      .def_property_readonly("cell_areas", [](const PySetup& s) { return s.setup->cloud.cell_areas; })
      .def_property_readonly("in_domain",
                             [](const PySetup& s) {
                               std::vector<bool> v;
                               for (const auto& t : s.setup->cloud.tags) v.push_back(t.in_domain());
                               return v;
                             })
      .def_property_readonly("regions",
                             [](const PySetup& s) {
                               std::vector<std::string> v;
                               for (const auto& t : s.setup->cloud.tags) v.push_back(region_name(t.region));
                               return v;
                             })
      .def_property_readonly("neighbor_counts",
                             [](const PySetup& s) {
                               std::vector<std::size_t> v;
                               for (std::size_t i = 0; i < s.setup->cloud.size(); ++i)
                                 v.push_back(s.setup->cloud.neighbors.count(i));
                               return v;
                             })
      .def(
          "dilatation",
          [](const PySetup& s, const Field& u) {
            const auto& st = *s.setup;
            return dilatation(st.cloud, st.rule, st.kernel, as_vector(st.cloud, u));
          },
          py::arg("u"), "Dilatation on every node; NaN where it is not evaluated.")
      .def(
          "apply",
          [](const PySetup& s, const Field& u, double nu) {
            const auto& st = *s.setup;
            const Eigen::VectorXd v = as_vector(st.cloud, u);
            const Eigen::VectorXd theta = dilatation(st.cloud, st.rule, st.kernel, v);
            return as_field(apply_lps(st.cloud, st.rule, st.kernel, Material::plane_strain(1.0, nu), v, theta));
          },
          py::arg("u"), py::arg("nu") = 0.3, "Discrete LPS operator; zero rows on exterior nodes.")
      .def(
          "solve",
          [](const PySetup& s, const std::string& strategy, double nu, double dt, double final_time) {
            const Material mat = Material::plane_strain(1.0, nu);
            RunOptions opt;
            opt.dt = dt;
            opt.final_time = final_time;
            const SingleRun run = run_single(find_case(s.case_name, mat), *s.setup, parse_strategy(strategy), mat, opt);
            py::dict d;
            d["l2_error"] = run.l2_error;
            d["g_inf"] = run.g_inf;
            d["residual"] = run.certified_residual;
            d["final_time"] = run.final_time;
            d["u"] = as_field(run.u);
            return d;
          },
          py::arg("strategy") = "smooth", py::arg("nu") = 0.3, py::arg("dt") = 0.01, py::arg("final_time") = 0.1);

  m.def("build_setup", &make_setup, py::arg("case"), py::arg("grid") = "cartesian", py::arg("mirror") = false,
        py::arg("kernel") = "inverse_r", py::arg("delta") = 0.1, py::arg("delta_over_h") = 4.0,
        py::arg("cache_dir") = "");

  m.def(
      "solve",
      [](const std::string& case_name, const std::string& strategy, const std::string& kernel, double nu,
         const std::string& grid, std::optional<bool> mirror, double delta, double delta_over_h, double dt,
         double final_time) {
        const auto s = parse_strategy(strategy);
        const PySetup setup = make_setup(case_name, grid, mirror.value_or(s == ExtensionStrategy::Linear), kernel,
                                         delta, delta_over_h, "");
        const Material mat = Material::plane_strain(1.0, nu);
        RunOptions opt;
        opt.delta_over_h = delta_over_h;
        opt.dt = dt;
        opt.final_time = final_time;
        const SingleRun run = run_single(find_case(case_name, mat), *setup.setup, s, mat, opt);
        py::dict d;
        d["delta"] = run.delta;
        d["h"] = run.h;
        d["l2_error"] = run.l2_error;
        d["g_inf"] = run.g_inf;
        d["residual"] = run.certified_residual;
        d["final_time"] = run.final_time;
        d["positions"] = positions(setup.setup->cloud);
        d["u"] = as_field(run.u);
        return d;
      },
      py::arg("case"), py::arg("strategy") = "smooth", py::arg("kernel") = "inverse_r", py::arg("nu") = 0.3,
      py::arg("grid") = "cartesian", py::arg("mirror") = py::none(), py::arg("delta") = 0.05,
      py::arg("delta_over_h") = 4.0, py::arg("dt") = 0.01, py::arg("final_time") = 0.1);

  m.def(
      "converge",
      [](const std::string& case_name, const std::vector<std::string>& strategies, const std::vector<double>& nus,
         const std::string& kernel, const std::string& grid, std::optional<bool> mirror,
         std::optional<std::vector<double>> deltas, double delta_over_h, double dt, double final_time) {
        std::vector<StudyVariant> variants;
        for (const double nu : nus)
          for (const auto& s : strategies) variants.push_back({parse_strategy(s), nu, mirror});
        const std::vector<double> ds =
            deltas ? *deltas : find_case(case_name, Material::plane_strain(1.0, 0.3)).default_deltas;
        RunOptions opt;
        opt.delta_over_h = delta_over_h;
        opt.dt = dt;
        opt.final_time = final_time;
        std::vector<ConvergenceReport> reports;
        {
          py::gil_scoped_release release;
          reports = run_study(case_name, variants, parse_kernel(kernel), parse_grid(grid), ds, opt);
        }
        py::list out;
        for (const auto& r : reports) {
          py::dict d;
          d["case"] = r.case_name;
          d["strategy"] = strategy_name(r.strategy);
          d["nu"] = r.nu;
          d["mirror"] = r.mirror;
          py::list rows;
          for (const auto& row : r.rows) rows.append(row_dict(row));
          d["rows"] = rows;
          d["l2_rate"] = fit_dict(r.l2_rate);
          d["g_rate"] = fit_dict(r.g_rate);
          d["theoretical"] = r.theoretical;
          out.append(d);
        }
        return out;
      },
      py::arg("case"), py::arg("strategies") = std::vector<std::string>{"smooth"},
      py::arg("nus") = std::vector<double>{0.3}, py::arg("kernel") = "inverse_r", py::arg("grid") = "cartesian",
      py::arg("mirror") = py::none(), py::arg("deltas") = py::none(), py::arg("delta_over_h") = 4.0,
      py::arg("dt") = 0.01, py::arg("final_time") = 0.1);

  m.def(
      "validate",
      [](bool quick, double nu) {
        RunConfig config;
        config.quick = quick;
        config.nu = nu;
        py::list out;
        for (const auto& c : run_validation(config)) {
          py::dict d;
          d["name"] = c.name;
          d["passed"] = c.passed;
          d["measured"] = c.measured;
          d["tolerance"] = c.tolerance;
          d["detail"] = c.detail;
          out.append(d);
        }
        return out;
      },
      py::arg("quick") = true, py::arg("nu") = 0.3);
}
