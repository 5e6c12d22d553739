#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "malab/cli_reports/config.hpp"
#include "malab/cli_reports/runner.hpp"
#include "malab/degenerate_mu/doubling.hpp"
#include "malab/degenerate_mu/pipeline.hpp"
#include "malab/error.hpp"
#include "malab/ma_solver/solver.hpp"
#include "malab/ma_solver/wang.hpp"
#include "malab/regularity_lab/levels.hpp"
#include "malab/regularity_lab/report.hpp"
#include "malab/sections/engulfing.hpp"
#include "malab/sections/normalization.hpp"

namespace py = pybind11;
using namespace malab;

namespace {

// Reports cross the boundary as JSON text; the Python side parses them.
std::string dump(const nlohmann::json& j) { return j.dump(); }

// Node values as a (ny, nx) array; NaN outside the domain.
py::array_t<double> grid_array(const std::vector<double>& values, const Grid& g, const std::vector<std::uint8_t>* mask) {
  const auto nx = static_cast<py::ssize_t>(g.size()[0]), ny = static_cast<py::ssize_t>(g.size()[1]);
  py::array_t<double> out({ny, nx});
  auto a = out.mutable_unchecked<2>();
  for (py::ssize_t j = 0; j < ny; ++j)
    for (py::ssize_t i = 0; i < nx; ++i) {
      const std::size_t k = g.index({int(i), int(j), 0});
      a(j, i) = (!mask || (*mask)[k]) ? values[k] : std::numeric_limits<double>::quiet_NaN();
    }
  return out;
}

struct PyField {
  ConvexField u;
  std::string report;  // solver report, empty for sampled fields
};

DomainSpec named_domain(const std::string& name) {
  if (name == "ball") return build_domain(ShapeDescriptor::ball(2));
  if (name == "square") return build_domain(ShapeDescriptor::square());
  throw Error(ErrorCode::ConfigError, "domain must be 'ball' or 'square'");
}

PyField solve(int nodes, const std::string& problem, const std::string& domain, double amplitude, int cells,
              double tol) {
  const DomainSpec d = named_domain(domain);
  RhsSpec rhs;
  if (problem == "radial") rhs = RhsSpec::constant(1.0);
  else if (problem == "oscillatory") rhs = RhsSpec::oscillatory(amplitude, cells);
  else throw Error(ErrorCode::ConfigError, "problem must be 'radial' or 'oscillatory'");
  SolverOptions o;
  o.tol = tol;
  auto [u, rep] = solve_dirichlet(domain_grid(d, nodes), d, rhs, o);
  return {std::move(u), dump(rep.to_json())};
}

PyField wang_sample(double alpha, double spacing, double amplitude) {
  const Vec lo = make_vec(-1.05, -1.0), hi = make_vec(1.05, 1.0);
  return {wang_field(wang_construct(alpha).scaled(amplitude), Grid::box(lo, hi, spacing), box_domain(lo, hi)), ""};
}

Region analysis_region(const ConvexField& u, double level) {
  return std::isnan(level) ? interior_region(u) : sublevel_region(u, level);
}

}  // namespace

PYBIND11_MODULE(_malab, m) {
  m.doc() = "Monge-Ampere regularity lab: solver, sections, level sets and measures";

  auto& error = py::register_exception<Error>(m, "MalabError");
  py::register_exception<StageFailure>(m, "StageFailure", error.ptr());

  py::class_<PyField>(m, "Field")
      .def_property_readonly("values", [](const PyField& f) { return grid_array(f.u.values, f.u.grid, &f.u.interior); })
      .def_property_readonly("spacing", [](const PyField& f) { return f.u.grid.spacing(); })
      .def_property_readonly("shape", [](const PyField& f) { return py::make_tuple(f.u.grid.size()[1], f.u.grid.size()[0]); })
      .def_property_readonly("report_json", [](const PyField& f) { return f.report; })
      .def("hessian_norm", [](const PyField& f) {
        const HessianField h = discrete_hessian(f.u);
        std::vector<double> v = h.norm;
        for (std::size_t i = 0; i < v.size(); ++i)
          if (!h.usable(i)) v[i] = std::numeric_limits<double>::quiet_NaN();
        return grid_array(v, h.grid, nullptr);
      })
      .def("levels_json", [](const PyField& f, double M, double level) {
        return dump(to_json(level_decompose(discrete_hessian(f.u), analysis_region(f.u, level), M)));
      }, py::arg("M") = 2.0, py::arg("level") = std::numeric_limits<double>::quiet_NaN())
      .def("tails_json", [](const PyField& f, double level) {
        return dump(to_json(tail_bound_check(level_decompose(discrete_hessian(f.u), analysis_region(f.u, level), 2.0))));
      }, py::arg("level") = std::numeric_limits<double>::quiet_NaN())
      .def("w21eps_json", [](const PyField& f, double eps, double level) {
        return dump(to_json(w21eps_norm(discrete_hessian(f.u), analysis_region(f.u, level), eps)));
      }, py::arg("epsilon"), py::arg("level") = std::numeric_limits<double>::quiet_NaN())
      .def("normalized_size", [](const PyField& f, double x, double y, double h) {
        const auto node = f.u.grid.nearest(make_vec(x, y));
        if (!node) throw Error(ErrorCode::Unsupported, "point outside the grid");
        const Normalization nz = john_normalize(compute_section(f.u, *node, h));
        return py::make_tuple(nz.alpha, nz.sigma);
      }, py::arg("x"), py::arg("y"), py::arg("h"))
      .def("estimate_delta", [](const PyField& f, int pairs, std::uint64_t seed) {
        EngulfingOptions o;
        o.pairs = pairs;
        o.seed = seed;
        return estimate_delta(f.u, o).delta;
      }, py::arg("pairs") = 200, py::arg("seed") = 1);

  m.def("solve", &solve, py::arg("nodes"), py::arg("problem") = "radial", py::arg("domain") = "ball",
        py::arg("amplitude") = 0.9, py::arg("cells") = 4, py::arg("tol") = 1e-8,
        "Solve det D^2u = f with zero boundary data.");
  m.def("wang_field", &wang_sample, py::arg("alpha"), py::arg("spacing") = 0.01, py::arg("amplitude") = 1.0 / 16,
        "Sample the homogeneous singular solution on [-1.05, 1.05] x [-1, 1].");
  m.def("wang_json", [](double alpha) { return dump(wang_construct(alpha).to_json()); }, py::arg("alpha"));
  m.def("doubling_json", [](double a, int nodes, std::uint64_t seed) {
    DoublingOptions o;
    o.seed = seed;
    const DomainSpec d = named_domain("ball");
    return dump(check_doubling(MeasureSpec::coordinate_power(2, 0, a), d, domain_grid(d, nodes), o).to_json());
  }, py::arg("alpha"), py::arg("nodes") = 65, py::arg("seed") = 1, "Doubling fit for mu = |x1|^alpha dx on the disc.");
  m.def("config_template", &config_template);
  m.def("run_json", [](const std::string& yaml, const std::string& output, const std::string& base_dir) {
    ExperimentConfig c = ExperimentConfig::from_yaml(yaml, base_dir);
    if (!output.empty()) c.output = output;
    py::gil_scoped_release release;
    return dump(run(c).to_json());
  }, py::arg("yaml"), py::arg("output") = "", py::arg("base_dir") = ".");
  m.def("compare_json", [](const std::string& a, const std::string& b) { return dump(compare(a, b)); });
  m.attr("__version__") = kArtifactVersion;
}
