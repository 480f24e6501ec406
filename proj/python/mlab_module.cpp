// Python bindings: the main operations of the C++ core — grids, motility
// families, the screened-Poisson solver, the conservative stepper, and the
// scenario harness.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <algorithm>
#include <optional>

#include "mlab/config.hpp"
#include "mlab/diagnostics.hpp"
#include "mlab/errors.hpp"
#include "mlab/field_io.hpp"
#include "mlab/harness.hpp"

namespace py = pybind11;
using namespace mlab;

namespace {

/// The C++ side shares grids as shared_ptr<const Grid>; Python sees this
/// thin handle instead.
struct PyGrid {
    GridPtr p;
};

using CArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

ScalarField field_from_array(const PyGrid& g, const CArray& a) {
    if (static_cast<std::size_t>(a.size()) != g.p->cell_count())
        throw GridMismatchError("array length does not match the grid");
    std::vector<double> vals(a.data(), a.data() + a.size());
    return ScalarField(g.p, std::move(vals));
}

py::array_t<double> field_to_array(const ScalarField& f) {
    py::array_t<double> out({static_cast<py::ssize_t>(f.size())});
    std::copy(f.values().begin(), f.values().end(), out.mutable_data());
    return out;
}

MotilityFamily family_from_dict(const std::string& family, const py::dict& params) {
    config::Value g = config::Value::object();
    g["family"] = family;
    for (auto item : params)
        g[py::cast<std::string>(item.first)] = py::cast<double>(item.second);
    config::Value root = config::Value::object();
    root["schema"] = 1;
    root["grid"] = {{"geometry", "interval"}, {"length", 1.0}, {"cells", 3}};
    root["gamma"] = g;
    return ScenarioConfig::from_table(root).family;
}

}  // namespace

PYBIND11_MODULE(_mlab, m) {
    m.doc() = "density-suppressed motility lab (C++ core)";

    py::register_exception<ConfigError>(m, "ConfigError");
    py::register_exception<SolverError>(m, "SolverError");
    py::register_exception<GridMismatchError>(m, "GridMismatchError");

    py::class_<PyGrid>(m, "Grid")
        .def_property_readonly("cell_count",
                               [](const PyGrid& g) { return g.p->cell_count(); })
        .def_property_readonly("space_dim",
                               [](const PyGrid& g) { return g.p->space_dim(); })
        .def_property_readonly("axis_count",
                               [](const PyGrid& g) { return g.p->axis_count(); })
        .def_property_readonly("total_measure",
                               [](const PyGrid& g) { return g.p->total_measure(); })
        .def("spacing", [](const PyGrid& g, int axis) { return g.p->spacing(axis); },
             py::arg("axis") = 0)
        .def("cells_along",
             [](const PyGrid& g, int axis) { return g.p->cells_along(axis); },
             py::arg("axis") = 0)
        .def("center",
             [](const PyGrid& g, std::size_t cell, int axis) {
                 return g.p->center(cell, axis);
             },
             py::arg("cell"), py::arg("axis") = 0)
        .def("cell_volumes", [](const PyGrid& g) {
            py::array_t<double> out({static_cast<py::ssize_t>(g.p->cell_count())});
            std::copy(g.p->cell_volumes().begin(), g.p->cell_volumes().end(),
                      out.mutable_data());
            return out;
        });

    m.def("make_interval",
          [](double length, std::size_t cells) {
              return PyGrid{make_interval(length, cells)};
          },
          py::arg("length"), py::arg("cells"));
    m.def("make_rectangle",
          [](double lx, double ly, std::size_t nx, std::size_t ny) {
              return PyGrid{make_rectangle(lx, ly, nx, ny)};
          },
          py::arg("lx"), py::arg("ly"), py::arg("nx"), py::arg("ny"));
    m.def("make_radial_ball",
          [](double radius, int dim, std::size_t cells) {
              return PyGrid{make_radial_ball(radius, dim, cells)};
          },
          py::arg("radius"), py::arg("dim"), py::arg("cells"));

    py::class_<ScalarField>(m, "ScalarField")
        .def(py::init(&field_from_array), py::arg("grid"), py::arg("values"))
        .def_property_readonly("grid",
                               [](const ScalarField& f) { return PyGrid{f.grid()}; })
        .def("to_numpy", &field_to_array)
        .def("min", &ScalarField::min)
        .def("max", &ScalarField::max)
        .def("__len__", &ScalarField::size);

    m.def("constant_field", [](const PyGrid& g, double value) {
        return ScalarField(g.p, value);
    });
    m.def("integrate", &integrate);
    m.def("lp_norm", &lp_norm, py::arg("field"), py::arg("p"));
    m.def("apply_laplacian", &apply_laplacian);

    py::class_<Motility>(m, "Motility")
        .def(py::init([](const std::string& family, const py::dict& params, double a,
                         std::optional<double> declared_k,
                         std::optional<double> declared_l) {
                 return Motility(family_from_dict(family, params), a, declared_k,
                                 declared_l);
             }),
             py::arg("family"), py::arg("params") = py::dict(), py::arg("a") = 1.0,
             py::arg("declared_k") = std::nullopt,
             py::arg("declared_l") = std::nullopt)
        .def("gamma", &Motility::gamma)
        .def("gamma_prime", &Motility::gamma_prime)
        .def("big_gamma", &Motility::big_gamma)
        .def("tail_envelope", &Motility::tail_envelope)
        .def_property_readonly("lower_limit", &Motility::lower_limit)
        .def_property_readonly("monotone", &Motility::monotone)
        .def_property_readonly("family_name", &Motility::family_name);

    py::class_<AssumptionReport>(m, "AssumptionReport")
        .def_readonly("a0_holds", &AssumptionReport::a0_holds)
        .def_readonly("a1_holds", &AssumptionReport::a1_holds)
        .def_readonly("a2_holds", &AssumptionReport::a2_holds)
        .def_readonly("gamma_positive", &AssumptionReport::gamma_positive)
        .def_readonly("notes", &AssumptionReport::notes);
    m.def("check_assumptions", &check_assumptions);

    py::class_<HelmholtzSolver>(m, "HelmholtzSolver")
        .def(py::init([](const PyGrid& g, double tol) {
                 return HelmholtzSolver(g.p, tol);
             }),
             py::arg("grid"), py::arg("tolerance") = 1e-11)
        .def("solve", &HelmholtzSolver::solve)
        .def("apply", &HelmholtzSolver::apply)
        .def("green_min", &HelmholtzSolver::green_min)
        .def_property_readonly("grid", [](const HelmholtzSolver& h) {
            return PyGrid{h.grid()};
        });

    py::class_<SimState>(m, "SimState")
        .def_readonly("t", &SimState::t)
        .def_readonly("step_index", &SimState::step_index)
        .def_property_readonly("u", [](const SimState& s) { return s.u; })
        .def_property_readonly("v", [](const SimState& s) { return s.v; });

    py::class_<StepperConfig>(m, "StepperConfig")
        .def(py::init<>())
        .def_readwrite("dt", &StepperConfig::dt)
        .def_readwrite("t_end", &StepperConfig::t_end)
        .def_readwrite("positivity_floor", &StepperConfig::positivity_floor)
        .def_readwrite("growth_factor", &StepperConfig::growth_factor)
        .def_readwrite("sample_every", &StepperConfig::sample_every);

    py::class_<CheckVerdict>(m, "CheckVerdict")
        .def_readonly("worst_margin", &CheckVerdict::worst_margin)
        .def_readonly("worst_time", &CheckVerdict::worst_time)
        .def_readonly("detail", &CheckVerdict::detail)
        .def_property_readonly("status", [](const CheckVerdict& v) {
            return std::string(to_string(v.status));
        });

    py::class_<DiagnosticsReport>(m, "DiagnosticsReport")
        .def_readonly("columns", &DiagnosticsReport::columns)
        .def_readonly("verdicts", &DiagnosticsReport::verdicts)
        .def("column", &DiagnosticsReport::column)
        .def("all_asserted_pass", &DiagnosticsReport::all_asserted_pass)
        .def("failing_checks", &DiagnosticsReport::failing_checks)
        .def("summary", &DiagnosticsReport::summary);

    py::class_<RunResult>(m, "RunResult")
        .def_readonly("state", &RunResult::state)
        .def_readonly("report", &RunResult::report)
        .def_property_readonly("halt", [](const RunResult& r) {
            return std::string(to_string(r.halt));
        });

    m.def("init_state", &init_state);
    m.def(
        "run",
        [](const ScalarField& u_in, const Motility& mot, const HelmholtzSolver& h,
           const StepperConfig& cfg) { return run(u_in, mot, h, cfg); },
        py::arg("u_in"), py::arg("motility"), py::arg("solver"), py::arg("config"),
        py::call_guard<py::gil_scoped_release>());
    m.def("step", &step);

    m.def("nonlocal_source", &nonlocal_source);
    m.def("key_identity_residual", &key_identity_residual);
    m.def("ladder_exponents", &ladder_exponents, py::arg("space_dim"), py::arg("k"),
          py::arg("rungs"));

    py::class_<MoserParams>(m, "MoserParams")
        .def(py::init<>())
        .def_readwrite("rho", &MoserParams::rho)
        .def_readwrite("b", &MoserParams::b)
        .def_readwrite("c", &MoserParams::c)
        .def_readwrite("C0", &MoserParams::big_c0)
        .def_readwrite("C1", &MoserParams::big_c1)
        .def_readwrite("delta0", &MoserParams::delta0);
    py::class_<MoserResult>(m, "MoserResult")
        .def_readonly("bounded", &MoserResult::bounded)
        .def_readonly("bound", &MoserResult::bound)
        .def_readonly("delta", &MoserResult::delta)
        .def_readonly("eta_root", &MoserResult::eta_root);
    m.def("moser_lemma_check", &moser_lemma_check, py::arg("params"),
          py::arg("terms") = 60);

    m.def("write_snapshot", &write_snapshot);
    m.def("read_snapshot", &read_snapshot);
    m.def("write_checkpoint", &write_checkpoint);
    m.def(
        "read_checkpoint",
        [](const std::filesystem::path& path, std::optional<PyGrid> grid) {
            return read_checkpoint(path, grid ? grid->p : nullptr);
        },
        py::arg("path"), py::arg("grid") = std::nullopt);

    m.def(
        "run_scenario_file",
        [](const std::filesystem::path& config_path,
           const std::filesystem::path& out_dir) {
            const ScenarioConfig cfg = ScenarioConfig::from_file(config_path);
            const ExperimentResult res = run_experiment(cfg, out_dir);
            py::dict out;
            out["passed"] = res.passed;
            if (res.single) {
                out["report"] = res.single->report;
                out["halt"] = std::string(to_string(res.single->halt));
            }
            if (res.bracket)
                out["bracket"] = py::make_tuple(res.bracket->first, res.bracket->second);
            return out;
        },
        py::arg("config_path"), py::arg("out_dir"));

    m.attr("__version__") = "0.1.0";
}
