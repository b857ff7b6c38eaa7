// Python bindings: model parameters, grid fields as numpy arrays, the nonlinear solver and the
// verification entry points.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cmath>
#include <string>

#include "bdb/abstract.hpp"
#include "bdb/error.hpp"
#include "bdb/gevrey.hpp"
#include "bdb/grid.hpp"
#include "bdb/lingroup.hpp"
#include "bdb/model.hpp"
#include "bdb/parallel.hpp"
#include "bdb/solver.hpp"
#include "bdb/xnorm.hpp"

namespace py = pybind11;
using namespace bdb;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

/// Fields cross the boundary as (x_size, p_size) arrays.
PhaseGridFunction to_field(const Array& a, const PhaseGrid& grid) {
    if (a.ndim() != 2 || static_cast<std::size_t>(a.shape(0)) != grid.x_size() ||
        static_cast<std::size_t>(a.shape(1)) != grid.p_size())
        throw Error(ErrorCode::kShapeMismatch, "field array must have shape (" + std::to_string(grid.x_size()) + ", " +
                                                   std::to_string(grid.p_size()) + ")");
    return PhaseGridFunction(grid, std::vector<double>(a.data(), a.data() + a.size()));
}

Array to_array(const PhaseGridFunction& f) {
    const auto& g = f.grid();
    Array out(std::vector<py::ssize_t>{static_cast<py::ssize_t>(g.x_size()), static_cast<py::ssize_t>(g.p_size())});
    std::copy(f.values().begin(), f.values().end(), out.mutable_data());
    return out;
}

Array to_array(const std::vector<double>& v) {
    Array out(std::vector<py::ssize_t>{static_cast<py::ssize_t>(v.size())});
    std::copy(v.begin(), v.end(), out.mutable_data());
    return out;
}

Scheme parse_scheme(const std::string& s) {
    if (s == "strang_split") return Scheme::kStrangSplit;
    if (s == "duhamel_picard") return Scheme::kDuhamelPicard;
    throw Error(ErrorCode::kInvalidArgument, "scheme must be 'strang_split' or 'duhamel_picard', got '" + s + "'");
}

Collision parse_collision(const std::string& s) {
    if (s == "relaxation") return Collision::kRelaxation;
    if (s == "bgk") return Collision::kBgk;
    throw Error(ErrorCode::kInvalidArgument, "collision must be 'relaxation' or 'bgk', got '" + s + "'");
}

py::dict record_dict(const TrajectoryRecord& r) {
    py::dict d;
    d["t"] = to_array(r.times);
    d["norm_X"] = to_array(r.norm_x);
    d["norm_gevrey"] = to_array(r.norm_gevrey);
    d["nu"] = to_array(r.nu);
    d["mass"] = to_array(r.mass);
    d["energy"] = to_array(r.energy);
    d["steps"] = r.steps;
    d["final_state"] = to_array(r.final_state);
    d["bgk_mass_residual"] = r.bgk_mass_residual;
    d["bgk_energy_residual"] = r.bgk_energy_residual;
    py::list densities;
    for (const auto& rho : r.densities) densities.append(to_array(rho.values));
    d["densities"] = densities;
    d["density_times"] = to_array(r.density_times);
    return d;
}

}  // namespace

PYBIND11_MODULE(_bdbkit, m) {
    m.doc() = "Kinetic relaxation toward Fermi-Dirac equilibria on the periodic phase space";
    m.attr("__version__") = BDB_VERSION;

    // Messages carry the error category as a prefix, e.g. "blow-up: ...".
    py::register_exception<Error>(m, "BdbError", PyExc_RuntimeError);

    py::class_<EntropyParams>(m, "EntropyParams")
        .def(py::init([](double lambda0, double lambda1, double eta) { return EntropyParams{lambda0, lambda1, eta}; }),
             py::arg("lambda0") = 0.0, py::arg("lambda1") = 1.0, py::arg("eta") = 1.0)
        .def_readwrite("lambda0", &EntropyParams::lambda0)
        .def_readwrite("lambda1", &EntropyParams::lambda1)
        .def_readwrite("eta", &EntropyParams::eta)
        .def("validate", &EntropyParams::validate);

    py::class_<BandParams>(m, "BandParams")
        .def(py::init([](double epsilon0, int d) { return BandParams{epsilon0, d}; }), py::arg("epsilon0") = 0.5,
             py::arg("d") = 1)
        .def_readwrite("epsilon0", &BandParams::epsilon0)
        .def_readwrite("d", &BandParams::d)
        .def("validate", &BandParams::validate);

    py::class_<PhysicalParams>(m, "PhysicalParams")
        .def(py::init([](double U, double tau) { return PhysicalParams{U, tau}; }), py::arg("U") = 1.0,
             py::arg("tau") = 0.05)
        .def_readwrite("U", &PhysicalParams::U)
        .def_readwrite("tau", &PhysicalParams::tau)
        .def("validate", &PhysicalParams::validate);

    py::class_<ModelParams>(m, "ModelParams")
        .def(py::init([](double lambda0, double lambda1, double eta, double epsilon0, int d, double U, double tau) {
                 ModelParams p{{lambda0, lambda1, eta}, {epsilon0, d}, {U, tau}};
                 p.validate();
                 return p;
             }),
             py::arg("lambda0") = 0.0, py::arg("lambda1") = 1.0, py::arg("eta") = 1.0, py::arg("epsilon0") = 0.5,
             py::arg("d") = 1, py::arg("U") = 1.0, py::arg("tau") = 0.05)
        .def_readwrite("entropy", &ModelParams::entropy)
        .def_readwrite("band", &ModelParams::band)
        .def_readwrite("physical", &ModelParams::physical)
        .def("validate", &ModelParams::validate);

    py::class_<PhaseGrid>(m, "PhaseGrid")
        .def(py::init([](int d, int nx, int np, double lx) {
                 PhaseGrid g{d, nx, np, lx};
                 g.validate();
                 return g;
             }),
             py::arg("d") = 1, py::arg("nx") = 64, py::arg("np") = 64, py::arg("lx") = 1.0)
        .def_readonly("d", &PhaseGrid::d)
        .def_readonly("nx", &PhaseGrid::nx)
        .def_readonly("np", &PhaseGrid::np)
        .def_readonly("lx", &PhaseGrid::lx)
        .def_property_readonly("shape", [](const PhaseGrid& g) { return py::make_tuple(g.x_size(), g.p_size()); })
        .def("x_node", py::overload_cast<std::size_t>(&PhaseGrid::x_node, py::const_))
        .def("p_node", py::overload_cast<std::size_t>(&PhaseGrid::p_node, py::const_));

    m.def("set_threads", &set_thread_count, py::arg("n"));

    m.def("band_energy", [](std::vector<double> p, const BandParams& bp) { return band_energy(p, bp); },
          py::arg("p"), py::arg("band"));
    m.def("equilibrium_of_energy", &equilibrium_of_energy, py::arg("energy"), py::arg("entropy"));
    m.def(
        "equilibrium",
        [](const PhaseGrid& grid, const ModelParams& p) {
            return to_array(PhaseGridFunction::equilibrium(grid, p.entropy, p.band));
        },
        py::arg("grid"), py::arg("params"), "Equilibrium sampled on the grid, constant in x.");
    m.def(
        "criticality",
        [](const ModelParams& p, int np) { return criticality_value(p.entropy, p.band, p.physical.U, np); },
        py::arg("params"), py::arg("np") = 256);
    m.def(
        "penrose_margin",
        [](const ModelParams& p, int np) {
            return penrose_margin(p.entropy, p.band, p.physical.U, PenroseGrid::defaults(), np);
        },
        py::arg("params"), py::arg("np") = 256);

    m.def(
        "x_norm",
        [](const Array& f, const PhaseGrid& grid, const ModelParams& p) {
            return XNorm(grid, p.entropy, p.band, p.physical.U).norm(to_field(f, grid));
        },
        py::arg("f"), py::arg("grid"), py::arg("params"), "Weighted Sobolev norm of a perturbation.");
    m.def(
        "analytic_seminorm",
        [](const Array& f, const PhaseGrid& grid, const ModelParams& p, double nu, int n_max) {
            const XNorm xn(grid, p.entropy, p.band, p.physical.U);
            const auto r = analytic_seminorm(to_field(f, grid), nu, n_max, xn);
            return py::make_tuple(r.value, r.last_shell);
        },
        py::arg("f"), py::arg("grid"), py::arg("params"), py::arg("nu"), py::arg("n_max") = 6,
        "Truncated analytic norm and its last shell.");
    m.def(
        "group_action",
        [](const Array& g, double t, const PhaseGrid& grid, const ModelParams& p) {
            const LinearizedOperator op(grid, p.entropy, p.band, p.physical.U);
            return to_array(op.group_action(t, to_field(g, grid)));
        },
        py::arg("g"), py::arg("t"), py::arg("grid"), py::arg("params"), "e^{tL} g for the linearized generator.");
    m.def(
        "kinetic_constants",
        [](const PhaseGrid& grid, const ModelParams& p, int depth) {
            const LinearizedOperator op(grid, p.entropy, p.band, p.physical.U);
            const auto k = kinetic_constants(op, depth);
            py::dict d;
            d["C"] = k.C;
            d["r"] = k.r;
            d["delta"] = k.delta;
            d["nu0"] = k.nu0;
            d["omega0"] = k.omega0;
            d["tau0"] = k.tau0;
            return d;
        },
        py::arg("grid"), py::arg("params"), py::arg("depth") = 6);

    m.def(
        "evolve",
        [](const Array& f0, const PhaseGrid& grid, const ModelParams& p, double dt, double t_end,
           const std::string& scheme, const std::string& collision, int record_every, bool enforce_cfl, double t0) {
            SolverConfig cfg;
            cfg.dt = dt;
            cfg.t_end = t_end;
            cfg.scheme = parse_scheme(scheme);
            cfg.collision = parse_collision(collision);
            cfg.record_every = record_every;
            cfg.enforce_cfl = enforce_cfl;
            const auto field = to_field(f0, grid);
            TrajectoryRecord rec;
            {
                py::gil_scoped_release release;
                rec = evolve(field, p, cfg, t0);
            }
            return record_dict(rec);
        },
        py::arg("f0"), py::arg("grid"), py::arg("params"), py::arg("dt") = 2.5e-4, py::arg("t_end") = 0.5,
        py::arg("scheme") = "strang_split", py::arg("collision") = "relaxation", py::arg("record_every") = 10,
        py::arg("enforce_cfl") = true, py::arg("t0") = 0.0,
        "Nonlinear evolution; returns the recorded diagnostics and the final state.");
    m.def(
        "decay_fit",
        [](std::vector<double> t, std::vector<double> norms) {
            const auto fit = decay_fit(t, norms);
            py::dict d;
            d["rate"] = fit.rate;
            d["log_C"] = fit.log_C;
            d["residual"] = fit.residual;
            d["monotone"] = fit.monotone;
            return d;
        },
        py::arg("t"), py::arg("norms"), "Exponential fit over the tail half of a norm trajectory.");

    m.def(
        "verification_battery",
        [](std::uint64_t seed, int trials, int max_order) {
            BatteryOptions o;
            o.trials = trials;
            o.max_order = max_order;
            py::list out;
            for (const auto& c : verification_battery(seed, o)) {
                py::dict d;
                d["name"] = c.name;
                d["lhs"] = c.lhs;
                d["rhs"] = c.rhs;
                d["seed"] = c.seed;
                d["passed"] = c.passed;
                out.append(d);
            }
            return out;
        },
        py::arg("seed"), py::arg("trials") = 20, py::arg("max_order") = 4);

    m.def(
        "write_snapshot",
        [](const std::string& path, const Array& f, const PhaseGrid& grid, double t, const ModelParams& p) {
            write_snapshot(path, Snapshot{to_field(f, grid), t, p});
        },
        py::arg("path"), py::arg("f"), py::arg("grid"), py::arg("t"), py::arg("params"));
    m.def(
        "read_snapshot",
        [](const std::string& path) {
            const auto s = read_snapshot(path);
            return py::make_tuple(to_array(s.field), s.field.grid(), s.time, s.params);
        },
        py::arg("path"), "Returns (field, grid, time, params).");
}
