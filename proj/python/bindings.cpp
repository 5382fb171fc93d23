// Copyright 2026 The flashsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <sstream>

#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "flashsim/config.hpp"
#include "flashsim/io.hpp"
#include "flashsim/verify.hpp"

namespace py = pybind11;
using namespace flashsim;

namespace {

FlashHistory to_history(const std::vector<std::tuple<double, std::size_t, std::size_t>>& records) {
    FlashHistory h;
    for (const auto& [t, site, label] : records) h.push_back({t, site, label});
    return h;
}

py::list from_history(const FlashHistory& h) {
    py::list out;
    for (const auto& f : h) out.append(py::make_tuple(f.t, f.site, f.label));
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Flash-process simulator core";

    // Held for the interpreter lifetime; the instance carries the error code name.
    static py::handle error_type = py::exception<Error>(m, "FlashsimError", PyExc_RuntimeError).release();
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            py::object exc = py::reinterpret_borrow<py::object>(error_type)(e.what());
            exc.attr("code") = std::string(error_code_name(e.code()));
            PyErr_SetObject(error_type.ptr(), exc.ptr());
        }
    });

    py::enum_<Parity>(m, "Parity").value("BOSON", Parity::Boson).value("FERMION", Parity::Fermion);
    py::enum_<ComposeMode>(m, "ComposeMode")
        .value("LABELED", ComposeMode::Labeled)
        .value("MERGED", ComposeMode::Merged);
    py::enum_<QuadratureRule>(m, "QuadratureRule")
        .value("TRAPEZOID", QuadratureRule::Trapezoid)
        .value("SIMPSON", QuadratureRule::Simpson)
        .value("EXACT", QuadratureRule::Exact);

    py::class_<Lattice>(m, "Lattice")
        .def(py::init<std::vector<std::size_t>, double>(), py::arg("extents"), py::arg("spacing") = 1.0)
        .def_static("ring", &Lattice::ring, py::arg("n_sites"), py::arg("spacing") = 1.0)
        .def_property_readonly("n_sites", &Lattice::n_sites)
        .def_property_readonly("extents", &Lattice::extents)
        .def_property_readonly("spacing", &Lattice::spacing)
        .def("coordinates", &Lattice::coordinates)
        .def("distance2", &Lattice::distance2);

    py::class_<RateProfile>(m, "RateProfile")
        .def_static("gaussian", &RateProfile::gaussian, py::arg("strength"), py::arg("width"),
                    py::arg("mass_factors") = std::vector<double>{})
        .def_static("delta", &RateProfile::delta, py::arg("strength"), py::arg("mass_factors") = std::vector<double>{})
        .def_readwrite("strength", &RateProfile::strength)
        .def_readwrite("width", &RateProfile::width)
        .def_readwrite("mass_factors", &RateProfile::mass_factors);

    py::class_<HamiltonianSpec>(m, "HamiltonianSpec")
        .def(py::init([](double hopping, std::vector<double> potential, double interaction, double source) {
                 return HamiltonianSpec{hopping, std::move(potential), interaction, source};
             }),
             py::arg("hopping") = 0.0, py::arg("potential") = std::vector<double>{}, py::arg("interaction") = 0.0,
             py::arg("source") = 0.0)
        .def_readwrite("hopping", &HamiltonianSpec::hopping)
        .def_readwrite("potential", &HamiltonianSpec::potential)
        .def_readwrite("interaction", &HamiltonianSpec::interaction)
        .def_readwrite("source", &HamiltonianSpec::source);

    py::class_<FlashModel>(m, "FlashModel")
        .def(py::init([](const Lattice& lattice, const ComplexMatrix& h, std::vector<std::string> labels,
                         const std::vector<std::vector<ComplexMatrix>>& rates) {
                 std::vector<std::vector<PositiveOperator>> ops;
                 for (const auto& row : rates) {
                     std::vector<PositiveOperator> r;
                     for (const auto& a : row) r.emplace_back(a);
                     ops.push_back(std::move(r));
                 }
                 return FlashModel(lattice, h, RateOperatorFamily(std::move(labels), std::move(ops)));
             }),
             py::arg("lattice"), py::arg("hamiltonian"), py::arg("labels"), py::arg("rates"))
        .def_property_readonly("dim", &FlashModel::dim)
        .def_property_readonly("n_sites", &FlashModel::n_sites)
        .def_property_readonly("labels", &FlashModel::labels)
        .def_property_readonly("hamiltonian", &FlashModel::hamiltonian)
        .def_property_readonly("generator", &FlashModel::generator)
        .def_property_readonly("total_rate", &FlashModel::total_rate)
        .def_property_readonly("sector_dims", &FlashModel::sector_dims)
        .def_property_readonly("is_diagonal", &FlashModel::is_diagonal)
        .def("rate", [](const FlashModel& self, std::size_t label, std::size_t site) {
            return self.rates().at(label, site).matrix();
        });

    m.def("build_grw_model", &build_grw_model, py::arg("n_particles"), py::arg("lattice"), py::arg("profile"),
          py::arg("hamiltonian") = HamiltonianSpec{}, py::arg("dimension_cap") = kDefaultDimensionCap);
    m.def("build_identical_model", &build_identical_model, py::arg("n_particles"), py::arg("parity"),
          py::arg("one_particle"), py::arg("interaction") = 0.0, py::arg("dimension_cap") = kDefaultDimensionCap);
    m.def("build_fock_model", &build_fock_model, py::arg("n_max"), py::arg("lattice"), py::arg("profile"),
          py::arg("parity"), py::arg("hamiltonian") = HamiltonianSpec{},
          py::arg("dimension_cap") = kDefaultDimensionCap);
    m.def("fock_basis", &fock_basis);
    m.def("compose_tensor", &compose_tensor, py::arg("m1"), py::arg("m2"), py::arg("mode"),
          py::arg("interaction") = std::nullopt, py::arg("dimension_cap") = kDefaultDimensionCap);
    m.def("compose_direct_sum", &compose_direct_sum);

    m.def("semigroup_exp", &semigroup_exp, py::arg("generator"), py::arg("t"));
    m.def("tensor", py::overload_cast<const ComplexMatrix&, const ComplexMatrix&, std::size_t>(&tensor),
          py::arg("a"), py::arg("b"), py::arg("dimension_cap") = kDefaultDimensionCap);
    m.def("propagate", &propagate);
    m.def("collapse", &collapse, py::arg("model"), py::arg("psi"), py::arg("site"), py::arg("label") = 0);
    m.def("kernel_apply", [](const FlashModel& model, const ComplexVector& psi,
                             const std::vector<std::tuple<double, std::size_t, std::size_t>>& history) {
        return kernel_apply(model, psi, to_history(history));
    });
    m.def("flash_rate_density", &flash_rate_density);
    m.def("matter_density", &matter_density);

    py::class_<SamplerConfig>(m, "SamplerConfig")
        .def(py::init<>())
        .def_readwrite("t_max_horizon", &SamplerConfig::t_max_horizon)
        .def_readwrite("survival_floor", &SamplerConfig::survival_floor)
        .def_readwrite("time_grid_step", &SamplerConfig::time_grid_step)
        .def_readwrite("refinement_tolerance", &SamplerConfig::refinement_tolerance)
        .def_readwrite("seed", &SamplerConfig::seed)
        .def_readwrite("stream_id", &SamplerConfig::stream_id);

    m.def(
        "run_trajectory",
        [](const FlashModel& model, const ComplexVector& psi, const SamplerConfig& cfg) {
            const Trajectory t = run_trajectory(model, psi, cfg);
            return py::make_tuple(from_history(t.flashes), t.final_state);
        },
        py::arg("model"), py::arg("psi"), py::arg("config"));
    m.def(
        "run_ensemble",
        [](const FlashModel& model, const ComplexVector& psi, std::size_t n_traj, const SamplerConfig& cfg,
           std::vector<double> snapshots, unsigned threads) {
            EnsembleOptions o;
            o.snapshot_times = std::move(snapshots);
            o.threads = threads;
            o.keep_trajectories = true;
            EnsembleSummary s;
            {
                py::gil_scoped_release release;
                s = run_ensemble(model, psi, n_traj, cfg, o);
            }
            py::dict d;
            d["n_traj"] = s.n_traj;
            d["flash_counts"] = s.flash_counts;
            d["mean_flash_count"] = s.mean_flash_count;
            d["var_flash_count"] = s.var_flash_count;
            d["snapshot_times"] = s.snapshot_times;
            d["survival_fraction"] = s.survival_fraction;
            d["rho"] = s.rho;
            d["matter_density"] = s.matter_density;
            py::list traj;
            for (const auto& h : s.trajectories) traj.append(from_history(h));
            d["trajectories"] = traj;
            return d;
        },
        py::arg("model"), py::arg("psi"), py::arg("n_traj"), py::arg("config"),
        py::arg("snapshot_times") = std::vector<double>{}, py::arg("threads") = 1);

    py::class_<CheckReport>(m, "CheckReport")
        .def_readonly("name", &CheckReport::name)
        .def_readonly("metric_name", &CheckReport::metric_name)
        .def_readonly("metric", &CheckReport::metric)
        .def_readonly("threshold", &CheckReport::threshold)
        .def_readonly("passed", &CheckReport::pass)
        .def_readonly("details", &CheckReport::details)
        .def("to_json", &CheckReport::to_json);

    py::class_<QuadratureGrid>(m, "QuadratureGrid")
        .def(py::init([](double t_max, std::size_t n_steps, QuadratureRule rule) {
                 return QuadratureGrid{t_max, n_steps, rule};
             }),
             py::arg("t_max"), py::arg("n_steps"), py::arg("rule") = QuadratureRule::Simpson);

    m.def("check_normalization", &check_normalization, py::arg("model"), py::arg("psi"), py::arg("grid"),
          py::arg("threshold") = 1e-6);
    m.def("check_consistency", &check_consistency, py::arg("model"), py::arg("n"), py::arg("grid"),
          py::arg("threshold") = 1e-6, py::arg("n_histories") = 4, py::arg("seed") = 1);
    m.def(
        "integrate_master_equation",
        [](const FlashModel& model, const ComplexMatrix& rho0, double t, std::size_t n_steps) {
            return integrate_master_equation(model, DensityMatrixState(rho0), t, n_steps).rho();
        },
        py::arg("model"), py::arg("rho0"), py::arg("t"), py::arg("n_steps"));
    m.def("check_master_vs_ensemble", &check_master_vs_ensemble, py::arg("model"), py::arg("psi"),
          py::arg("snapshot_times"), py::arg("n_traj"), py::arg("config"), py::arg("threads") = 1);
    m.def(
        "check_no_signalling",
        [](const FlashModel& m1, const FlashModel& m2a, const FlashModel& m2b, const ComplexVector& psi_a,
           const ComplexVector& psi_b, const QuadratureGrid& bins, std::optional<ComplexMatrix> interaction_b) {
            NoSignallingOptions o;
            o.interaction_b = std::move(interaction_b);
            return check_no_signalling(m1, m2a, m2b, psi_a, psi_b, bins, o);
        },
        py::arg("m1"), py::arg("m2a"), py::arg("m2b"), py::arg("psi_a"), py::arg("psi_b"), py::arg("bins"),
        py::arg("interaction_b") = std::nullopt);
    m.def("check_second_quantization", &check_second_quantization, py::arg("fock_model"), py::arg("n_sector"),
          py::arg("identical_model"), py::arg("threshold") = 1e-12);
    m.def(
        "check_constants",
        [](double strength_si, double width_si) { return check_constants(PhysicalProfile{strength_si, width_si, {}}); },
        py::arg("strength_si") = 1e5, py::arg("width_si") = 1e-7);

    m.def(
        "load_config",
        [](const std::string& path) {
            const ExperimentConfig c = parse_config(path);
            const FlashModel model = build_model(c.model);
            const ComplexVector psi = build_initial_state(c, model);
            return py::make_tuple(model, psi);
        },
        py::arg("path"), "Parse a config file; returns (model, initial_state).");
    m.def(
        "read_flash_log",
        [](const std::string& text) {
            std::istringstream in(text);
            py::list out;
            for (const auto& r : read_flash_log(in)) {
                py::dict d;
                d["trajectory_id"] = r.trajectory_id;
                d["k"] = r.k;
                d["t"] = r.t;
                d["site"] = r.site;
                d["x"] = r.x;
                d["label"] = r.label;
                out.append(d);
            }
            return out;
        },
        py::arg("text"));
}
