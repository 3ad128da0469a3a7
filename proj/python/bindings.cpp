// Python bindings: config-driven runs and the metric arithmetic.

#include "amod/app.hpp"
#include "amod/error.hpp"
#include "amod/geo.hpp"
#include "amod/metrics.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace amod;

PYBIND11_MODULE(_amod, m) {
    m.doc() = "Autonomous mobility-on-demand dispatch simulator";

    py::register_exception<LoadError>(m, "LoadError", PyExc_ValueError);
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<ComparisonMismatch>(m, "ComparisonMismatch", PyExc_ValueError);

    py::class_<app::RunConfig>(m, "RunConfig")
        .def_property_readonly("strategy", [](const app::RunConfig& c) { return std::string(to_string(c.dispatch.strategy)); })
        .def_property_readonly("eat_enabled", [](const app::RunConfig& c) { return c.dispatch.eat_enabled; })
        .def_property_readonly("system", [](const app::RunConfig& c) {
            return app::system_name(c.dispatch.strategy, c.dispatch.eat_enabled);
        })
        .def("hash", &app::config_hash)
        .def("to_json", [](const app::RunConfig& c) { return app::to_json(c).dump(); })
        .def("with_seed", [](app::RunConfig c, std::uint64_t seed) {
            app::apply_seed_override(c, seed);
            return c;
        });

    m.def("load_config", &app::load_run_config, py::arg("path"));

    m.def(
        "validate",
        [](const app::RunConfig& cfg) {
            const app::ValidationReport rep = app::validate(cfg);
            return py::make_tuple(rep.errors, rep.warnings);
        },
        py::arg("config"), "Returns (errors, warnings).");

    m.def(
        "run",
        [](const app::RunConfig& cfg, const std::filesystem::path& out_dir) {
            const app::RunArtifacts art = app::execute_run(cfg, out_dir);
            const RunStats& s = art.result.stats;
            py::dict d;
            d["requests"] = s.requests;
            d["picked_up"] = s.picked_up;
            d["rejected"] = s.rejected;
            d["abandoned"] = s.abandoned;
            d["reassignments"] = s.reassignments;
            d["adjacency_links_added"] = s.adjacency_links_added;
            d["t_apw_s"] = t_apw(art.result.records);
            d["r_ts"] = r_ts(art.result.records);
            return d;
        },
        py::arg("config"), py::arg("out_dir"));

    m.def("compare", &app::compare_runs, py::arg("dir_a"), py::arg("dir_b"));

    m.def(
        "haversine_m",
        [](double lat1, double lon1, double lat2, double lon2) {
            return haversine_m(GeoPoint{lat1, lon1}, GeoPoint{lat2, lon2});
        },
        py::arg("lat1"), py::arg("lon1"), py::arg("lat2"), py::arg("lon2"));

    m.def(
        "time_improvement_pct",
        [](double with_s, double without_s) { return time_improvement_pct(with_s, without_s); },
        py::arg("t_with"), py::arg("t_without"));
    m.def(
        "rate_improvement_pct",
        [](double with_r, double without_r) { return rate_improvement_pct(with_r, without_r); },
        py::arg("r_with"), py::arg("r_without"));
}
