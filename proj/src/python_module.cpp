#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <json.hpp>

#include "ksf/cli.hpp"
#include "ksf/diagnostics.hpp"
#include "ksf/evolution.hpp"
#include "ksf/fuchsian.hpp"
#include "ksf/kasner.hpp"
#include "ksf/symmetrizer.hpp"

namespace py = pybind11;
using nlohmann::json;

namespace {

std::pair<bool, std::string> command(const std::string& name, const std::string& cfg, const std::string& out,
                                     const std::string& input) {
    ksf::cli::Invocation inv;
    inv.command = name;
    inv.out_dir = out;
    inv.input = input;
    py::gil_scoped_release release;
    const ksf::cli::CommandResult r = ksf::cli::run_command(inv, json::parse(cfg));
    return {r.pass, r.report.dump()};
}

std::string kasner(int n, const std::vector<double>& q) {
    const ksf::KasnerData k = ksf::kasner_from_q(n, q);
    const ksf::SubcriticalResult s = ksf::check_subcritical(k);
    json j = k;
    j["subcritical"] = s.subcritical;
    j["margin"] = s.margin;
    return j.dump();
}

std::tuple<double, Eigen::ArrayXXd, std::string> initial_data(const std::string& cfg) {
    const ksf::RunConfig rc = ksf::RunConfig::from_json(json::parse(cfg));
    py::gil_scoped_release release;
    const ksf::InitialData d = ksf::make_initial_data(rc);
    return {d.w.t, d.w.W, d.report.to_json().dump()};
}

std::tuple<double, Eigen::ArrayXXd, std::string> evolve(const std::string& cfg) {
    const ksf::RunConfig rc = ksf::RunConfig::from_json(json::parse(cfg));
    py::gil_scoped_release release;
    const ksf::RunResult r = ksf::run(rc);
    json j{{"init", r.init.to_json()}, {"timeseries", r.ts.to_json()}, {"steps", r.steps}};
    if (r.asymptotics) j["asymptotics"] = r.asymptotics->summary();
    if (!r.extraction_error.empty()) j["extraction_error"] = r.extraction_error;
    return {r.final_state.t, r.final_state.W, j.dump()};
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Fuchsian Kasner-scalar field solver";
    m.def("command", &command, py::arg("name"), py::arg("config"), py::arg("out") = "", py::arg("input") = "");
    m.def("command_names", &ksf::cli::command_names);
    m.def("kasner", &kasner, py::arg("n"), py::arg("q"));
    m.def("weyl_background", [](int n, const std::vector<double>& q) {
        return ksf::weyl_background(ksf::kasner_from_q(n, q));
    });
    m.def("mc_pd_check", [](int n, double a, double b) {
        const ksf::McPdResult r = ksf::mc_pd_check(n, a, b);
        return py::dict(py::arg("sufficient") = r.sufficient, py::arg("actually_pd") = r.actually_pd,
                        py::arg("min_eig") = r.min_eig);
    });
    m.def("initial_data", &initial_data, py::arg("config"));
    m.def("evolve", &evolve, py::arg("config"));
    m.def("output_times", &ksf::output_times);
}
