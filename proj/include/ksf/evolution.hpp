#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ksf/diagnostics.hpp"
#include "ksf/grid.hpp"
#include "ksf/kasner.hpp"
#include "ksf/state.hpp"

namespace ksf {

struct GridSpec {
    double L = M_PI;
    std::vector<int> dims{24, 24, 24};
    DerivMethod method = DerivMethod::Spectral;
    int fd_order = 4;

    TorusGrid make(int m) const;
};

struct PerturbationSpec {
    double amplitude = 0.0;
    int max_wavenumber = 2;
    int modes = 2;  // random cosine modes per perturbed component
    std::uint64_t seed = 1;
    double tolerance = 1e-8;
    int max_iterations = 40;
    // Second data set: W + (1 - chi) dg, chi = 1 on the ball of this radius (disabled when <= 0).
    double outside_radius = 0.0;
    double outside_amplitude = 0.0;
    std::uint64_t outside_seed = 2;
};

struct RunConfig {
    KasnerData kd;
    GaugeParams gp;
    GridSpec grid;
    std::optional<ConeDomain> cone;
    double t0 = 1.0;
    double t_end = 1e-3;
    double c_cfl = 0.5;
    double c_log = 0.05;
    PerturbationSpec pert;
    int outputs_per_decade = 10;
    bool checkpoints = false;
    int sobolev_k = 2;
    double region_radius = 0.0;  // diagnostic ball when no cone is set; <= 0 means the whole torus
    int probes = 10;
    std::uint64_t probe_seed = 11;
    bool weyl = true;
    long monitor_samples = 256;
    std::string out_dir;

    void validate() const;
    nlohmann::json to_json() const;
    static RunConfig from_json(const nlohmann::json& j);
    // FNV-1a of the canonical JSON dump.
    std::string hash() const;
};

struct InitialDataReport {
    std::array<double, 6> residuals{};  // volume RMS
    std::array<double, 6> residuals_max{};
    int iterations = 0;
    bool converged = false;
    double perturbation_norm = 0;  // H^k distance from the background

    nlohmann::json to_json() const;
};

struct InitialData {
    RescaledState w;
    InitialDataReport report;
};

// Sets H to the root of the pointwise Hamiltonian constraint (quadratic in H) that vanishes with the residual.
void solve_hamiltonian(RescaledState& w, const TorusGrid& g, const GaugeParams& gp, const KasnerData& kd);

// Background at t0 plus a smooth perturbation solved onto the constraint surface.
InitialData make_initial_data(const RunConfig& cfg);

// One backward RK4 step of size dt > 0 with rhs_modified; re-projects symmetries and returns the
// projection distance.
double step(RescaledState& w, double dt, const TorusGrid& g, const GaugeParams& gp, const KasnerData& kd);

// dt = min(c_cfl t^eps2 dx / |e|_inf, c_log t).
double step_size(const RescaledState& w, const TorusGrid& g, const RunConfig& cfg);

struct EnergyMonitor {
    double initial = 0;
    double max_ratio = 0;  // max over t of (|W|^2 + int s^-1 |PW|^2 ds) / |W0|^2
};

struct RunResult {
    InitialDataReport init;
    TimeSeries ts;
    RescaledState final_state;
    std::vector<RescaledState> keyframes;  // at t0 and every decade below, plus t_end
    std::optional<AsymptoticData> asymptotics;
    std::string extraction_error;
    EnergyMonitor energy;
    long steps = 0;
};

using RecordHook = std::function<void(const RescaledState&, const DiagnosticsRecord&)>;

RunResult run(const RunConfig& cfg, const RecordHook& hook = {});
// Same as run but starting from a given state at cfg.t0.
RunResult run_from(const RunConfig& cfg, const RescaledState& w0, const InitialDataReport& init,
                   const RecordHook& hook = {});

struct LocalizationReport {
    double rho1 = 0;
    std::vector<double> t, rho, discrepancy;  // max |W_a - W_b| on the ball of radius rho(t)
    double max_discrepancy = 0;
    bool monitors_ok = true;
    std::vector<SpacelikeReport> monitors;  // first run

    nlohmann::json to_json() const;
};

// Two runs from data that agree on the ball of radius cone.rho0 and differ by outside_amplitude outside it.
// Both share rho1 (computed from the first data set when cone.rho1 <= 0).
LocalizationReport localization_test(const RunConfig& cfg, double outside_amplitude, std::uint64_t outside_seed);

// Log-spaced output times from t0 down to t_end inclusive.
std::vector<double> output_times(double t0, double t_end, int per_decade);

}  // namespace ksf
