#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "ksf/grid.hpp"
#include "ksf/kasner.hpp"
#include "ksf/monitors.hpp"
#include "ksf/state.hpp"

namespace ksf {

struct SymmetrizerSet;

struct CurvatureInvariants {
    Eigen::ArrayXd scalar;    // R-bar
    Eigen::ArrayXd ricci_sq;  // R-bar_ab R-bar^ab
};

CurvatureInvariants curvature_invariants(const RescaledState& w, const GaugeParams& gp, const KasnerData& kd);

// Trace of the physical second fundamental form.
Eigen::ArrayXd mean_curvature(const RescaledState& w, const GaugeParams& gp, const KasnerData& kd);

// 2 t alpha~ K~_AB = r_AB + 2 H delta_AB + 2 Sigma_AB, as npts x m^2.
Eigen::ArrayXXd conf_second_fundamental(const RescaledState& w, const KasnerData& kd);

struct WeylField {
    Eigen::ArrayXXd scaled;  // t^2 alpha~^2 C~_A0B0, npts x m^2
    Eigen::ArrayXd invariant;
};

// Riemann route through the tetrad curvature.
WeylField weyl_component(const RescaledState& w, const TorusGrid& g, const GaugeParams& gp, const KasnerData& kd);

// Explicit (non-schematic) terms of t^2 alpha~^2 C~_A0B0 in H, Sigma and the exponents.
Eigen::ArrayXXd weyl_explicit(const RescaledState& w, const KasnerData& kd);

// Background limit C_AB of the scaled electric Weyl block.
Eigen::MatrixXd weyl_background(const KasnerData& kd);

// Physical C_A0B0 C^A0B0 from the scaled block.
Eigen::ArrayXd weyl_invariant(const Eigen::ArrayXXd& scaled, const Eigen::ArrayXd& alpha, double t,
                              const GaugeParams& gp, int n);

// (k_A^A)^2 - k_A^B k_B^A + 4 k_A^A per point for k given as npts x m^2.
Eigen::ArrayXd kasner_residual(const Eigen::ArrayXXd& kf, int m);

struct PowerLawFit {
    double exponent = 0;
    double log_prefactor = 0;
    double r2 = 0;
    std::size_t samples = 0;
};

// Least squares of ln v against ln t; needs >= 8 samples spanning >= 1 decade.
PowerLawFit fit_power_law(const std::vector<double>& t, const std::vector<double>& v);

struct ProbeSample {
    double alpha = 0, H = 0, scalar = 0, ricci_sq = 0, mean_curv = 0, weyl = 0;
};

struct DiagnosticsRecord {
    double t = 0;
    std::array<double, 6> constraints{};
    double norm_W = 0, norm_PW = 0;
    double background_deviation = 0;
    double scalar_min = 0, scalar_max = 0;
    double ricci_min = 0, ricci_max = 0;
    double mean_curv_min = 0, mean_curv_max = 0;
    double weyl_min = 0, weyl_max = 0;
    double kasner_residual_max = 0;
    double projection = 0;
    double top_mode_fraction = 0;
    double region_radius = -1;  // negative: whole torus
    std::optional<SpacelikeReport> monitors;
    std::vector<ProbeSample> probes;
};

struct TimeSeries {
    std::vector<long> probe_index;
    std::vector<DiagnosticsRecord> records;

    // Columns: t, cA..cH, norm_W, norm_PW, bg_dev, R_min, R_max, RR_min, RR_max, K_min, K_max,
    // weyl_min, weyl_max, kasner_res, projection, top_mode, rho, e_sup, pb_sup, quad_max, then per probe
    // alpha_i, H_i, R_i, RR_i, K_i, weyl_i.
    void write_csv(const std::string& path) const;
    nlohmann::json to_json() const;
    static TimeSeries from_json(const nlohmann::json& j);
};

struct RecordOptions {
    int sobolev_k = 2;
    bool weyl = true;
    std::optional<double> ball;           // fixed diagnostic ball radius
    std::optional<ConeDomain> cone;       // if set, the ball follows rho(t) and monitors run
    const SymmetrizerSet* sym = nullptr;  // for the quadratic-form monitor
    long monitor_samples = 256;
    std::vector<long> probes;
};

DiagnosticsRecord record_diagnostics(const RescaledState& w, const TorusGrid& g, const GaugeParams& gp,
                                     const KasnerData& kd, const RecordOptions& opt);

// Grid points inside the ball of the given radius, spread deterministically by seed.
std::vector<long> choose_probes(const TorusGrid& g, double radius, int count, std::uint64_t seed);

struct AsymptoticData {
    Eigen::ArrayXd Hhat;
    Eigen::ArrayXXd Sigmahat;  // npts x m^2
    Eigen::ArrayXd alphahat;
    Eigen::ArrayXXd kf;        // npts x m^2
    Eigen::ArrayXd kasner_residual;
    double zeta = 0, zeta_r2 = 0;
    double richardson_rate = 0;
    double max_residual = 0;
    double max_branch_gap = 0;  // |k_A^A + 2 - sqrt(4 + k_AB k^AB)|
    double min_trace_margin = 0;
    std::vector<double> alphahat_probe, alpha_fit_rms;
    std::vector<double> Hhat_probe;

    nlohmann::json summary() const;
};

// Late-time limits from keyframes (decreasing t, one per decade) and the final decade of ts.
AsymptoticData extract_asymptotics(const TimeSeries& ts, const std::vector<RescaledState>& keyframes,
                                   const TorusGrid& g, const GaugeParams& gp, const KasnerData& kd,
                                   const Region& region);

// Pointwise fitted exponents at the probes over the final decade, and their predictions.
struct BlowupCheck {
    std::vector<double> scalar_fit, scalar_pred;
    std::vector<double> ricci_fit, ricci_pred;
    std::vector<double> mean_fit, mean_pred;
    std::vector<double> weyl_fit, weyl_pred;
    double worst_scalar = 0, worst_ricci = 0, worst_mean = 0, worst_weyl = 0;  // relative errors

    nlohmann::json to_json() const;
};

BlowupCheck blowup_exponents(const TimeSeries& ts, const AsymptoticData& ad, const KasnerData& kd);

}  // namespace ksf
