#pragma once

#include <cstdint>

#include <Eigen/Dense>
#include <json.hpp>

#include "ksf/grid.hpp"
#include "ksf/state.hpp"

namespace ksf {

struct SymmetrizerSet;

// Lateral-boundary checks on a band |x| in [rho(t) - band, rho(t) + band].
struct SpacelikeReport {
    double t = 0;
    double rho = 0;
    long band_points = 0;
    double e_sup = 0;          // sup |e| (pointwise Frobenius norm) on the band
    double e_bound = 0;        // rho1 / (6 n^3)
    double pb_sup = 0;         // sup t^eps2 |alpha~| |e~|
    double pb_bound = 0;       // rho1 / (n-1)^(1/4)
    double quad_form_max = 0;  // max over samples of v^T Q v / |v|^2
    long quad_samples = 0;
    bool e_ok = false, pb_ok = false, quad_ok = false;

    bool ok() const { return e_ok && pb_ok && quad_ok; }
    nlohmann::json to_json() const;
};

// Q = t^-eps2 (-rho1 B^0 + (x_L/|x|) e_D^L B^D); quadratic samples are skipped when sym is null.
SpacelikeReport spacelike_monitors(const RescaledState& w, const TorusGrid& g, const ConeDomain& cd,
                                   const GaugeParams& gp, const SymmetrizerSet* sym, long samples = 256,
                                   std::uint64_t seed = 1, double band = -1.0);

// Pointwise Frobenius norm of e_A^W.
Eigen::ArrayXd frame_norm(const RescaledState& w);

// Fraction of spectral energy (mean removed) in modes above 2/3 of the Nyquist wavenumber.
double top_mode_fraction(const Eigen::ArrayXXd& W, const TorusGrid& g);

}  // namespace ksf
