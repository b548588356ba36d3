#pragma once

#include <string>

#include <Eigen/Dense>
#include <json.hpp>

#include "ksf/kasner.hpp"
#include "ksf/layout.hpp"

namespace ksf {

// Grid fields in composite order: W(p, k) is component k at grid point p.
struct FieldState {
    double t = 1.0;
    Layout lay;
    Eigen::ArrayXXd W;

    FieldState() = default;
    FieldState(double t_, int n, long npts) : t(t_), lay(n), W(Eigen::ArrayXXd::Zero(npts, lay.size())) {}

    long npts() const { return W.rows(); }
    auto col(int k) { return W.col(k); }
    auto col(int k) const { return W.col(k); }
};

// Tetrad variables (e~, alpha~, C~, U~, H~, Sigma~).
struct FrameState : FieldState {
    using FieldState::FieldState;
};

// Fuchsian variables (e, alpha, C, U, H, Sigma).
struct RescaledState : FieldState {
    using FieldState::FieldState;
};

struct GaugeParams {
    double eps1 = 0.1;
    double eps2 = 0.3;
    double nu = 0.35;
    int k_order = 1;
    double mu = 0.0;
    double gamma = 2.0;
    double a = 3.0, b = 2.0, c = 3.0, d = 1.5;
    double p = 0.5, q = 0.0, s = 0.5, u = -1.0 / 6.0;
    double h = 1.0, l = 1.0 / 3.0;

    double kappa0(const KasnerData& k) const { return 1.0 + 0.5 * k.r0; }
    double kappa1(const KasnerData& k) const { return eps1 + 0.5 * k.r0; }
    double kappa2(const KasnerData& k) const { return eps2 + 0.5 * k.r0; }

    // Lists every violated rescaling/weight condition; empty when admissible.
    std::vector<std::string> violations(const KasnerData& k) const;
    void validate(const KasnerData& k) const;
};

// Default symmetrizer parameters and the default gauge choice.
GaugeParams default_gauge(const KasnerData& k);

void to_json(nlohmann::json& j, const GaugeParams& g);
// Missing keys keep the values already in g.
void update_from_json(const nlohmann::json& j, GaugeParams& g);

// Project Sigma to symmetric trace-free and C to outer antisymmetric; returns max change.
double project_symmetries(FieldState& s);

}  // namespace ksf
