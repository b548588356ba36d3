#pragma once

#include <cmath>
#include <random>

#include "ksf/fuchsian.hpp"
#include "ksf/grid.hpp"
#include "ksf/state.hpp"

namespace testing {

// Background plus a few random low Fourier modes in every component.
inline ksf::RescaledState random_smooth(const ksf::KasnerData& k, const ksf::GaugeParams& gp,
                                        const ksf::TorusGrid& g, double t, double amp, unsigned seed) {
    ksf::RescaledState w = ksf::background_rescaled(k, gp.eps1, gp.eps2, t, g.npts());
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const double kk = M_PI / g.L();
    for (int c = 0; c < w.lay.size(); ++c) {
        for (int mode = 0; mode < 3; ++mode) {
            std::vector<int> wn(g.m());
            for (int a = 0; a < g.m(); ++a) wn[a] = g.active(a) ? static_cast<int>(std::floor(3 * (u(rng) + 1) / 2)) : 0;
            const double A = amp * u(rng), ph = M_PI * u(rng);
            for (long p = 0; p < g.npts(); ++p) {
                double arg = ph;
                for (int a = 0; a < g.m(); ++a) arg += kk * wn[a] * g.coord(p, a);
                w.W(p, c) += A * std::cos(arg);
            }
        }
    }
    ksf::project_symmetries(w);
    return w;
}

inline double max_abs_diff(const Eigen::ArrayXXd& a, const Eigen::ArrayXXd& b) { return (a - b).abs().maxCoeff(); }

}  // namespace testing
