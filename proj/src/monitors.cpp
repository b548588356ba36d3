#include "ksf/monitors.hpp"

#include <cmath>
#include <random>

#include "ksf/symmetrizer.hpp"

namespace ksf {

nlohmann::json SpacelikeReport::to_json() const {
    return {{"t", t},           {"rho", rho},           {"band_points", band_points}, {"e_sup", e_sup},
            {"e_bound", e_bound}, {"pb_sup", pb_sup},   {"pb_bound", pb_bound},       {"quad_form_max", quad_form_max},
            {"quad_samples", quad_samples}, {"e_ok", e_ok}, {"pb_ok", pb_ok},        {"quad_ok", quad_ok}};
}

Eigen::ArrayXd frame_norm(const RescaledState& w) {
    const int m = w.lay.m;
    return w.W.leftCols(m * m).square().rowwise().sum().sqrt();
}

SpacelikeReport spacelike_monitors(const RescaledState& w, const TorusGrid& g, const ConeDomain& cd,
                                   const GaugeParams& gp, const SymmetrizerSet* sym, long samples,
                                   std::uint64_t seed, double band) {
    const Layout& L = w.lay;
    const int n = L.n, m = L.m;
    SpacelikeReport r;
    r.t = w.t;
    r.rho = cd.rho_of_t(w.t);
    if (band <= 0.0) band = 2.0 * g.min_dx();
    r.e_bound = cd.rho1 / (6.0 * n * n * n);
    r.pb_bound = cd.rho1 / std::pow(m, 0.25);

    const Eigen::ArrayXd en = frame_norm(w);
    const double te = std::pow(w.t, gp.eps2);
    std::vector<long> pts;
    for (long p = 0; p < g.npts(); ++p) {
        if (std::abs(g.radius(p) - r.rho) > band) continue;
        pts.push_back(p);
        r.e_sup = std::max(r.e_sup, en[p]);
        const double at = std::pow(w.t, -gp.eps1) * w.W(p, L.alpha());
        const double et = en[p] / (te * at);
        r.pb_sup = std::max(r.pb_sup, te * at * et);
    }
    r.band_points = static_cast<long>(pts.size());
    r.e_ok = r.e_sup <= r.e_bound;
    r.pb_ok = r.pb_sup < r.pb_bound;
    r.quad_ok = true;
    r.quad_form_max = -std::numeric_limits<double>::infinity();
    if (sym && !pts.empty() && samples > 0) {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> nd;
        std::uniform_int_distribution<std::size_t> pick(0, pts.size() - 1);
        const int N = L.size();
        const double ti = std::pow(w.t, -gp.eps2);
        for (long s = 0; s < samples; ++s) {
            const long p = pts[pick(rng)];
            const Eigen::VectorXd x = g.point(p);
            const double rx = x.norm();
            Eigen::VectorXd v(N);
            for (int i = 0; i < N; ++i) v[i] = nd(rng);
            double q = -cd.rho1 * v.dot(sym->B0 * v);
            for (int D = 0; D < m; ++D) {
                double c = 0.0;
                for (int W = 0; W < m; ++W) c += x[W] / rx * w.W(p, L.e(D, W));
                if (c != 0.0) q += c * v.dot(sym->BD[D] * v);
            }
            q *= ti / v.squaredNorm();
            r.quad_form_max = std::max(r.quad_form_max, q);
            ++r.quad_samples;
        }
        r.quad_ok = r.quad_form_max <= 0.0;
    }
    if (r.quad_samples == 0) r.quad_form_max = 0.0;
    return r;
}

double top_mode_fraction(const Eigen::ArrayXXd& W, const TorusGrid& g) {
    if (g.n_active() == 0) return 0.0;
    std::vector<double> kmax(g.m(), 0.0);
    for (int a = 0; a < g.m(); ++a) kmax[a] = M_PI / g.dx(a);
    std::vector<bool> top(g.n_modes(), false);
    for (long k = 0; k < g.n_modes(); ++k) {
        const Eigen::VectorXd kv = g.wavevector(k);
        for (int a = 0; a < g.m(); ++a)
            if (g.active(a) && std::abs(kv[a]) > (2.0 / 3.0) * kmax[a]) top[k] = true;
    }
    double hi = 0.0, all = 0.0;
    for (int c = 0; c < W.cols(); ++c) {
        const Eigen::ArrayXd col = W.col(c);
        const auto fh = g.forward(col.data());
        for (long k = 1; k < g.n_modes(); ++k) {
            const double e = std::norm(fh[k]);
            all += e;
            if (top[k]) hi += e;
        }
    }
    return all > 0.0 ? hi / all : 0.0;
}

}  // namespace ksf
