#include "ksf/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <stdexcept>

#include "ksf/constraints.hpp"
#include "ksf/frame.hpp"
#include "ksf/fuchsian.hpp"

namespace ksf {

namespace {

void require_alpha(const RescaledState& w) {
    if ((w.W.col(w.lay.alpha()) <= 0.0).any()) throw std::domain_error("diagnostics require alpha > 0");
    if (!(w.t > 0.0)) throw std::domain_error("diagnostics require t > 0");
}

double masked_min(const Eigen::ArrayXd& f, const Eigen::ArrayXd& mask) {
    double v = std::numeric_limits<double>::infinity();
    for (long p = 0; p < f.size(); ++p)
        if (mask[p] > 0.0) v = std::min(v, f[p]);
    return v;
}

double masked_max(const Eigen::ArrayXd& f, const Eigen::ArrayXd& mask) {
    double v = -std::numeric_limits<double>::infinity();
    for (long p = 0; p < f.size(); ++p)
        if (mask[p] > 0.0) v = std::max(v, f[p]);
    return v;
}

Eigen::ArrayXXd kf_of(const Eigen::ArrayXd& H, const Eigen::ArrayXXd& S, const KasnerData& kd) {
    const int m = kd.m();
    Eigen::ArrayXXd kf = 2.0 * S;
    for (int a = 0; a < m; ++a) kf.col(a * m + a) += kd.r[a] + 2.0 * H;
    return kf;
}

Eigen::ArrayXXd sigma_block(const RescaledState& w) { return w.W.middleCols(w.lay.S0(), w.lay.m * w.lay.m); }

}  // namespace

CurvatureInvariants curvature_invariants(const RescaledState& w, const GaugeParams& gp, const KasnerData& kd) {
    require_alpha(w);
    const int n = kd.n;
    const double t = w.t;
    const Eigen::ArrayXd a2 = w.W.col(w.lay.alpha()).square();
    CurvatureInvariants ci;
    ci.scalar = -(n - 1.0) / ((n - 2.0) * a2 * std::pow(t, (2.0 * n - 2.0) / (n - 2.0) - 2.0 * gp.eps1));
    ci.ricci_sq = (n - 1.0) * (n - 1.0) /
                  ((n - 2.0) * (n - 2.0) * a2.square() * std::pow(t, (4.0 * n - 4.0) / (n - 2.0) - 4.0 * gp.eps1));
    return ci;
}

Eigen::ArrayXd mean_curvature(const RescaledState& w, const GaugeParams& gp, const KasnerData& kd) {
    require_alpha(w);
    const int n = kd.n;
    const Eigen::ArrayXd al = w.W.col(w.lay.alpha());
    const double tp = std::pow(w.t, (n - 1.0) / (n - 2.0) - gp.eps1);
    return ((n - 1.0) / (n - 2.0) + 0.5 * kd.r0 + (n - 1.0) * w.W.col(w.lay.H())) / (al * tp);
}

Eigen::ArrayXXd conf_second_fundamental(const RescaledState& w, const KasnerData& kd) {
    return kf_of(w.W.col(w.lay.H()), sigma_block(w), kd);
}

Eigen::ArrayXd weyl_invariant(const Eigen::ArrayXXd& scaled, const Eigen::ArrayXd& alpha, double t,
                              const GaugeParams& gp, int n) {
    const double tp = std::pow(t, 4.0 + 4.0 / (n - 2.0) - 4.0 * gp.eps1);
    return scaled.square().rowwise().sum() / (alpha.pow(4) * tp);
}

WeylField weyl_component(const RescaledState& w, const TorusGrid& g, const GaugeParams& gp, const KasnerData& kd) {
    require_alpha(w);
    const FrameState s = unrescale(w, gp, kd);
    const Eigen::ArrayXXd E = weyl_electric(curvature(s, g));
    const Eigen::ArrayXd at = s.W.col(s.lay.alpha());
    WeylField out;
    out.scaled = E.colwise() * (w.t * w.t * at.square());
    out.invariant = weyl_invariant(out.scaled, w.W.col(w.lay.alpha()), w.t, gp, kd.n);
    return out;
}

Eigen::ArrayXXd weyl_explicit(const RescaledState& w, const KasnerData& kd) {
    const Layout& L = w.lay;
    const int n = L.n, m = L.m;
    const double r0 = kd.r0;
    Eigen::ArrayXXd out(w.npts(), m * m);
    for (long p = 0; p < w.npts(); ++p) {
        const double H = w.W(p, L.H());
        auto S = [&](int a, int b) { return w.W(p, L.S(a, b)); };
        double SS = 0.0, rS = 0.0;
        for (int a = 0; a < m; ++a) {
            rS += kd.r[a] * S(a, a);
            for (int b = 0; b < m; ++b) SS += S(a, b) * S(a, b);
        }
        for (int A = 0; A < m; ++A)
            for (int B = 0; B < m; ++B) {
                const double d = A == B, rAB = d * kd.r[A];
                double v = (n - 3.0) / (2.0 * (n - 2.0)) * rAB + r0 / (2.0 * (n - 2.0)) * d + 0.25 * r0 * rAB -
                           0.25 * rAB * kd.r[A];
                v += (n - 3.0) / (n - 2.0) * S(A, B) + (n - 3.0) * H * S(A, B);
                v += ((n - 3.0) / 2.0 * rAB - (n - 3.0) * r0 / (2.0 * m) * d) * H;
                v += (n - 3.0) * r0 / (2.0 * m) * S(A, B) + SS / m * d + rS / m * d;
                for (int C = 0; C < m; ++C) v -= S(A, C) * S(B, C);
                v -= 0.5 * (S(A, B) * kd.r[B] + S(B, A) * kd.r[A]);
                v += r0 / m * S(A, B);
                out(p, A * m + B) = v;
            }
    }
    return out;
}

Eigen::MatrixXd weyl_background(const KasnerData& kd) {
    RescaledState w(1.0, kd.n, 1);
    const Eigen::ArrayXXd c = weyl_explicit(w, kd);
    const int m = kd.m();
    Eigen::MatrixXd out(m, m);
    for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) out(a, b) = c(0, a * m + b);
    return out;
}

Eigen::ArrayXd kasner_residual(const Eigen::ArrayXXd& kf, int m) {
    Eigen::ArrayXd tr = Eigen::ArrayXd::Zero(kf.rows());
    for (int a = 0; a < m; ++a) tr += kf.col(a * m + a);
    Eigen::ArrayXd sq = Eigen::ArrayXd::Zero(kf.rows());
    for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) sq += kf.col(a * m + b) * kf.col(b * m + a);
    return tr.square() - sq + 4.0 * tr;
}

PowerLawFit fit_power_law(const std::vector<double>& t, const std::vector<double>& v) {
    if (t.size() != v.size()) throw std::invalid_argument("power-law fit needs equal-length series");
    if (t.size() < 8) throw std::invalid_argument("power-law fit needs at least 8 samples");
    double tmin = t[0], tmax = t[0];
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (!(t[i] > 0.0) || !(v[i] > 0.0)) throw std::invalid_argument("power-law fit needs positive t and values");
        tmin = std::min(tmin, t[i]);
        tmax = std::max(tmax, t[i]);
    }
    if (tmax / tmin < 10.0 * (1.0 - 1e-9)) throw std::invalid_argument("power-law fit needs at least one decade");
    const std::size_t N = t.size();
    Eigen::MatrixXd X(N, 2);
    Eigen::VectorXd y(N);
    for (std::size_t i = 0; i < N; ++i) {
        X(i, 0) = 1.0;
        X(i, 1) = std::log(t[i]);
        y[i] = std::log(v[i]);
    }
    const Eigen::Vector2d c = X.colPivHouseholderQr().solve(y);
    const Eigen::VectorXd res = y - X * c;
    const double ss_tot = (y.array() - y.mean()).square().sum();
    PowerLawFit f;
    f.log_prefactor = c[0];
    f.exponent = c[1];
    f.r2 = ss_tot > 0.0 ? 1.0 - res.squaredNorm() / ss_tot : 1.0;
    f.samples = N;
    return f;
}

std::vector<long> choose_probes(const TorusGrid& g, double radius, int count, std::uint64_t seed) {
    std::vector<long> inside;
    for (long p = 0; p < g.npts(); ++p)
        if (g.radius(p) <= radius) inside.push_back(p);
    if (inside.empty()) throw std::invalid_argument("probe ball contains no grid points");
    std::mt19937_64 rng(seed);
    std::shuffle(inside.begin(), inside.end(), rng);
    inside.resize(std::min<std::size_t>(inside.size(), static_cast<std::size_t>(count)));
    std::sort(inside.begin(), inside.end());
    return inside;
}

DiagnosticsRecord record_diagnostics(const RescaledState& w, const TorusGrid& g, const GaugeParams& gp,
                                     const KasnerData& kd, const RecordOptions& opt) {
    require_alpha(w);
    const Layout& L = w.lay;
    DiagnosticsRecord r;
    r.t = w.t;
    Region region = Region::torus();
    if (opt.cone) {
        r.region_radius = opt.cone->rho_of_t(w.t);
        region = Region::ball(r.region_radius);
    } else if (opt.ball) {
        r.region_radius = *opt.ball;
        region = Region::ball(*opt.ball);
    }
    const Eigen::ArrayXd mask = region_mask(g, region);

    r.constraints = constraint_norms(rescaled_constraints(w, g, gp, kd), g, region);
    r.norm_W = sobolev_norm(w.W, g, opt.sobolev_k, region);
    r.norm_PW = sobolev_norm(w.W.leftCols(L.H()), g, std::max(0, opt.sobolev_k - 1), region);
    const RescaledState bg = background_rescaled(kd, gp.eps1, gp.eps2, w.t, 1);
    r.background_deviation = (w.W.rowwise() - bg.W.row(0)).abs().maxCoeff() / bg.W.abs().maxCoeff();

    const CurvatureInvariants ci = curvature_invariants(w, gp, kd);
    const Eigen::ArrayXd K = mean_curvature(w, gp, kd);
    r.scalar_min = masked_min(ci.scalar, mask);
    r.scalar_max = masked_max(ci.scalar, mask);
    r.ricci_min = masked_min(ci.ricci_sq, mask);
    r.ricci_max = masked_max(ci.ricci_sq, mask);
    r.mean_curv_min = masked_min(K, mask);
    r.mean_curv_max = masked_max(K, mask);
    Eigen::ArrayXd weyl = Eigen::ArrayXd::Zero(w.npts());
    if (opt.weyl) {
        weyl = weyl_component(w, g, gp, kd).invariant;
        r.weyl_min = masked_min(weyl, mask);
        r.weyl_max = masked_max(weyl, mask);
    }
    r.kasner_residual_max = masked_max(kasner_residual(conf_second_fundamental(w, kd), L.m).abs(), mask);
    r.top_mode_fraction = top_mode_fraction(w.W, g);
    if (opt.cone) r.monitors = spacelike_monitors(w, g, *opt.cone, gp, opt.sym, opt.monitor_samples);
    for (long p : opt.probes) {
        ProbeSample s;
        s.alpha = w.W(p, L.alpha());
        s.H = w.W(p, L.H());
        s.scalar = ci.scalar[p];
        s.ricci_sq = ci.ricci_sq[p];
        s.mean_curv = K[p];
        s.weyl = weyl[p];
        r.probes.push_back(s);
    }
    return r;
}

void TimeSeries::write_csv(const std::string& path) const {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path);
    f.precision(17);
    f << "t,cA,cB,cC,cD,cM,cH,norm_W,norm_PW,bg_dev,R_min,R_max,RR_min,RR_max,K_min,K_max,weyl_min,weyl_max,"
         "kasner_res,projection,top_mode,rho,e_sup,pb_sup,quad_max";
    for (std::size_t i = 0; i < probe_index.size(); ++i)
        f << ",alpha_" << i << ",H_" << i << ",R_" << i << ",RR_" << i << ",K_" << i << ",weyl_" << i;
    f << "\n";
    for (const auto& r : records) {
        f << r.t;
        for (double c : r.constraints) f << "," << c;
        f << "," << r.norm_W << "," << r.norm_PW << "," << r.background_deviation << "," << r.scalar_min << ","
          << r.scalar_max << "," << r.ricci_min << "," << r.ricci_max << "," << r.mean_curv_min << ","
          << r.mean_curv_max << "," << r.weyl_min << "," << r.weyl_max << "," << r.kasner_residual_max << ","
          << r.projection << "," << r.top_mode_fraction << "," << r.region_radius;
        if (r.monitors)
            f << "," << r.monitors->e_sup << "," << r.monitors->pb_sup << "," << r.monitors->quad_form_max;
        else
            f << ",,,";
        for (const auto& s : r.probes)
            f << "," << s.alpha << "," << s.H << "," << s.scalar << "," << s.ricci_sq << "," << s.mean_curv << ","
              << s.weyl;
        f << "\n";
    }
}

nlohmann::json TimeSeries::to_json() const {
    nlohmann::json j;
    j["probe_index"] = probe_index;
    j["records"] = nlohmann::json::array();
    for (const auto& r : records) {
        nlohmann::json x = {{"t", r.t},
                            {"constraints", r.constraints},
                            {"norm_W", r.norm_W},
                            {"norm_PW", r.norm_PW},
                            {"background_deviation", r.background_deviation},
                            {"scalar", {r.scalar_min, r.scalar_max}},
                            {"ricci_sq", {r.ricci_min, r.ricci_max}},
                            {"mean_curvature", {r.mean_curv_min, r.mean_curv_max}},
                            {"weyl", {r.weyl_min, r.weyl_max}},
                            {"kasner_residual_max", r.kasner_residual_max},
                            {"projection", r.projection},
                            {"top_mode_fraction", r.top_mode_fraction},
                            {"region_radius", r.region_radius}};
        if (r.monitors) x["monitors"] = r.monitors->to_json();
        x["probes"] = nlohmann::json::array();
        for (const auto& p : r.probes)
            x["probes"].push_back({p.alpha, p.H, p.scalar, p.ricci_sq, p.mean_curv, p.weyl});
        j["records"].push_back(std::move(x));
    }
    return j;
}

TimeSeries TimeSeries::from_json(const nlohmann::json& j) {
    TimeSeries ts;
    ts.probe_index = j.at("probe_index").get<std::vector<long>>();
    for (const auto& x : j.at("records")) {
        DiagnosticsRecord r;
        r.t = x.at("t").get<double>();
        r.constraints = x.at("constraints").get<std::array<double, 6>>();
        r.norm_W = x.at("norm_W").get<double>();
        r.norm_PW = x.at("norm_PW").get<double>();
        r.background_deviation = x.at("background_deviation").get<double>();
        auto pair = [&](const char* key, double& lo, double& hi) {
            lo = x.at(key).at(0).get<double>();
            hi = x.at(key).at(1).get<double>();
        };
        pair("scalar", r.scalar_min, r.scalar_max);
        pair("ricci_sq", r.ricci_min, r.ricci_max);
        pair("mean_curvature", r.mean_curv_min, r.mean_curv_max);
        pair("weyl", r.weyl_min, r.weyl_max);
        r.kasner_residual_max = x.at("kasner_residual_max").get<double>();
        r.projection = x.at("projection").get<double>();
        r.top_mode_fraction = x.at("top_mode_fraction").get<double>();
        r.region_radius = x.at("region_radius").get<double>();
        if (x.contains("monitors")) {
            const auto& m = x.at("monitors");
            SpacelikeReport s;
            s.t = m.at("t");
            s.rho = m.at("rho");
            s.band_points = m.at("band_points");
            s.e_sup = m.at("e_sup");
            s.e_bound = m.at("e_bound");
            s.pb_sup = m.at("pb_sup");
            s.pb_bound = m.at("pb_bound");
            s.quad_form_max = m.at("quad_form_max");
            s.quad_samples = m.at("quad_samples");
            s.e_ok = m.at("e_ok");
            s.pb_ok = m.at("pb_ok");
            s.quad_ok = m.at("quad_ok");
            r.monitors = s;
        }
        for (const auto& p : x.value("probes", nlohmann::json::array()))
            r.probes.push_back({p.at(0), p.at(1), p.at(2), p.at(3), p.at(4), p.at(5)});
        ts.records.push_back(std::move(r));
    }
    return ts;
}

nlohmann::json AsymptoticData::summary() const {
    return {{"zeta", zeta},
            {"zeta_r2", zeta_r2},
            {"richardson_rate", richardson_rate},
            {"max_kasner_residual", max_residual},
            {"max_branch_gap", max_branch_gap},
            {"min_trace_margin", min_trace_margin},
            {"Hhat_range", {Hhat.minCoeff(), Hhat.maxCoeff()}},
            {"alphahat_range", {alphahat.minCoeff(), alphahat.maxCoeff()}},
            {"Hhat_probe", Hhat_probe},
            {"alphahat_probe", alphahat_probe},
            {"alpha_fit_rms", alpha_fit_rms}};
}

AsymptoticData extract_asymptotics(const TimeSeries& ts, const std::vector<RescaledState>& keyframes,
                                   const TorusGrid& g, const GaugeParams& gp, const KasnerData& kd,
                                   const Region& region) {
    if (keyframes.empty()) throw std::invalid_argument("extraction needs at least one keyframe");
    if (ts.records.empty()) throw std::invalid_argument("extraction needs a time series");
    const RescaledState& last = keyframes.back();
    const Layout& L = last.lay;
    const int m = L.m;
    const double te = last.t;

    std::vector<double> tt, vv;
    for (const auto& r : ts.records)
        if (r.t <= 10.0 * te * (1.0 + 1e-9)) {
            tt.push_back(r.t);
            vv.push_back(r.norm_PW);
        }
    const PowerLawFit zf = fit_power_law(tt, vv);
    if (!(zf.exponent > 0.0))
        throw std::runtime_error("P-block norms are not decaying (fitted exponent " + std::to_string(zf.exponent) +
                                 "); extraction refused");
    AsymptoticData ad;
    ad.zeta = zf.exponent;
    ad.zeta_r2 = zf.r2;

    const Eigen::ArrayXd H0 = last.W.col(L.H());
    const Eigen::ArrayXXd S0 = sigma_block(last);
    ad.Hhat = H0;
    ad.Sigmahat = S0;
    // Two-point Richardson in t^rate with the rate read off three successive decades.
    if (keyframes.size() >= 2) {
        const RescaledState& prev = keyframes[keyframes.size() - 2];
        const double ratio = prev.t / te;
        double rate = ad.zeta;
        if (keyframes.size() >= 3) {
            const RescaledState& pp = keyframes[keyframes.size() - 3];
            const double d1 = (prev.W.col(L.H()) - H0).matrix().norm() + (sigma_block(prev) - S0).matrix().norm();
            const double d2 = (pp.W.col(L.H()) - prev.W.col(L.H())).matrix().norm() +
                              (sigma_block(pp) - sigma_block(prev)).matrix().norm();
            if (d1 > 0.0 && d2 > d1) rate = std::log(d2 / d1) / std::log(pp.t / prev.t);
        }
        ad.richardson_rate = rate;
        const double lam = std::pow(ratio, -rate);
        ad.Hhat = (H0 - lam * prev.W.col(L.H())) / (1.0 - lam);
        ad.Sigmahat = (S0 - lam * sigma_block(prev)) / (1.0 - lam);
    }
    const double kap1 = gp.eps1 + 0.5 * kd.r0;
    ad.alphahat = last.W.col(L.alpha()) / (kap1 * std::log(te) + m * ad.Hhat * std::log(te)).exp();
    ad.kf = kf_of(ad.Hhat, ad.Sigmahat, kd);
    ad.kasner_residual = kasner_residual(ad.kf, m);

    const Eigen::ArrayXd mask = region_mask(g, region);
    Eigen::ArrayXd tr = Eigen::ArrayXd::Zero(g.npts()), sq = Eigen::ArrayXd::Zero(g.npts());
    for (int a = 0; a < m; ++a) tr += ad.kf.col(a * m + a);
    sq = ad.kf.square().rowwise().sum();
    const Eigen::ArrayXd gap = (tr + 2.0 - (4.0 + sq).sqrt()).abs();
    const double floor_tr = -2.0 * m / (kd.n - 2.0);
    ad.max_residual = masked_max(ad.kasner_residual.abs(), mask);
    ad.max_branch_gap = masked_max(gap, mask);
    ad.min_trace_margin = masked_min(tr - floor_tr, mask);

    // Pointwise lapse fit at the probes over the final decade.
    for (std::size_t i = 0; i < ts.probe_index.size(); ++i) {
        const long p = ts.probe_index[i];
        const double slope = kap1 + m * ad.Hhat[p];
        std::vector<double> dev;
        for (const auto& r : ts.records)
            if (r.t <= 10.0 * te * (1.0 + 1e-9) && i < r.probes.size())
                dev.push_back(std::log(r.probes[i].alpha) - slope * std::log(r.t));
        double mean = 0.0;
        for (double d : dev) mean += d;
        mean /= std::max<std::size_t>(dev.size(), 1);
        double rms = 0.0;
        for (double d : dev) rms += std::pow(std::exp(d - mean) - 1.0, 2);
        rms = std::sqrt(rms / std::max<std::size_t>(dev.size(), 1));
        ad.alphahat_probe.push_back(std::exp(mean));
        ad.alpha_fit_rms.push_back(rms);
        ad.Hhat_probe.push_back(ad.Hhat[p]);
    }
    return ad;
}

nlohmann::json BlowupCheck::to_json() const {
    return {{"scalar_fit", scalar_fit}, {"scalar_pred", scalar_pred}, {"ricci_fit", ricci_fit},
            {"ricci_pred", ricci_pred}, {"mean_fit", mean_fit},       {"mean_pred", mean_pred},
            {"weyl_fit", weyl_fit},     {"weyl_pred", weyl_pred},     {"worst_scalar", worst_scalar},
            {"worst_ricci", worst_ricci}, {"worst_mean", worst_mean}, {"worst_weyl", worst_weyl}};
}

BlowupCheck blowup_exponents(const TimeSeries& ts, const AsymptoticData& ad, const KasnerData& kd) {
    if (ts.records.empty()) throw std::invalid_argument("blow-up fit needs records");
    const int n = kd.n, m = kd.m();
    const double te = ts.records.back().t;
    BlowupCheck b;
    auto rel = [](double fit, double pred) { return std::abs(fit - pred) / std::abs(pred); };
    for (std::size_t i = 0; i < ts.probe_index.size(); ++i) {
        std::vector<double> t, R, RR, K, Wy;
        for (const auto& r : ts.records)
            if (r.t <= 10.0 * te * (1.0 + 1e-9)) {
                t.push_back(r.t);
                R.push_back(-r.probes[i].scalar);
                RR.push_back(r.probes[i].ricci_sq);
                K.push_back(r.probes[i].mean_curv);
                Wy.push_back(r.probes[i].weyl);
            }
        const double Hh = ad.Hhat_probe[i];
        const double base = 2.0 * m / (n - 2.0) + kd.r0 + 2.0 * m * Hh;
        b.scalar_fit.push_back(-fit_power_law(t, R).exponent);
        b.scalar_pred.push_back(base);
        b.ricci_fit.push_back(-fit_power_law(t, RR).exponent);
        b.ricci_pred.push_back(2.0 * base);
        b.mean_fit.push_back(-fit_power_law(t, K).exponent);
        b.mean_pred.push_back(0.5 * base);
        b.worst_scalar = std::max(b.worst_scalar, rel(b.scalar_fit.back(), base));
        b.worst_ricci = std::max(b.worst_ricci, rel(b.ricci_fit.back(), 2.0 * base));
        b.worst_mean = std::max(b.worst_mean, rel(b.mean_fit.back(), 0.5 * base));
        bool weyl_ok = true;
        for (double v : Wy) weyl_ok = weyl_ok && v > 0.0;
        if (weyl_ok) {
            b.weyl_fit.push_back(-fit_power_law(t, Wy).exponent);
            b.weyl_pred.push_back(2.0 * base);
            b.worst_weyl = std::max(b.worst_weyl, rel(b.weyl_fit.back(), 2.0 * base));
        }
    }
    return b;
}

}  // namespace ksf
