// Acceptance suite: one PASS/FAIL line per criterion.
//   ksf_acceptance [--only N[,M...]] [--expect-fail N[,M...]]
// Exit status is 0 iff the set of failing criteria equals the expected set.

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "helpers.hpp"
#include "ksf/constraints.hpp"
#include "ksf/diagnostics.hpp"
#include "ksf/evolution.hpp"
#include "ksf/frame.hpp"
#include "ksf/fuchsian.hpp"
#include "ksf/symmetrizer.hpp"

using namespace ksf;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

KasnerData aniso() { return kasner_from_q(4, {0.5, 0.3, 0.2}); }

KasnerData flrw(int n) { return kasner_from_q(n, std::vector<double>(n - 1, 1.0 / (n - 1))); }

// ---------------------------------------------------------------- 1

Outcome symmetrizer_suite() {
    Outcome o;
    std::ostringstream failed;
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> ub(-4.0, 4.0), ua(0.0, 1.0);
    double worst_sym = 0, worst_cond = 0;
    int mc_counter = 0;
    std::vector<int> mk;
    for (int n = 4; n <= 11; ++n) {
        const KasnerData kd = flrw(n);
        const GaugeParams gp = default_gauge(kd);
        const SymmetrizerSet sym = build(kd, gp);
        const nlohmann::json v = verify(sym);
        const double sdef = std::max(v["b0_symmetry_defect"].get<double>(), v["bd_symmetry_defect"].get<double>());
        worst_sym = std::max(worst_sym, sdef);
        if (sdef > 1e-12) failed << " sym(n=" << n << ")";
        const double lo = 1.0 / (2.0 * n * n), hi = 2.0 * n;
        if (v["b0_min_eig"].get<double>() < lo || v["b0_max_eig"].get<double>() > hi) failed << " B0-bound(n=" << n << ")";
        const double cond = std::abs((gp.b * gp.p + gp.d * gp.q) - (gp.a * gp.s + gp.c * gp.u));
        worst_cond = std::max(worst_cond, cond);
        if (cond > 1e-14) failed << " bp+dq(n=" << n << ")";
        if (!appendix_identities(n)["all"].get<bool>()) failed << " appendix(n=" << n << ")";
        int ce = 0;
        for (int i = 0; i < 100; ++i) {
            const double b = ub(rng), a = std::abs(b) / 2.0 + 1e-3 + 2.0 * ua(rng);
            if (!mc_pd_check(n, a, b).actually_pd) ++ce;
        }
        mc_counter += ce;
        if (ce > 0) failed << " C-pos(n=" << n << ":" << ce << "/100)";
        const int k = min_k(sym, gp.nu).k;
        mk.push_back(k);
        if (k != 0) failed << " min_k(n=" << n << ")=" << k;
    }
    o.pass = failed.str().empty();
    std::ostringstream d;
    d << "symmetry defect " << fmt("%.1e", worst_sym) << ", |bp+dq-as-cu| " << fmt("%.1e", worst_cond)
      << ", C-block positivity counterexamples " << mc_counter << "/800, min_k(FLRW) n=4..11:";
    for (int k : mk) d << " " << k;
    if (!o.pass) d << "; failing:" << failed.str();
    o.detail = d.str();
    return o;
}

// ---------------------------------------------------------------- 2

RunConfig base_config() {
    RunConfig c;
    c.kd = aniso();
    c.gp = default_gauge(c.kd);
    c.grid.dims = {24, 24, 24};
    c.t0 = 1.0;
    c.t_end = 1e-3;
    return c;
}

Outcome background_fidelity() {
    RunConfig c = base_config();
    c.weyl = false;
    c.probes = 0;
    const RunResult r = run(c);
    double dev = 0, cons = 0;
    for (const auto& rec : r.ts.records) {
        dev = std::max(dev, rec.background_deviation);
        for (double v : rec.constraints) cons = std::max(cons, v);
    }
    return {dev <= 1e-6 && cons <= 1e-9,
            "max relative deviation " + fmt("%.2e", dev) + " (<= 1e-6), max constraint " + fmt("%.2e", cons) +
                " (<= 1e-9), " + std::to_string(r.steps) + " steps"};
}

// ---------------------------------------------------------------- 3-6 share one perturbed run

struct PerturbedRun {
    RunConfig cfg;
    RunResult res;
};

const PerturbedRun& perturbed_run() {
    static const PerturbedRun pr = [] {
        PerturbedRun p;
        p.cfg = base_config();
        p.cfg.pert.amplitude = 1e-3;
        p.cfg.region_radius = 1.0;
        p.cfg.probes = 10;
        p.res = run(p.cfg);
        return p;
    }();
    return pr;
}

Outcome constraint_propagation() {
    const PerturbedRun& p = perturbed_run();
    double init = 0, worst = 0;
    for (double v : p.res.init.residuals) init = std::max(init, v);
    std::vector<double> t, r;
    for (const auto& rec : p.res.ts.records) {
        double m = 0;
        for (double v : rec.constraints) m = std::max(m, v);
        worst = std::max(worst, m);
        t.push_back(1.0 / rec.t);
        r.push_back(std::max(m, 1e-300));
    }
    // Growth of ln(residual) against ln(1/t): a bounded slope means at most polynomial growth.
    const PowerLawFit f = fit_power_law(t, r);
    const bool ok = init <= 1e-8 && worst <= 1e-6 && f.exponent <= 2.0;
    return {ok, "initial " + fmt("%.2e", init) + " (<= 1e-8), max along run " + fmt("%.2e", worst) +
                    " (<= 1e-6), growth exponent in 1/t " + fmt("%.2f", f.exponent) + " (<= 2)"};
}

Outcome decay_extraction() {
    const PerturbedRun& p = perturbed_run();
    if (!p.res.asymptotics) return {false, "extraction failed: " + p.res.extraction_error};
    const AsymptoticData& ad = *p.res.asymptotics;
    double worst = 0;
    for (double v : ad.alpha_fit_rms) worst = std::max(worst, v);
    const bool ok = ad.zeta > 0.0 && ad.alpha_fit_rms.size() == 10 && worst <= 0.01;
    return {ok, "zeta " + fmt("%.3f", ad.zeta) + " (> 0), alpha-fit RMS max " + fmt("%.2e", worst) + " over " +
                    std::to_string(ad.alpha_fit_rms.size()) + " probes (<= 1%)"};
}

Outcome blowup() {
    const PerturbedRun& p = perturbed_run();
    if (!p.res.asymptotics) return {false, "extraction failed: " + p.res.extraction_error};
    const BlowupCheck bc = blowup_exponents(p.res.ts, *p.res.asymptotics, p.cfg.kd);
    const double worst = std::max({bc.worst_scalar, bc.worst_ricci, bc.worst_mean, bc.worst_weyl});

    // FLRW: Weyl invariant against the Ricci scale along a short homogeneous run.
    RunConfig f;
    f.kd = flrw(4);
    f.gp = default_gauge(f.kd);
    f.grid.dims = {8, 8, 8};
    f.t_end = 1e-2;
    f.probes = 0;
    const RunResult fr = run(f);
    double ratio = 0;
    for (const auto& rec : fr.ts.records)
        ratio = std::max(ratio, std::max(std::abs(rec.weyl_min), std::abs(rec.weyl_max)) / rec.ricci_max);
    const bool ok = worst <= 0.05 && !bc.weyl_fit.empty() && ratio <= 1e-10;
    return {ok, "worst relative exponent error R " + fmt("%.1e", bc.worst_scalar) + ", Ric^2 " +
                    fmt("%.1e", bc.worst_ricci) + ", K " + fmt("%.1e", bc.worst_mean) + ", Weyl " +
                    fmt("%.1e", bc.worst_weyl) + " (<= 5%); FLRW Weyl/Ricci " + fmt("%.1e", ratio) + " (<= 1e-10)"};
}

Outcome pointwise_kasner() {
    const PerturbedRun& p = perturbed_run();
    auto at = [&](double t) {
        for (const auto& rec : p.res.ts.records)
            if (std::abs(std::log(rec.t / t)) < 1e-9) return rec.kasner_residual_max;
        throw std::runtime_error("no record at t = " + fmt("%g", t));
    };
    const double a = at(1e-2), b = at(1e-3);
    return {a >= 10.0 * b, "max residual on ball: " + fmt("%.2e", a) + " at 1e-2, " + fmt("%.2e", b) +
                               " at 1e-3, ratio " + fmt("%.1f", a / b) + " (>= 10)"};
}

// ---------------------------------------------------------------- 7

Outcome localization() {
    RunConfig c = base_config();
    c.gp.eps2 = 0.8;
    c.gp.nu = 0.1;
    c.t0 = 1e-4;
    c.t_end = 1e-7;
    c.pert.amplitude = 1e-3;
    c.weyl = false;
    c.probes = 0;
    ConeDomain cd;
    cd.t0 = c.t0;
    cd.rho0 = 2.5;
    cd.rho1 = 0.0;  // 1.01 * 6 n^3 sup|e| at t0
    cd.eps = c.gp.eps2;
    c.cone = cd;
    const LocalizationReport lr = localization_test(c, 1e-3, 5);
    double e_ratio = 0, pb_ratio = 0, quad = -1e300;
    for (const auto& m : lr.monitors) {
        e_ratio = std::max(e_ratio, m.e_sup / m.e_bound);
        pb_ratio = std::max(pb_ratio, m.pb_sup / m.pb_bound);
        quad = std::max(quad, m.quad_form_max);
    }
    const bool ok = lr.max_discrepancy <= 1e-5 && lr.monitors_ok;
    return {ok, "max discrepancy on the cone " + fmt("%.2e", lr.max_discrepancy) + " (<= 1e-5), rho1 " +
                    fmt("%.3f", lr.rho1) + ", sup|e|/bound " + fmt("%.3f", e_ratio) + ", Pb ratio " +
                    fmt("%.3f", pb_ratio) + ", max boundary form " + fmt("%.2e", quad) +
                    (lr.monitors_ok ? ", monitors hold" : ", monitors VIOLATED")};
}

// ---------------------------------------------------------------- 8

Outcome cross_oracle() {
    const KasnerData k = aniso();
    const GaugeParams gp = default_gauge(k);
    // Products and quotients in the rescaling alias below 40^3 at this amplitude.
    const TorusGrid g(3, M_PI, {40, 40, 40});
    double worst_sq = 0;
    for (unsigned seed = 1; seed <= 20; ++seed) {
        RescaledState w = testing::random_smooth(k, gp, g, 0.4, 5e-2, seed);
        impose_lapse_constraint(w, g, gp);
        const RescaledState chain = rescaled_time_derivative(unrescale(w, gp, k), g, gp, k);
        RescaledState F = rhs_base(w, g, gp, k);
        F.W.col(w.lay.H()) += rescaled_constraints(w, g, gp, k).H.col(0) / (w.lay.m * w.t);
        worst_sq = std::max(worst_sq, (F.W - chain.W).abs().maxCoeff() / std::max(1.0, chain.W.abs().maxCoeff()));
    }

    // Homogeneous states: constant frame, C = U = 0, random trace-free Sigma, H from the Hamiltonian.
    double worst_weyl = 0;
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const TorusGrid h(3, M_PI, {1, 1, 1});
    for (int s = 0; s < 20; ++s) {
        const KasnerData kd = s % 2 ? aniso() : sample_subcritical(4, 100 + s);
        const GaugeParams gq = default_gauge(kd);
        RescaledState w = background_rescaled(kd, gq.eps1, gq.eps2, 0.3 + 0.5 * (1 + u(rng)), 1);
        const Layout& L = w.lay;
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) w.W(0, L.e(a, b)) += 0.2 * u(rng);
        for (int a = 0; a < 3; ++a)
            for (int b = a; b < 3; ++b) w.W(0, L.S(a, b)) = w.W(0, L.S(b, a)) = 0.1 * u(rng);
        project_symmetries(w);
        solve_hamiltonian(w, h, gq, kd);
        const Eigen::ArrayXXd riem = weyl_component(w, h, gq, kd).scaled;
        const Eigen::ArrayXXd expl = weyl_explicit(w, kd);
        worst_weyl = std::max(worst_weyl, (riem - expl).abs().maxCoeff() / std::max(1.0, expl.abs().maxCoeff()));
    }
    return {worst_sq <= 1e-9 && worst_weyl <= 1e-9, "commuting square " + fmt("%.2e", worst_sq) +
                                                        " on 20 states at 40^3 (<= 1e-9), Weyl routes " +
                                                        fmt("%.2e", worst_weyl) + " on 20 homogeneous states (<= 1e-9)"};
}

std::set<int> parse_set(const std::string& s) {
    std::set<int> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.insert(std::stoi(item));
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"acceptance criteria"};
    std::string only, expect;
    app.add_option("--only", only, "comma-separated criteria to run");
    app.add_option("--expect-fail", expect, "comma-separated criteria expected to fail");
    CLI11_PARSE(app, argc, argv);
    const std::set<int> run_set = parse_set(only), expected = parse_set(expect);

    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"symmetrizer suite", symmetrizer_suite},
        {"background fidelity", background_fidelity},
        {"constraint propagation", constraint_propagation},
        {"decay and extraction", decay_extraction},
        {"blow-up exponents", blowup},
        {"pointwise Kasner", pointwise_kasner},
        {"localization", localization},
        {"cross-oracle", cross_oracle},
    };
    std::set<int> failed;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i) + 1;
        if (!run_set.empty() && !run_set.count(id)) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (!o.pass) failed.insert(id);
        std::printf("%s %d %s: %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first.c_str(),
                    o.detail.c_str(), secs);
        std::fflush(stdout);
    }
    std::set<int> exp_run;
    for (int e : expected)
        if (run_set.empty() || run_set.count(e)) exp_run.insert(e);
    if (failed != exp_run) {
        std::printf("failing set differs from the expected set\n");
        return 1;
    }
    if (!failed.empty()) std::printf("all failures are expected (--expect-fail)\n");
    return 0;
}
