#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "ksf/diagnostics.hpp"
#include "ksf/fuchsian.hpp"

using namespace ksf;

namespace {
KasnerData flrw() { return kasner_from_q(4, {1.0 / 3, 1.0 / 3, 1.0 / 3}); }
KasnerData aniso() { return kasner_from_q(4, {0.5, 0.3, 0.2}); }
}  // namespace

TEST_CASE("FLRW curvature invariants") {
    const KasnerData k = flrw();
    const GaugeParams gp = default_gauge(k);
    TorusGrid g(3, M_PI, {1, 1, 1});
    for (double t : {1.0, 0.1, 1e-3}) {
        const RescaledState w = background_rescaled(k, gp.eps1, gp.eps2, t, g.npts());
        const CurvatureInvariants ci = curvature_invariants(w, gp, k);
        CHECK(ci.scalar[0] == doctest::Approx(-1.5 * std::pow(t, -3)).epsilon(1e-12));
        CHECK(ci.ricci_sq[0] == doctest::Approx(2.25 * std::pow(t, -6)).epsilon(1e-12));
        CHECK(mean_curvature(w, gp, k)[0] == doctest::Approx(1.5 * std::pow(t, -1.5)).epsilon(1e-12));
        CHECK(std::abs(weyl_component(w, g, gp, k).invariant[0]) < 1e-20 * std::pow(t, -6));
    }
}

TEST_CASE("background electric Weyl block") {
    const KasnerData k = aniso();
    const Eigen::MatrixXd C = weyl_background(k);
    CHECK(std::abs(C.trace()) < 1e-14);
    CHECK((C - C.transpose()).cwiseAbs().maxCoeff() < 1e-15);
    CHECK(C(0, 0) == doctest::Approx(0.10481).epsilon(1e-4));
    // Orthonormal-frame oracle: C_0i0i proportional to q_i (1 - q_i) - 2 P^2 / 3.
    std::vector<double> e(3);
    for (int a = 0; a < 3; ++a) e[a] = k.q[a] * (1 - k.q[a]) - 2 * k.P * k.P / 3;
    for (int a = 1; a < 3; ++a) CHECK(C(a, a) / C(0, 0) == doctest::Approx(e[a] / e[0]).epsilon(1e-12));
    CHECK(weyl_background(flrw()).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("Riemann and explicit Weyl routes agree on homogeneous data") {
    const KasnerData k = aniso();
    const GaugeParams gp = default_gauge(k);
    TorusGrid g(3, M_PI, {1, 1, 1});
    const RescaledState w = background_rescaled(k, gp.eps1, gp.eps2, 0.3, g.npts());
    const Eigen::ArrayXXd a = weyl_component(w, g, gp, k).scaled, b = weyl_explicit(w, k);
    CHECK((a - b).abs().maxCoeff() < 1e-12);
}

TEST_CASE("trace of the second fundamental form") {
    const KasnerData k = aniso();
    const GaugeParams gp = default_gauge(k);
    TorusGrid g(3, M_PI, {8, 8, 8});
    const RescaledState w = testing::random_smooth(k, gp, g, 0.2, 0.05, 3);
    const Eigen::ArrayXXd kf = conf_second_fundamental(w, k);
    const Layout& L = w.lay;
    for (long p = 0; p < g.npts(); ++p) {
        const double tr = kf(p, 0) + kf(p, 4) + kf(p, 8);
        CHECK(tr == doctest::Approx(k.r0 + 2 * 3 * w.W(p, L.H())).epsilon(1e-12));
    }
}

TEST_CASE("Kasner residual vanishes on Kasner data") {
    const KasnerData k = aniso();
    Eigen::ArrayXXd kf = Eigen::ArrayXXd::Zero(1, 9);
    // k_AB = r_AB + 2 delta_AB at H = 1, Sigma = 0.
    for (int a = 0; a < 3; ++a) kf(0, 4 * a) = k.r[a] + 2.0;
    const double res = kasner_residual(kf, 3)[0];
    const double trace = k.r0 + 6;
    double sq = 0;
    for (int a = 0; a < 3; ++a) sq += (k.r[a] + 2) * (k.r[a] + 2);
    CHECK(res == doctest::Approx(trace * trace - sq + 4 * trace).epsilon(1e-14));
}

TEST_CASE("power-law fits") {
    std::vector<double> t, v, w, c;
    for (int i = 0; i <= 20; ++i) {
        const double ti = std::pow(10.0, -0.1 * i);
        t.push_back(ti);
        v.push_back(2.0 * ti * ti * ti);
        w.push_back(std::pow(ti, -3) * (1 + 0.01 * std::sin(std::log(ti))));
        c.push_back(4.0);
    }
    const PowerLawFit a = fit_power_law(t, v);
    CHECK(a.exponent == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(a.log_prefactor == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(std::abs(fit_power_law(t, w).exponent + 3.0) < 0.02);
    CHECK(std::abs(fit_power_law(t, c).exponent) < 1e-12);
    CHECK_THROWS(fit_power_law({1.0, 0.5}, {1.0, 2.0}));
}

TEST_CASE("Weyl invariant scaling in the lapse") {
    const KasnerData k = aniso();
    const GaugeParams gp = default_gauge(k);
    Eigen::ArrayXXd s(1, 9);
    const Eigen::MatrixXd C = weyl_background(k);
    for (int i = 0; i < 9; ++i) s(0, i) = C(i / 3, i % 3);
    const Eigen::ArrayXd a1 = Eigen::ArrayXd::Constant(1, 0.7), a2 = 2 * a1;
    const double v1 = weyl_invariant(s, a1, 0.1, gp, 4)[0], v2 = weyl_invariant(s, a2, 0.1, gp, 4)[0];
    CHECK(v1 > 0);
    CHECK(v2 == doctest::Approx(v1 / 16).epsilon(1e-13));
}

TEST_CASE("time series JSON round trip") {
    TimeSeries ts;
    ts.probe_index = {3, 7};
    for (int i = 0; i < 3; ++i) {
        DiagnosticsRecord r;
        r.t = std::pow(10.0, -i);
        r.constraints[4] = 1e-9 * i;
        r.probes = {ProbeSample{1, 2, 3, 4, 5, 6}, ProbeSample{7, 8, 9, 10, 11, 12}};
        ts.records.push_back(r);
    }
    const TimeSeries back = TimeSeries::from_json(ts.to_json());
    REQUIRE(back.records.size() == 3);
    CHECK(back.probe_index == ts.probe_index);
    CHECK(back.records[2].t == ts.records[2].t);
    CHECK(back.records[2].constraints[4] == ts.records[2].constraints[4]);
    CHECK(back.records[1].probes[1].weyl == 12);
}

TEST_CASE("probes stay inside the ball and are deterministic") {
    TorusGrid g(3, M_PI, {16, 16, 16});
    const std::vector<long> a = choose_probes(g, 1.0, 10, 4), b = choose_probes(g, 1.0, 10, 4);
    CHECK(a == b);
    CHECK(a.size() == 10);
    for (long p : a) CHECK(g.radius(p) <= 1.0);
}
