#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "ksf/grid.hpp"
#include "ksf/monitors.hpp"
#include "ksf/symmetrizer.hpp"

using namespace ksf;

TEST_CASE("spectral derivatives") {
    TorusGrid g(3, M_PI, {16, 12, 8});
    Eigen::ArrayXd c = Eigen::ArrayXd::Constant(g.npts(), 2.5), f(g.npts()), df(g.npts());
    for (int axis = 0; axis < 3; ++axis) CHECK(g.derivative(c, axis).abs().maxCoeff() < 1e-13);
    const double k = M_PI / g.L();
    for (long p = 0; p < g.npts(); ++p) {
        f[p] = std::sin(k * g.coord(p, 0)) + 0.3 * std::cos(3 * k * g.coord(p, 1)) * std::sin(2 * k * g.coord(p, 2));
        df[p] = k * std::cos(k * g.coord(p, 0));
    }
    CHECK((g.derivative(f, 0) - df).abs().maxCoeff() < 1e-11);
    Eigen::ArrayXd dz(g.npts());
    for (long p = 0; p < g.npts(); ++p) dz[p] = 0.6 * k * std::cos(3 * k * g.coord(p, 1)) * std::cos(2 * k * g.coord(p, 2));
    CHECK((g.derivative(f, 2) - dz).abs().maxCoeff() < 1e-11);
}

TEST_CASE("finite differences converge at their order") {
    double prev = 0;
    for (int N : {16, 32, 64}) {
        TorusGrid g(3, M_PI, {N, 1, 1}, DerivMethod::FiniteDifference, 4);
        Eigen::ArrayXd f(g.npts()), df(g.npts());
        for (long p = 0; p < g.npts(); ++p) {
            f[p] = std::exp(std::sin(g.coord(p, 0)));
            df[p] = std::cos(g.coord(p, 0)) * f[p];
        }
        const double err = (g.derivative(f, 0) - df).abs().maxCoeff();
        if (prev > 0) CHECK(prev / err > 12.0);
        prev = err;
    }
}

TEST_CASE("Leibniz rule holds spectrally for band-limited factors") {
    TorusGrid g(3, M_PI, {24, 24, 24});
    Eigen::ArrayXd a(g.npts()), b(g.npts());
    for (long p = 0; p < g.npts(); ++p) {
        a[p] = std::sin(g.coord(p, 0) + 2 * g.coord(p, 1));
        b[p] = std::cos(3 * g.coord(p, 2) - g.coord(p, 0));
    }
    const Eigen::ArrayXd lhs = g.derivative(Eigen::ArrayXd(a * b), 0);
    const Eigen::ArrayXd rhs = g.derivative(a, 0) * b + a * g.derivative(b, 0);
    CHECK((lhs - rhs).abs().maxCoeff() < 1e-11);
}

TEST_CASE("symmetry-reduced grid differentiates only active axes") {
    const TorusGrid g = TorusGrid::from_json({{"points", 32}, {"symmetry_reduced", true}}, 3);
    CHECK(g.npts() == 32);
    CHECK(g.n_active() == 1);
    Eigen::ArrayXd f(g.npts());
    for (long p = 0; p < g.npts(); ++p) f[p] = std::sin(g.coord(p, 0));
    CHECK(g.derivative(f, 1).abs().maxCoeff() == 0.0);
}

TEST_CASE("Sobolev norms") {
    TorusGrid g(3, M_PI, {16, 16, 16});
    const Eigen::ArrayXd c = Eigen::ArrayXd::Constant(g.npts(), 2.0);
    CHECK(sobolev_norm(c, g, 0) == doctest::Approx(2.0 * std::pow(2 * M_PI, 1.5)).epsilon(1e-12));
    Eigen::ArrayXd s(g.npts());
    for (long p = 0; p < g.npts(); ++p) s[p] = std::sin(g.coord(p, 0));
    // int sin^2 = int cos^2 = V/2 over the torus.
    const double V = std::pow(2 * M_PI, 3);
    CHECK(sobolev_norm(s, g, 1) == doctest::Approx(std::sqrt(V)).epsilon(1e-12));
    double prev = 0;
    for (int k = 0; k <= 3; ++k) {
        const double v = sobolev_norm(s * s + 0.1, g, k);
        CHECK(v >= prev);
        prev = v;
    }
    CHECK(sobolev_norm(c, g, 0, Region::ball(1.0)) < sobolev_norm(c, g, 0));
}

TEST_CASE("cone radius") {
    ConeDomain cd{1.0, 0.0, 0.5, 0.1, 0.5};
    CHECK(cd.rho_of_t(1.0) == doctest::Approx(0.5));
    CHECK(cd.rho_tilde0() == doctest::Approx(0.3));
    CHECK(cd.rho_of_t(1e-12) == doctest::Approx(0.3).epsilon(1e-5));
    double prev = 1e300;
    for (double t : {1.0, 0.5, 0.1, 0.01}) {
        CHECK(cd.rho_of_t(t) < prev);
        prev = cd.rho_of_t(t);
    }
    ConeDomain bad = cd;
    bad.rho1 = 1.0;
    CHECK_THROWS_AS(bad.validate(M_PI), std::invalid_argument);
}

TEST_CASE("cone boundary normal") {
    ConeDomain cd{1.0, 0.0, 0.5, 0.1, 0.5};
    Eigen::VectorXd x = Eigen::VectorXd::Zero(3);
    x[0] = 0.4;
    for (double t : {1.0, 0.1, 0.01}) {
        const Eigen::VectorXd nrm = cd.boundary_normal(t, x);
        CHECK(nrm[0] == doctest::Approx(-0.1 * std::pow(t, -0.5)));
        CHECK(nrm[1] == doctest::Approx(1.0));
        CHECK(nrm[2] == doctest::Approx(0.0));
        CHECK(nrm[3] == doctest::Approx(0.0));
    }
    Eigen::VectorXd y = Eigen::VectorXd::Zero(3);
    y[2] = 0.4;
    const Eigen::VectorXd ny = cd.boundary_normal(0.3, y);
    CHECK(ny[3] == doctest::Approx(1.0));
    CHECK(ny[0] == doctest::Approx(cd.boundary_normal(0.3, x)[0]));
}

TEST_CASE("extension operator") {
    TorusGrid g(3, M_PI, {16, 16, 16});
    const Eigen::ArrayXXd bg = Eigen::ArrayXXd::Constant(g.npts(), 2, 1.5);
    CHECK((extend_initial_data(bg, bg, g, 1.5) - bg).abs().maxCoeff() < 1e-15);
    Eigen::ArrayXXd f = bg;
    for (long p = 0; p < g.npts(); ++p) f(p, 1) += std::exp(-g.radius(p) * g.radius(p));
    const Eigen::ArrayXXd e = extend_initial_data(f, bg, g, 1.5);
    for (long p = 0; p < g.npts(); ++p)
        if (g.radius(p) <= 1.5) CHECK(std::abs(e(p, 1) - f(p, 1)) < 1e-14);
    for (long p = 0; p < g.npts(); ++p)
        if (g.radius(p) >= 0.5 * (1.5 + M_PI)) CHECK(e(p, 1) == bg(p, 1));
    CHECK_THROWS_AS(extend_initial_data(f, bg, g, 4.0), std::invalid_argument);
}

TEST_CASE("extension norm bound over a random suite") {
    TorusGrid g(3, M_PI, {24, 24, 24});
    const KasnerData k = kasner_from_q(4, {0.5, 0.3, 0.2});
    const GaugeParams gp = default_gauge(k);
    const RescaledState bg = background_rescaled(k, gp.eps1, gp.eps2, 1.0, g.npts());
    double worst = 0;
    for (unsigned s = 1; s <= 5; ++s) {
        const RescaledState w = testing::random_smooth(k, gp, g, 1.0, 1e-2, s);
        const Eigen::ArrayXXd d = w.W - bg.W;
        const Eigen::ArrayXXd e = extend_initial_data(w.W, bg.W, g, 2.0) - bg.W;
        worst = std::max(worst, sobolev_norm(e, g, 1) / sobolev_norm(d, g, 1, Region::ball(2.0)));
    }
    MESSAGE("empirical H^1 extension constant on 24^3: " << worst);
    CHECK(worst < 20.0);
}

TEST_CASE("spacelike monitors") {
    const KasnerData k = kasner_from_q(4, {0.5, 0.3, 0.2});
    GaugeParams gp = default_gauge(k);
    gp.eps2 = 0.8;
    gp.nu = 0.1;
    const SymmetrizerSet sym = build(k, gp);
    TorusGrid g(3, M_PI, {16, 16, 16});
    const double t0 = 1e-4;
    RescaledState w = background_rescaled(k, gp.eps1, gp.eps2, t0, g.npts());
    const double rho1 = 1.01 * 6 * 64 * frame_norm(w).maxCoeff();
    ConeDomain cd{t0, 0.0, 2.0, rho1, 0.8};
    const SpacelikeReport ok = spacelike_monitors(w, g, cd, gp, &sym, 10000, 3);
    CHECK(ok.e_ok);
    CHECK(ok.pb_ok);
    CHECK(ok.quad_ok);
    CHECK(ok.quad_samples == 10000);
    w.W.leftCols(9) *= 1e6;
    const SpacelikeReport bad = spacelike_monitors(w, g, cd, gp, &sym, 256, 3);
    CHECK_FALSE(bad.e_ok);
    CHECK_FALSE(bad.ok());
}

TEST_CASE("top-mode fraction detects grid-scale content") {
    TorusGrid g(3, M_PI, {16, 16, 16});
    Eigen::ArrayXXd smooth(g.npts(), 1), rough(g.npts(), 1);
    for (long p = 0; p < g.npts(); ++p) {
        smooth(p, 0) = std::sin(g.coord(p, 0));
        rough(p, 0) = std::sin(7 * g.coord(p, 0));
    }
    CHECK(top_mode_fraction(smooth, g) < 1e-20);
    CHECK(top_mode_fraction(rough, g) > 0.99);
}
