#include <doctest.h>

#include <cmath>
#include <fstream>

#include "ksf/symmetrizer.hpp"

using namespace ksf;

namespace {
KasnerData flrw(int n) { return kasner_from_q(n, std::vector<double>(n - 1, 1.0 / (n - 1))); }
}  // namespace

TEST_CASE("parameter solve") {
    const SymmetrizerParams p = solve_params(4, 0.0, 2.0, 2.0, 3.0, 1.5, 1.0, 1.0 / 3);
    CHECK(p.p == doctest::Approx(0.5));
    CHECK(std::abs(p.q) < 1e-15);
    CHECK(p.s == doctest::Approx(0.5));
    CHECK(p.u == doctest::Approx(-1.0 / 6));
    CHECK(p.a == doctest::Approx(3.0));
    for (int n = 4; n <= 11; ++n) {
        const GaugeParams g = default_gauge(flrw(n));
        CHECK(g.p == doctest::Approx(0.5));
        CHECK(std::abs(g.q) < 1e-15);
        CHECK(g.s == doctest::Approx((2.0 * n - 5) / (2.0 * n - 2)));
        CHECK(g.u == doctest::Approx((7.0 - 2 * n) / (2.0 * n - 2)));
        CHECK(g.a == doctest::Approx(n - 1.0));
        CHECK(std::abs((g.b * g.p + g.d * g.q) - (g.a * g.s + g.c * g.u)) < 1e-14);
    }
}

TEST_CASE("B0 block coefficients at n = 4") {
    const KasnerData k = flrw(4);
    const SymmetrizerSet sym = build(k, default_gauge(k));
    const Layout& L = sym.lay;
    const Eigen::MatrixXd B0(sym.B0);
    CHECK(B0(L.C(0, 1, 2), L.C(0, 1, 2)) == doctest::Approx(1.5));
    CHECK(B0(L.U(1), L.U(1)) == doctest::Approx(0.75));
    CHECK(B0(L.S(0, 2), L.S(0, 2)) == doctest::Approx(1.0 / 3));
    CHECK(B0(L.alpha(), L.alpha()) == doctest::Approx(1.0));
}

TEST_CASE("verify report at the default parameters") {
    for (int n = 4; n <= 11; ++n) {
        const KasnerData k = flrw(n);
        const SymmetrizerSet sym = build(k, default_gauge(k));
        const nlohmann::json v = verify(sym);
        INFO("n = ", n);
        CHECK(v["b0_symmetry_defect"].get<double>() < 1e-12);
        CHECK(v["bd_symmetry_defect"].get<double>() < 1e-12);
        CHECK(v["bd_product_defect"].get<double>() < 1e-12);
        CHECK(v["b0_closed_form_defect"].get<double>() < 1e-12);
        CHECK(v["b0_bounds_hold"].get<bool>());
        CHECK(v["b0_min_eig"].get<double>() >= 1.0 / (2.0 * n * n));
        CHECK(v["b0_max_eig"].get<double>() <= 2.0 * n);
        CHECK(v["pos1_holds"].get<bool>());
        CHECK(v["pos2_holds"].get<bool>());
        CHECK(v["mstar_invertible"].get<bool>());
        CHECK(v["projector_defect"].get<double>() < 1e-14);
    }
}

TEST_CASE("positivity conditions at the edges") {
    const KasnerData k = flrw(4);
    GaugeParams g = default_gauge(k);
    {
        // b = 0: right side of the second condition vanishes.
        GaugeParams h = g;
        h.b = 0.0;
        const SymmetrizerParams p = solve_params(4, h.mu, h.gamma, h.b, h.c, h.d, h.h, h.l);
        h.p = p.p, h.q = p.q, h.s = p.s, h.u = p.u, h.a = p.a;
        const nlohmann::json v = verify(build(k, h));
        CHECK(v["pos2_rhs"].get<double>() == doctest::Approx(0.0));
        CHECK(v["pos2_holds"].get<bool>());
    }
    {
        // 2d = b(n-2) is the excluded equality case.
        GaugeParams h = g;
        h.d = h.b;
        const SymmetrizerParams p = solve_params(4, h.mu, h.gamma, h.b, h.c, h.d, h.h, h.l);
        h.p = p.p, h.q = p.q, h.s = p.s, h.u = p.u, h.a = p.a;
        // Since a = c after the solve, this is exactly the case where M* is singular.
        CHECK(h.a == doctest::Approx(h.c));
        CHECK_THROWS_AS(build(k, h), std::invalid_argument);
    }
}

TEST_CASE("FLRW Bc has no r-dependent entries") {
    const KasnerData k = flrw(5);
    const GaugeParams g = default_gauge(k);
    const SymmetrizerSet sym = build(k, g);
    const Layout& L = sym.lay;
    const Eigen::MatrixXd Bc(sym.Bc);
    CHECK(Bc(L.e(1, 1), L.e(1, 1)) == doctest::Approx(g.kappa2(k)));
    CHECK(Bc(L.alpha(), L.alpha()) == doctest::Approx(g.kappa1(k)));
    CHECK(Bc(L.C(0, 1, 2), L.C(0, 1, 2)) == doctest::Approx(g.kappa0(k)));
    CHECK(Bc(L.U(2), L.U(2)) == doctest::Approx(g.kappa0(k)));
}

TEST_CASE("min_k") {
    SUBCASE("FLRW n = 4 needs no derivatives") {
        const KasnerData k = flrw(4);
        const GaugeParams g = default_gauge(k);
        CHECK(min_k(build(k, g), g.nu).k == 0);
    }
    SUBCASE("anisotropic data: finite and monotone in nu") {
        const KasnerData k = kasner_from_q(4, {0.5, 0.3, 0.2});
        const GaugeParams g = default_gauge(k);
        const SymmetrizerSet sym = build(k, g);
        const int k1 = min_k(sym, 0.2).k, k2 = min_k(sym, 0.1).k;
        CHECK(k1 >= 0);
        CHECK(k2 >= k1);
    }
    SUBCASE("near-critical data need more derivatives") {
        const KasnerData wide = kasner_from_q(4, {0.5, 0.3, 0.2});
        KasnerData tight;
        for (std::uint64_t s = 1; s < 2000; ++s) {
            const KasnerData c = sample_subcritical(4, s);
            if (check_subcritical(c).margin < 0.05) {
                tight = c;
                break;
            }
        }
        REQUIRE(tight.r.size() == 3);
        const double nu = 0.1;
        CHECK(min_k(build(tight, default_gauge(tight)), nu).k > min_k(build(wide, default_gauge(wide)), nu).k);
    }
}

TEST_CASE("appendix identities hold exactly") {
    for (int n = 4; n <= 7; ++n) {
        const nlohmann::json r = appendix_identities(n, 3);
        INFO(r.dump());
        CHECK(r["all"].get<bool>());
    }
}

TEST_CASE("exact structural products") {
    const int m = 3;
    const ExactMatrix K1 = structural::k1(m), K2 = structural::k2(m);
    // (n-2)/2 = 1 at n = 4.
    CHECK((K2 * K1) == ExactMatrix::identity(m));
    CHECK((K1 * K2) == structural::x(m));
}

TEST_CASE("C-block positivity condition") {
    const McPdResult a = mc_pd_check(4, 1.0, 1.0);
    CHECK(a.sufficient);
    CHECK(a.actually_pd);
    const McPdResult b = mc_pd_check(4, 1.0, 0.0);
    CHECK(b.actually_pd);
    CHECK(b.min_eig == doctest::Approx(1.0));
    const McPdResult c = mc_pd_check(4, 0.4, 1.0);
    CHECK_FALSE(c.sufficient);
    CHECK(c.actually_pd);
    // The stated sufficient condition does not cover b < 0: the exact condition is a + b(n-2)/2 > 0.
    const McPdResult d = mc_pd_check(4, 1.0, -1.5);
    CHECK(d.sufficient);
    CHECK_FALSE(d.actually_pd);
    CHECK(d.min_eig == doctest::Approx(-0.5));
    for (int n = 4; n <= 8; ++n) {
        const McPdResult e = mc_pd_check(n, 0.7, -0.9);
        CHECK(e.min_eig == doctest::Approx(e.min_eig_closed_form).epsilon(1e-12));
    }
}

TEST_CASE("matrix market export") {
    const KasnerData k = flrw(4);
    const SymmetrizerSet sym = build(k, default_gauge(k));
    const std::string path = "/tmp/ksf_test_B0.mtx";
    export_matrix_market(sym.B0, path);
    std::ifstream f(path);
    std::string header;
    std::getline(f, header);
    CHECK(header.rfind("%%MatrixMarket", 0) == 0);
}
