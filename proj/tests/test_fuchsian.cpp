#include <doctest.h>

#include "helpers.hpp"
#include "ksf/frame.hpp"
#include "ksf/fuchsian.hpp"
#include "ksf/symmetrizer.hpp"

using namespace ksf;

namespace {
KasnerData aniso() { return kasner_from_q(4, {0.5, 0.3, 0.2}); }

double rel_dev(const Eigen::ArrayXXd& a, const Eigen::ArrayXXd& b) {
    return (a - b).abs().maxCoeff() / std::max(1.0, b.abs().maxCoeff());
}
}  // namespace

TEST_CASE("rescaled background is an exact solution of the modified system") {
    const KasnerData k = aniso();
    const GaugeParams gp = default_gauge(k);
    TorusGrid g(3, M_PI, {8, 8, 8});
    for (double t : {1.0, 0.1, 1e-3}) {
        const RescaledState w = background_rescaled(k, gp.eps1, gp.eps2, t, g.npts());
        const RescaledState F = rhs_modified(w, g, gp, k);
        const double h = 1e-4 * t;
        auto bg = [&](double s) { return background_rescaled(k, gp.eps1, gp.eps2, s, g.npts()).W; };
        const Eigen::ArrayXXd dW = (bg(t - 2 * h) - 8 * bg(t - h) + 8 * bg(t + h) - bg(t + 2 * h)) / (12 * h);
        CHECK(rel_dev(F.W * t, dW * t) < 1e-9);
        const auto c = constraint_max(rescaled_constraints(w, g, gp, k));
        for (double v : c) CHECK(v < 1e-12);
    }
}

TEST_CASE("rescale and unrescale are inverse maps") {
    const KasnerData k = aniso();
    const GaugeParams gp = default_gauge(k);
    TorusGrid g(3, M_PI, {8, 8, 8});
    const RescaledState w = testing::random_smooth(k, gp, g, 0.3, 1e-2, 3);
    const RescaledState w2 = rescale(unrescale(w, gp, k), gp, k);
    CHECK(testing::max_abs_diff(w.W, w2.W) < 1e-13);
}

TEST_CASE("frame background maps to the rescaled background") {
    const KasnerData k = aniso();
    const GaugeParams gp = default_gauge(k);
    for (double t : {2.0, 0.5, 1e-2}) {
        const RescaledState a = rescale(background_frame(k, t), gp, k);
        const RescaledState b = background_rescaled(k, gp.eps1, gp.eps2, t);
        CHECK(testing::max_abs_diff(a.W, b.W) < 1e-12);
    }
}

TEST_CASE("commuting square between tetrad and rescaled right-hand sides") {
    const KasnerData k = aniso();
    const GaugeParams gp = default_gauge(k);
    // Spectral aliasing of the quotients in the rescaling sets the floor; 36^3 resolves it.
    TorusGrid g(3, M_PI, {36, 36, 36});
    for (unsigned seed = 1; seed <= 2; ++seed) {
        RescaledState w = testing::random_smooth(k, gp, g, 0.4, 5e-2, seed);
        impose_lapse_constraint(w, g, gp);
        const FrameState s = unrescale(w, gp, k);
        const RescaledState chain = rescaled_time_derivative(s, g, gp, k);
        RescaledState F = rhs_base(w, g, gp, k);
        const ConstraintFields c = rescaled_constraints(w, g, gp, k);
        F.W.col(w.lay.H()) += c.H.col(0) / (w.lay.m * w.t);
        CHECK(rel_dev(F.W, chain.W) < 1e-9);
    }
}

TEST_CASE("linear part of the modified system matches Acal and A^D") {
    KasnerData k = aniso();
    GaugeParams gp = default_gauge(k);
    gp.mu = 0.3;
    gp.gamma = 1.7;
    const SymmetrizerSet sym = build(k, gp);
    const Layout L(4);
    const int N = L.size();
    TorusGrid g(3, M_PI, {8, 8, 8});
    const double t = 0.5, eps = 1e-6;
    const Eigen::MatrixXd Acal(sym.Acal);

    // Unit directions projected onto antisymmetric C and trace-free symmetric Sigma.
    auto phys = [&](int j) {
        Eigen::VectorXd v = Eigen::VectorXd::Zero(N);
        v(j) = 1.0;
        RescaledState s(t, 4, 1);
        s.W.row(0) = v.transpose().array();
        project_symmetries(s);
        return Eigen::VectorXd(s.W.row(0).transpose().matrix());
    };

    // Zeroth order: constant perturbations about the zero state.
    RescaledState z(t, 4, g.npts());
    z.W.col(L.alpha()).setConstant(1e-14);
    for (int j = 0; j < N; ++j) {
        if (j == L.alpha()) continue;
        const Eigen::VectorXd v = phys(j);
        RescaledState p = z, q = z;
        for (int c = 0; c < N; ++c) {
            p.W.col(c) += eps * v(c);
            q.W.col(c) -= eps * v(c);
        }
        const Eigen::ArrayXXd J = (rhs_modified(p, g, gp, k).W - rhs_modified(q, g, gp, k).W) * t / (2 * eps);
        const Eigen::VectorXd expect = Acal * v;
        for (int i = L.C0(); i < N; ++i) {
            INFO(slot_name(L, i), " <- ", slot_name(L, j));
            CHECK(std::abs(J(0, i) - expect(i)) < 1e-7);
        }
    }

    // First order: sin profiles along each axis with e = identity.
    RescaledState base(t, 4, g.npts());
    base.W.col(L.alpha()).setConstant(1e-14);
    for (int a = 0; a < 3; ++a) base.W.col(L.e(a, a)).setConstant(1.0);
    const double ta = std::pow(t, 1.0 - gp.eps2);
    for (int D = 0; D < 3; ++D) {
        const Eigen::MatrixXd AD(sym.A[D]);
        Eigen::ArrayXd f(g.npts()), df(g.npts());
        for (long p = 0; p < g.npts(); ++p) {
            f(p) = std::sin(g.coord(p, D));
            df(p) = std::cos(g.coord(p, D));
        }
        for (int j = L.C0(); j < N; ++j) {
            const Eigen::VectorXd v = phys(j);
            RescaledState p = base, q = base;
            for (int c = 0; c < N; ++c) {
                p.W.col(c) += eps * v(c) * f;
                q.W.col(c) -= eps * v(c) * f;
            }
            const Eigen::ArrayXXd J = (rhs_modified(p, g, gp, k).W - rhs_modified(q, g, gp, k).W) * t / (2 * eps);
            const Eigen::VectorXd Av = AD * v, Cv = Acal * v;
            for (int i = L.C0(); i < N; ++i) {
                INFO("D=", D, " ", slot_name(L, i), " <- ", slot_name(L, j));
                const Eigen::ArrayXd expect = -ta * Av(i) * df + Cv(i) * f;
                CHECK((J.col(i) - expect).abs().maxCoeff() < 1e-7);
            }
        }
    }
}

TEST_CASE("hierarchy reduces to diagonal Bc P for spatially constant data") {
    const KasnerData k = aniso();
    GaugeParams gp = default_gauge(k);
    gp.k_order = 1;
    const SymmetrizerSet sym = build(k, gp);
    TorusGrid g(3, M_PI, {8, 8, 8});
    const RescaledState w = background_rescaled(k, gp.eps1, gp.eps2, 0.2, g.npts());
    const HierarchyState hs = build_hierarchy(w, g, gp, sym);
    CHECK(hs.levels.size() == 4);
    const HierarchyState r = hierarchy_rhs(hs, g, gp, k, sym);
    // Level 0 of the background: linear part Bc P W / t is the full right-hand side.
    const Eigen::MatrixXd BcP = Eigen::MatrixXd(sym.Bc) * Eigen::MatrixXd(sym.P_proj);
    const Eigen::ArrayXXd lin = (w.W.matrix() * BcP.transpose()).array() / w.t;
    CHECK(rel_dev(r.levels[0], lin) < 1e-12);
    for (std::size_t i = 1; i < r.levels.size(); ++i) CHECK(r.levels[i].abs().maxCoeff() < 1e-12);
    const auto plain = hierarchy_plain(hs, sym);
    CHECK(testing::max_abs_diff(plain[0], w.W) < 1e-15);
}
