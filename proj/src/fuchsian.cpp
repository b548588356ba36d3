#include "ksf/fuchsian.hpp"

#include <cmath>
#include <stdexcept>

#include "ksf/symmetrizer.hpp"
#include "pointwise.hpp"

namespace ksf {

using detail::View;

namespace {

void require_valid(const RescaledState& w) {
    if (!(w.t > 0.0)) throw std::domain_error("rescaled state requires t > 0");
    if ((w.W.col(w.lay.alpha()) <= 0.0).any()) throw std::domain_error("rescaled state requires alpha > 0");
}

double tau(const RescaledState& w, const GaugeParams& gp) { return std::pow(w.t, 1.0 - gp.eps2); }

// Momentum constraint M_A (rescaled) at one point.
void momentum(const View& v, const KasnerData& k, double* M) {
    const int m = v.L.m, n = v.L.n;
    const double k0 = 1.0 + 0.5 * k.r0;
    for (int A = 0; A < m; ++A) {
        double acc = -(n - 2) * v.DH(A) + (k0 - 0.5 * k.r[A]) * v.U(A) - 0.5 * k.r[A] * v.Ctr(A) + (n - 2) * v.H() * v.U(A);
        for (int B = 0; B < m; ++B) {
            acc += v.DS(B, A, B) + 0.5 * k.r[B] * v.C(A, B, B) - v.S(A, B) * v.U(B) - v.Ctr(B) * v.S(A, B);
            for (int C = 0; C < m; ++C) acc += v.C(A, B, C) * v.S(B, C);
        }
        M[A] = acc;
    }
}

double hamiltonian(const View& v, const KasnerData& k) {
    const int m = v.L.m, n = v.L.n;
    const double H = v.H();
    double acc = m * (n - 2) * H * H + (n - 2) * k.r0 * H + 2.0 * m * H - 0.25 * detail::cubic_contraction(v);
    for (int A = 0; A < m; ++A) {
        const double ct = v.Ctr(A);
        acc += 2.0 * v.DCtr(A, A) - k.r[A] * v.S(A, A) - 2.0 * v.U(A) * ct - ct * ct;
        for (int B = 0; B < m; ++B) acc -= v.S(A, B) * v.S(A, B);
    }
    return acc;
}

// t * dW/dt of the rescaled system without the momentum-constraint additions.
void base_kernel(const View& v, const KasnerData& k, const GaugeParams& gp, double* o) {
    const Layout& L = v.L;
    const int m = L.m, n = L.n;
    const double k0 = gp.kappa0(k), k1 = gp.kappa1(k), k2 = gp.kappa2(k);
    const double H = v.H();
    std::vector<double> Ctr(m);
    for (int a = 0; a < m; ++a) Ctr[a] = v.Ctr(a);

    for (int A = 0; A < m; ++A)
        for (int W = 0; W < m; ++W) {
            double acc = (k2 - 0.5 * k.r[A] + (n - 2) * H) * v.e(A, W);
            for (int B = 0; B < m; ++B) acc -= v.S(A, B) * v.e(B, W);
            o[L.e(A, W)] = acc;
        }
    o[L.alpha()] = (k1 + m * H) * v.al();

    // C_ABC with outer pair (A, C)
    for (int A = 0; A < m; ++A)
        for (int B = 0; B < m; ++B)
            for (int C = 0; C < m; ++C) {
                const double dCB = C == B, dAB = A == B;
                const double kap = k0 - 0.5 * (k.r[A] + k.r[C] - k.r[B]);
                double acc = (kap + (n - 2) * H) * v.C(A, B, C);
                acc -= v.DH(A) * dCB - v.DH(C) * dAB;
                acc -= v.DS(A, C, B) - v.DS(C, A, B);
                for (int D = 0; D < m; ++D)
                    acc += v.S(A, D) * v.C(C, B, D) - v.S(C, D) * v.C(A, B, D) + v.C(A, D, C) * v.S(D, B);
                o[L.C(A, B, C)] = acc;
            }

    for (int A = 0; A < m; ++A) {
        double acc = (k0 - 0.5 * k.r[A] + (n - 2) * H) * v.U(A) + m * v.DH(A);
        for (int B = 0; B < m; ++B) acc -= v.S(A, B) * v.U(B);
        o[L.U(A)] = acc;
    }

    double hh = 0.25 * detail::cubic_contraction(v);
    for (int A = 0; A < m; ++A) hh += v.DU(A, A) - 2.0 * v.DCtr(A, A) + v.U(A) * Ctr[A] + Ctr[A] * Ctr[A];
    o[L.H()] = hh / m;

    std::vector<double> T(m * m), Q(m * m);
    detail::quad_bracket(v, Q.data());
    for (int A = 0; A < m; ++A)
        for (int B = 0; B < m; ++B) {
            double acc = v.DU(A, B) - v.DCtr(A, B) + v.U(A) * Ctr[B] - 0.25 * Q[A * m + B];
            for (int C = 0; C < m; ++C) acc += -v.DC(C, C, A, B) + Ctr[C] * v.C(C, A, B);
            T[A * m + B] = acc;
        }
    detail::stf_inplace(T.data(), m);
    for (int A = 0; A < m; ++A)
        for (int B = 0; B < m; ++B) o[L.S(A, B)] = T[A * m + B];
}

RescaledState rhs_impl(const RescaledState& w, const TorusGrid& g, const GaugeParams& gp, const KasnerData& k,
                       bool modified) {
    require_valid(w);
    const Layout& L = w.lay;
    const int m = L.m, N = L.size();
    const double t = w.t;
    RescaledState out(t, L.n, w.npts());
    detail::pointwise(w, g, tau(w, gp), L.C0(), N, out.W, [&](long, const double* x, const double* Dx, double* o) {
        View v(L, x, Dx);
        base_kernel(v, k, gp, o);
        if (modified && (gp.gamma != 0.0 || gp.mu != 0.0)) {
            std::vector<double> M(m);
            momentum(v, k, M.data());
            for (int A = 0; A < m; ++A) o[L.U(A)] += gp.gamma * M[A];
            if (gp.mu != 0.0)
                for (int A = 0; A < m; ++A)
                    for (int B = 0; B < m; ++B)
                        for (int C = 0; C < m; ++C)
                            o[L.C(A, B, C)] += 0.5 * gp.mu * (M[A] * (C == B) - M[C] * (A == B));
        }
        for (int i = 0; i < N; ++i) o[i] /= t;
    });
    return out;
}

}  // namespace

RescaledState background_rescaled(const KasnerData& k, double eps1, double eps2, double t, long npts) {
    if (!(t > 0.0)) throw std::domain_error("background requires t > 0");
    GaugeParams gp;
    gp.eps1 = eps1;
    gp.eps2 = eps2;
    gp.nu = 0.5 * (1.0 - eps2);
    const auto v = gp.violations(k);
    for (const auto& s : v)
        if (s.rfind("eps", 0) == 0) throw std::invalid_argument("background exponents inadmissible: " + s);
    RescaledState w(t, k.n, npts);
    const Layout& L = w.lay;
    w.W.col(L.alpha()).setConstant(std::pow(t, eps1 + 0.5 * k.r0));
    for (int a = 0; a < L.m; ++a) w.W.col(L.e(a, a)).setConstant(std::pow(t, eps2 + 0.5 * k.r0 - 0.5 * k.r[a]));
    return w;
}

RescaledState rescale(const FrameState& s, const GaugeParams& gp, const KasnerData& k) {
    if (!(s.t > 0.0)) throw std::domain_error("rescale requires t > 0");
    const Layout& L = s.lay;
    const int m = L.m;
    const double t = s.t, h0 = k.r0 / (2.0 * m);
    RescaledState w(t, L.n, s.npts());
    const Eigen::ArrayXd at = s.W.col(L.alpha());
    const Eigen::ArrayXd f = t * at;
    w.W.col(L.alpha()) = std::pow(t, gp.eps1) * at;
    for (int i = 0; i < m * m; ++i) w.W.col(L.e0() + i) = std::pow(t, gp.eps2) * at * s.W.col(L.e0() + i);
    for (int i = 0; i < m * m * m; ++i) w.W.col(L.C0() + i) = f * s.W.col(L.C0() + i);
    for (int a = 0; a < m; ++a) w.W.col(L.U(a)) = f * s.W.col(L.U(a));
    w.W.col(L.H()) = f * s.W.col(L.H()) - h0;
    for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b)
            w.W.col(L.S(a, b)) = f * s.W.col(L.S(a, b)) - (a == b ? 0.5 * k.r[a] - h0 : 0.0);
    return w;
}

FrameState unrescale(const RescaledState& w, const GaugeParams& gp, const KasnerData& k) {
    require_valid(w);
    const Layout& L = w.lay;
    const int m = L.m;
    const double t = w.t, h0 = k.r0 / (2.0 * m);
    FrameState s(t, L.n, w.npts());
    const Eigen::ArrayXd at = std::pow(t, -gp.eps1) * w.W.col(L.alpha());
    const Eigen::ArrayXd f = 1.0 / (t * at);
    s.W.col(L.alpha()) = at;
    for (int i = 0; i < m * m; ++i) s.W.col(L.e0() + i) = w.W.col(L.e0() + i) / (std::pow(t, gp.eps2) * at);
    for (int i = 0; i < m * m * m; ++i) s.W.col(L.C0() + i) = f * w.W.col(L.C0() + i);
    for (int a = 0; a < m; ++a) s.W.col(L.U(a)) = f * w.W.col(L.U(a));
    s.W.col(L.H()) = f * (w.W.col(L.H()) + h0);
    for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b)
            s.W.col(L.S(a, b)) = f * (w.W.col(L.S(a, b)) + (a == b ? 0.5 * k.r[a] - h0 : 0.0));
    return s;
}

RescaledState rhs_base(const RescaledState& w, const TorusGrid& g, const GaugeParams& gp, const KasnerData& k) {
    return rhs_impl(w, g, gp, k, false);
}

RescaledState rhs_modified(const RescaledState& w, const TorusGrid& g, const GaugeParams& gp, const KasnerData& k) {
    return rhs_impl(w, g, gp, k, true);
}

RescaledState rescaled_time_derivative(const FrameState& s, const TorusGrid& g, const GaugeParams& gp,
                                       const KasnerData& k, double h_rel) {
    const FrameState ds = frame_rhs(s, g);
    const double h = h_rel * s.t;
    auto at = [&](double c) {
        FrameState p = s;
        p.t = s.t + c * h;
        p.W += (c * h) * ds.W;
        return rescale(p, gp, k).W;
    };
    RescaledState out(s.t, s.lay.n, s.npts());
    out.W = (at(-2.0) - 8.0 * at(-1.0) + 8.0 * at(1.0) - at(2.0)) / (12.0 * h);
    return out;
}

void impose_lapse_constraint(RescaledState& w, const TorusGrid& g, const GaugeParams& gp) {
    const Layout& L = w.lay;
    const int m = L.m;
    const Eigen::ArrayXd al = w.W.col(L.alpha());
    std::vector<Eigen::ArrayXd> grad(m);
    for (int W = 0; W < m; ++W) grad[W] = g.active(W) ? g.derivative(al, W) : Eigen::ArrayXd::Zero(al.size());
    const double ta = tau(w, gp);
    for (int A = 0; A < m; ++A) {
        Eigen::ArrayXd acc = Eigen::ArrayXd::Zero(al.size());
        for (int W = 0; W < m; ++W) acc += w.W.col(L.e(A, W)) * grad[W];
        w.W.col(L.U(A)) = ta * acc / al;
    }
}

ConstraintFields rescaled_constraints(const RescaledState& w, const TorusGrid& g, const GaugeParams& gp,
                                      const KasnerData& k) {
    if (!(w.t > 0.0)) throw std::domain_error("rescaled constraints require t > 0");
    const Layout& L = w.lay;
    const int m = L.m;
    const int nA = m * m * m, nB = m * m, nC = m * m * m * m;
    const int off_B = nA, off_C = off_B + nB, off_D = off_C + nC, off_M = off_D + m, off_H = off_M + m;
    Eigen::ArrayXXd all;
    detail::pointwise(w, g, tau(w, gp), 0, off_H + 1, all, [&](long, const double* x, const double* Dx, double* o) {
        View v(L, x, Dx);
        for (int A = 0; A < m; ++A)
            for (int B = 0; B < m; ++B) {
                for (int W = 0; W < m; ++W) {
                    double acc = v.De(A, B, W) - v.De(B, A, W) - (v.U(A) * v.e(B, W) - v.U(B) * v.e(A, W));
                    for (int C = 0; C < m; ++C) acc -= v.C(A, C, B) * v.e(C, W);
                    o[(A * m + B) * m + W] = acc;
                }
                double acc = v.DU(A, B) - v.DU(B, A);
                for (int C = 0; C < m; ++C) acc -= v.C(A, C, B) * v.U(C);
                o[off_B + A * m + B] = acc;
            }
        for (int A = 0; A < m; ++A)
            for (int B = 0; B < m; ++B)
                for (int C = 0; C < m; ++C)
                    for (int D = 0; D < m; ++D) {
                        double acc = v.DC(C, A, D, B) + v.DC(A, B, D, C) + v.DC(B, C, D, A);
                        acc -= v.U(C) * v.C(A, D, B) + v.U(A) * v.C(B, D, C) + v.U(B) * v.C(C, D, A);
                        for (int E = 0; E < m; ++E)
                            acc += v.C(A, E, B) * v.C(C, D, E) + v.C(B, E, C) * v.C(A, D, E) + v.C(C, E, A) * v.C(B, D, E);
                        o[off_C + ((A * m + B) * m + C) * m + D] = acc;
                    }
        for (int A = 0; A < m; ++A) o[off_D + A] = v.al() * v.U(A) - v.Dal(A);
        momentum(v, k, o + off_M);
        o[off_H] = hamiltonian(v, k);
    });
    ConstraintFields c;
    c.A = all.middleCols(0, nA);
    c.B = all.middleCols(off_B, nB);
    c.Cj = all.middleCols(off_C, nC);
    c.D = all.middleCols(off_D, m);
    c.M = all.middleCols(off_M, m);
    c.H = all.middleCols(off_H, 1);
    return c;
}

int HierarchyState::order(std::size_t i) const {
    int s = 0;
    for (int v : index[i]) s += v;
    return s;
}

int HierarchyState::find(const std::vector<int>& b) const {
    for (std::size_t i = 0; i < index.size(); ++i)
        if (index[i] == b) return static_cast<int>(i);
    return -1;
}

std::vector<std::vector<int>> multi_indices_upto(const TorusGrid& g, int k) {
    std::vector<std::vector<int>> out;
    std::vector<int> cur(g.m(), 0);
    for (int order = 0; order <= k; ++order) {
        // enumerate compositions of `order` over active axes in lexicographic order
        std::vector<int> act;
        for (int a = 0; a < g.m(); ++a)
            if (g.active(a)) act.push_back(a);
        if (act.empty()) {
            if (order == 0) out.push_back(cur);
            continue;
        }
        std::vector<int> c(act.size(), 0);
        auto rec = [&](auto&& self, std::size_t i, int left) -> void {
            if (i + 1 == act.size()) {
                c[i] = left;
                std::vector<int> b(g.m(), 0);
                for (std::size_t j = 0; j < act.size(); ++j) b[act[j]] = c[j];
                out.push_back(b);
                return;
            }
            for (int v = left; v >= 0; --v) {
                c[i] = v;
                self(self, i + 1, left - v);
            }
        };
        rec(rec, 0, order);
    }
    return out;
}

HierarchyState build_hierarchy(const RescaledState& w, const TorusGrid& g, const GaugeParams& gp,
                               const SymmetrizerSet& sym) {
    HierarchyState hs;
    hs.t = w.t;
    hs.k = gp.k_order;
    hs.lay = w.lay;
    hs.index = multi_indices_upto(g, gp.k_order);
    const Eigen::MatrixXd VinvT = sym.Vinv.transpose();
    for (std::size_t i = 0; i < hs.index.size(); ++i) {
        const int ord = hs.order(i);
        Eigen::ArrayXXd lvl = std::pow(w.t, ord * gp.nu) * g.partial(w.W, hs.index[i]);
        if (ord == hs.k) lvl = (lvl.matrix() * VinvT).array();
        hs.levels.push_back(std::move(lvl));
    }
    return hs;
}

std::vector<Eigen::ArrayXXd> hierarchy_plain(const HierarchyState& hs, const SymmetrizerSet& sym) {
    std::vector<Eigen::ArrayXXd> out;
    const Eigen::MatrixXd VT = sym.V.transpose();
    for (std::size_t i = 0; i < hs.levels.size(); ++i)
        out.push_back(hs.order(i) == hs.k ? Eigen::ArrayXXd((hs.levels[i].matrix() * VT).array()) : hs.levels[i]);
    return out;
}

HierarchyState hierarchy_rhs(const HierarchyState& hs, const TorusGrid& g, const GaugeParams& gp,
                             const KasnerData& k, const SymmetrizerSet& sym) {
    const auto plain = hierarchy_plain(hs, sym);
    RescaledState w0(hs.t, hs.lay.n, plain[0].rows());
    w0.W = plain[0];
    const RescaledState Fb = rhs_base(w0, g, gp, k);
    const RescaledState Fm = hs.k > 0 ? rhs_modified(w0, g, gp, k) : Fb;
    HierarchyState out = hs;
    const Eigen::MatrixXd VinvT = sym.Vinv.transpose();
    for (std::size_t i = 0; i < hs.index.size(); ++i) {
        const int ord = hs.order(i);
        const bool top = ord == hs.k;
        const Eigen::ArrayXXd& F = (top && hs.k > 0) ? Fm.W : Fb.W;
        Eigen::ArrayXXd r = (ord * gp.nu / hs.t) * plain[i] + std::pow(hs.t, ord * gp.nu) * g.partial(F, hs.index[i]);
        if (top) r = (r.matrix() * VinvT).array();
        out.levels[i] = std::move(r);
    }
    return out;
}

}  // namespace ksf
