#pragma once

#include <vector>

#include <Eigen/Dense>

#include "ksf/grid.hpp"
#include "ksf/parallel.hpp"
#include "ksf/state.hpp"

namespace ksf::detail {

// Runs kern(p, w, Dw, out) at every grid point p, where w holds the N components of the
// state and Dw[A*N + k] = scale * e_A^W d_W w_k for k >= first (zero below first).
// Frame vectors are read from the e-slots of the state itself.
template <class Kernel>
void pointwise(const FieldState& s, const TorusGrid& g, double scale, int first, int nout, Eigen::ArrayXXd& out,
               Kernel&& kern) {
    const Layout& L = s.lay;
    const int N = L.size(), m = L.m;
    const long np = s.npts();
    std::vector<Eigen::ArrayXXd> grad;
    if (first < N) grad = g.gradient(s.W.rightCols(N - first));
    out.resize(np, nout);
    parallel_for(np, [&](long p0, long p1) {
        std::vector<double> w(N), Dw(static_cast<std::size_t>(m) * N, 0.0), o(nout);
        for (long p = p0; p < p1; ++p) {
            for (int k = 0; k < N; ++k) w[k] = s.W(p, k);
            for (int A = 0; A < m; ++A)
                for (int k = first; k < N; ++k) {
                    double acc = 0.0;
                    for (int W = 0; W < m; ++W) acc += w[L.e(A, W)] * grad[W](p, k - first);
                    Dw[A * N + k] = scale * acc;
                }
            kern(p, w.data(), Dw.data(), o.data());
            for (int k = 0; k < nout; ++k) out(p, k) = o[k];
        }
    });
}

// Index helpers over a point buffer.
struct View {
    const Layout& L;
    const double* w;
    const double* Dw;
    int N;
    View(const Layout& l, const double* w_, const double* Dw_) : L(l), w(w_), Dw(Dw_), N(l.size()) {}

    double e(int a, int W) const { return w[L.e(a, W)]; }
    double al() const { return w[L.alpha()]; }
    double C(int a, int b, int c) const { return w[L.C(a, b, c)]; }
    double U(int a) const { return w[L.U(a)]; }
    double H() const { return w[L.H()]; }
    double S(int a, int b) const { return w[L.S(a, b)]; }
    double Ctr(int a) const {
        double s = 0.0;
        for (int b = 0; b < L.m; ++b) s += C(a, b, b);
        return s;
    }

    // Frame derivative along direction D of each slot.
    double De(int D, int a, int W) const { return Dw[D * N + L.e(a, W)]; }
    double Dal(int D) const { return Dw[D * N + L.alpha()]; }
    double DC(int D, int a, int b, int c) const { return Dw[D * N + L.C(a, b, c)]; }
    double DU(int D, int a) const { return Dw[D * N + L.U(a)]; }
    double DH(int D) const { return Dw[D * N + L.H()]; }
    double DS(int D, int a, int b) const { return Dw[D * N + L.S(a, b)]; }
    double DCtr(int D, int a) const {
        double s = 0.0;
        for (int b = 0; b < L.m; ++b) s += DC(D, a, b, b);
        return s;
    }
};

// Symmetric trace-free part of an m x m row-major buffer, in place.
inline void stf_inplace(double* T, int m) {
    double tr = 0.0;
    for (int a = 0; a < m; ++a) tr += T[a * m + a];
    for (int a = 0; a < m; ++a)
        for (int b = a; b < m; ++b) {
            double v = 0.5 * (T[a * m + b] + T[b * m + a]);
            if (a == b) v -= tr / m;
            T[a * m + b] = T[b * m + a] = v;
        }
}

// Quadratic commutator bracket of the Sigma equation, before the -1/4 factor and the STF projection.
inline void quad_bracket(const View& v, double* T) {
    const int m = v.L.m;
    for (int A = 0; A < m; ++A)
        for (int B = 0; B < m; ++B) {
            double acc = 0.0;
            for (int C = 0; C < m; ++C)
                for (int D = 0; D < m; ++D) {
                    acc += 2.0 * v.C(C, D, A) * v.C(B, C, D) + 2.0 * v.C(C, D, A) * v.C(B, D, C) -
                           v.C(C, A, D) * v.C(B, C, D) + v.C(C, D, A) * v.C(C, B, D) - v.C(C, A, D) * v.C(D, B, C);
                }
            T[A * m + B] = acc;
        }
}

// C_ABC (C_ABC + C_BAC + C_ACB)
inline double cubic_contraction(const View& v) {
    const int m = v.L.m;
    double acc = 0.0;
    for (int A = 0; A < m; ++A)
        for (int B = 0; B < m; ++B)
            for (int C = 0; C < m; ++C) acc += v.C(A, B, C) * (v.C(A, B, C) + v.C(B, A, C) + v.C(A, C, B));
    return acc;
}

}  // namespace ksf::detail
