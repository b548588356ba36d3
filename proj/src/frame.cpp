#include "ksf/frame.hpp"

#include <cmath>
#include <stdexcept>

#include "pointwise.hpp"

namespace ksf {

using detail::View;

namespace {

void require_positive(const FrameState& s) {
    if (!(s.t > 0.0)) throw std::domain_error("frame state requires t > 0");
    if ((s.W.col(s.lay.alpha()) <= 0.0).any()) throw std::domain_error("frame state requires alpha~ > 0");
}

// Connection coefficients from any vector x in composite order (values or derivatives).
void omega_of(const Layout& L, const double* x, double* om) {
    const int n = L.n, m = L.m;
    for (int i = 0; i < n * n * n; ++i) om[i] = 0.0;
    auto at = [&](int a, int b, int c) -> double& { return om[(a * n + b) * n + c]; };
    for (int A = 0; A < m; ++A) {
        at(0, A + 1, 0) = x[L.U(A)];
        at(0, 0, A + 1) = -x[L.U(A)];
        for (int B = 0; B < m; ++B) {
            const double K = (A == B ? x[L.H()] : 0.0) + x[L.S(A, B)];
            at(A + 1, 0, B + 1) = -K;
            at(A + 1, B + 1, 0) = K;
            for (int C = 0; C < m; ++C)
                at(A + 1, B + 1, C + 1) = 0.5 * (x[L.C(B, A, C)] - x[L.C(C, B, A)] - x[L.C(A, C, B)]);
        }
    }
}

}  // namespace

FrameState background_frame(const KasnerData& k, double t, long npts) {
    if (!(t > 0.0)) throw std::domain_error("background requires t > 0");
    FrameState s(t, k.n, npts);
    const Layout& L = s.lay;
    const int m = L.m;
    const double h0 = k.r0 / (2.0 * m);
    const double tp = std::pow(t, -0.5 * k.r0 - 1.0);
    for (int a = 0; a < m; ++a) {
        s.W.col(L.e(a, a)).setConstant(std::pow(t, -0.5 * k.r[a]));
        s.W.col(L.S(a, a)).setConstant((0.5 * k.r[a] - h0) * tp);
    }
    s.W.col(L.alpha()).setConstant(std::pow(t, 0.5 * k.r0));
    s.W.col(L.H()).setConstant(h0 * tp);
    return s;
}

FrameState frame_rhs(const FrameState& s, const TorusGrid& g) {
    require_positive(s);
    const Layout& L = s.lay;
    const int m = L.m, n = L.n, N = L.size();
    const double t = s.t;
    FrameState out(t, n, s.npts());
    detail::pointwise(s, g, 1.0, L.C0(), N, out.W, [&](long, const double* w, const double* Dw, double* o) {
        View v(L, w, Dw);
        const double al = v.al(), H = v.H();
        std::vector<double> Ctr(m);
        for (int a = 0; a < m; ++a) Ctr[a] = v.Ctr(a);

        for (int a = 0; a < m; ++a)
            for (int W = 0; W < m; ++W) {
                double acc = H * v.e(a, W);
                for (int b = 0; b < m; ++b) acc += v.S(a, b) * v.e(b, W);
                o[L.e(a, W)] = -al * acc;
            }

        // C~_A^C_B, outer pair (A, B)
        for (int A = 0; A < m; ++A)
            for (int C = 0; C < m; ++C)
                for (int B = 0; B < m; ++B) {
                    const double dAC = A == C, dBC = B == C;
                    double acc = -(v.DH(A) * dBC - v.DH(B) * dAC);
                    acc -= v.DS(A, B, C) - v.DS(B, A, C);
                    acc -= H * (v.U(A) * dBC - v.U(B) * dAC);
                    acc -= v.U(A) * v.S(B, C) - v.U(B) * v.S(A, C);
                    acc -= H * v.C(A, C, B);
                    for (int D = 0; D < m; ++D) {
                        acc += v.S(A, D) * v.C(B, C, D) - v.S(B, D) * v.C(A, C, D);
                        acc += v.C(A, D, B) * v.S(D, C);
                    }
                    o[L.C(A, C, B)] = al * acc;
                }

        double divU = 0.0, UU = 0.0, SS = 0.0;
        for (int a = 0; a < m; ++a) {
            divU += v.DU(a, a);
            UU += v.U(a) * (v.U(a) - Ctr[a]);
            for (int b = 0; b < m; ++b) SS += v.S(a, b) * v.S(a, b);
        }
        o[L.H()] = -al * H * H + al * (divU + UU - SS) / m + H / t;

        std::vector<double> T(m * m), Q(m * m);
        detail::quad_bracket(v, Q.data());
        for (int A = 0; A < m; ++A)
            for (int B = 0; B < m; ++B) {
                double acc = v.DU(A, B) + v.U(A) * v.U(B) - v.DCtr(A, B) - 0.25 * Q[A * m + B];
                for (int C = 0; C < m; ++C) acc += -v.DC(C, C, A, B) - v.U(C) * v.C(C, A, B) + Ctr[C] * v.C(C, A, B);
                T[A * m + B] = al * acc;
            }
        detail::stf_inplace(T.data(), m);
        for (int A = 0; A < m; ++A)
            for (int B = 0; B < m; ++B) o[L.S(A, B)] = -m * al * H * v.S(A, B) + T[A * m + B] - v.S(A, B) / t;

        o[L.alpha()] = m * H * al * al;

        for (int A = 0; A < m; ++A) {
            double acc = m * v.DH(A) + (n - 2) * H * v.U(A);
            for (int B = 0; B < m; ++B) acc -= v.S(A, B) * v.U(B);
            o[L.U(A)] = al * acc;
        }
    });
    return out;
}

ConstraintFields frame_constraints(const FrameState& s, const TorusGrid& g) {
    require_positive(s);
    const Layout& L = s.lay;
    const int m = L.m, n = L.n;
    const double t = s.t;
    const int nA = m * m * m, nB = m * m, nC = m * m * m * m;
    const int off_B = nA, off_C = off_B + nB, off_D = off_C + nC, off_M = off_D + m, off_H = off_M + m;
    Eigen::ArrayXXd all;
    detail::pointwise(s, g, 1.0, 0, off_H + 1, all, [&](long, const double* w, const double* Dw, double* o) {
        View v(L, w, Dw);
        const double al = v.al();
        for (int A = 0; A < m; ++A)
            for (int B = 0; B < m; ++B) {
                for (int W = 0; W < m; ++W) {
                    double acc = v.De(A, B, W) - v.De(B, A, W);
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
                        for (int E = 0; E < m; ++E)
                            acc += v.C(A, E, B) * v.C(C, D, E) + v.C(B, E, C) * v.C(A, D, E) + v.C(C, E, A) * v.C(B, D, E);
                        o[off_C + ((A * m + B) * m + C) * m + D] = acc;
                    }
        for (int A = 0; A < m; ++A) o[off_D + A] = v.Dal(A) - al * v.U(A);
        std::vector<double> Ctr(m);
        for (int a = 0; a < m; ++a) Ctr[a] = v.Ctr(a);
        for (int A = 0; A < m; ++A) {
            double acc = -(n - 2) * v.DH(A) + v.U(A) / (al * t);
            for (int B = 0; B < m; ++B) {
                acc += v.DS(B, A, B) - Ctr[B] * v.S(A, B);
                for (int C = 0; C < m; ++C) acc += v.C(A, B, C) * v.S(B, C);
            }
            o[off_M + A] = acc;
        }
        const double H = v.H();
        double acc = m * (n - 2) * H * H + 2.0 * m * H / (al * t) - 0.25 * detail::cubic_contraction(v);
        for (int A = 0; A < m; ++A) {
            acc += 2.0 * v.DCtr(A, A) - Ctr[A] * Ctr[A];
            for (int B = 0; B < m; ++B) acc -= v.S(A, B) * v.S(A, B);
        }
        o[off_H] = acc;
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

ConnectionCurvature curvature(const FrameState& s, const TorusGrid& g) {
    require_positive(s);
    const Layout& L = s.lay;
    const int n = L.n, m = L.m, N = L.size();
    const FrameState dt = frame_rhs(s, g);
    ConnectionCurvature cc;
    cc.n = n;
    const int n3 = n * n * n, n4 = n3 * n;
    Eigen::ArrayXXd all;
    detail::pointwise(s, g, 1.0, L.C0(), n3 + n4 + n * n + 1, all,
                      [&](long p, const double* w, const double* Dw, double* o) {
                          const double al = w[L.alpha()];
                          std::vector<double> xdot(N);
                          for (int k = 0; k < N; ++k) xdot[k] = dt.W(p, k);
                          std::vector<double> om(n3), dom(static_cast<std::size_t>(n) * n3);
                          omega_of(L, w, om.data());
                          // dom[a] = e_a(omega): e_0 = (1/alpha~) d_t, e_A from grid derivatives
                          omega_of(L, xdot.data(), dom.data());
                          for (int i = 0; i < n3; ++i) dom[i] /= al;
                          for (int A = 0; A < m; ++A) omega_of(L, Dw + A * N, dom.data() + (A + 1) * n3);
                          auto w3 = [&](int a, int b, int c) { return om[(a * n + b) * n + c]; };
                          auto e3 = [&](int a, int b, int c, int d) { return dom[a * n3 + (b * n + c) * n + d]; };
                          for (int i = 0; i < n3; ++i) o[i] = om[i];
                          double* R = o + n3;
                          for (int i = 0; i < n; ++i)
                              for (int j = 0; j < n; ++j)
                                  for (int k = 0; k < n; ++k)
                                      for (int l = 0; l < n; ++l) {
                                          double v = e3(i, j, k, l) - e3(j, i, k, l);
                                          for (int f = 0; f < n; ++f) {
                                              const double eta = f == 0 ? -1.0 : 1.0;
                                              v += eta * (w3(j, f, k) * w3(i, f, l) + w3(j, f, i) * w3(f, k, l) -
                                                          w3(i, f, k) * w3(j, f, l) - w3(i, f, j) * w3(f, k, l));
                                          }
                                          R[((i * n + j) * n + k) * n + l] = v;
                                      }
                          double* Ric = R + n4;
                          double sc = 0.0;
                          for (int a = 0; a < n; ++a)
                              for (int c = 0; c < n; ++c) {
                                  double v = 0.0;
                                  for (int b = 0; b < n; ++b) v += (b == 0 ? -1.0 : 1.0) * R[((a * n + b) * n + c) * n + b];
                                  Ric[a * n + c] = v;
                                  if (a == c) sc += (a == 0 ? -1.0 : 1.0) * v;
                              }
                          Ric[n * n] = sc;
                      });
    cc.omega = all.middleCols(0, n3);
    cc.riemann = all.middleCols(n3, n4);
    cc.ricci = all.middleCols(n3 + n4, n * n);
    cc.scalar = all.col(n3 + n4 + n * n);
    return cc;
}

Eigen::ArrayXXd weyl_electric(const ConnectionCurvature& cc) {
    const int n = cc.n, m = n - 1;
    const long np = cc.riemann.rows();
    Eigen::ArrayXXd E(np, m * m);
    for (long p = 0; p < np; ++p) {
        const double R00 = cc.ricci(p, 0), R = cc.scalar[p];
        for (int A = 0; A < m; ++A)
            for (int B = 0; B < m; ++B) {
                const double RA0B0 = cc.riemann(p, cc.i4(A + 1, 0, B + 1, 0));
                const double RAB = cc.ricci(p, (A + 1) * n + B + 1);
                const double dAB = A == B;
                E(p, A * m + B) = RA0B0 - (R00 * dAB - RAB) / (n - 2.0) - R * dAB / ((n - 1.0) * (n - 2.0));
            }
    }
    return E;
}

}  // namespace ksf
