#include "ksf/symmetrizer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include <boost/rational.hpp>
#include <unsupported/Eigen/SparseExtra>

namespace ksf {

// ---------------------------------------------------------------- exact matrices

ExactMatrix::ExactMatrix(int r, int c, std::int64_t d) : rows(r), cols(c), den(d), num(static_cast<std::size_t>(r) * c, 0) {}

ExactMatrix ExactMatrix::identity(int size) {
    ExactMatrix I(size, size);
    for (int i = 0; i < size; ++i) I(i, i) = 1;
    return I;
}

ExactMatrix ExactMatrix::transpose() const {
    ExactMatrix t(cols, rows, den);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) t(j, i) = (*this)(i, j);
    return t;
}

ExactMatrix ExactMatrix::scaled(std::int64_t p, std::int64_t q) const {
    if (q == 0) throw std::invalid_argument("ExactMatrix::scaled: zero denominator");
    if (q < 0) p = -p, q = -q;
    ExactMatrix r = *this;
    for (auto& v : r.num) v *= p;
    r.den *= q;
    r.reduce();
    return r;
}

void ExactMatrix::reduce() {
    std::int64_t g = den;
    for (auto v : num) g = std::gcd(g, v);
    if (g > 1) {
        for (auto& v : num) v /= g;
        den /= g;
    }
}

bool ExactMatrix::operator==(const ExactMatrix& o) const {
    if (rows != o.rows || cols != o.cols) return false;
    for (std::size_t i = 0; i < num.size(); ++i)
        if (static_cast<__int128>(num[i]) * o.den != static_cast<__int128>(o.num[i]) * den) return false;
    return true;
}

ExactMatrix operator*(const ExactMatrix& x, const ExactMatrix& y) {
    if (x.cols != y.rows) throw std::invalid_argument("ExactMatrix product: shape mismatch");
    ExactMatrix r(x.rows, y.cols, x.den * y.den);
    for (int i = 0; i < x.rows; ++i)
        for (int k = 0; k < x.cols; ++k) {
            const std::int64_t v = x(i, k);
            if (v == 0) continue;
            for (int j = 0; j < y.cols; ++j)
                if (y(k, j) != 0) r(i, j) += v * y(k, j);
        }
    r.reduce();
    return r;
}

ExactMatrix operator+(const ExactMatrix& x, const ExactMatrix& y) {
    if (x.rows != y.rows || x.cols != y.cols) throw std::invalid_argument("ExactMatrix sum: shape mismatch");
    const std::int64_t l = std::lcm(x.den, y.den);
    ExactMatrix r(x.rows, x.cols, l);
    for (std::size_t i = 0; i < r.num.size(); ++i) r.num[i] = x.num[i] * (l / x.den) + y.num[i] * (l / y.den);
    r.reduce();
    return r;
}

namespace structural {
namespace {
inline int dl(int i, int j) { return i == j ? 1 : 0; }
inline int c3(int m, int a, int b, int c) { return (a * m + b) * m + c; }
// 2m * STF4(A,B;P,Q)
inline std::int64_t stf4n(int m, int A, int B, int P, int Q) {
    return m * (dl(A, P) * dl(B, Q) + dl(A, Q) * dl(B, P)) - 2 * dl(A, B) * dl(P, Q);
}
// 2 * K1(A,B,C;P)
inline std::int64_t k1n(int A, int B, int C, int P) { return dl(A, P) * dl(C, B) - dl(C, P) * dl(A, B); }
// 2 * K2(A;P,Q,R)
inline std::int64_t k2n(int A, int P, int Q, int R) { return dl(A, P) * dl(R, Q) - dl(A, R) * dl(P, Q); }
}  // namespace

ExactMatrix k1(int m) {
    ExactMatrix M(m * m * m, m, 2);
    for (int A = 0; A < m; ++A)
        for (int B = 0; B < m; ++B)
            for (int C = 0; C < m; ++C)
                for (int P = 0; P < m; ++P) M(c3(m, A, B, C), P) = k1n(A, B, C, P);
    return M;
}

ExactMatrix k2(int m) {
    ExactMatrix M(m, m * m * m, 2);
    for (int A = 0; A < m; ++A)
        for (int P = 0; P < m; ++P)
            for (int Q = 0; Q < m; ++Q)
                for (int R = 0; R < m; ++R) M(A, c3(m, P, Q, R)) = k2n(A, P, Q, R);
    return M;
}

ExactMatrix stf4(int m) {
    ExactMatrix M(m * m, m * m, 2 * m);
    for (int A = 0; A < m; ++A)
        for (int B = 0; B < m; ++B)
            for (int P = 0; P < m; ++P)
                for (int Q = 0; Q < m; ++Q) M(A * m + B, P * m + Q) = stf4n(m, A, B, P, Q);
    M.reduce();
    return M;
}

ExactMatrix x(int m) {
    ExactMatrix M(m * m * m, m * m * m, 4);
    for (int A = 0; A < m; ++A)
        for (int B = 0; B < m; ++B)
            for (int C = 0; C < m; ++C)
                for (int P = 0; P < m; ++P)
                    for (int Q = 0; Q < m; ++Q)
                        for (int R = 0; R < m; ++R)
                            M(c3(m, A, B, C), c3(m, P, Q, R)) =
                                dl(A, P) * dl(B, C) * dl(Q, R) - dl(A, R) * dl(B, C) * dl(P, Q) -
                                dl(C, P) * dl(A, B) * dl(Q, R) + dl(C, R) * dl(A, B) * dl(P, Q);
    return M;
}

ExactMatrix m3(int m, int D) {
    ExactMatrix M(m * m * m, m * m, 4 * m);
    for (int A = 0; A < m; ++A)
        for (int B = 0; B < m; ++B)
            for (int C = 0; C < m; ++C)
                for (int P = 0; P < m; ++P)
                    for (int Q = 0; Q < m; ++Q)
                        M(c3(m, A, B, C), P * m + Q) = dl(A, D) * stf4n(m, C, B, P, Q) - dl(C, D) * stf4n(m, A, B, P, Q);
    M.reduce();
    return M;
}

ExactMatrix m4(int m, int D) {
    ExactMatrix M(m * m * m, m * m, 4 * m);
    for (int A = 0; A < m; ++A)
        for (int B = 0; B < m; ++B)
            for (int C = 0; C < m; ++C)
                for (int P = 0; P < m; ++P)
                    for (int Q = 0; Q < m; ++Q)
                        M(c3(m, A, B, C), P * m + Q) = m * (dl(D, P) * k1n(A, B, C, Q) + dl(D, Q) * k1n(A, B, C, P)) -
                                                       2 * dl(P, Q) * k1n(A, B, C, D);
    M.reduce();
    return M;
}

ExactMatrix m3_adj(int m, int D) {
    ExactMatrix M(m * m, m * m * m, 4 * m);
    for (int A = 0; A < m; ++A)
        for (int B = 0; B < m; ++B)
            for (int P = 0; P < m; ++P)
                for (int Q = 0; Q < m; ++Q)
                    for (int R = 0; R < m; ++R)
                        M(A * m + B, c3(m, P, Q, R)) = dl(D, P) * stf4n(m, A, B, R, Q) - dl(D, R) * stf4n(m, A, B, P, Q);
    M.reduce();
    return M;
}

ExactMatrix m4_adj(int m, int D) {
    ExactMatrix M(m * m, m * m * m, 4 * m);
    for (int A = 0; A < m; ++A)
        for (int B = 0; B < m; ++B)
            for (int P = 0; P < m; ++P)
                for (int Q = 0; Q < m; ++Q)
                    for (int R = 0; R < m; ++R)
                        M(A * m + B, c3(m, P, Q, R)) = m * (dl(A, D) * k2n(B, P, Q, R) + dl(B, D) * k2n(A, P, Q, R)) -
                                                       2 * dl(A, B) * k2n(D, P, Q, R);
    M.reduce();
    return M;
}

ExactMatrix n_mat(int m, int D) {
    ExactMatrix M(m, m * m, 2 * m);
    for (int A = 0; A < m; ++A)
        for (int P = 0; P < m; ++P)
            for (int Q = 0; Q < m; ++Q) M(A, P * m + Q) = stf4n(m, D, A, P, Q);
    M.reduce();
    return M;
}

ExactMatrix n_adj(int m, int D) {
    ExactMatrix M(m * m, m, 2 * m);
    for (int A = 0; A < m; ++A)
        for (int B = 0; B < m; ++B)
            for (int P = 0; P < m; ++P) M(A * m + B, P) = stf4n(m, A, B, D, P);
    M.reduce();
    return M;
}
}  // namespace structural

// ---------------------------------------------------------------- parameters

SymmetrizerParams solve_params(int n, double mu, double gamma, double b, double c, double d, double h, double l) {
    const double nn = n;
    const double den1 = 4.0 * h * gamma + l * (nn - 1) * (2.0 - 6.0 * gamma + nn * (2.0 * gamma - mu - 2.0) + mu);
    const double den2 = (nn - 1) * (nn - 1) * (2.0 + (nn - 2) * mu);
    if (den1 == 0.0) {
        std::ostringstream os;
        os << "solve_params: singular denominator 4 h gamma + l (n-1)(2 - 6 gamma + n(2 gamma - mu - 2) + mu) = 0"
           << " (n=" << n << ", mu=" << mu << ", gamma=" << gamma << ", h=" << h << ", l=" << l << ")";
        throw std::domain_error(os.str());
    }
    if (den2 == 0.0) {
        std::ostringstream os;
        os << "solve_params: singular denominator 2 + (n-2) mu = 0 (n=" << n << ", mu=" << mu << ")";
        throw std::domain_error(os.str());
    }
    const double g1 = 1.0 + nn * (gamma - 1.0) - 2.0 * gamma;
    SymmetrizerParams r;
    r.p = c * l * (l * (nn - 1) * g1 + h * gamma) / den1;
    r.q = c * l * (h * (mu - 2.0) + l * (nn - 1) * (2.0 + (nn - 2) * mu)) / den1;
    r.s = (-2.0 * d * l * (nn - 1) * g1 - 2.0 * d * h * gamma +
           b * (l * (nn * nn - 4 * nn + 3) * g1 + 2.0 * h * (nn - 2) * gamma)) /
          den2;
    r.u = (-b * (nn - 2) * (2.0 * h + l * (nn * nn - 4 * nn + 3)) + 2.0 * d * (h + l * (nn * nn - 3 * nn + 2))) /
          (2.0 * (nn - 1) * (nn - 1));
    r.a = 2.0 * c * (l * (nn - 1) * g1 + h * gamma) / den1;
    return r;
}

// ---------------------------------------------------------------- assembly

namespace {

using Trip = Eigen::Triplet<double>;

struct Builder {
    int N;
    std::vector<Trip> t;
    explicit Builder(int n) : N(n) {}
    void add(int i, int j, double v) {
        if (v != 0.0) t.emplace_back(i, j, v);
    }
    void block(int r0, int c0, const ExactMatrix& M, double scale) {
        if (scale == 0.0) return;
        for (int i = 0; i < M.rows; ++i)
            for (int j = 0; j < M.cols; ++j)
                if (M(i, j) != 0) t.emplace_back(r0 + i, c0 + j, scale * M.value(i, j));
    }
    // One column (or row) of a structural matrix placed as a column (row) block.
    void column(int r0, int c0, const ExactMatrix& M, int col, double scale) {
        for (int i = 0; i < M.rows; ++i)
            if (M(i, col) != 0) add(r0 + i, c0, scale * M.value(i, col));
    }
    void row(int r0, int c0, const ExactMatrix& M, int rw, double scale) {
        for (int j = 0; j < M.cols; ++j)
            if (M(rw, j) != 0) add(r0, c0 + j, scale * M.value(rw, j));
    }
    SpMat done() {
        SpMat M(N, N);
        M.setFromTriplets(t.begin(), t.end());
        M.prune(0.0);
        return M;
    }
};

struct Structural {
    int m;
    ExactMatrix K1, K2, X, I3;
    std::vector<ExactMatrix> M3, M4, M3a, M4a, Nd, Na;
    explicit Structural(int m_) : m(m_) {
        K1 = structural::k1(m);
        K2 = structural::k2(m);
        X = structural::x(m);
        I3 = ExactMatrix::identity(m * m * m);
        for (int D = 0; D < m; ++D) {
            M3.push_back(structural::m3(m, D));
            M4.push_back(structural::m4(m, D));
            M3a.push_back(structural::m3_adj(m, D));
            M4a.push_back(structural::m4_adj(m, D));
            Nd.push_back(structural::n_mat(m, D));
            Na.push_back(structural::n_adj(m, D));
        }
    }
};

void add_identity(Builder& B, int r0, int size, double v) {
    for (int i = 0; i < size; ++i) B.add(r0 + i, r0 + i, v);
}

// Closed forms of B^0 and B^D, an independent check on the products.
SpMat b0_closed(const Layout& L, const GaugeParams& g, const Structural& S) {
    const int m = L.m, n = L.n;
    Builder B(L.size());
    add_identity(B, L.e0(), m * m, 1.0);
    B.add(L.alpha(), L.alpha(), 1.0);
    B.block(L.C0(), L.C0(), S.I3, g.a * g.p);
    B.block(L.C0(), L.C0(), S.X, g.c * g.q);
    B.block(L.C0(), L.U0(), S.K1, g.b * g.p + g.d * g.q);
    B.block(L.U0(), L.C0(), S.K2, g.a * g.s + g.c * g.u);
    add_identity(B, L.U0(), m, g.b * g.s * (n - 2) / 2.0 + g.d * g.u);
    B.add(L.H(), L.H(), g.h);
    add_identity(B, L.S0(), m * m, g.l);
    return B.done();
}

SpMat bd_closed(const Layout& L, const GaugeParams& g, const Structural& S, int D) {
    const double n = L.n, mu = g.mu, ga = g.gamma;
    Builder B(L.size());
    const double f = mu * n - 2 * mu + 2, w = (n - 1) - ga * (n - 2);
    B.column(L.C0(), L.H(), S.K1, D, -(-g.p * f + g.q * w));
    B.block(L.C0(), L.S0(), S.M3[D], 2 * g.p);
    B.block(L.C0(), L.S0(), S.M4[D], -(mu * g.p + g.q * ga));
    B.add(L.U(D), L.H(), -(-(n - 2) / 2 * f * g.s + g.u * w));
    B.block(L.U0(), L.S0(), S.Nd[D], -(g.s + (n - 2) / 2 * mu * g.s + g.u * ga));
    B.row(L.H(), L.C0(), S.K2, D, -(-2 * g.a * g.h / (n - 1) + g.c * g.h / (n - 1)));
    B.add(L.H(), L.U(D), -(-g.b * g.h * (n - 2) / (n - 1) + g.d * g.h / (n - 1)));
    B.block(L.S0(), L.C0(), S.M3a[D], g.a * g.l);
    B.block(L.S0(), L.C0(), S.M4a[D], -(g.c - g.a) * g.l);
    B.block(L.S0(), L.U0(), S.Na[D], -(-g.b * g.l * (n - 3) / 2 + g.d * g.l));
    return B.done();
}

}  // namespace

std::string slot_name(const Layout& L, int k) {
    const int m = L.m;
    std::ostringstream os;
    if (k < L.alpha()) {
        os << "e[" << k / m << "][" << k % m << "]";
    } else if (k == L.alpha()) {
        os << "alpha";
    } else if (k < L.U0()) {
        const int c = k - L.C0();
        os << "C[" << c / (m * m) << "][" << (c / m) % m << "][" << c % m << "]";
    } else if (k < L.H()) {
        os << "U[" << k - L.U0() << "]";
    } else if (k == L.H()) {
        os << "H";
    } else {
        const int s = k - L.S0();
        os << "Sigma[" << s / m << "][" << s % m << "]";
    }
    return os.str();
}

SymmetrizerSet build(const KasnerData& kd, const GaugeParams& gp) {
    const Layout L(kd.n);
    const int m = L.m, N = L.size();
    const double n = kd.n;
    const double k0 = gp.kappa0(kd), k1 = gp.kappa1(kd), k2 = gp.kappa2(kd);
    const auto& r = kd.r;
    const Structural S(m);

    SymmetrizerSet sym;
    sym.lay = L;
    sym.gp = gp;
    sym.kd = kd;

    // Bc and the projector
    {
        Builder B(N), P(N);
        for (int A = 0; A < m; ++A)
            for (int W = 0; W < m; ++W) B.add(L.e(A, W), L.e(A, W), k2 - 0.5 * r[A]);
        B.add(L.alpha(), L.alpha(), k1);
        for (int A = 0; A < m; ++A)
            for (int Bi = 0; Bi < m; ++Bi)
                for (int C = 0; C < m; ++C) B.add(L.C(A, Bi, C), L.C(A, Bi, C), k0 - 0.5 * (r[A] + r[C] - r[Bi]));
        for (int A = 0; A < m; ++A) B.add(L.U(A), L.U(A), k0 - 0.5 * r[A]);
        B.add(L.H(), L.H(), k0);
        add_identity(B, L.S0(), m * m, k0);
        for (int i = 0; i < L.H(); ++i) P.add(i, i, 1.0);
        sym.Bc = B.done();
        sym.P_proj = P.done();
        // C slots with A = C vanish identically and are exempt.
        for (int i = 0; i < N; ++i) {
            if (i >= L.C0() && i < L.U0()) {
                const int c = i - L.C0();
                if (c / (m * m) == c % m) continue;
            }
            const double v = sym.Bc.coeff(i, i);
            if (!(v > 0.0)) {
                std::ostringstream os;
                os << "symmetrizer build: Bc diagonal entry " << v << " at slot " << i << " (" << slot_name(L, i)
                   << ") is not positive; Kasner data or gauge exponents are not admissible";
                throw std::invalid_argument(os.str());
            }
        }
    }

    // E^D and A^D
    const double f = gp.mu * n - 2 * gp.mu + 2, w = (n - 1) - gp.gamma * (n - 2);
    for (int D = 0; D < m; ++D) {
        Builder E(N), A(N);
        E.column(L.C0(), L.H(), S.K1, D, -2.0);
        E.block(L.C0(), L.S0(), S.M3[D], -2.0);
        E.add(L.U(D), L.H(), n - 1);
        E.row(L.H(), L.C0(), S.K2, D, -2.0 / (n - 1));
        E.add(L.H(), L.U(D), 1.0 / (n - 1));
        E.block(L.S0(), L.C0(), S.M3a[D], -1.0);
        E.block(L.S0(), L.C0(), S.M4a[D], -1.0);
        E.block(L.S0(), L.U0(), S.Na[D], 1.0);
        sym.E.push_back(E.done());

        A.column(L.C0(), L.H(), S.K1, D, f);
        A.block(L.C0(), L.S0(), S.M3[D], 2.0);
        A.block(L.C0(), L.S0(), S.M4[D], -gp.mu);
        A.add(L.U(D), L.H(), -w);
        A.block(L.U0(), L.S0(), S.Nd[D], -gp.gamma);
        A.row(L.H(), L.C0(), S.K2, D, 2.0 / (n - 1));
        A.add(L.H(), L.U(D), -1.0 / (n - 1));
        A.block(L.S0(), L.C0(), S.M3a[D], 1.0);
        A.block(L.S0(), L.C0(), S.M4a[D], 1.0);
        A.block(L.S0(), L.U0(), S.Na[D], -1.0);
        sym.A.push_back(A.done());
    }

    // Acal
    {
        Builder B(N);
        for (int A = 0; A < m; ++A)
            for (int W = 0; W < m; ++W) B.add(L.e(A, W), L.e(A, W), k2 - 0.5 * r[A]);
        B.add(L.alpha(), L.alpha(), k1);
        for (int A = 0; A < m; ++A)
            for (int Bi = 0; Bi < m; ++Bi)
                for (int C = 0; C < m; ++C) {
                    const int row = L.C(A, Bi, C);
                    B.add(row, row, k0 - 0.5 * (r[A] + r[C] - r[Bi]));
                    if (gp.mu == 0.0) continue;
                    // -(mu/2) r^{PQ} delta_[A^R delta_C]B - (mu/2) r_[A^P delta_C]B delta^{QR}
                    for (int P = 0; P < m; ++P)
                        for (int R = 0; R < m; ++R) {
                            B.add(row, L.C(P, P, R), -0.5 * gp.mu * r[P] * S.K1.value(row - L.C0(), R));
                            B.add(row, L.C(P, R, R), -0.5 * gp.mu * r[P] * S.K1.value(row - L.C0(), P));
                        }
                    for (int P = 0; P < m; ++P)
                        B.add(row, L.U(P), gp.mu * (k0 - 0.5 * r[P]) * S.K1.value(row - L.C0(), P));
                }
        for (int A = 0; A < m; ++A) {
            for (int Q = 0; Q < m; ++Q) {
                B.add(L.U(A), L.C(A, Q, Q), 0.5 * gp.gamma * r[Q]);
                B.add(L.U(A), L.C(A, Q, Q), -0.5 * gp.gamma * r[A]);
            }
            B.add(L.U(A), L.U(A), (gp.gamma + 1.0) * (k0 - 0.5 * r[A]));
        }
        sym.Acal = B.done();
    }

    // V, S and M*
    {
        Builder Vb(N), Sb(N), Mb(m * m * m);
        add_identity(Vb, L.e0(), m * m + 1, 1.0);
        Vb.block(L.C0(), L.C0(), S.I3, gp.a);
        Vb.block(L.C0(), L.U0(), S.K1, gp.b);
        Vb.block(L.U0(), L.C0(), S.K2, gp.c);
        add_identity(Vb, L.U0(), m, gp.d);
        add_identity(Vb, L.H(), 1 + m * m, 1.0);
        sym.V = Vb.done();

        add_identity(Sb, L.e0(), m * m + 1, 1.0);
        Sb.block(L.C0(), L.C0(), S.I3, gp.p);
        Sb.block(L.C0(), L.U0(), S.K1, gp.q);
        Sb.block(L.U0(), L.C0(), S.K2, gp.s);
        add_identity(Sb, L.U0(), m, gp.u);
        Sb.add(L.H(), L.H(), gp.h);
        add_identity(Sb, L.S0(), m * m, gp.l);
        sym.Scal = Sb.done();

        if (gp.d == 0.0) throw std::invalid_argument("symmetrizer build: V is singular (d = 0)");
        const double gq = gp.b * gp.c / gp.d;
        Mb.block(0, 0, S.I3, gp.a);
        Mb.block(0, 0, S.X, -gq);
        sym.Mstar = Mb.done();

        // X^2 = (n-2)/2 X gives M*^{-1} = (I + beta X)/a in closed form.
        const double det = 1.0 - gq * (n - 2) / (2.0 * gp.a);
        if (gp.a == 0.0 || det == 0.0) {
            std::ostringstream os;
            os << "symmetrizer build: M* is singular (a = " << gp.a << ", 1 - (bc/d)(n-2)/(2a) = " << det << ")";
            throw std::invalid_argument(os.str());
        }
        const double beta = gq / gp.a / det;
        Builder Mi(m * m * m);
        Mi.block(0, 0, S.I3, 1.0 / gp.a);
        Mi.block(0, 0, S.X, beta / gp.a);
        const SpMat Minv = Mi.done();

        SpMat K1d(m * m * m, m), K2d(m, m * m * m);
        {
            Builder b1(0), b2(0);
            b1.block(0, 0, S.K1, 1.0);
            b2.block(0, 0, S.K2, 1.0);
            K1d.setFromTriplets(b1.t.begin(), b1.t.end());
            K2d.setFromTriplets(b2.t.begin(), b2.t.end());
        }
        const SpMat CU = -(gp.b / gp.d) * (Minv * K1d);
        const SpMat UC = -(gp.c / gp.d) * (K2d * Minv);
        SpMat UU = (gp.b * gp.c / (gp.d * gp.d)) * (K2d * Minv * K1d);
        Builder Vi(N);
        add_identity(Vi, L.e0(), m * m + 1, 1.0);
        auto put = [&](const SpMat& M, int r0, int c0) {
            for (int k = 0; k < M.outerSize(); ++k)
                for (SpMat::InnerIterator it(M, k); it; ++it) Vi.add(r0 + it.row(), c0 + it.col(), it.value());
        };
        put(Minv, L.C0(), L.C0());
        put(CU, L.C0(), L.U0());
        put(UC, L.U0(), L.C0());
        put(UU, L.U0(), L.U0());
        add_identity(Vi, L.U0(), m, 1.0 / gp.d);
        add_identity(Vi, L.H(), 1 + m * m, 1.0);
        sym.Vinv = Vi.done();
    }

    sym.B0 = (sym.Scal * sym.V).pruned(1e-300);
    for (int D = 0; D < m; ++D) sym.BD.push_back((sym.Scal * sym.A[D] * sym.V).pruned(1e-300));
    const SpMat SAV = sym.Scal * sym.Acal * sym.V;
    sym.Bs = (gp.k_order * gp.nu) * sym.B0 + SAV;
    return sym;
}

// ---------------------------------------------------------------- linear algebra helpers

SpMat symmetric_part(const SpMat& M) {
    SpMat T = M.transpose();
    return 0.5 * (M + T);
}

double max_abs(const SpMat& M) {
    double r = 0.0;
    for (int k = 0; k < M.outerSize(); ++k)
        for (SpMat::InnerIterator it(M, k); it; ++it) r = std::max(r, std::abs(it.value()));
    return r;
}

namespace {
std::vector<std::vector<int>> components(const SpMat& M) {
    const int N = static_cast<int>(M.rows());
    std::vector<int> parent(N);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int i) {
        while (parent[i] != i) i = parent[i] = parent[parent[i]];
        return i;
    };
    for (int k = 0; k < M.outerSize(); ++k)
        for (SpMat::InnerIterator it(M, k); it; ++it)
            if (it.value() != 0.0) {
                const int a = find(static_cast<int>(it.row())), b = find(static_cast<int>(it.col()));
                if (a != b) parent[a] = b;
            }
    std::vector<std::vector<int>> groups(N);
    for (int i = 0; i < N; ++i) groups[find(i)].push_back(i);
    std::vector<std::vector<int>> out;
    for (auto& g : groups)
        if (!g.empty()) out.push_back(std::move(g));
    return out;
}

SpMat submatrix(const SpMat& M, int lo, int hi) {
    std::vector<Trip> t;
    for (int k = 0; k < M.outerSize(); ++k)
        for (SpMat::InnerIterator it(M, k); it; ++it)
            if (it.row() >= lo && it.row() < hi && it.col() >= lo && it.col() < hi)
                t.emplace_back(static_cast<int>(it.row()) - lo, static_cast<int>(it.col()) - lo, it.value());
    SpMat S(hi - lo, hi - lo);
    S.setFromTriplets(t.begin(), t.end());
    return S;
}

double cross_block_max(const SpMat& M, int split) {
    double r = 0.0;
    for (int k = 0; k < M.outerSize(); ++k)
        for (SpMat::InnerIterator it(M, k); it; ++it)
            if ((it.row() < split) != (it.col() < split)) r = std::max(r, std::abs(it.value()));
    return r;
}
}  // namespace

Eigen::VectorXd block_eigenvalues(const SpMat& M) {
    const auto groups = components(M);
    Eigen::VectorXd ev(M.rows());
    Eigen::Index pos = 0;
    for (const auto& g : groups) {
        const int s = static_cast<int>(g.size());
        Eigen::MatrixXd B(s, s);
        for (int i = 0; i < s; ++i)
            for (int j = 0; j < s; ++j) B(i, j) = M.coeff(g[i], g[j]);
        if (s == 1) {
            ev(pos++) = B(0, 0);
            continue;
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(B, Eigen::EigenvaluesOnly);
        ev.segment(pos, s) = es.eigenvalues();
        pos += s;
    }
    std::sort(ev.data(), ev.data() + ev.size());
    return ev;
}

// ---------------------------------------------------------------- verification

nlohmann::json verify(const SymmetrizerSet& sym) {
    const Layout& L = sym.lay;
    const GaugeParams& g = sym.gp;
    const int n = L.n, m = L.m, N = L.size();
    const double nn = n;
    const Structural S(m);
    nlohmann::json rep;
    rep["n"] = n;
    rep["N"] = N;

    const SpMat B0T = sym.B0.transpose();
    rep["b0_symmetry_defect"] = max_abs(sym.B0 - B0T);
    double bd_sym = 0.0, bd_formula = 0.0, bd_product = 0.0;
    for (int D = 0; D < m; ++D) {
        const SpMat T = sym.BD[D].transpose();
        bd_sym = std::max(bd_sym, max_abs(sym.BD[D] - T));
        bd_formula = std::max(bd_formula, max_abs(sym.BD[D] - bd_closed(L, g, S, D)));
        bd_product = std::max(bd_product, max_abs(sym.BD[D] - SpMat(sym.Scal * sym.A[D] * sym.V)));
    }
    rep["bd_symmetry_defect"] = bd_sym;
    rep["bd_closed_form_defect"] = bd_formula;
    rep["bd_product_defect"] = bd_product;
    rep["b0_closed_form_defect"] = max_abs(sym.B0 - b0_closed(L, g, S));

    const Eigen::VectorXd ev = block_eigenvalues(symmetric_part(sym.B0));
    const double lo = 1.0 / (2.0 * nn * nn), hi = 2.0 * nn;
    rep["b0_min_eig"] = ev.minCoeff();
    rep["b0_max_eig"] = ev.maxCoeff();
    rep["b0_bound_lo"] = lo;
    rep["b0_bound_hi"] = hi;
    rep["b0_bounds_hold"] = ev.minCoeff() >= lo - 1e-12 && ev.maxCoeff() <= hi + 1e-12;

    SpMat I(N, N);
    I.setIdentity();
    rep["v_inverse_defect"] = max_abs(SpMat(sym.V * sym.Vinv) - I);
    rep["b0_symmetry_condition"] = (g.b * g.p + g.d * g.q) - (g.a * g.s + g.c * g.u);

    const double pos1 = (4 * g.d * g.d - 4 * g.b * g.d * (nn - 2) + g.b * g.b * (nn * nn - 3 * nn + 2)) / (4 * (nn - 1));
    rep["pos1_value"] = pos1;
    rep["pos1_holds"] = pos1 > 0.0 && 2 * g.d != g.b * (nn - 2);
    const double den2 = (nn - 1) * (4 * g.d * g.d - 4 * g.b * g.d * (nn - 2) + g.b * g.b * (nn - 1) * (nn - 2));
    const double rhs2 = den2 != 0.0 ? std::abs(g.b * g.b * g.c * g.c / den2) : INFINITY;
    rep["pos2_lhs"] = g.c * g.c / (nn - 1);
    rep["pos2_rhs"] = rhs2;
    rep["pos2_holds"] = g.c * g.c / (nn - 1) > rhs2;
    rep["mstar_sufficient_holds"] = g.c > std::abs(g.b / g.d * g.c) / 2.0;
    const double mstar_det = 1.0 - (g.b * g.c / g.d) * (nn - 2) / (2.0 * g.a);
    rep["mstar_invertible"] = g.a != 0.0 && mstar_det != 0.0;
    rep["mstar_eig_min"] = std::min(g.a, g.a * mstar_det);
    rep["mstar_eig_max"] = std::max(g.a, g.a * mstar_det);
    rep["gamma_mu_defect"] = g.gamma - ((nn - 2) * g.mu / 2.0 + 2.0);

    const SpMat Bsym = symmetric_part(sym.Bs);
    const SpMat SAVsym = symmetric_part(SpMat(sym.Scal * sym.Acal * sym.V));
    rep["bs_sym_identity_defect"] = max_abs(Bsym - (g.k_order * g.nu) * sym.B0 - SAVsym);
    const Eigen::VectorXd evs = block_eigenvalues(Bsym);
    rep["bs_min_eig"] = evs.minCoeff();
    rep["bs_min_eig_decaying"] = block_eigenvalues(submatrix(Bsym, 0, L.H())).minCoeff();
    rep["bs_positive_definite"] = evs.minCoeff() > 0.0;
    const MinKResult mk = min_k(sym, g.nu);
    rep["min_k"] = mk.k;
    rep["k_order"] = g.k_order;

    double bc_min = INFINITY;
    for (int i = 0; i < N; ++i) bc_min = std::min(bc_min, sym.Bc.coeff(i, i));
    rep["bc_min_diag"] = bc_min;
    const SpMat PT = sym.P_proj.transpose();
    rep["projector_defect"] = std::max(max_abs(SpMat(sym.P_proj * sym.P_proj) - sym.P_proj), max_abs(sym.P_proj - PT));
    return rep;
}

MinKResult min_k(const SymmetrizerSet& sym, double nu, int cap) {
    const Layout& L = sym.lay;
    const SpMat SAV = symmetric_part(SpMat(sym.Scal * sym.Acal * sym.V));
    const int split = L.H();
    if (cross_block_max(SAV, split) > 0.0 || cross_block_max(sym.B0, split) > 0.0)
        throw std::logic_error("min_k: decaying and non-decaying blocks are coupled");
    for (int k = 0; k <= cap; ++k) {
        const SpMat M = (k * nu) * symmetric_part(sym.B0) + SAV;
        const double dec = block_eigenvalues(submatrix(M, 0, split)).minCoeff();
        const double rest = block_eigenvalues(submatrix(M, split, static_cast<int>(M.rows()))).minCoeff();
        if (dec > 1e-12 && rest > -1e-12) return {k, dec, std::min(dec, rest)};
    }
    throw std::runtime_error("min_k: no admissible k up to the search cap " + std::to_string(cap));
}

nlohmann::json appendix_identities(int n, std::uint64_t seed) {
    const Layout L(n);
    const int m = L.m;
    using structural::k1;
    using structural::k2;
    const ExactMatrix K1 = k1(m), K2 = k2(m), X = structural::x(m);
    nlohmann::json rep;
    rep["n"] = n;
    rep["k2_k1"] = (K2 * K1) == ExactMatrix::identity(m).scaled(n - 2, 2);
    rep["k1_k2_closed_form"] = (K1 * K2) == X;
    bool k2m3 = true, k2m4 = true, xm3 = true, xm4 = true, adj3 = true, adj4 = true, pair3 = true, pair4 = true;
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> dist(-9, 9);
    for (int D = 0; D < m; ++D) {
        const ExactMatrix M3 = structural::m3(m, D), M4 = structural::m4(m, D);
        const ExactMatrix M3a = structural::m3_adj(m, D), M4a = structural::m4_adj(m, D);
        const ExactMatrix Nd = structural::n_mat(m, D);
        k2m3 = k2m3 && (K2 * M3) == Nd.scaled(-1, 2);
        k2m4 = k2m4 && (K2 * M4) == Nd.scaled(n - 2, 2);
        xm3 = xm3 && (X * M3) == M4.scaled(-1, 2);
        xm4 = xm4 && (X * M4) == M4.scaled(n - 2, 2);
        adj3 = adj3 && M3.transpose() == M3a;
        adj4 = adj4 && M4.transpose() == M4a;
        // <M x, y> = <x, M^dagger y> on integer vectors, compared as exact rationals.
        for (int trial = 0; trial < 4; ++trial) {
            ExactMatrix xv(m * m, 1), yv(m * m * m, 1);
            for (auto& v : xv.num) v = dist(rng);
            for (auto& v : yv.num) v = dist(rng);
            auto pairing = [&](const ExactMatrix& M, const ExactMatrix& Ma) {
                const ExactMatrix lhs = yv.transpose() * (M * xv);
                const ExactMatrix rhs = xv.transpose() * (Ma * yv);
                return boost::rational<long long>(lhs.num[0], lhs.den) == boost::rational<long long>(rhs.num[0], rhs.den);
            };
            pair3 = pair3 && pairing(M3, M3a);
            pair4 = pair4 && pairing(M4, M4a);
        }
    }
    rep["k2_m3"] = k2m3;
    rep["k2_m4"] = k2m4;
    rep["x_m3"] = xm3;
    rep["x_m4"] = xm4;
    rep["m3_adjoint"] = adj3;
    rep["m4_adjoint"] = adj4;
    rep["m3_pairing"] = pair3;
    rep["m4_pairing"] = pair4;
    bool all = true;
    for (auto& [k, v] : rep.items())
        if (v.is_boolean()) all = all && v.get<bool>();
    rep["all"] = all;
    return rep;
}

McPdResult mc_pd_check(int n, double a, double b) {
    const Layout L(n);
    const int m = L.m;
    Builder B(m * m * m);
    B.block(0, 0, ExactMatrix::identity(m * m * m), a);
    B.block(0, 0, structural::x(m), b);
    const Eigen::VectorXd ev = block_eigenvalues(B.done());
    McPdResult r;
    r.sufficient = a > std::abs(b) / 2.0;
    r.min_eig = ev.minCoeff();
    r.actually_pd = r.min_eig > 0.0;
    // X has eigenvalues 0 and (n-2)/2.
    r.min_eig_closed_form = std::min(a, a + b * (n - 2) / 2.0);
    return r;
}

void export_matrix_market(const SpMat& M, const std::string& path) {
    if (!Eigen::saveMarket(M, path)) throw std::runtime_error("cannot write matrix file " + path);
}

}  // namespace ksf
