#pragma once

#include <stdexcept>
#include <string>

namespace ksf {

// Composite ordering (e_P^S, alpha, C_PQR, U_P, H, Sigma_PQ), m = n-1.
// C_PQR is stored with P,R the antisymmetric (outer) pair and Q the middle index.
struct Layout {
    int n = 4;
    int m = 3;

    Layout() = default;
    explicit Layout(int n_) : n(n_), m(n_ - 1) {
        if (n_ < 4) throw std::invalid_argument("spacetime dimension must be >= 4, got " + std::to_string(n_));
    }

    int e(int a, int w) const { return a * m + w; }
    int alpha() const { return m * m; }
    int C(int a, int b, int c) const { return m * m + 1 + (a * m + b) * m + c; }
    int U(int a) const { return m * m + 1 + m * m * m + a; }
    int H() const { return m * m + 1 + m * m * m + m; }
    int S(int a, int b) const { return m * m + 1 + m * m * m + m + 1 + a * m + b; }

    int e0() const { return 0; }
    int C0() const { return C(0, 0, 0); }
    int U0() const { return U(0); }
    int S0() const { return S(0, 0); }
    int size() const { return 2 * m * m + 1 + m * m * m + m + 1; }

    // True for slots in the range of the decay projector (e, alpha, C, U).
    bool decaying(int k) const { return k < H(); }
};

}  // namespace ksf
