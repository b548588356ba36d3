#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <json.hpp>

#include "ksf/kasner.hpp"
#include "ksf/layout.hpp"
#include "ksf/state.hpp"

namespace ksf {

using SpMat = Eigen::SparseMatrix<double>;

// Dense rational matrix stored as integer numerators over one common denominator.
struct ExactMatrix {
    int rows = 0, cols = 0;
    std::int64_t den = 1;
    std::vector<std::int64_t> num;

    ExactMatrix() = default;
    ExactMatrix(int r, int c, std::int64_t d = 1);

    std::int64_t& operator()(int i, int j) { return num[static_cast<std::size_t>(i) * cols + j]; }
    std::int64_t operator()(int i, int j) const { return num[static_cast<std::size_t>(i) * cols + j]; }
    double value(int i, int j) const { return static_cast<double>((*this)(i, j)) / static_cast<double>(den); }

    static ExactMatrix identity(int size);
    ExactMatrix transpose() const;
    ExactMatrix scaled(std::int64_t p, std::int64_t q) const;  // times p/q
    void reduce();
    bool operator==(const ExactMatrix& o) const;
};

ExactMatrix operator*(const ExactMatrix& x, const ExactMatrix& y);
ExactMatrix operator+(const ExactMatrix& x, const ExactMatrix& y);

// Kronecker-delta building blocks over m = n-1 spatial indices. C-type slots are (A,B,C) with
// A,C the antisymmetric pair; U-type slots are single indices; Sigma-type slots are pairs.
namespace structural {
ExactMatrix k1(int m);               // delta_[A^P delta_C]B            (m^3 x m)
ExactMatrix k2(int m);               // delta_A^[P delta^R]Q            (m x m^3)
ExactMatrix stf4(int m);             // delta_<A^P delta_B>^Q           (m^2 x m^2)
ExactMatrix x(int m);                // k1 * k2 closed form             (m^3 x m^3)
ExactMatrix m3(int m, int D);        // delta_[A^D delta_C]^<P delta_B^Q>   (m^3 x m^2)
ExactMatrix m4(int m, int D);        // delta^D<P delta_[A^Q> delta_C]B     (m^3 x m^2)
ExactMatrix m3_adj(int m, int D);    // delta^D[P delta_<A^R] delta_B>^Q    (m^2 x m^3)
ExactMatrix m4_adj(int m, int D);    // delta_<A^D delta_B>^[P delta^R]Q    (m^2 x m^3)
ExactMatrix n_mat(int m, int D);     // delta^D<P delta_A^Q>                (m x m^2)
ExactMatrix n_adj(int m, int D);     // delta_<A^D delta_B>^P               (m^2 x m)
}  // namespace structural

struct SymmetrizerParams {
    double p = 0, q = 0, s = 0, u = 0, a = 0;
};

// Closed-form p, q, s, u, a making B^0 and B^D symmetric.
SymmetrizerParams solve_params(int n, double mu, double gamma, double b, double c, double d, double h, double l);

struct SymmetrizerSet {
    Layout lay;
    GaugeParams gp;
    KasnerData kd;
    SpMat Bc, P_proj, Acal, V, Vinv, Scal, B0, Bs, Mstar;
    std::vector<SpMat> E, A, BD;
};

SymmetrizerSet build(const KasnerData& kd, const GaugeParams& gp);

nlohmann::json verify(const SymmetrizerSet& sym);

struct MinKResult {
    int k = -1;
    double min_eig_decaying = 0;  // on the range of the projector
    double min_eig_all = 0;
};
// Smallest k with sym(k nu B^0 + S Acal V) positive definite on the decaying block and
// positive semi-definite on the complement.
MinKResult min_k(const SymmetrizerSet& sym, double nu, int cap = 64);

nlohmann::json appendix_identities(int n, std::uint64_t seed = 7);

struct McPdResult {
    bool sufficient = false;
    bool actually_pd = false;
    double min_eig = 0;
    double min_eig_closed_form = 0;
};
McPdResult mc_pd_check(int n, double a, double b);

// Eigenvalues of a symmetric matrix, computed per connected block of its sparsity graph.
Eigen::VectorXd block_eigenvalues(const SpMat& M);
SpMat symmetric_part(const SpMat& M);
double max_abs(const SpMat& M);

std::string slot_name(const Layout& lay, int k);

void export_matrix_market(const SpMat& M, const std::string& path);

}  // namespace ksf
