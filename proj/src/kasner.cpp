#include "ksf/kasner.hpp"

#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

namespace ksf {

namespace {

std::string fmt_residual(const char* what, double res) {
    std::ostringstream os;
    os.precision(3);
    os << std::scientific << what << " violated (residual " << res << ")";
    return os.str();
}

}  // namespace

Eigen::MatrixXd KasnerData::r_matrix() const {
    Eigen::MatrixXd R = Eigen::MatrixXd::Zero(m(), m());
    for (int a = 0; a < m(); ++a) R(a, a) = r[a];
    return R;
}

double KasnerData::sum_r_residual() const {
    double s = 0.0;
    for (double x : r) s += x;
    return s - r0;
}

double KasnerData::sum_r2_residual() const {
    double s = 0.0;
    for (double x : r) s += x * x;
    return s - ((r0 + 2.0) * (r0 + 2.0) - 4.0);
}

KasnerData kasner_from_q(int n, const std::vector<double>& q) {
    if (n < 4) throw std::invalid_argument("n must be >= 4");
    if (static_cast<int>(q.size()) != n - 1) {
        throw std::invalid_argument("expected " + std::to_string(n - 1) + " Kasner exponents, got " +
                                    std::to_string(q.size()));
    }
    double s1 = 0.0, s2 = 0.0;
    for (double x : q) {
        s1 += x;
        s2 += x * x;
    }
    if (std::abs(s1 - 1.0) > 1e-12) throw std::invalid_argument(fmt_residual("sum q = 1", s1 - 1.0));
    const double P2 = 0.5 * (1.0 - s2);
    if (!(P2 > 0.0)) throw std::invalid_argument(fmt_residual("sum q^2 < 1", s2 - 1.0));
    const double Pmax = std::sqrt((n - 2.0) / (2.0 * (n - 1.0)));
    KasnerData k;
    k.n = n;
    k.q = q;
    k.P = std::sqrt(P2);
    if (k.P > Pmax * (1.0 + 1e-12)) throw std::invalid_argument(fmt_residual("P <= sqrt((n-2)/(2(n-1)))", k.P - Pmax));
    const double g = std::sqrt(2.0 * (n - 1.0) / (n - 2.0)) / k.P;
    k.r0 = g - 2.0 * (n - 1.0) / (n - 2.0);
    k.r.resize(n - 1);
    for (int a = 0; a < n - 1; ++a) k.r[a] = g * q[a] - 2.0 / (n - 2.0);
    if (k.r0 < 0.0 && k.r0 > -1e-12) k.r0 = 0.0;
    return k;
}

std::vector<double> q_from_r(int n, double P, const std::vector<double>& r) {
    const double g = std::sqrt(2.0 * (n - 1.0) / (n - 2.0)) / P;
    std::vector<double> q(r.size());
    for (std::size_t a = 0; a < r.size(); ++a) q[a] = (r[a] + 2.0 / (n - 2.0)) / g;
    return q;
}

SubcriticalResult check_subcritical(const KasnerData& k, bool unrestricted) {
    SubcriticalResult res;
    res.max_value = -INFINITY;
    const int m = k.m();
    for (int o = 0; o < m; ++o)
        for (int l = o + 1; l < m; ++l)
            for (int g = 0; g < m; ++g) {
                if (!unrestricted && (g == o || g == l)) continue;
                const double v = k.r[o] + k.r[l] - k.r[g];
                if (v > res.max_value) {
                    res.max_value = v;
                    res.omega = o;
                    res.lambda = l;
                    res.gamma = g;
                }
            }
    res.margin = (k.r0 + 2.0) - res.max_value;
    res.subcritical = res.margin > 0.0;
    return res;
}

KasnerData sample_subcritical(int n, std::uint64_t seed, double min_margin) {
    std::mt19937_64 rng(seed);
    std::exponential_distribution<double> ex(1.0);
    for (int attempt = 0; attempt < 100000; ++attempt) {
        std::vector<double> q(n - 1);
        double s = 0.0;
        for (auto& x : q) s += (x = ex(rng));
        for (auto& x : q) x /= s;
        // exact renormalization so that sum q = 1 to rounding
        double drift = 1.0;
        for (double x : q) drift -= x;
        q[0] += drift;
        try {
            KasnerData k = kasner_from_q(n, q);
            if (check_subcritical(k).margin > min_margin) return k;
        } catch (const std::invalid_argument&) {
        }
    }
    throw std::runtime_error("sub-critical sampler exhausted its attempt budget");
}

void to_json(nlohmann::json& j, const KasnerData& k) {
    j = nlohmann::json{{"n", k.n}, {"q", k.q}, {"P", k.P}, {"r0", k.r0}, {"r", k.r}};
}

void from_json(const nlohmann::json& j, KasnerData& k) {
    k = kasner_from_q(j.at("n").get<int>(), j.at("q").get<std::vector<double>>());
}

}  // namespace ksf
