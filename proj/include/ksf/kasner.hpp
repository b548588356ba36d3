#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace ksf {

struct KasnerData {
    int n = 4;
    std::vector<double> q;
    double P = 0.0;
    double r0 = 0.0;
    std::vector<double> r;

    int m() const { return n - 1; }
    Eigen::MatrixXd r_matrix() const;
    double sum_r_residual() const;     // sum r - r0
    double sum_r2_residual() const;    // sum r^2 - ((r0+2)^2 - 4)
};

KasnerData kasner_from_q(int n, const std::vector<double>& q);

// Inverse of the exponent map; recovers q from (n, P, r).
std::vector<double> q_from_r(int n, double P, const std::vector<double>& r);

struct SubcriticalResult {
    bool subcritical = false;
    double margin = 0.0;
    double max_value = 0.0;
    int omega = -1, lambda = -1, gamma = -1;
};

// Max over Omega<Lambda of r_Omega + r_Lambda - r_Gamma; Gamma distinct from both unless unrestricted.
SubcriticalResult check_subcritical(const KasnerData& k, bool unrestricted = false);

// Rejection sampler on the Kasner simplex restricted to sub-critical data.
KasnerData sample_subcritical(int n, std::uint64_t seed, double min_margin = 0.0);

void to_json(nlohmann::json& j, const KasnerData& k);
void from_json(const nlohmann::json& j, KasnerData& k);

}  // namespace ksf
