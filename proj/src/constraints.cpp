#include "ksf/constraints.hpp"

#include <cmath>

namespace ksf {

namespace {
double rms(const Eigen::ArrayXXd& f, const Eigen::ArrayXd& mask) {
    const double cnt = mask.sum();
    if (cnt == 0.0 || f.cols() == 0) return 0.0;
    return std::sqrt((f.square().rowwise().sum() * mask).sum() / cnt);
}
}  // namespace

std::array<double, 6> constraint_norms(const ConstraintFields& c, const TorusGrid& g, const Region& region) {
    const Eigen::ArrayXd mask = region_mask(g, region);
    return {rms(c.A, mask), rms(c.B, mask), rms(c.Cj, mask), rms(c.D, mask), rms(c.M, mask), rms(c.H, mask)};
}

std::array<double, 6> constraint_max(const ConstraintFields& c) {
    auto mx = [](const Eigen::ArrayXXd& f) { return f.size() ? f.abs().maxCoeff() : 0.0; };
    return {mx(c.A), mx(c.B), mx(c.Cj), mx(c.D), mx(c.M), mx(c.H)};
}

}  // namespace ksf
