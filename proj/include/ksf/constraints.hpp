#pragma once

#include <array>
#include <string>

#include <Eigen/Dense>

#include "ksf/grid.hpp"

namespace ksf {

// Residual fields of the six constraint families.  Column layouts (m = n-1):
//   A: [A][B][W] (m^3), B: [A][B] (m^2), Cj: [A][B][C][D] (m^4), D: [A], M: [A], H: scalar.
struct ConstraintFields {
    Eigen::ArrayXXd A, B, Cj, D, M, H;
};

inline const std::array<std::string, 6>& constraint_names() {
    static const std::array<std::string, 6> names = {"A", "B", "C", "D", "M", "H"};
    return names;
}

// Volume-normalized L2 norms over a region, ordered A, B, C, D, M, H.
std::array<double, 6> constraint_norms(const ConstraintFields& c, const TorusGrid& g,
                                       const Region& region = Region::torus());
std::array<double, 6> constraint_max(const ConstraintFields& c);

}  // namespace ksf
