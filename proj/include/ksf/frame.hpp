#pragma once

#include <Eigen/Dense>

#include "ksf/constraints.hpp"
#include "ksf/grid.hpp"
#include "ksf/kasner.hpp"
#include "ksf/state.hpp"

namespace ksf {

// Exact Kasner-scalar field solution in tetrad variables at time t.
FrameState background_frame(const KasnerData& k, double t, long npts = 1);

// d/dt of every tetrad variable; the returned state carries the same t.
FrameState frame_rhs(const FrameState& s, const TorusGrid& g);

ConstraintFields frame_constraints(const FrameState& s, const TorusGrid& g);

// Spacetime frame indices run 0..n-1 with 0 the time leg.  Flat layouts:
// omega [a][b][c] (n^3), riemann [a][b][c][d] (n^4), ricci [a][b] (n^2).
struct ConnectionCurvature {
    int n = 4;
    Eigen::ArrayXXd omega;
    Eigen::ArrayXXd riemann;
    Eigen::ArrayXXd ricci;
    Eigen::ArrayXd scalar;

    int i3(int a, int b, int c) const { return (a * n + b) * n + c; }
    int i4(int a, int b, int c, int d) const { return ((a * n + b) * n + c) * n + d; }
};

ConnectionCurvature curvature(const FrameState& s, const TorusGrid& g);

// Electric Weyl block C~_{A0B0} (npts x m^2) from the Riemann tensor.
Eigen::ArrayXXd weyl_electric(const ConnectionCurvature& cc);

}  // namespace ksf
