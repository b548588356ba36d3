#pragma once

#include <vector>

#include <Eigen/Dense>

#include "ksf/constraints.hpp"
#include "ksf/frame.hpp"
#include "ksf/grid.hpp"
#include "ksf/kasner.hpp"
#include "ksf/state.hpp"

namespace ksf {

struct SymmetrizerSet;

// Spatially constant Kasner background in Fuchsian variables.
RescaledState background_rescaled(const KasnerData& k, double eps1, double eps2, double t, long npts = 1);

RescaledState rescale(const FrameState& s, const GaugeParams& gp, const KasnerData& k);
FrameState unrescale(const RescaledState& w, const GaugeParams& gp, const KasnerData& k);

// Rescaled system with the Hamiltonian-constraint modification of the H equation.
RescaledState rhs_base(const RescaledState& w, const TorusGrid& g, const GaugeParams& gp, const KasnerData& k);
// rhs_base plus (mu/t) M_[A delta_C]B in the C equation and (gamma/t) M_A in the U equation.
RescaledState rhs_modified(const RescaledState& w, const TorusGrid& g, const GaugeParams& gp, const KasnerData& k);

// d/dt of rescale(s(t)) along the tetrad evolution, by a five-point stencil on the tangent path.
RescaledState rescaled_time_derivative(const FrameState& s, const TorusGrid& g, const GaugeParams& gp,
                                       const KasnerData& k, double h_rel = 1e-3);

// Replace U by tau e(alpha)/alpha so the lapse constraint holds exactly.
void impose_lapse_constraint(RescaledState& w, const TorusGrid& g, const GaugeParams& gp);

ConstraintFields rescaled_constraints(const RescaledState& w, const TorusGrid& g, const GaugeParams& gp,
                                      const KasnerData& k);

// Levels W_b = t^{|b| nu} d^b W for |b| <= k; the top level stores V^{-1} W_b.
struct HierarchyState {
    double t = 1.0;
    int k = 0;
    Layout lay;
    std::vector<std::vector<int>> index;
    std::vector<Eigen::ArrayXXd> levels;

    int order(std::size_t i) const;
    int find(const std::vector<int>& b) const;
};

std::vector<std::vector<int>> multi_indices_upto(const TorusGrid& g, int k);

HierarchyState build_hierarchy(const RescaledState& w, const TorusGrid& g, const GaugeParams& gp,
                               const SymmetrizerSet& sym);
HierarchyState hierarchy_rhs(const HierarchyState& hs, const TorusGrid& g, const GaugeParams& gp,
                             const KasnerData& k, const SymmetrizerSet& sym);
// Undo the top-level transform: returns t^{|b| nu} d^b W for every level.
std::vector<Eigen::ArrayXXd> hierarchy_plain(const HierarchyState& hs, const SymmetrizerSet& sym);

}  // namespace ksf
