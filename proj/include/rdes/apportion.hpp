#pragma once

#include <Eigen/Dense>

#include "rdes/model.hpp"

namespace rdes {

enum class RoundingMethod { ceil_remove, efficient_apportionment };

/// Integer allocations n_i summing to the run size n.
struct ExactDesign {
    Eigen::VectorXi allocations;
    int n = 0;
    RoundingMethod method = RoundingMethod::ceil_remove;
};

/// Rounds n*xi_i up to the next integer, then removes the excess one unit
/// at a time at the index with the smallest point-addition score t,
/// recomputing scores after every removal and skipping removals that would
/// drop the support below rank p.
ExactDesign ceil_then_remove(const OrthonormalBasis& basis, const DesignMeasure& xi,
                             int n, double nu);

/// Drops weights below min_weight and renormalizes. Sequential-addition
/// iterates carry tiny residual mass on every point, which would make the
/// apportionment precondition n >= |support| unsatisfiable.
DesignMeasure prune_measure(const DesignMeasure& xi, double min_weight);

/// Efficient design apportionment restricted to the support of xi:
/// initialize n_i = ceil((n - l/2) xi_i), then adjust by the standard
/// quotient rules until the allocations sum to n. Sample-size monotone.
ExactDesign pukelsheim_rieder(const DesignMeasure& xi, int n);

DesignMeasure exact_to_measure(const ExactDesign& design);

struct RoundingComparison {
    double nu;
    double loss_continuous;
    double loss_ceil_remove;
    double loss_efficient;
    double excess_ceil_remove;  // relative excess over the continuous loss
    double excess_efficient;
};

RoundingComparison compare_rounding(const OrthonormalBasis& basis, const DesignMeasure& xi,
                                    int n, double nu);

}  // namespace rdes
