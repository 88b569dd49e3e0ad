#pragma once

#include <Eigen/Dense>
#include <optional>
#include <utility>
#include <vector>

#include "rdes/criteria.hpp"
#include "rdes/model.hpp"

namespace rdes {

struct OptimizerConfig {
    double tol = 1e-7;
    int max_iter = -1;            // -1: 200 * N
    std::optional<DesignMeasure> start;  // default: uniform
    int pseudo_count_start = -1;  // -1: N
};

struct SolveTrace {
    int iterations = 0;
    double final_max_score = 0.0;
    std::vector<double> loss_history;
    bool converged = false;
};

/// One point of the variance/max-bias frontier: the minimizer of I_nu
/// together with its criteria values.
struct FrontierPoint {
    double nu;
    DesignMeasure design;
    double var;
    double maxbias;
    double cmb;
    double loss_value;
};

/// Point-addition scores: t_i is minus the directional derivative of I_nu
/// at xi toward the vertex design at point i. Computed analytically from
/// the top eigenpair of U; near a degenerate top eigenvalue
/// (eigen_gap <= 1e-9) the bias term falls back to a central finite
/// difference with step 1e-6.
Eigen::VectorXd directional_scores(const OrthonormalBasis& basis,
                                   const DesignMeasure& xi, double nu);

/// Sequential point addition: repeatedly add one unit of mass at the
/// highest-score point with step 1/(n+1) on an incrementing pseudo-count.
/// Steps that would increase the loss shrink the step instead of moving.
/// Stops when max_i t_i <= tol*(1 + |I_nu|); returns the best iterate seen.
std::pair<DesignMeasure, SolveTrace> minimize_loss(const OrthonormalBasis& basis,
                                                   double nu,
                                                   const OptimizerConfig& cfg = {});

/// Cold-start minimization at every grid value. The parallel version
/// distributes grid points over OpenMP threads and is result-identical to
/// the serial reference.
std::vector<FrontierPoint> sweep_frontier(const OrthonormalBasis& basis,
                                          const std::vector<double>& nu_grid,
                                          const OptimizerConfig& cfg = {});
std::vector<FrontierPoint> sweep_frontier_serial(const OrthonormalBasis& basis,
                                                 const std::vector<double>& nu_grid,
                                                 const OptimizerConfig& cfg = {});

/// Robust bounded-bias design: minimum variance subject to maxbias <= b2.
/// Bisects on nu using monotonicity of maxbias along the frontier; flat
/// stretches resolve to the smallest nu attaining the bound.
FrontierPoint solve_rbb(const OrthonormalBasis& basis, double b2,
                        const OptimizerConfig& cfg = {});

/// Robust bounded-variance design: minimum maxbias subject to var <= s2.
FrontierPoint solve_rbv(const OrthonormalBasis& basis, double s2,
                        const OptimizerConfig& cfg = {});

/// Locates nu whose frontier design has the requested coefficient of
/// maximum bias, treating CMB as nonincreasing in nu.
FrontierPoint find_nu_for_cmb(const OrthonormalBasis& basis, double target,
                              const OptimizerConfig& cfg = {});

/// 101 equally spaced values on [0, 1].
std::vector<double> default_nu_grid();

/// Frontier point at a single nu (minimize, then evaluate criteria).
FrontierPoint frontier_point(const OrthonormalBasis& basis, double nu,
                             const OptimizerConfig& cfg = {});

}  // namespace rdes
