#pragma once

#include <Eigen/Dense>

#include "rdes/model.hpp"

namespace rdes {

/// Moment matrices of one design on the orthonormal basis:
/// R = Q'DQ, S = Q'D^2 Q, U = R^{-1} S R^{-1}, with D = diag(weights),
/// plus the top eigenpair of U.
struct MomentBundle {
    Eigen::MatrixXd R;
    Eigen::MatrixXd S;
    Eigen::MatrixXd U;
    Eigen::MatrixXd Rinv;
    double lambda_max = 0.0;
    Eigen::VectorXd v_max;
    double eigen_gap = 0.0;    // lambda_1 - lambda_2 of U; +inf when p = 1
    bool degenerate_top = false;  // eigen_gap <= 1e-9: v_max is not unique
};

MomentBundle moments(const OrthonormalBasis& basis, const DesignMeasure& xi);

/// Same computation from a raw weight vector, bypassing the measure
/// sanitation. Used for finite-difference probes that step slightly
/// outside the simplex.
MomentBundle moments_raw(const OrthonormalBasis& basis, const Eigen::VectorXd& weights);

/// Integrated prediction variance tr R^{-1}.
double variance(const MomentBundle& bundle);

/// Maximum integrated squared bias, ch_max U.
double maxbias(const MomentBundle& bundle);

/// Mixed criterion (1-nu)*var + nu*maxbias.
double loss(double nu, double var, double mb);

double nu_from_scale(double sigma2, double tau2);

struct LossScale {
    LossScale(double sigma2, double tau2, int n);
    double sigma2;
    double tau2;
    int n;
    double nu() const { return nu_from_scale(sigma2, tau2); }
};

/// Absolute worst-case IMSE: (sigma^2 + tau^2)/n times the mixed loss.
double imse_scale(double loss_value, const LossScale& scale);

/// Coefficient of maximum bias, sqrt(maxbias/var).
double cmb_value(double var, double mb);

struct WorstCasePsi {
    Eigen::VectorXd psi0;  // unit vector, orthogonal to the columns of Q
    double attained_bias = 0.0;
};

/// Independent oracle for maxbias: maximizes the conditional-bias quadratic
/// form over unit contaminants orthogonal to the regressor span. Agrees
/// with ch_max U on every admissible design; disagreement beyond tolerance
/// is a bug, not something to absorb.
WorstCasePsi worst_case_psi(const OrthonormalBasis& basis, const DesignMeasure& xi);

/// Conditional integrated squared bias psi0' D Q R^{-2} Q' D psi0 + 1
/// for a given admissible contaminant.
double bias_given_psi(const OrthonormalBasis& basis, const DesignMeasure& xi,
                      const Eigen::VectorXd& psi0);

/// Variance via the regressor-basis route tr(A M^{-1}), A = F'F, M = F'DF.
/// Equals tr R^{-1} up to roundoff; kept as an independent cross-check.
double cross_check_variance(const RegressorMatrix& F, const DesignMeasure& xi);

}  // namespace rdes
