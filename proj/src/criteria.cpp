#include "rdes/criteria.hpp"

#include <cmath>
#include <limits>

namespace rdes {

namespace {

// Fixes the eigenvector sign: largest-magnitude entry positive, ties by
// lowest index.
void fix_sign(Eigen::VectorXd& v) {
    int arg = 0;
    double best = -1.0;
    for (int i = 0; i < v.size(); ++i) {
        if (std::abs(v(i)) > best) {
            best = std::abs(v(i));
            arg = i;
        }
    }
    if (v(arg) < 0) v = -v;
}

MomentBundle moments_impl(const Eigen::MatrixXd& Q, const Eigen::VectorXd& w) {
    const int p = static_cast<int>(Q.cols());
    MomentBundle b;
    Eigen::MatrixXd DQ = w.asDiagonal() * Q;
    b.R = Q.transpose() * DQ;
    b.R = 0.5 * (b.R + b.R.transpose()).eval();
    b.S = DQ.transpose() * DQ;
    b.S = 0.5 * (b.S + b.S.transpose()).eval();

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> er(b.R);
    const double ev_min = er.eigenvalues()(0);
    const double ev_max = er.eigenvalues()(p - 1);
    if (!(ev_min > 0) || ev_max / ev_min > 1e12)
        throw NumericalError("singular moment matrix R for this design (condition number " +
                             std::to_string(ev_min > 0 ? ev_max / ev_min
                                                       : std::numeric_limits<double>::infinity()) +
                             ")");
    b.Rinv = er.eigenvectors() *
             er.eigenvalues().cwiseInverse().asDiagonal() *
             er.eigenvectors().transpose();
    b.Rinv = 0.5 * (b.Rinv + b.Rinv.transpose()).eval();

    b.U = b.Rinv * b.S * b.Rinv;
    b.U = 0.5 * (b.U + b.U.transpose()).eval();

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eu(b.U);
    b.lambda_max = eu.eigenvalues()(p - 1);
    b.v_max = eu.eigenvectors().col(p - 1);
    fix_sign(b.v_max);
    b.eigen_gap = (p >= 2) ? b.lambda_max - eu.eigenvalues()(p - 2)
                           : std::numeric_limits<double>::infinity();
    b.degenerate_top = b.eigen_gap <= 1e-9;
    return b;
}

}  // namespace

MomentBundle moments(const OrthonormalBasis& basis, const DesignMeasure& xi) {
    if (xi.size() != basis.Q.rows())
        throw ConfigError("design measure length does not match the design space");
    return moments_impl(basis.Q, xi.weights());
}

MomentBundle moments_raw(const OrthonormalBasis& basis, const Eigen::VectorXd& weights) {
    return moments_impl(basis.Q, weights);
}

double variance(const MomentBundle& bundle) { return bundle.Rinv.trace(); }

double maxbias(const MomentBundle& bundle) { return bundle.lambda_max; }

double loss(double nu, double var, double mb) {
    if (nu < 0.0 || nu > 1.0) throw ConfigError("nu must lie in [0, 1]");
    return (1.0 - nu) * var + nu * mb;
}

double nu_from_scale(double sigma2, double tau2) {
    if (sigma2 < 0 || tau2 < 0) throw ConfigError("sigma2 and tau2 must be nonnegative");
    if (sigma2 + tau2 <= 0) throw ConfigError("sigma2 + tau2 must be positive");
    return tau2 / (sigma2 + tau2);
}

LossScale::LossScale(double sigma2_, double tau2_, int n_)
    : sigma2(sigma2_), tau2(tau2_), n(n_) {
    if (sigma2 < 0 || tau2 < 0 || sigma2 + tau2 <= 0)
        throw ConfigError("loss scale requires sigma2, tau2 >= 0 with positive sum");
    if (n < 1) throw ConfigError("run size n must be at least 1");
}

double imse_scale(double loss_value, const LossScale& scale) {
    return (scale.sigma2 + scale.tau2) / scale.n * loss_value;
}

double cmb_value(double var, double mb) {
    if (!(var > 0)) throw ConfigError("cmb requires positive variance");
    return std::sqrt(mb / var);
}

namespace {

Eigen::MatrixXd bias_kernel(const Eigen::MatrixXd& Q, const Eigen::VectorXd& w,
                            const MomentBundle& bundle) {
    Eigen::MatrixXd DQ = w.asDiagonal() * Q;
    Eigen::MatrixXd K = DQ * bundle.Rinv * bundle.Rinv * DQ.transpose();
    return 0.5 * (K + K.transpose()).eval();
}

}  // namespace

WorstCasePsi worst_case_psi(const OrthonormalBasis& basis, const DesignMeasure& xi) {
    const int N = static_cast<int>(basis.Q.rows());
    const int p = static_cast<int>(basis.Q.cols());
    if (N <= p) throw ConfigError("worst-case contaminant requires N > p");
    MomentBundle bundle = moments(basis, xi);
    Eigen::MatrixXd K = bias_kernel(basis.Q, xi.weights(), bundle);
    Eigen::MatrixXd P = Eigen::MatrixXd::Identity(N, N) - basis.Q * basis.Q.transpose();
    Eigen::MatrixXd M = P * K * P;
    M = 0.5 * (M + M.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
    Eigen::VectorXd psi = P * es.eigenvectors().col(N - 1);
    if (psi.norm() < 1e-8) {
        // Top eigenvalue ~ 0 (e.g. the uniform design): any contaminant in
        // the complement of span(Q) attains the maximum.
        for (int k = 0; k < N; ++k) {
            Eigen::VectorXd cand = P.col(k);
            if (cand.norm() > psi.norm()) psi = cand;
        }
    }
    psi /= psi.norm();
    fix_sign(psi);
    WorstCasePsi out;
    out.psi0 = psi;
    out.attained_bias = psi.dot(K * psi) + 1.0;
    return out;
}

double bias_given_psi(const OrthonormalBasis& basis, const DesignMeasure& xi,
                      const Eigen::VectorXd& psi0) {
    if (psi0.size() != basis.Q.rows())
        throw ConfigError("contaminant length does not match the design space");
    if (std::abs(psi0.norm() - 1.0) > 1e-10)
        throw ConfigError("contaminant must be a unit vector");
    if ((basis.Q.transpose() * psi0).norm() > 1e-8)
        throw ConfigError("contaminant must be orthogonal to the regressor span");
    MomentBundle bundle = moments(basis, xi);
    Eigen::MatrixXd K = bias_kernel(basis.Q, xi.weights(), bundle);
    return psi0.dot(K * psi0) + 1.0;
}

double cross_check_variance(const RegressorMatrix& F, const DesignMeasure& xi) {
    Eigen::MatrixXd M = F.F.transpose() * xi.weights().asDiagonal() * F.F;
    M = 0.5 * (M + M.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> em(M);
    const double ev_min = em.eigenvalues()(0);
    const double ev_max = em.eigenvalues()(M.rows() - 1);
    if (!(ev_min > 0) || ev_max / ev_min > 1e12)
        throw NumericalError("singular information matrix M for this design");
    Eigen::MatrixXd A = F.F.transpose() * F.F;
    Eigen::MatrixXd Minv = em.eigenvectors() *
                           em.eigenvalues().cwiseInverse().asDiagonal() *
                           em.eigenvectors().transpose();
    return (A * Minv).trace();
}

}  // namespace rdes
