#include "rdes/optimizer.hpp"

#include <cmath>
#include <iostream>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace rdes {

namespace {

constexpr double kFdStep = 1e-6;

Eigen::VectorXd scores_from_bundle(const Eigen::MatrixXd& Q, const Eigen::VectorXd& w,
                                   const MomentBundle& bundle, double nu,
                                   const OrthonormalBasis& basis) {
    const int N = static_cast<int>(Q.rows());
    Eigen::VectorXd t(N);

    const double tr_rinv = bundle.Rinv.trace();
    Eigen::MatrixXd Rinv2 = bundle.Rinv * bundle.Rinv;
    Eigen::MatrixXd G = Q * Rinv2;  // row i: q_i' Rinv^2

    Eigen::VectorXd d_bias = Eigen::VectorXd::Zero(N);
    if (nu > 0.0) {
        if (!bundle.degenerate_top) {
            const double lam = bundle.lambda_max;
            Eigen::VectorXd g1 = bundle.Rinv * bundle.v_max;
            Eigen::VectorXd c = Q * bundle.v_max;
            Eigen::VectorXd d = Q * g1;
            const double s_quad = g1.dot(bundle.S * g1);
            for (int i = 0; i < N; ++i)
                d_bias(i) = 2.0 * lam - 2.0 * lam * c(i) * d(i) +
                            2.0 * w(i) * d(i) * d(i) - 2.0 * s_quad;
        } else {
            // Degenerate top eigenvalue: the eigenvector derivative is not
            // valid, fall back to central differences of maxbias.
            for (int i = 0; i < N; ++i) {
                Eigen::VectorXd dir = -w;
                dir(i) += 1.0;
                Eigen::VectorXd wp = w + kFdStep * dir;
                Eigen::VectorXd wm = w - kFdStep * dir;
                d_bias(i) = (maxbias(moments_raw(basis, wp)) -
                             maxbias(moments_raw(basis, wm))) /
                            (2.0 * kFdStep);
            }
        }
    }

    for (int i = 0; i < N; ++i) {
        const double d_var = -(G.row(i).dot(Q.row(i)) - tr_rinv);
        t(i) = -((1.0 - nu) * d_var + nu * d_bias(i));
    }
    return t;
}

int resolved_max_iter(const OptimizerConfig& cfg, int N) {
    return cfg.max_iter > 0 ? cfg.max_iter : 200 * N;
}

}  // namespace

Eigen::VectorXd directional_scores(const OrthonormalBasis& basis,
                                   const DesignMeasure& xi, double nu) {
    if (nu < 0.0 || nu > 1.0) throw ConfigError("nu must lie in [0, 1]");
    MomentBundle bundle = moments(basis, xi);
    return scores_from_bundle(basis.Q, xi.weights(), bundle, nu, basis);
}

std::pair<DesignMeasure, SolveTrace> minimize_loss(const OrthonormalBasis& basis,
                                                   double nu,
                                                   const OptimizerConfig& cfg) {
    if (nu < 0.0 || nu > 1.0) throw ConfigError("nu must lie in [0, 1]");
    const int N = static_cast<int>(basis.Q.rows());
    const int max_iter = resolved_max_iter(cfg, N);
    if (max_iter < 1 || !(cfg.tol > 0))
        throw ConfigError("optimizer config requires tol > 0 and max_iter >= 1");

    Eigen::VectorXd w = cfg.start ? cfg.start->weights()
                                  : Eigen::VectorXd::Constant(N, 1.0 / N);
    long pseudo = cfg.pseudo_count_start > 0 ? cfg.pseudo_count_start : N;

    MomentBundle bundle = moments_raw(basis, w);
    double cur_loss = loss(nu, variance(bundle), maxbias(bundle));

    Eigen::VectorXd best_w = w;
    double best_loss = cur_loss;

    SolveTrace trace;
    trace.loss_history.push_back(cur_loss);

    for (int iter = 0; iter < max_iter; ++iter) {
        Eigen::VectorXd t = scores_from_bundle(basis.Q, w, bundle, nu, basis);
        int arg = 0;
        double tmax = t(0);
        for (int i = 1; i < N; ++i) {
            if (t(i) > tmax) {
                tmax = t(i);
                arg = i;
            }
        }
        trace.final_max_score = tmax;
        trace.iterations = iter;
        if (tmax <= cfg.tol * (1.0 + std::abs(cur_loss))) {
            trace.converged = true;
            break;
        }

        Eigen::VectorXd cand = w * (static_cast<double>(pseudo) / (pseudo + 1));
        cand(arg) += 1.0 / (pseudo + 1);
        MomentBundle cand_bundle = moments_raw(basis, cand);
        double cand_loss = loss(nu, variance(cand_bundle), maxbias(cand_bundle));
        ++pseudo;
        if (cand_loss <= cur_loss + 1e-12) {
            w = cand;
            bundle = std::move(cand_bundle);
            cur_loss = cand_loss;
            trace.loss_history.push_back(cur_loss);
            if (cur_loss < best_loss) {
                best_loss = cur_loss;
                best_w = w;
            }
        }
        // A rejected candidate only shrinks the step; the design stays put.
    }
    return {DesignMeasure(best_w), std::move(trace)};
}

FrontierPoint frontier_point(const OrthonormalBasis& basis, double nu,
                             const OptimizerConfig& cfg) {
    auto [design, trace] = minimize_loss(basis, nu, cfg);
    MomentBundle bundle = moments(basis, design);
    const double var = variance(bundle);
    const double mb = maxbias(bundle);
    return FrontierPoint{nu, std::move(design), var, mb, cmb_value(var, mb),
                         loss(nu, var, mb)};
}

std::vector<FrontierPoint> sweep_frontier_serial(const OrthonormalBasis& basis,
                                                 const std::vector<double>& nu_grid,
                                                 const OptimizerConfig& cfg) {
    if (nu_grid.empty()) throw ConfigError("nu grid must be nonempty");
    std::vector<FrontierPoint> out;
    out.reserve(nu_grid.size());
    for (double nu : nu_grid) out.push_back(frontier_point(basis, nu, cfg));
    return out;
}

std::vector<FrontierPoint> sweep_frontier(const OrthonormalBasis& basis,
                                          const std::vector<double>& nu_grid,
                                          const OptimizerConfig& cfg) {
    if (nu_grid.empty()) throw ConfigError("nu grid must be nonempty");
    const int n = static_cast<int>(nu_grid.size());
    std::vector<std::optional<FrontierPoint>> slots(n);
    std::exception_ptr error;

#pragma omp parallel for schedule(dynamic)
    for (int k = 0; k < n; ++k) {
        try {
            slots[k] = frontier_point(basis, nu_grid[k], cfg);
        } catch (...) {
#pragma omp critical
            if (!error) error = std::current_exception();
        }
    }
    if (error) std::rethrow_exception(error);

    std::vector<FrontierPoint> out;
    out.reserve(n);
    for (auto& s : slots) out.push_back(std::move(*s));
    return out;
}

std::vector<double> default_nu_grid() {
    std::vector<double> grid(101);
    for (int i = 0; i <= 100; ++i) grid[i] = i / 100.0;
    return grid;
}

namespace {

void warn_flat_frontier(const FrontierPoint& fp0, const FrontierPoint& fp1) {
    if (std::abs(fp0.maxbias - fp1.maxbias) <= 1e-6 * (1.0 + fp0.maxbias) &&
        std::abs(fp0.var - fp1.var) <= 1e-6 * (1.0 + fp1.var))
        std::cerr << "note: the frontier is flat; bounded-bias/variance solutions "
                     "are not unique, returning the smallest-nu representative\n";
}

}  // namespace

FrontierPoint solve_rbb(const OrthonormalBasis& basis, double b2,
                        const OptimizerConfig& cfg) {
    if (b2 < 1.0 - 1e-9)
        throw ConfigError("bias bound b2 = " + std::to_string(b2) +
                          " is below the attainable minimum maxbias of 1");
    FrontierPoint fp0 = frontier_point(basis, 0.0, cfg);
    if (b2 >= fp0.maxbias) return fp0;
    FrontierPoint fp1 = frontier_point(basis, 1.0, cfg);
    if (b2 <= fp1.maxbias * (1.0 + 1e-9)) return fp1;  // bound at the minimum maxbias
    warn_flat_frontier(fp0, fp1);

    // maxbias(nu) is nonincreasing: lo violates the bound, hi satisfies it.
    double lo = 0.0, hi = 1.0;
    FrontierPoint best = fp1;
    while (hi - lo >= 1e-6) {
        const double mid = 0.5 * (lo + hi);
        FrontierPoint fpm = frontier_point(basis, mid, cfg);
        if (std::abs(fpm.maxbias - b2) <= 1e-3 * b2 && fpm.maxbias <= b2 * (1.0 + 1e-3))
            return fpm;
        if (fpm.maxbias <= b2) {
            hi = mid;
            best = std::move(fpm);
        } else {
            lo = mid;
        }
    }
    return best;
}

FrontierPoint solve_rbv(const OrthonormalBasis& basis, double s2,
                        const OptimizerConfig& cfg) {
    FrontierPoint fp0 = frontier_point(basis, 0.0, cfg);
    // The computed minimum variance carries the optimizer's convergence
    // slack; a bound within 0.2% of it is treated as the minimum itself.
    if (s2 < fp0.var * (1.0 - 2e-3))
        throw ConfigError("variance bound s2 = " + std::to_string(s2) +
                          " is below the attainable minimum variance " +
                          std::to_string(fp0.var));
    if (s2 <= fp0.var) return fp0;
    FrontierPoint fp1 = frontier_point(basis, 1.0, cfg);
    if (s2 >= fp1.var) return fp1;
    warn_flat_frontier(fp0, fp1);

    // var(nu) is nondecreasing: lo satisfies the bound, hi violates it.
    double lo = 0.0, hi = 1.0;
    FrontierPoint best = fp0;
    while (hi - lo >= 1e-6) {
        const double mid = 0.5 * (lo + hi);
        FrontierPoint fpm = frontier_point(basis, mid, cfg);
        if (std::abs(fpm.var - s2) <= 1e-3 * s2 && fpm.var <= s2 * (1.0 + 1e-3))
            return fpm;
        if (fpm.var <= s2) {
            lo = mid;
            best = std::move(fpm);
        } else {
            hi = mid;
        }
    }
    return best;
}

FrontierPoint find_nu_for_cmb(const OrthonormalBasis& basis, double target,
                              const OptimizerConfig& cfg) {
    FrontierPoint fp0 = frontier_point(basis, 0.0, cfg);
    FrontierPoint fp1 = frontier_point(basis, 1.0, cfg);
    const double cmb_hi = fp0.cmb;  // CMB is nonincreasing in nu
    const double cmb_lo = fp1.cmb;
    // Pad the range check by the optimizer's convergence slack, then clamp
    // boundary targets to the endpoint designs.
    if (target > cmb_hi * (1.0 + 1e-2) + 1e-9 || target < cmb_lo * (1.0 - 1e-2) - 1e-9)
        throw ConfigError("cmb target " + std::to_string(target) +
                          " is outside the attainable range [" + std::to_string(cmb_lo) +
                          ", " + std::to_string(cmb_hi) + "]");
    if (target >= cmb_hi || std::abs(fp0.cmb - target) <= 1e-3) return fp0;
    if (target <= cmb_lo || std::abs(fp1.cmb - target) <= 1e-3) return fp1;

    double lo = 0.0, hi = 1.0;
    FrontierPoint best = fp0;
    double best_err = std::abs(fp0.cmb - target);
    if (std::abs(fp1.cmb - target) < best_err) {
        best = fp1;
        best_err = std::abs(fp1.cmb - target);
    }
    while (hi - lo >= 1e-6) {
        const double mid = 0.5 * (lo + hi);
        FrontierPoint fpm = frontier_point(basis, mid, cfg);
        const double err = std::abs(fpm.cmb - target);
        if (err < best_err) {
            best_err = err;
            best = fpm;
        }
        if (err <= 1e-3) return best;
        if (fpm.cmb <= target)
            hi = mid;
        else
            lo = mid;
    }
    return best;
}

}  // namespace rdes
