#include "rdes/apportion.hpp"

#include <cmath>
#include <limits>

#include "rdes/criteria.hpp"
#include "rdes/optimizer.hpp"

namespace rdes {

namespace {

// ceil with protection against values that are integers up to roundoff.
int robust_ceil(double x) { return static_cast<int>(std::ceil(x - 1e-9)); }

int support_rank(const Eigen::MatrixXd& Q, const Eigen::VectorXi& alloc) {
    std::vector<int> idx;
    for (int i = 0; i < alloc.size(); ++i)
        if (alloc(i) > 0) idx.push_back(i);
    Eigen::MatrixXd sub(static_cast<int>(idx.size()), Q.cols());
    for (size_t r = 0; r < idx.size(); ++r) sub.row(static_cast<int>(r)) = Q.row(idx[r]);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(sub);
    const auto& sv = svd.singularValues();
    if (sv.size() == 0) return 0;
    int rank = 0;
    for (int i = 0; i < sv.size(); ++i)
        if (sv(i) > 1e-10 * sv(0)) ++rank;
    return rank;
}

}  // namespace

ExactDesign ceil_then_remove(const OrthonormalBasis& basis, const DesignMeasure& xi,
                             int n, double nu) {
    const int N = xi.size();
    const int p = static_cast<int>(basis.Q.cols());
    if (n < p)
        throw ConfigError("run size n = " + std::to_string(n) +
                          " is below the number of regressors p = " + std::to_string(p));
    Eigen::VectorXi alloc(N);
    for (int i = 0; i < N; ++i) alloc(i) = robust_ceil(n * xi.weights()(i));

    while (alloc.sum() > n) {
        DesignMeasure current = exact_to_measure(ExactDesign{alloc, alloc.sum()});
        Eigen::VectorXd t = directional_scores(basis, current, nu);
        // Remove one unit where adding mass helps least, keeping the support
        // at full rank.
        int victim = -1;
        double best = std::numeric_limits<double>::infinity();
        std::vector<int> order;
        for (int i = 0; i < N; ++i)
            if (alloc(i) >= 1) order.push_back(i);
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            if (t(a) != t(b)) return t(a) < t(b);
            return a < b;
        });
        for (int i : order) {
            alloc(i) -= 1;
            const bool ok = support_rank(basis.Q, alloc) >= p;
            alloc(i) += 1;
            if (ok) {
                victim = i;
                best = t(i);
                break;
            }
        }
        if (victim < 0)
            throw NumericalError("cannot remove any point without losing full rank");
        alloc(victim) -= 1;
        (void)best;
    }
    return ExactDesign{alloc, n, RoundingMethod::ceil_remove};
}

DesignMeasure prune_measure(const DesignMeasure& xi, double min_weight) {
    Eigen::VectorXd w = xi.weights();
    for (int i = 0; i < w.size(); ++i)
        if (w(i) < min_weight) w(i) = 0.0;
    const double sum = w.sum();
    if (sum <= 0) throw ConfigError("pruning removed all design weight");
    return DesignMeasure(w / sum);
}

ExactDesign pukelsheim_rieder(const DesignMeasure& xi, int n) {
    const auto support = xi.support();
    const int l = static_cast<int>(support.size());
    if (n < l)
        throw ConfigError("run size n = " + std::to_string(n) +
                          " is below the support size l = " + std::to_string(l));
    const auto& w = xi.weights();
    Eigen::VectorXi alloc = Eigen::VectorXi::Zero(xi.size());
    for (int i : support) alloc(i) = robust_ceil((n - 0.5 * l) * w(i));

    while (alloc.sum() < n) {
        int arg = -1;
        double best = std::numeric_limits<double>::infinity();
        for (int i : support) {
            const double quot = alloc(i) / w(i);
            if (quot < best) {
                best = quot;
                arg = i;
            }
        }
        alloc(arg) += 1;
    }
    while (alloc.sum() > n) {
        // Decrement ties go to the highest index, the reverse of the
        // increment order; this keeps the allocations sample-size monotone
        // when many quotients coincide.
        int arg = -1;
        double best = -std::numeric_limits<double>::infinity();
        for (auto it = support.rbegin(); it != support.rend(); ++it) {
            const int i = *it;
            if (alloc(i) < 1) continue;
            const double quot = (alloc(i) - 1) / w(i);
            if (quot > best) {
                best = quot;
                arg = i;
            }
        }
        alloc(arg) -= 1;
    }
    return ExactDesign{alloc, n, RoundingMethod::efficient_apportionment};
}

DesignMeasure exact_to_measure(const ExactDesign& design) {
    if (design.allocations.sum() <= 0)
        throw ConfigError("exact design has no allocated runs");
    return DesignMeasure(design.allocations.cast<double>() / design.allocations.sum());
}

RoundingComparison compare_rounding(const OrthonormalBasis& basis, const DesignMeasure& xi,
                                    int n, double nu) {
    MomentBundle cont = moments(basis, xi);
    const double loss_cont = loss(nu, variance(cont), maxbias(cont));

    ExactDesign cr = ceil_then_remove(basis, xi, n, nu);
    MomentBundle mcr = moments(basis, exact_to_measure(cr));
    const double loss_cr = loss(nu, variance(mcr), maxbias(mcr));

    // The efficient apportionment needs n >= |support|; points carrying
    // under half a uniform share are treated as residual optimizer mass,
    // not support. When the remaining support still exceeds n, or the
    // apportioned support loses full rank, the design is unusable and its
    // loss is reported as infinite.
    double loss_pr;
    try {
        ExactDesign pr = pukelsheim_rieder(prune_measure(xi, 0.5 / xi.size()), n);
        MomentBundle mpr = moments(basis, exact_to_measure(pr));
        loss_pr = loss(nu, variance(mpr), maxbias(mpr));
    } catch (const std::exception&) {
        loss_pr = std::numeric_limits<double>::infinity();
    }

    return RoundingComparison{nu,
                              loss_cont,
                              loss_cr,
                              loss_pr,
                              (loss_cr - loss_cont) / loss_cont,
                              (loss_pr - loss_cont) / loss_cont};
}

}  // namespace rdes
