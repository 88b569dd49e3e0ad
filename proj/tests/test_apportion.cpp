#include <doctest.h>

#include "rdes/apportion.hpp"
#include "rdes/criteria.hpp"
#include "rdes/model.hpp"
#include "rdes/optimizer.hpp"

using namespace rdes;

namespace {

OrthonormalBasis straight_line_basis(int n_points) {
    DesignSpace s = build_grid_space({{-1.0, 1.0}}, {n_points});
    return orthonormalize(evaluate_regressors({PolynomialModel{1, true, -1}}, s));
}

OrthonormalBasis quadratic_basis(int n_points) {
    DesignSpace s = build_grid_space({{-1.0, 1.0}}, {n_points});
    return orthonormalize(evaluate_regressors({PolynomialModel{2, true, -1}}, s));
}

}  // namespace

TEST_CASE("ceil_then_remove: exact designs are fixed points") {
    OrthonormalBasis q = straight_line_basis(40);
    Eigen::VectorXd w = Eigen::VectorXd::Zero(40);
    w(0) = w(39) = 0.5;
    ExactDesign d = ceil_then_remove(q, DesignMeasure(w), 4, 0.3);
    CHECK(d.allocations(0) == 2);
    CHECK(d.allocations(39) == 2);
    CHECK(d.allocations.sum() == 4);
}

TEST_CASE("ceil_then_remove: implementation of the cmb = 1/3 design at n = 10") {
    OrthonormalBasis q = straight_line_basis(40);
    FrontierPoint fp = frontier_point(q, 0.28);
    ExactDesign d = ceil_then_remove(q, fp.design, 10, 0.28);
    CHECK(d.allocations.sum() == 10);
    CHECK(d.allocations.minCoeff() >= 0);
    MomentBundle b = moments(q, exact_to_measure(d));
    const double exact_loss = loss(0.28, variance(b), maxbias(b));
    CHECK(exact_loss <= fp.loss_value * 1.05);  // only a small increase
}

TEST_CASE("ceil_then_remove: run size below p is rejected") {
    OrthonormalBasis q = quadratic_basis(40);
    CHECK_THROWS_AS(ceil_then_remove(q, uniform_measure(40), 2, 0.5), ConfigError);
}

TEST_CASE("ceil_then_remove: removal never breaks the support rank") {
    OrthonormalBasis q = quadratic_basis(12);
    // Mass mostly on three points plus crumbs that get rounded away.
    Eigen::VectorXd w = Eigen::VectorXd::Constant(12, 0.01);
    w(0) = w(5) = w(11) = (1.0 - 9 * 0.01) / 3;
    for (int n : {3, 4, 7}) {
        ExactDesign d = ceil_then_remove(q, DesignMeasure(w), n, 0.4);
        CHECK(d.allocations.sum() == n);
        std::vector<int> sup;
        for (int i = 0; i < 12; ++i)
            if (d.allocations(i) > 0) sup.push_back(i);
        Eigen::MatrixXd sub(static_cast<int>(sup.size()), 3);
        for (size_t r = 0; r < sup.size(); ++r) sub.row(static_cast<int>(r)) = q.Q.row(sup[r]);
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(sub);
        CHECK(svd.singularValues()(2) > 1e-10 * svd.singularValues()(0));
    }
}

TEST_CASE("pukelsheim_rieder: uniform weights, n equal to support size") {
    DesignMeasure xi = uniform_measure(6);
    ExactDesign d = pukelsheim_rieder(xi, 6);
    for (int i = 0; i < 6; ++i) CHECK(d.allocations(i) == 1);
}

TEST_CASE("pukelsheim_rieder: lowest-index tie breaking") {
    Eigen::VectorXd w(2);
    w << 0.5, 0.5;
    ExactDesign d = pukelsheim_rieder(DesignMeasure(w), 5);
    CHECK(d.allocations(0) == 3);
    CHECK(d.allocations(1) == 2);
}

TEST_CASE("pukelsheim_rieder: sample size monotonicity (property)") {
    Eigen::VectorXd w(5);
    w << 0.35, 0.05, 0.25, 0.15, 0.20;
    DesignMeasure xi(w);
    ExactDesign prev = pukelsheim_rieder(xi, 5);
    for (int n = 6; n <= 25; ++n) {
        ExactDesign next = pukelsheim_rieder(xi, n);
        CHECK(next.allocations.sum() == n);
        for (int i = 0; i < 5; ++i) CHECK(next.allocations(i) >= prev.allocations(i));
        prev = next;
    }
}

TEST_CASE("pukelsheim_rieder: n below the support size is rejected") {
    CHECK_THROWS_AS(pukelsheim_rieder(uniform_measure(6), 5), ConfigError);
}

TEST_CASE("exact_to_measure") {
    ExactDesign d{Eigen::VectorXi::Zero(3), 4};
    d.allocations << 2, 2, 0;
    CHECK(exact_to_measure(d).weights()(0) == 0.5);
    CHECK(exact_to_measure(d).weights()(1) == 0.5);

    ExactDesign point{Eigen::VectorXi::Zero(10), 10};
    point.allocations(0) = 10;
    CHECK(exact_to_measure(point).weights()(0) == 1.0);
}

TEST_CASE("compare_rounding: exact input gives zero excess") {
    OrthonormalBasis q = straight_line_basis(40);
    Eigen::VectorXd w = Eigen::VectorXd::Zero(40);
    w(0) = w(39) = 0.5;
    RoundingComparison cmp = compare_rounding(q, DesignMeasure(w), 4, 0.3);
    CHECK(cmp.excess_ceil_remove == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(cmp.excess_efficient == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("compare_rounding: apportionment instability on the quadratic model") {
    // Somewhere on the grid the efficient apportionment must do strictly
    // worse than score-guided removal.
    OrthonormalBasis q = quadratic_basis(40);
    bool found = false;
    for (double nu : {0.1, 0.3, 0.5, 0.7, 0.9}) {
        FrontierPoint fp = frontier_point(q, nu);
        RoundingComparison cmp = compare_rounding(q, fp.design, 14, nu);
        // Removal can beat the continuous iterate slightly, since rounding
        // sweeps up the residual mass the additive updates leave behind.
        CHECK(cmp.excess_ceil_remove > -0.05);
        if (cmp.loss_efficient > cmp.loss_ceil_remove) found = true;
    }
    CHECK(found);
}

TEST_CASE("rounding methods are deterministic") {
    OrthonormalBasis q = quadratic_basis(40);
    FrontierPoint fp = frontier_point(q, 0.4);
    ExactDesign a = ceil_then_remove(q, fp.design, 14, 0.4);
    ExactDesign b = ceil_then_remove(q, fp.design, 14, 0.4);
    CHECK(a.allocations == b.allocations);
    DesignMeasure pruned = prune_measure(fp.design, 0.5 / 40);
    ExactDesign c = pukelsheim_rieder(pruned, 14);
    ExactDesign d = pukelsheim_rieder(pruned, 14);
    CHECK(c.allocations == d.allocations);

    RoundingComparison u = compare_rounding(q, fp.design, 14, 0.4);
    RoundingComparison v = compare_rounding(q, fp.design, 14, 0.4);
    CHECK(u.loss_ceil_remove == v.loss_ceil_remove);
    CHECK(u.loss_efficient == v.loss_efficient);
}
