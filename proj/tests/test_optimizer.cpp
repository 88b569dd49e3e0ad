#include <doctest.h>

#include <random>

#include "rdes/criteria.hpp"
#include "rdes/model.hpp"
#include "rdes/optimizer.hpp"

using namespace rdes;

namespace {

OrthonormalBasis straight_line_basis(int n_points) {
    DesignSpace s = build_grid_space({{-1.0, 1.0}}, {n_points});
    return orthonormalize(evaluate_regressors({PolynomialModel{1, true, -1}}, s));
}

OrthonormalBasis origin_basis() {
    DesignSpace s = build_grid_space({{-1.0, 1.0}}, {3});
    return orthonormalize(evaluate_regressors({PolynomialModel{1, false, -1}}, s));
}

DesignMeasure random_measure(int n, std::mt19937& rng) {
    std::exponential_distribution<double> exp1(1.0);
    Eigen::VectorXd w(n);
    for (int i = 0; i < n; ++i) w(i) = exp1(rng) + 1e-6;
    w /= w.sum();
    return DesignMeasure(w);
}

double loss_at(const OrthonormalBasis& q, const Eigen::VectorXd& w, double nu) {
    MomentBundle b = moments_raw(q, w);
    return loss(nu, variance(b), maxbias(b));
}

// Independent oracle: central finite difference of I_nu along delta_i - xi.
double fd_score(const OrthonormalBasis& q, const DesignMeasure& xi, double nu, int i) {
    const double h = 1e-6;
    Eigen::VectorXd dir = -xi.weights();
    dir(i) += 1.0;
    return -(loss_at(q, xi.weights() + h * dir, nu) -
             loss_at(q, xi.weights() - h * dir, nu)) /
           (2.0 * h);
}

}  // namespace

TEST_CASE("directional scores match finite differences (property)") {
    DesignSpace s = build_grid_space({{-1.0, 1.0}}, {10});
    OrthonormalBasis q = orthonormalize(evaluate_regressors({PolynomialModel{2, true, -1}}, s));
    std::mt19937 rng(20260823);
    int tested = 0;
    while (tested < 15) {
        DesignMeasure xi = random_measure(10, rng);
        if (moments(q, xi).eigen_gap <= 1e-6) continue;
        ++tested;
        for (double nu : {0.0, 0.28, 0.7, 1.0}) {
            Eigen::VectorXd t = directional_scores(q, xi, nu);
            for (int i = 0; i < 10; ++i)
                CHECK(std::abs(t(i) - fd_score(q, xi, nu, i)) <=
                      1e-4 * (1.0 + std::abs(t(i))));
        }
    }
}

TEST_CASE("scores average to zero under the design weights") {
    OrthonormalBasis q = straight_line_basis(12);
    std::mt19937 rng(5);
    for (int trial = 0; trial < 10; ++trial) {
        DesignMeasure xi = random_measure(12, rng);
        if (moments(q, xi).eigen_gap <= 1e-9) continue;
        for (double nu : {0.0, 0.4, 1.0}) {
            Eigen::VectorXd t = directional_scores(q, xi, nu);
            CHECK(std::abs(xi.weights().dot(t)) <= 1e-9 * (1.0 + t.cwiseAbs().maxCoeff()));
        }
    }
}

TEST_CASE("variance scores on the uniform design peak at the endpoints") {
    OrthonormalBasis q = straight_line_basis(40);
    Eigen::VectorXd t = directional_scores(q, uniform_measure(40), 0.0);
    int arg = 0;
    t.maxCoeff(&arg);
    CHECK((arg == 0 || arg == 39));
    CHECK(t(0) == doctest::Approx(t(39)).epsilon(1e-12));
}

TEST_CASE("minimize_loss at nu = 1 returns the uniform design") {
    OrthonormalBasis q = straight_line_basis(40);
    auto [xi, trace] = minimize_loss(q, 1.0);
    CHECK(trace.converged);
    CHECK((xi.weights().array() - 1.0 / 40).abs().maxCoeff() < 1e-3);
    CHECK(maxbias(moments(q, xi)) < 1.0 + 1e-6);
}

TEST_CASE("minimize_loss at nu = 0 concentrates on the extremes") {
    OrthonormalBasis q = straight_line_basis(40);
    auto [xi, trace] = minimize_loss(q, 0.0);
    const double var = variance(moments(q, xi));
    const double optimal = 40.0 + 21320.0 / 1521.0;
    CHECK(var <= optimal * 1.005);
    double off_mass = 0.0;
    for (int i = 1; i < 39; ++i) off_mass += xi.weights()(i);
    CHECK(off_mass < 0.02);
}

TEST_CASE("minimize_loss: loss history never increases") {
    OrthonormalBasis q = straight_line_basis(40);
    for (double nu : {0.0, 0.28, 1.0}) {
        auto [xi, trace] = minimize_loss(q, nu);
        for (size_t k = 1; k < trace.loss_history.size(); ++k)
            CHECK(trace.loss_history[k] <= trace.loss_history[k - 1] + 1e-12);
    }
}

TEST_CASE("minimize_loss: first-order optimality at a converged return") {
    OrthonormalBasis q = straight_line_basis(40);
    auto [xi, trace] = minimize_loss(q, 1.0);
    REQUIRE(trace.converged);
    MomentBundle b = moments(q, xi);
    const double value = loss(1.0, variance(b), maxbias(b));
    CHECK(directional_scores(q, xi, 1.0).maxCoeff() <= 1e-7 * (1.0 + std::abs(value)));
}

TEST_CASE("minimize_loss: deterministic across runs") {
    OrthonormalBasis q = straight_line_basis(20);
    auto [a, ta] = minimize_loss(q, 0.35);
    auto [b, tb] = minimize_loss(q, 0.35);
    CHECK(a.weights() == b.weights());
    CHECK(ta.iterations == tb.iterations);
    CHECK(ta.loss_history == tb.loss_history);
}

TEST_CASE("regression through the origin: every nu yields loss 2 - nu") {
    // The minimizer is not unique at the endpoints (any design with full
    // mass on {-1, 1} is I-optimal; any symmetric design minimizes the
    // bias), so only the minimized loss is pinned down.
    OrthonormalBasis q = origin_basis();
    for (double nu : {0.0, 0.5, 1.0}) {
        FrontierPoint fp = frontier_point(q, nu);
        CHECK(fp.loss_value == doctest::Approx(2.0 - nu).epsilon(5e-3));
    }
    // In the interior the symmetric two-point design is the minimizer.
    FrontierPoint mid = frontier_point(q, 0.5);
    CHECK(mid.var == doctest::Approx(2.0).epsilon(5e-3));
    CHECK(mid.maxbias == doctest::Approx(1.0).epsilon(5e-3));
}

TEST_CASE("sweep: parallel and serial results are identical") {
    OrthonormalBasis q = straight_line_basis(15);
    std::vector<double> grid = {0.0, 0.25, 0.5, 0.75, 1.0};
    auto serial = sweep_frontier_serial(q, grid);
    auto parallel = sweep_frontier(q, grid);
    REQUIRE(serial.size() == parallel.size());
    for (size_t k = 0; k < grid.size(); ++k) {
        CHECK(serial[k].design.weights() == parallel[k].design.weights());
        CHECK(serial[k].loss_value == parallel[k].loss_value);
    }
}

TEST_CASE("sweep: frontier is monotone and internally consistent") {
    OrthonormalBasis q = straight_line_basis(40);
    std::vector<double> grid;
    for (int i = 0; i <= 10; ++i) grid.push_back(i / 10.0);
    auto pts = sweep_frontier(q, grid);
    CHECK(pts.front().var == doctest::Approx(40.0 + 21320.0 / 1521.0).epsilon(0.005));
    CHECK(pts.front().maxbias == doctest::Approx(20.0).epsilon(0.02));
    CHECK(pts.back().var == doctest::Approx(80.0).epsilon(1e-9));
    CHECK(pts.back().maxbias == doctest::Approx(1.0).epsilon(1e-9));
    for (size_t k = 1; k < pts.size(); ++k) {
        CHECK(pts[k - 1].var <= pts[k].var + 1e-3 * pts[k].var);
        CHECK(pts[k - 1].maxbias >= pts[k].maxbias - 1e-3 * pts[k - 1].maxbias);
    }
    for (const auto& fp : pts) {
        CHECK(std::abs(fp.loss_value - loss(fp.nu, fp.var, fp.maxbias)) <= 1e-10);
        CHECK(std::abs(fp.cmb - std::sqrt(fp.maxbias / fp.var)) <= 1e-12);
    }
}

TEST_CASE("degenerate model: flat frontier var = 2, maxbias = 1") {
    OrthonormalBasis q = origin_basis();
    auto pts = sweep_frontier(q, {0.2, 0.4, 0.6, 0.8});
    for (const auto& fp : pts) {
        CHECK(fp.var == doctest::Approx(2.0).epsilon(5e-3));
        CHECK(fp.maxbias == doctest::Approx(1.0).epsilon(5e-3));
        CHECK(fp.loss_value == doctest::Approx(2.0 - fp.nu).epsilon(5e-3));
    }
}

TEST_CASE("solve_rbb: bound 1 returns the uniform design") {
    OrthonormalBasis q = straight_line_basis(40);
    FrontierPoint fp = solve_rbb(q, 1.0);
    CHECK(fp.maxbias <= 1.0 * (1.0 + 1e-3));
    CHECK((fp.design.weights().array() - 1.0 / 40).abs().maxCoeff() < 1e-3);
}

TEST_CASE("solve_rbb: a slack bound returns the I-optimal endpoint") {
    OrthonormalBasis q = straight_line_basis(40);
    FrontierPoint fp = solve_rbb(q, 25.0);  // b2 above maxbias(xi_0) = 20
    CHECK(fp.nu == 0.0);
    CHECK(fp.var == doctest::Approx(40.0 + 21320.0 / 1521.0).epsilon(0.005));
}

TEST_CASE("solve_rbb: infeasible bound is rejected") {
    OrthonormalBasis q = straight_line_basis(40);
    CHECK_THROWS_AS(solve_rbb(q, 0.5), ConfigError);
}

TEST_CASE("solve_rbv: bounds at and above the endpoints") {
    OrthonormalBasis q = straight_line_basis(40);
    SUBCASE("slack bound returns the uniform design") {
        FrontierPoint fp = solve_rbv(q, 80.0);
        CHECK(fp.nu == 1.0);
        CHECK(fp.maxbias == doctest::Approx(1.0).epsilon(1e-9));
    }
    SUBCASE("bound at the I-optimal variance returns the two-point design") {
        FrontierPoint fp = solve_rbv(q, 40.0 + 21320.0 / 1521.0);
        CHECK(fp.var <= (40.0 + 21320.0 / 1521.0) * (1.0 + 1e-3));
        CHECK(fp.maxbias == doctest::Approx(20.0).epsilon(0.05));
    }
    SUBCASE("bound below the attainable minimum is rejected") {
        CHECK_THROWS_AS(solve_rbv(q, 10.0), ConfigError);
    }
}

TEST_CASE("rbb and rbv agree at a shared frontier point") {
    OrthonormalBasis q = straight_line_basis(40);
    FrontierPoint mid = frontier_point(q, 0.28);
    FrontierPoint via_bias = solve_rbb(q, mid.maxbias);
    FrontierPoint via_var = solve_rbv(q, mid.var);
    CHECK(std::abs(loss(0.28, via_bias.var, via_bias.maxbias) -
                   loss(0.28, via_var.var, via_var.maxbias)) <= 1e-3 * mid.loss_value);
}

TEST_CASE("find_nu_for_cmb") {
    OrthonormalBasis q = straight_line_basis(40);
    SUBCASE("target one third lands near nu = 0.28") {
        FrontierPoint fp = find_nu_for_cmb(q, 1.0 / 3.0);
        CHECK(fp.nu >= 0.23);
        CHECK(fp.nu <= 0.33);
        CHECK(fp.cmb == doctest::Approx(1.0 / 3.0).epsilon(0.01));
    }
    SUBCASE("endpoint targets return the endpoint designs") {
        FrontierPoint hi = find_nu_for_cmb(q, std::sqrt(1.0 / 80.0));
        CHECK(hi.nu == 1.0);
        FrontierPoint lo = find_nu_for_cmb(q, std::sqrt(20.0 / (40.0 + 21320.0 / 1521.0)));
        CHECK(lo.nu == 0.0);
    }
    SUBCASE("unreachable target reports the range") {
        CHECK_THROWS_WITH_AS(find_nu_for_cmb(q, 5.0), doctest::Contains("range"),
                             ConfigError);
    }
}

TEST_CASE("optimizer config validation and non-convergence flag") {
    OrthonormalBasis q = straight_line_basis(40);
    OptimizerConfig cfg;
    cfg.max_iter = 3;  // far too few for nu = 0
    auto [xi, trace] = minimize_loss(q, 0.0, cfg);
    CHECK_FALSE(trace.converged);
    CHECK(xi.weights().sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_THROWS_AS(minimize_loss(q, 2.0), ConfigError);
}
