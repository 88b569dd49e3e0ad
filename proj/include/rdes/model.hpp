#pragma once

#include <Eigen/Dense>
#include <string>
#include <variant>
#include <vector>

#include "rdes/errors.hpp"

namespace rdes {

/// Finite set of candidate observation sites, one q-vector per row.
/// The row order is fixed and deterministic; all downstream indices refer to it.
class DesignSpace {
public:
    explicit DesignSpace(Eigen::MatrixXd points);

    const Eigen::MatrixXd& points() const { return points_; }
    int count() const { return static_cast<int>(points_.rows()); }
    int dim() const { return static_cast<int>(points_.cols()); }

private:
    Eigen::MatrixXd points_;  // N x q
};

struct Interval {
    double lo;
    double hi;
};

/// Full Cartesian grid over the given intervals. Per axis the points are
/// lo + (hi - lo)*(i-1)/(c-1); for symmetric intervals the second half is
/// mirrored from the first so that x_i = -x_{N-i+1} holds exactly.
/// First coordinate varies slowest.
DesignSpace build_grid_space(const std::vector<Interval>& bounds,
                             const std::vector<int>& counts);

/// Monomials of total degree <= degree, emitted in graded lexicographic
/// order (constant term first when intercept is set, then linear terms,
/// then ascending degree). interaction_order < 0 means unrestricted.
struct PolynomialModel {
    int degree = 1;
    bool intercept = true;
    int interaction_order = -1;
};

/// An N x p table of regressor values read from a headered CSV file.
struct ExplicitModel {
    std::string table_path;
};

struct RegressorSpec {
    std::variant<PolynomialModel, ExplicitModel> kind;
};

/// Row i holds f'(x_i). Full column rank is checked on construction.
struct RegressorMatrix {
    Eigen::MatrixXd F;  // N x p
    int rank = 0;
};

/// N x p matrix with orthonormal columns spanning the column space of F.
struct OrthonormalBasis {
    Eigen::MatrixXd Q;
};

RegressorMatrix evaluate_regressors(const RegressorSpec& spec, const DesignSpace& space);

/// Column-pivoted Householder factorization with a fixed sign convention:
/// the first entry of each column whose magnitude exceeds 1e-12 is made
/// nonnegative. Throws NumericalError when the numerical rank is below p.
OrthonormalBasis orthonormalize(const RegressorMatrix& F);

/// Probability weights over the design points. The constructor rejects
/// entries below -1e-14 and sums off 1 by more than 1e-10; smaller
/// deviations are clamped and renormalized.
class DesignMeasure {
public:
    explicit DesignMeasure(Eigen::VectorXd weights);

    const Eigen::VectorXd& weights() const { return weights_; }
    int size() const { return static_cast<int>(weights_.size()); }
    std::vector<int> support() const;

private:
    Eigen::VectorXd weights_;
};

DesignMeasure uniform_measure(int n_points);

/// Exponent tuples of the polynomial expansion, in emission order.
std::vector<std::vector<int>> monomial_exponents(const PolynomialModel& model, int dim);

}  // namespace rdes
