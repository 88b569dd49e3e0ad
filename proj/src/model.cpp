#include "rdes/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "rdes/csv.hpp"

namespace rdes {

DesignSpace::DesignSpace(Eigen::MatrixXd points) : points_(std::move(points)) {
    if (points_.rows() < 1) throw ConfigError("design space must contain at least one point");
    for (int i = 0; i < points_.rows(); ++i)
        for (int j = i + 1; j < points_.rows(); ++j)
            if (points_.row(i) == points_.row(j))
                throw ConfigError("design space points must be distinct");
}

namespace {

std::vector<double> axis_points(const Interval& iv, int count) {
    if (count <= 0) throw ConfigError("grid count must be positive");
    if (iv.lo > iv.hi) throw ConfigError("grid interval has lower bound above upper bound");
    if (count == 1) {
        if (iv.lo != iv.hi)
            throw ConfigError("a single-point axis requires a degenerate interval");
        return {iv.lo};
    }
    std::vector<double> xs(count);
    for (int i = 0; i < count; ++i)
        xs[i] = iv.lo + (iv.hi - iv.lo) * static_cast<double>(i) / (count - 1);
    if (iv.lo == -iv.hi) {
        // Mirror the upper half so symmetric grids satisfy x_i = -x_{count-i-1} exactly.
        for (int i = 0; i < count / 2; ++i) xs[count - 1 - i] = -xs[i];
        if (count % 2 == 1) xs[count / 2] = 0.0;
    }
    return xs;
}

}  // namespace

DesignSpace build_grid_space(const std::vector<Interval>& bounds,
                             const std::vector<int>& counts) {
    if (bounds.empty() || bounds.size() != counts.size())
        throw ConfigError("grid bounds and counts must be nonempty and of equal length");
    const int q = static_cast<int>(bounds.size());
    std::vector<std::vector<double>> axes(q);
    std::int64_t total = 1;
    for (int a = 0; a < q; ++a) {
        axes[a] = axis_points(bounds[a], counts[a]);
        total *= counts[a];
    }
    Eigen::MatrixXd pts(total, q);
    for (std::int64_t r = 0; r < total; ++r) {
        std::int64_t rem = r;
        for (int a = q - 1; a >= 0; --a) {
            pts(r, a) = axes[a][rem % counts[a]];
            rem /= counts[a];
        }
    }
    return DesignSpace(std::move(pts));
}

std::vector<std::vector<int>> monomial_exponents(const PolynomialModel& model, int dim) {
    if (model.degree < 0) throw ConfigError("polynomial degree must be nonnegative");
    std::vector<std::vector<int>> out;
    std::vector<int> expo(dim, 0);
    // Enumerate all exponent tuples with total degree <= d.
    auto recurse = [&](auto&& self, int axis, int remaining) -> void {
        if (axis == dim) {
            int total = model.degree - remaining;
            int nvars = static_cast<int>(std::count_if(expo.begin(), expo.end(),
                                                       [](int e) { return e > 0; }));
            if (total == 0 && !model.intercept) return;
            if (model.interaction_order >= 0 && nvars > model.interaction_order) return;
            out.push_back(expo);
            return;
        }
        for (int e = 0; e <= remaining; ++e) {
            expo[axis] = e;
            self(self, axis + 1, remaining - e);
        }
        expo[axis] = 0;
    };
    recurse(recurse, 0, model.degree);
    // Graded lexicographic: ascending total degree, then descending exponent tuple.
    std::sort(out.begin(), out.end(), [](const std::vector<int>& a, const std::vector<int>& b) {
        int ta = 0, tb = 0;
        for (int e : a) ta += e;
        for (int e : b) tb += e;
        if (ta != tb) return ta < tb;
        return a > b;
    });
    return out;
}

namespace {

int numerical_rank(const Eigen::MatrixXd& m) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    const auto& sv = svd.singularValues();
    if (sv.size() == 0) return 0;
    const double cutoff = 1e-10 * sv(0);
    int r = 0;
    for (int i = 0; i < sv.size(); ++i)
        if (sv(i) > cutoff) ++r;
    return r;
}

}  // namespace

RegressorMatrix evaluate_regressors(const RegressorSpec& spec, const DesignSpace& space) {
    const int N = space.count();
    Eigen::MatrixXd F;
    if (const auto* poly = std::get_if<PolynomialModel>(&spec.kind)) {
        auto exponents = monomial_exponents(*poly, space.dim());
        if (exponents.empty()) throw ConfigError("polynomial model has no terms");
        F.resize(N, static_cast<int>(exponents.size()));
        for (int i = 0; i < N; ++i) {
            for (int j = 0; j < F.cols(); ++j) {
                double v = 1.0;
                for (int a = 0; a < space.dim(); ++a)
                    for (int e = 0; e < exponents[j][a]; ++e) v *= space.points()(i, a);
                F(i, j) = v;
            }
        }
    } else {
        const auto& tab = std::get<ExplicitModel>(spec.kind);
        CsvTable table = read_csv_table(tab.table_path);
        if (table.values.rows() != N)
            throw ConfigError("explicit regressor table has " +
                              std::to_string(table.values.rows()) + " rows, expected " +
                              std::to_string(N));
        F = table.values;
    }
    if (F.cols() > N)
        throw ConfigError("more regressors than design points (p > N)");
    RegressorMatrix result{std::move(F), 0};
    result.rank = numerical_rank(result.F);
    if (result.rank < result.F.cols())
        throw NumericalError("regressor matrix is rank deficient (rank " +
                             std::to_string(result.rank) + " < p = " +
                             std::to_string(result.F.cols()) + ")");
    return result;
}

OrthonormalBasis orthonormalize(const RegressorMatrix& F) {
    const int N = static_cast<int>(F.F.rows());
    const int p = static_cast<int>(F.F.cols());
    if (numerical_rank(F.F) < p)
        throw NumericalError("cannot orthonormalize a rank-deficient matrix");
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(F.F);
    Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(N, p);
    // Sign convention: first entry of magnitude > 1e-12 in each column nonnegative.
    for (int j = 0; j < p; ++j) {
        for (int i = 0; i < N; ++i) {
            if (std::abs(Q(i, j)) > 1e-12) {
                if (Q(i, j) < 0) Q.col(j) = -Q.col(j);
                break;
            }
        }
    }
    return OrthonormalBasis{std::move(Q)};
}

DesignMeasure::DesignMeasure(Eigen::VectorXd weights) : weights_(std::move(weights)) {
    if (weights_.size() < 1) throw ConfigError("design measure must have at least one weight");
    for (int i = 0; i < weights_.size(); ++i) {
        if (weights_(i) < -1e-14)
            throw ConfigError("design weight " + std::to_string(i) + " is negative");
        if (weights_(i) < 0) weights_(i) = 0.0;
    }
    const double sum = weights_.sum();
    if (std::abs(sum - 1.0) > 1e-10)
        throw ConfigError("design weights sum to " + std::to_string(sum) + ", expected 1");
    weights_ /= sum;
}

std::vector<int> DesignMeasure::support() const {
    std::vector<int> idx;
    for (int i = 0; i < weights_.size(); ++i)
        if (weights_(i) > 0) idx.push_back(i);
    return idx;
}

DesignMeasure uniform_measure(int n_points) {
    return DesignMeasure(Eigen::VectorXd::Constant(n_points, 1.0 / n_points));
}

}  // namespace rdes
