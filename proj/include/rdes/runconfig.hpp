#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rdes/model.hpp"
#include "rdes/optimizer.hpp"

namespace rdes {

enum class Task { solve, sweep, rbb, rbv, cmb, round, compare };

/// One batch run: a design space, a regression model, a task and its
/// parameters, optimizer settings, and an output directory.
struct RunConfig {
    // Space: either a grid or explicit points.
    std::vector<Interval> grid_bounds;
    std::vector<int> grid_counts;
    std::optional<Eigen::MatrixXd> explicit_points;

    RegressorSpec model;
    Task task = Task::solve;

    std::optional<double> nu;
    std::optional<double> b2;
    std::optional<double> s2;
    std::optional<double> cmb_target;
    std::optional<int> run_size;
    std::vector<double> nu_grid;  // empty: default 101-point grid

    OptimizerConfig optimizer;
    std::string output_dir = ".";
};

/// Parses a JSON configuration document. Unknown keys are rejected by
/// name; sigma2/tau2 inputs are converted to nu, and an explicit nu that
/// contradicts them is an error.
RunConfig parse_config(const std::string& json_text);

RunConfig parse_config_file(const std::string& path);

/// Executes the task and writes design.csv / frontier.csv / compare.csv
/// into the output directory. Returns the process exit code:
/// 0 success, 2 configuration error, 3 numerical failure.
int run(const RunConfig& config);

}  // namespace rdes
