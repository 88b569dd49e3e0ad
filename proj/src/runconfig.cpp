#include "rdes/runconfig.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "rdes/apportion.hpp"
#include "rdes/csv.hpp"

namespace rdes {

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& obj, const std::vector<std::string>& allowed,
                         const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end())
            throw ConfigError("unknown key '" + it.key() + "' in " + where);
    }
}

Task parse_task(const std::string& name) {
    static const std::map<std::string, Task> tasks = {
        {"solve", Task::solve}, {"sweep", Task::sweep},   {"rbb", Task::rbb},
        {"rbv", Task::rbv},     {"cmb", Task::cmb},       {"round", Task::round},
        {"compare", Task::compare}};
    auto it = tasks.find(name);
    if (it == tasks.end()) throw ConfigError("unknown task '" + name + "'");
    return it->second;
}

void parse_space(const json& obj, RunConfig& cfg) {
    reject_unknown_keys(obj, {"grid", "points"}, "space");
    if (obj.contains("grid") == obj.contains("points"))
        throw ConfigError("space must specify exactly one of 'grid' or 'points'");
    if (obj.contains("grid")) {
        const json& grid = obj.at("grid");
        reject_unknown_keys(grid, {"bounds", "counts"}, "space.grid");
        if (!grid.contains("bounds") || !grid.contains("counts"))
            throw ConfigError("space.grid requires 'bounds' and 'counts'");
        for (const auto& b : grid.at("bounds")) {
            if (!b.is_array() || b.size() != 2)
                throw ConfigError("each grid bound must be a [lo, hi] pair");
            cfg.grid_bounds.push_back({b[0].get<double>(), b[1].get<double>()});
        }
        for (const auto& c : grid.at("counts")) cfg.grid_counts.push_back(c.get<int>());
    } else {
        const json& pts = obj.at("points");
        if (!pts.is_array() || pts.empty())
            throw ConfigError("space.points must be a nonempty array of coordinate rows");
        const int q = static_cast<int>(pts[0].size());
        Eigen::MatrixXd m(static_cast<int>(pts.size()), q);
        for (int i = 0; i < m.rows(); ++i) {
            if (static_cast<int>(pts[i].size()) != q)
                throw ConfigError("space.points rows must all have the same length");
            for (int j = 0; j < q; ++j) m(i, j) = pts[i][j].get<double>();
        }
        cfg.explicit_points = std::move(m);
    }
}

void parse_model(const json& obj, RunConfig& cfg) {
    reject_unknown_keys(obj, {"kind", "degree", "intercept", "interaction_order", "table"},
                        "model");
    const std::string kind = obj.at("kind").get<std::string>();
    if (kind == "polynomial") {
        PolynomialModel poly;
        poly.degree = obj.value("degree", 1);
        poly.intercept = obj.value("intercept", true);
        poly.interaction_order = obj.value("interaction_order", -1);
        cfg.model.kind = poly;
    } else if (kind == "explicit") {
        if (!obj.contains("table"))
            throw ConfigError("explicit model requires a 'table' path");
        cfg.model.kind = ExplicitModel{obj.at("table").get<std::string>()};
    } else {
        throw ConfigError("model.kind must be 'polynomial' or 'explicit'");
    }
}

void parse_optimizer(const json& obj, RunConfig& cfg) {
    reject_unknown_keys(obj, {"tol", "max_iter", "pseudo_count_start"}, "optimizer");
    if (obj.contains("tol")) cfg.optimizer.tol = obj.at("tol").get<double>();
    if (obj.contains("max_iter")) cfg.optimizer.max_iter = obj.at("max_iter").get<int>();
    if (obj.contains("pseudo_count_start"))
        cfg.optimizer.pseudo_count_start = obj.at("pseudo_count_start").get<int>();
}

void require_param(bool present, const std::string& task, const std::string& field) {
    if (!present)
        throw ConfigError("task '" + task + "' requires the field '" + field + "'");
}

}  // namespace

RunConfig parse_config(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed configuration: ") + e.what());
    }
    reject_unknown_keys(doc,
                        {"space", "model", "task", "nu", "sigma2", "tau2", "b2", "s2",
                         "cmb_target", "n", "nu_grid", "optimizer", "output"},
                        "config");
    RunConfig cfg;
    if (!doc.contains("space")) throw ConfigError("missing 'space'");
    if (!doc.contains("model")) throw ConfigError("missing 'model'");
    if (!doc.contains("task")) throw ConfigError("missing 'task'");
    parse_space(doc.at("space"), cfg);
    parse_model(doc.at("model"), cfg);
    cfg.task = parse_task(doc.at("task").get<std::string>());
    if (doc.contains("optimizer")) parse_optimizer(doc.at("optimizer"), cfg);
    if (doc.contains("output")) cfg.output_dir = doc.at("output").get<std::string>();

    if (doc.contains("sigma2") != doc.contains("tau2"))
        throw ConfigError("'sigma2' and 'tau2' must be given together");
    if (doc.contains("sigma2")) {
        const double nu = nu_from_scale(doc.at("sigma2").get<double>(),
                                        doc.at("tau2").get<double>());
        if (doc.contains("nu") && std::abs(doc.at("nu").get<double>() - nu) > 1e-12)
            throw ConfigError("'nu' contradicts the value implied by sigma2/tau2");
        cfg.nu = nu;
    } else if (doc.contains("nu")) {
        cfg.nu = doc.at("nu").get<double>();
    }
    if (cfg.nu && (*cfg.nu < 0.0 || *cfg.nu > 1.0))
        throw ConfigError("nu must lie in [0, 1]");

    if (doc.contains("b2")) cfg.b2 = doc.at("b2").get<double>();
    if (doc.contains("s2")) cfg.s2 = doc.at("s2").get<double>();
    if (doc.contains("cmb_target")) cfg.cmb_target = doc.at("cmb_target").get<double>();
    if (doc.contains("n")) cfg.run_size = doc.at("n").get<int>();
    if (doc.contains("nu_grid")) {
        const json& g = doc.at("nu_grid");
        if (g.is_number_integer()) {
            const int k = g.get<int>();
            if (k < 2) throw ConfigError("nu_grid count must be at least 2");
            for (int i = 0; i < k; ++i) cfg.nu_grid.push_back(i / double(k - 1));
        } else if (g.is_array()) {
            for (const auto& v : g) cfg.nu_grid.push_back(v.get<double>());
        } else {
            throw ConfigError("nu_grid must be a point count or an array of values");
        }
        for (double v : cfg.nu_grid)
            if (v < 0.0 || v > 1.0) throw ConfigError("nu_grid values must lie in [0, 1]");
    }

    switch (cfg.task) {
        case Task::solve:
            require_param(cfg.nu.has_value(), "solve", "nu (or sigma2/tau2)");
            break;
        case Task::sweep:
        case Task::compare:
            if (cfg.task == Task::compare)
                require_param(cfg.run_size.has_value(), "compare", "n");
            break;
        case Task::rbb:
            require_param(cfg.b2.has_value(), "rbb", "b2");
            break;
        case Task::rbv:
            require_param(cfg.s2.has_value(), "rbv", "s2");
            break;
        case Task::cmb:
            require_param(cfg.cmb_target.has_value(), "cmb", "cmb_target");
            break;
        case Task::round:
            require_param(cfg.nu.has_value(), "round", "nu (or sigma2/tau2)");
            require_param(cfg.run_size.has_value(), "round", "n");
            break;
    }
    return cfg;
}

RunConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open configuration file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

namespace {

void write_design_csv(const std::string& path, const DesignSpace& space,
                      const DesignMeasure& xi, const ExactDesign* exact) {
    const int N = space.count();
    const int q = space.dim();
    std::vector<std::string> header = {"index"};
    for (int a = 0; a < q; ++a) header.push_back("x" + std::to_string(a + 1));
    header.push_back("weight");
    if (exact) header.push_back("allocation");
    Eigen::MatrixXd rows(N, static_cast<int>(header.size()));
    for (int i = 0; i < N; ++i) {
        int c = 0;
        rows(i, c++) = i + 1;
        for (int a = 0; a < q; ++a) rows(i, c++) = space.points()(i, a);
        rows(i, c++) = xi.weights()(i);
        if (exact) rows(i, c++) = exact->allocations(i);
    }
    write_csv_table(path, header, rows);
}

void write_frontier_csv(const std::string& path, const std::vector<FrontierPoint>& pts) {
    Eigen::MatrixXd rows(static_cast<int>(pts.size()), 5);
    for (size_t i = 0; i < pts.size(); ++i) {
        rows(static_cast<int>(i), 0) = pts[i].nu;
        rows(static_cast<int>(i), 1) = pts[i].var;
        rows(static_cast<int>(i), 2) = pts[i].maxbias;
        rows(static_cast<int>(i), 3) = pts[i].cmb;
        rows(static_cast<int>(i), 4) = pts[i].loss_value;
    }
    write_csv_table(path, {"nu", "var", "maxbias", "cmb", "loss"}, rows);
}

void print_summary(const FrontierPoint& fp) {
    std::cout.precision(6);
    std::cout << "nu=" << fp.nu << " var=" << fp.var << " maxbias=" << fp.maxbias
              << " cmb=" << fp.cmb << " loss=" << fp.loss_value << "\n";
}

int run_impl(const RunConfig& config) {
    DesignSpace space = config.explicit_points
                            ? DesignSpace(*config.explicit_points)
                            : build_grid_space(config.grid_bounds, config.grid_counts);
    RegressorMatrix F = evaluate_regressors(config.model, space);
    OrthonormalBasis basis = orthonormalize(F);

    std::filesystem::create_directories(config.output_dir);
    const auto out = [&](const std::string& name) {
        return (std::filesystem::path(config.output_dir) / name).string();
    };
    const std::vector<double> grid =
        config.nu_grid.empty() ? default_nu_grid() : config.nu_grid;

    switch (config.task) {
        case Task::solve: {
            FrontierPoint fp = frontier_point(basis, *config.nu, config.optimizer);
            write_design_csv(out("design.csv"), space, fp.design, nullptr);
            print_summary(fp);
            break;
        }
        case Task::sweep: {
            auto pts = sweep_frontier(basis, grid, config.optimizer);
            write_frontier_csv(out("frontier.csv"), pts);
            print_summary(pts.back());
            break;
        }
        case Task::rbb: {
            FrontierPoint fp = solve_rbb(basis, *config.b2, config.optimizer);
            write_design_csv(out("design.csv"), space, fp.design, nullptr);
            print_summary(fp);
            break;
        }
        case Task::rbv: {
            FrontierPoint fp = solve_rbv(basis, *config.s2, config.optimizer);
            write_design_csv(out("design.csv"), space, fp.design, nullptr);
            print_summary(fp);
            break;
        }
        case Task::cmb: {
            FrontierPoint fp = find_nu_for_cmb(basis, *config.cmb_target, config.optimizer);
            write_design_csv(out("design.csv"), space, fp.design, nullptr);
            print_summary(fp);
            break;
        }
        case Task::round: {
            FrontierPoint fp = frontier_point(basis, *config.nu, config.optimizer);
            ExactDesign exact =
                ceil_then_remove(basis, fp.design, *config.run_size, *config.nu);
            write_design_csv(out("design.csv"), space, fp.design, &exact);
            print_summary(fp);
            break;
        }
        case Task::compare: {
            Eigen::MatrixXd rows(static_cast<int>(grid.size()), 4);
            auto pts = sweep_frontier(basis, grid, config.optimizer);
            for (size_t k = 0; k < grid.size(); ++k) {
                RoundingComparison cmp =
                    compare_rounding(basis, pts[k].design, *config.run_size, grid[k]);
                rows(static_cast<int>(k), 0) = cmp.nu;
                rows(static_cast<int>(k), 1) = cmp.loss_continuous;
                rows(static_cast<int>(k), 2) = cmp.loss_ceil_remove;
                rows(static_cast<int>(k), 3) = cmp.loss_efficient;
            }
            const FrontierPoint& last = pts.back();
            write_csv_table(
                out("compare.csv"),
                {"nu", "loss_continuous", "loss_ceil_remove", "loss_efficient_apportionment"},
                rows);
            print_summary(last);
            break;
        }
    }
    return 0;
}

}  // namespace

int run(const RunConfig& config) {
    try {
        return run_impl(config);
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    }
}

}  // namespace rdes
