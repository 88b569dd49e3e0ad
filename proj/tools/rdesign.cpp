#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "rdes/runconfig.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Robust minimax regression designs on finite design spaces"};
    std::string config_path;
    std::string out_dir;
    long seed = 0;
    app.add_option("--config", config_path, "Path to the JSON run configuration")
        ->required();
    app.add_option("--out", out_dir, "Output directory (overrides the config)");
    app.add_option("--seed", seed,
                   "Seed for randomized test fixtures; solvers are deterministic");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;  // fold CLI11's codes into "config error"
    }

    rdes::RunConfig config;
    try {
        config = rdes::parse_config_file(config_path);
    } catch (const std::exception& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 2;
    }
    if (!out_dir.empty()) config.output_dir = out_dir;
    return rdes::run(config);
}
