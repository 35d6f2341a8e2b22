// Command-line front end: wires configuration parsing to the pipeline
// commands and maps the error taxonomy onto exit codes.

#include <CLI11.hpp>
#include <iostream>
#include <string>
#include <vector>

#include "maguq/config.hpp"
#include "maguq/driver.hpp"

namespace {

struct GlobalArgs {
    std::string config_path;
    std::string out_dir = "out";
    std::vector<std::string> overrides;
    long long seed = -1;
    int threads = 0;
};

maguq::cli::RunConfig resolve_config(const GlobalArgs& args) {
    maguq::cli::RunConfig config = args.config_path.empty()
                                       ? maguq::cli::RunConfig{}
                                       : maguq::cli::parse_config_file(args.config_path);
    for (const auto& setting : args.overrides) maguq::cli::apply_setting(config, setting);
    if (args.seed >= 0) config.seed = static_cast<std::uint64_t>(args.seed);
    if (args.threads > 0) config.threads = args.threads;
    return config;
}

int dispatch(const std::string& command, const GlobalArgs& args) {
    using Runner = std::vector<std::string> (*)(const maguq::cli::RunConfig&, const std::string&);
    Runner runner = nullptr;
    if (command == "eigens") runner = maguq::cli::run_eigens;
    else if (command == "memory") runner = maguq::cli::run_memory;
    else if (command == "uq") runner = maguq::cli::run_uq;
    else if (command == "sample") runner = maguq::cli::run_sample;
    else if (command == "mesh-info") runner = maguq::cli::run_mesh_info;

    try {
        const maguq::cli::RunConfig config = resolve_config(args);
        const auto written = runner(config, args.out_dir);
        for (const auto& path : written) std::cout << path << '\n';
        return 0;
    } catch (const maguq::ConfigError& e) {
        std::cerr << "error (config): " << e.what() << '\n';
        return 2;
    } catch (const maguq::FormatError& e) {
        std::cerr << "error (format): " << e.what() << '\n';
        return 2;
    } catch (const maguq::BudgetError& e) {
        std::cerr << "error (budget): " << e.what() << '\n';
        return 4;
    } catch (const maguq::NumericalError& e) {
        std::cerr << "error (numerical): " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Stochastic magnetostatics toolkit: KL field models via "
                 "hierarchical-matrix Lanczos, FEM inductance statistics"};
    app.require_subcommand(1);

    GlobalArgs args;
    app.add_option("--config", args.config_path, "key=value configuration file");
    app.add_option("--out", args.out_dir, "output directory (default: out)");
    app.add_option("--seed", args.seed, "RNG seed override");
    app.add_option("--threads", args.threads, "worker thread cap");
    app.add_option("--set", args.overrides, "config override key=value (repeatable)");

    for (auto [name, help] :
         {std::pair{"eigens", "eigenvalue/psi tables and eigenfunction exports per d"},
          std::pair{"memory", "H-matrix storage and accuracy report per d"},
          std::pair{"uq", "inductance mean/std via stochastic collocation per d"},
          std::pair{"sample", "one reluctivity-field realization per d"},
          std::pair{"mesh-info", "summary of the configured mesh"}})
        app.add_subcommand(name, help)->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    return dispatch(app.get_subcommands().front()->get_name(), args);
}
