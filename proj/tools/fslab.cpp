// fslab: batch runner for fractional-smoothness experiments.

#include "fsmooth/error.hpp"
#include "fsmooth/experiment.hpp"
#include "fsmooth/model.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

int main(int argc, char** argv) {
    CLI::App app{"Fractional smoothness laboratory"};
    app.set_version_flag("--version", std::string(fsmooth::kVersion));
    app.require_subcommand(1);

    std::string config_path;
    auto* run = app.add_subcommand("run", "Run the experiment described by a JSON config");
    run->add_option("config", config_path, "Path to the config file")->required();

    auto* catalog = app.add_subcommand("catalog", "List built-in models and terminal functions");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    if (catalog->parsed()) {
        std::cout << "models:";
        for (const auto& m : fsmooth::model_names()) std::cout << ' ' << m;
        std::cout << "\nterminal functions:";
        for (const auto& t : fsmooth::terminal_names()) std::cout << ' ' << t;
        std::cout << '\n';
        return 0;
    }

    std::ifstream in(config_path);
    if (!in) {
        std::cerr << "cannot open " << config_path << '\n';
        return 2;
    }
    std::stringstream text;
    text << in.rdbuf();
    fsmooth::ExperimentConfig config;
    try {
        config = fsmooth::parse_config_text(text.str());
    } catch (const std::exception& e) {
        std::cerr << e.what() << '\n';
        return fsmooth::exit_code_for(e);
    }
    const auto result = fsmooth::run(config, std::cerr);
    for (const auto& f : result.outputs) std::cout << f << '\n';
    if (!result.manifest.empty()) std::cout << result.manifest << '\n';
    return result.exit_code;
}
