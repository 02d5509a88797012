#pragma once

#include <json.hpp>

#include <cstddef>
#include <cstdint>
#include <exception>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace fsmooth {

enum class Command { validate, curves, theta, equivalence, muckenhoupt, grids, interp_check };
const char* command_name(Command c) noexcept;

// Fully resolved experiment; defaults are filled in by parse_config.
struct ExperimentConfig {
    Command command = Command::validate;

    std::string model = "bm";
    std::size_t dim = 1;
    double horizon = 1.0;
    std::vector<double> x0;  // empty: origin
    double rate = 0.1;
    double beta = 1.0;
    double epsilon = 0.5;

    std::string terminal = "indicator";
    double strike = 0.0;
    double alpha_power = 0.5;

    std::string drift = "none";
    double drift_c = 1.0;

    double p = 2.0;
    double q = 0.0;  // set to +inf by default
    double theta = 0.5;

    std::size_t grid_points = 40;
    double grid_far = 0.9;
    double truncation = 1e-3;  // smallest T - t, as a fraction of T

    std::size_t n_outer = 2000;
    std::size_t n_inner = 2000;
    std::size_t n_paths = 100000;
    std::size_t n_probe = 1000;
    std::size_t n_oracle_inner = 4000;
    double max_dt = 0.02;
    std::uint64_t seed = 1;
    unsigned threads = 1;
    std::string output_dir = "fslab-out";
    bool dump_paths = false;

    double muck_alpha = 2.0;
    double muck_beta = 2.0;
    std::vector<double> check_times{0.0, 0.25, 0.5, 0.75};

    std::vector<std::size_t> n_ladder{8, 16, 32, 64, 128, 256};
    double grid_theta = 0.5;
    std::size_t master_factor = 4;
    bool grid_uniform = true;
    bool grid_adapted = true;

    std::string interp_source = "synthetic";
    std::vector<double> interp_exponents{0.5, 0.0, -0.5};
    std::size_t interp_points = 200;
    double interp_A = 1.0;
    std::optional<double> interp_D = 2.0;  // empty: smallest admissible D
};

// Strict parsing: unknown fields and wrong types raise ConfigError naming the
// field path (e.g. "$.budgets.n_outer").
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig parse_config_text(const std::string& text);

// Resolved configuration; `threads` and `output_dir` are recorded but do not
// enter the content hash.
nlohmann::json canonical_json(const ExperimentConfig& config);
std::string config_hash(const ExperimentConfig& config);  // 16 hex digits, FNV-1a

struct RunResult {
    int exit_code = 0;
    std::vector<std::string> outputs;  // file names inside output_dir
    std::string manifest;
    std::string message;
};

// Executes the command and writes artifacts; never throws for library errors.
// Exit codes: 0 ok, 2 config error, 3 numerical or output failure, 4
// inconclusive equivalence verdict.
RunResult run(const ExperimentConfig& config, std::ostream& log);
int exit_code_for(const std::exception& e) noexcept;

extern const char* const kVersion;

}  // namespace fsmooth
