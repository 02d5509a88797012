#include "doctest.h"

#include "fsmooth/error.hpp"
#include "fsmooth/experiment.hpp"
#include "fsmooth/io.hpp"
#include "fsmooth/model.hpp"
#include "fsmooth/simulate.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

using namespace fsmooth;
namespace fs = std::filesystem;

namespace {

std::string config_error(const std::string& text) {
    try {
        parse_config_text(text);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

fs::path fresh_dir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("fsmooth-test-" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

ExperimentConfig validate_config(const fs::path& dir) {
    auto c = parse_config_text(R"({"command": "validate", "budgets": {"n_probe": 50}})");
    c.output_dir = dir.string();
    return c;
}

}  // namespace

TEST_CASE("strict parsing names the offending field") {
    CHECK(config_error(R"({"command": "curves", "budgets": {"n_outr": 5}})").find("$.budgets.n_outr") != std::string::npos);
    CHECK(config_error(R"({"command": "curves", "p": "two"})").find("$.p") != std::string::npos);
    CHECK(config_error(R"({"command": "curves", "budgets": {"n_outer": -1}})").find("$.budgets.n_outer") != std::string::npos);
    CHECK(config_error(R"({"command": "fly"})").find("$.command") != std::string::npos);
    CHECK(config_error(R"({"p": 2})").find("$.command") != std::string::npos);
    CHECK(config_error(R"({"command": "curves", "extra": 1})").find("$.extra") != std::string::npos);
    CHECK_FALSE(config_error("{not json").empty());
}

TEST_CASE("defaults and hashing") {
    const auto c = parse_config_text(R"({"command": "equivalence"})");
    CHECK(c.command == Command::equivalence);
    CHECK(c.model == "bm");
    CHECK(c.terminal == "indicator");
    CHECK(std::isinf(c.q));
    CHECK(c.n_outer == 2000);
    CHECK(config_hash(c).size() == 16);
    auto d = c;
    d.threads = 8;
    d.output_dir = "elsewhere";
    CHECK(config_hash(d) == config_hash(c));
    d.seed = 2;
    CHECK(config_hash(d) != config_hash(c));
    const auto again = parse_config(canonical_json(c));
    CHECK(config_hash(again) == config_hash(c));
    const auto q = parse_config_text(R"({"command": "curves", "q": 4})");
    CHECK(q.q == 4.0);
    CHECK(parse_config_text(R"({"command": "curves", "q": "inf"})").q == c.q);
    CHECK(std::string(command_name(Command::interp_check)) == "interp-check");
}

TEST_CASE("run writes hash-named artifacts and a manifest") {
    const auto dir = fresh_dir("run");
    const auto c = validate_config(dir);
    std::ostringstream log;
    const auto r = run(c, log);
    CHECK(r.exit_code == 0);
    const std::string h = config_hash(c);
    CHECK(r.manifest == "manifest-" + h + "-0.json");
    REQUIRE(fs::exists(dir / r.manifest));
    for (const auto& o : r.outputs) {
        CHECK(o.find(h) != std::string::npos);
        CHECK(fs::exists(dir / o));
    }
    const auto manifest = nlohmann::json::parse(slurp(dir / r.manifest));
    CHECK(manifest.at("hash") == h);
    CHECK(manifest.at("command") == "validate");
    CHECK(manifest.at("exit_code") == 0);
    CHECK(manifest.contains("wall_time_seconds"));
    CHECK(manifest.at("config") == canonical_json(c));

    // A rerun keeps identical outputs and adds a second manifest.
    std::vector<std::string> before;
    for (const auto& o : r.outputs) before.push_back(slurp(dir / o));
    const auto r2 = run(c, log);
    CHECK(r2.exit_code == 0);
    CHECK(r2.manifest == "manifest-" + h + "-1.json");
    for (std::size_t i = 0; i < r.outputs.size(); ++i) CHECK(slurp(dir / r.outputs[i]) == before[i]);

    // Foreign content under an output name is never overwritten.
    {
        std::ofstream tamper(dir / r.outputs.front(), std::ios::binary | std::ios::trunc);
        tamper << "something else";
    }
    const auto r3 = run(c, log);
    CHECK(r3.exit_code == 3);
    CHECK(slurp(dir / r.outputs.front()) == "something else");
}

TEST_CASE("validation violations and config errors map to exit codes") {
    const auto dir = fresh_dir("codes");
    auto c = validate_config(dir);
    c.model = "nonexistent";
    std::ostringstream log;
    CHECK(run(c, log).exit_code == 2);
    CHECK(exit_code_for(ConfigError("x")) == 2);
    CHECK(exit_code_for(NumericalError("m", "x")) == 3);
    CHECK(exit_code_for(std::runtime_error("x")) == 3);
}

TEST_CASE("muckenhoupt command reports the closed form") {
    const auto dir = fresh_dir("muck");
    auto c = parse_config_text(R"({"command": "muckenhoupt", "drift": {"name": "constant", "c": 1},
                                   "budgets": {"n_outer": 50, "n_inner": 500}})");
    c.output_dir = dir.string();
    std::ostringstream log;
    const auto r = run(c, log);
    REQUIRE(r.exit_code == 0);
    const auto doc = nlohmann::json::parse(slurp(dir / r.outputs.front()));
    REQUIRE(doc.contains("closed_form"));
}

TEST_CASE("path dumps round-trip") {
    const auto m = make_model("bm", ModelParams{.dim = 2});
    const auto b = euler_maruyama(m, build_grid(TimeGridSpec::uniform(7), 0.0, 1.0), 5, 3);
    std::stringstream ss;
    io::write_path_dump(ss, b);
    const auto d = io::read_path_dump(ss);
    CHECK(d.dim == 2);
    CHECK(d.steps == 7);
    CHECK(d.n_paths == 5);
    CHECK(d.horizon == 1.0);
    CHECK(d.states == b.states);
}

TEST_CASE("number formatting") {
    CHECK(io::format_double(0.1) == "0.10000000000000001");
    CHECK(io::format_double(std::numeric_limits<double>::infinity()) == "inf");
    CHECK(io::number(-std::numeric_limits<double>::infinity()) == "-inf");
}
