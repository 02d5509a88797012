#include "fsmooth/experiment.hpp"

#include "fsmooth/error.hpp"
#include "fsmooth/functionals.hpp"
#include "fsmooth/gridopt.hpp"
#include "fsmooth/io.hpp"
#include "fsmooth/measure.hpp"
#include "fsmooth/model.hpp"
#include "fsmooth/rng.hpp"
#include "fsmooth/smoothness.hpp"
#include "fsmooth/valuation.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#ifndef FSMOOTH_VERSION
#define FSMOOTH_VERSION "0.0.0"
#endif

namespace fsmooth {

const char* const kVersion = FSMOOTH_VERSION;

using nlohmann::json;
namespace fs = std::filesystem;

const char* command_name(Command c) noexcept {
    switch (c) {
    case Command::validate: return "validate";
    case Command::curves: return "curves";
    case Command::theta: return "theta";
    case Command::equivalence: return "equivalence";
    case Command::muckenhoupt: return "muckenhoupt";
    case Command::grids: return "grids";
    case Command::interp_check: return "interp-check";
    }
    return "unknown";
}

namespace {

// Reads one JSON object and rejects keys that were never asked for.
class Section {
public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) fail(path_, "expected an object");
    }

    [[noreturn]] static void fail(const std::string& path, const std::string& what) {
        throw ConfigError(path + ": " + what);
    }

    [[nodiscard]] std::string at(const std::string& key) const { return path_ + "." + key; }

    const json* get(const std::string& key) {
        seen_.insert(key);
        const auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    void number(const std::string& key, double& out) {
        if (const json* v = get(key)) {
            if (!v->is_number()) fail(at(key), "expected a number");
            out = v->get<double>();
            if (!std::isfinite(out)) fail(at(key), "expected a finite number");
        }
    }

    template <class U>
    void unsigned_int(const std::string& key, U& out) {
        if (const json* v = get(key)) {
            if (!v->is_number_integer() || (v->is_number_integer() && !v->is_number_unsigned() && v->get<long long>() < 0))
                fail(at(key), "expected a non-negative integer");
            const auto raw = v->get<std::uint64_t>();
            if (raw > std::numeric_limits<U>::max()) fail(at(key), "integer out of range");
            out = static_cast<U>(raw);
        }
    }

    void string(const std::string& key, std::string& out) {
        if (const json* v = get(key)) {
            if (!v->is_string()) fail(at(key), "expected a string");
            out = v->get<std::string>();
        }
    }

    void boolean(const std::string& key, bool& out) {
        if (const json* v = get(key)) {
            if (!v->is_boolean()) fail(at(key), "expected true or false");
            out = v->get<bool>();
        }
    }

    void numbers(const std::string& key, std::vector<double>& out) {
        if (const json* v = get(key)) {
            if (!v->is_array()) fail(at(key), "expected an array of numbers");
            out.clear();
            for (std::size_t i = 0; i < v->size(); ++i) {
                const auto& e = (*v)[i];
                if (!e.is_number()) fail(at(key) + "[" + std::to_string(i) + "]", "expected a number");
                out.push_back(e.get<double>());
            }
        }
    }

    void sizes(const std::string& key, std::vector<std::size_t>& out) {
        if (const json* v = get(key)) {
            if (!v->is_array()) fail(at(key), "expected an array of integers");
            out.clear();
            for (std::size_t i = 0; i < v->size(); ++i) {
                const auto& e = (*v)[i];
                if (!e.is_number_unsigned()) fail(at(key) + "[" + std::to_string(i) + "]", "expected a positive integer");
                out.push_back(e.get<std::size_t>());
            }
        }
    }

    // Number or the string "inf".
    void extended(const std::string& key, double& out) {
        if (const json* v = get(key)) {
            if (v->is_string() && v->get<std::string>() == "inf") {
                out = std::numeric_limits<double>::infinity();
            } else if (v->is_number()) {
                out = v->get<double>();
            } else {
                fail(at(key), "expected a number or \"inf\"");
            }
        }
    }

    template <class F>
    void section(const std::string& key, F&& body) {
        if (const json* v = get(key)) {
            Section s(*v, at(key));
            body(s);
            s.finish();
        }
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key())) fail(at(it.key()), "unknown field");
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

Command parse_command(const std::string& s) {
    static const std::pair<const char*, Command> names[] = {
        {"validate", Command::validate},       {"curves", Command::curves},
        {"theta", Command::theta},             {"equivalence", Command::equivalence},
        {"muckenhoupt", Command::muckenhoupt}, {"grids", Command::grids},
        {"interp-check", Command::interp_check}};
    for (const auto& [n, c] : names)
        if (s == n) return c;
    throw ConfigError("$.command: unknown command '" + s + "'");
}

void check_config(const ExperimentConfig& c) {
    auto need = [](bool ok, const char* path, const char* what) {
        if (!ok) throw ConfigError(std::string(path) + ": " + what);
    };
    need(c.dim >= 1, "$.model.dim", "must be >= 1");
    need(c.horizon > 0.0, "$.model.horizon", "must be > 0");
    need(c.x0.empty() || c.x0.size() == c.dim, "$.model.x0", "length must equal dim");
    need(c.p >= 1.0, "$.p", "must be >= 1");
    need(c.q >= 2.0, "$.q", "must lie in [2, inf]");
    need(c.grid_points >= 2, "$.grid.points", "must be >= 2");
    need(c.truncation > 0.0 && c.truncation < c.grid_far && c.grid_far <= 1.0, "$.grid",
         "need 0 < truncation < far <= 1");
    need(c.n_outer >= 1, "$.budgets.n_outer", "must be >= 1");
    need(c.n_inner >= 1, "$.budgets.n_inner", "must be >= 1");
    need(c.n_paths >= 1, "$.budgets.n_paths", "must be >= 1");
    need(c.n_probe >= 1, "$.budgets.n_probe", "must be >= 1");
    need(c.n_oracle_inner >= 2, "$.budgets.n_oracle_inner", "must be >= 2");
    need(c.max_dt > 0.0, "$.max_dt", "must be > 0");
    need(c.threads >= 1, "$.threads", "must be >= 1");
    need(!c.output_dir.empty(), "$.output_dir", "must not be empty");
    need(c.interp_source == "synthetic" || c.interp_source == "simulated", "$.interp.source",
         "must be \"synthetic\" or \"simulated\"");
    need(c.interp_exponents.size() == 3, "$.interp.exponents", "needs three exponents");
}

}  // namespace

ExperimentConfig parse_config(const json& doc) {
    ExperimentConfig c;
    c.q = std::numeric_limits<double>::infinity();
    Section root(doc, "$");
    const json* cmd = root.get("command");
    if (!cmd) throw ConfigError("$.command: required field missing");
    if (!cmd->is_string()) throw ConfigError("$.command: expected a string");
    c.command = parse_command(cmd->get<std::string>());
    root.section("model", [&](Section& s) {
        s.string("name", c.model);
        s.unsigned_int("dim", c.dim);
        s.number("horizon", c.horizon);
        s.numbers("x0", c.x0);
        s.number("rate", c.rate);
        s.number("beta", c.beta);
        s.number("epsilon", c.epsilon);
    });
    root.section("terminal", [&](Section& s) {
        s.string("name", c.terminal);
        s.number("strike", c.strike);
        s.number("alpha", c.alpha_power);
    });
    root.section("drift", [&](Section& s) {
        s.string("name", c.drift);
        s.number("c", c.drift_c);
    });
    root.number("p", c.p);
    root.extended("q", c.q);
    root.number("theta", c.theta);
    root.section("grid", [&](Section& s) {
        s.unsigned_int("points", c.grid_points);
        s.number("far", c.grid_far);
        s.number("truncation", c.truncation);
    });
    root.section("budgets", [&](Section& s) {
        s.unsigned_int("n_outer", c.n_outer);
        s.unsigned_int("n_inner", c.n_inner);
        s.unsigned_int("n_paths", c.n_paths);
        s.unsigned_int("n_probe", c.n_probe);
        s.unsigned_int("n_oracle_inner", c.n_oracle_inner);
    });
    root.number("max_dt", c.max_dt);
    root.unsigned_int("seed", c.seed);
    root.unsigned_int("threads", c.threads);
    root.string("output_dir", c.output_dir);
    root.boolean("dump_paths", c.dump_paths);
    root.section("muckenhoupt", [&](Section& s) {
        s.number("alpha", c.muck_alpha);
        s.number("beta", c.muck_beta);
        s.numbers("check_times", c.check_times);
    });
    root.section("grids", [&](Section& s) {
        s.sizes("n_ladder", c.n_ladder);
        s.number("theta", c.grid_theta);
        s.unsigned_int("master_factor", c.master_factor);
        s.boolean("uniform", c.grid_uniform);
        s.boolean("adapted", c.grid_adapted);
    });
    root.section("interp", [&](Section& s) {
        s.string("source", c.interp_source);
        s.numbers("exponents", c.interp_exponents);
        s.unsigned_int("points", c.interp_points);
        s.number("A", c.interp_A);
        if (const json* d = s.get("D")) {
            if (d->is_null()) {
                c.interp_D.reset();
            } else if (d->is_number()) {
                c.interp_D = d->get<double>();
            } else {
                Section::fail(s.at("D"), "expected a number or null");
            }
        }
    });
    root.finish();
    check_config(c);
    return c;
}

ExperimentConfig parse_config_text(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("$: invalid JSON: ") + e.what());
    }
    return parse_config(doc);
}

json canonical_json(const ExperimentConfig& c) {
    json j;
    j["command"] = command_name(c.command);
    j["model"] = {{"name", c.model}, {"dim", c.dim},   {"horizon", c.horizon}, {"x0", c.x0},
                  {"rate", c.rate},  {"beta", c.beta}, {"epsilon", c.epsilon}};
    j["terminal"] = {{"name", c.terminal}, {"strike", c.strike}, {"alpha", c.alpha_power}};
    j["drift"] = {{"name", c.drift}, {"c", c.drift_c}};
    j["p"] = c.p;
    j["q"] = io::number(c.q);
    j["theta"] = c.theta;
    j["grid"] = {{"points", c.grid_points}, {"far", c.grid_far}, {"truncation", c.truncation}};
    j["budgets"] = {{"n_outer", c.n_outer}, {"n_inner", c.n_inner},  {"n_paths", c.n_paths},
                    {"n_probe", c.n_probe}, {"n_oracle_inner", c.n_oracle_inner}};
    j["max_dt"] = c.max_dt;
    j["seed"] = c.seed;
    j["threads"] = c.threads;
    j["output_dir"] = c.output_dir;
    j["dump_paths"] = c.dump_paths;
    j["muckenhoupt"] = {{"alpha", c.muck_alpha}, {"beta", c.muck_beta}, {"check_times", c.check_times}};
    j["grids"] = {{"n_ladder", c.n_ladder},
                  {"theta", c.grid_theta},
                  {"master_factor", c.master_factor},
                  {"uniform", c.grid_uniform},
                  {"adapted", c.grid_adapted}};
    j["interp"] = {{"source", c.interp_source},
                   {"exponents", c.interp_exponents},
                   {"points", c.interp_points},
                   {"A", c.interp_A},
                   {"D", c.interp_D ? json(*c.interp_D) : json(nullptr)}};
    return j;
}

std::string config_hash(const ExperimentConfig& c) {
    json j = canonical_json(c);
    j.erase("threads");
    j.erase("output_dir");
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(j.dump())));
    return buf;
}

int exit_code_for(const std::exception& e) noexcept {
    if (dynamic_cast<const ConfigError*>(&e)) return 2;
    return 3;
}

namespace {

struct Artifact {
    std::string name;
    std::string content;
};

struct Outcome {
    std::vector<Artifact> files;
    int exit_code = 0;
    std::string message;
};

DiffusionModel build_model(const ExperimentConfig& c) {
    ModelParams mp;
    mp.dim = c.dim;
    mp.horizon = c.horizon;
    mp.x0 = c.x0;
    mp.rate = c.rate;
    mp.beta = c.beta;
    mp.epsilon = c.epsilon;
    return make_model(c.model, mp);
}

TerminalFunction build_terminal(const ExperimentConfig& c) {
    TerminalParams tp;
    tp.strike = c.strike;
    tp.alpha = c.alpha_power;
    return make_terminal(c.terminal, tp);
}

CurveOptions curve_options(const ExperimentConfig& c) {
    CurveOptions o;
    o.p = c.p;
    o.n_outer = c.n_outer;
    o.n_inner = c.n_inner;
    o.seed = c.seed;
    o.threads = c.threads;
    o.max_dt = c.max_dt;
    return o;
}

MonteCarloOptions oracle_options(const ExperimentConfig& c) {
    MonteCarloOptions o;
    o.n_inner = c.n_oracle_inner;
    o.max_dt = c.max_dt;
    o.seed = c.seed;
    return o;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

std::string curves_csv(const std::vector<NormCurve>& curves) {
    std::ostringstream os;
    io::write_curve_csv(os, curves);
    return os.str();
}

std::vector<NormCurve> compute_curves(const ExperimentConfig& c, const DiffusionModel& model,
                                      const TerminalFunction& g, const GirsanovDrift& drift,
                                      const ValueOracle& oracle) {
    const auto grid = default_curve_times(model.horizon, c.grid_points, c.grid_far, c.truncation);
    const auto co = curve_options(c);
    std::vector<NormCurve> out;
    out.push_back(residual_curve(model, g, drift, grid, co));
    if (!model.zero_potential()) out.push_back(residual_M_curve(model, g, drift, grid, co));
    out.push_back(gradient_curve(model, drift, oracle, grid, co));
    out.push_back(hessian_curve(model, drift, oracle, grid, co));
    for (auto& cv : out) cv.q = c.q;
    return out;
}

Outcome run_command(const ExperimentConfig& c, const std::string& hash, std::ostream& log) {
    const auto model = build_model(c);
    const auto g = build_terminal(c);
    const auto drift = make_drift(c.drift, c.drift_c);
    const std::string stem = std::string(command_name(c.command)) + "-" + hash;
    Outcome out;
    switch (c.command) {
    case Command::validate: {
        ValidationOptions vo;
        vo.n_probe = c.n_probe;
        vo.seed = c.seed;
        const auto rep = validate_model(model, g, vo);
        const auto oracle = make_default_oracle(model, g, oracle_options(c));
        std::vector<io::ProbeRow> rows;
        const double T = model.horizon;
        for (double t : {0.0, 0.5 * T, 0.9 * T})
            for (double dx : {-1.0, 0.0, 1.0}) {
                io::ProbeRow r;
                r.t = t;
                r.x = model.x0;
                r.x[0] += dx * std::sqrt(T);
                r.v = oracle->evaluate(t, r.x, 2);
                rows.push_back(std::move(r));
            }
        std::ostringstream probes;
        io::write_probe_csv(probes, rows);
        json j = {{"model", model.name},
                  {"terminal", g.name},
                  {"oracle", backend_name(oracle->backend())},
                  {"report", io::to_json(rep)}};
        out.files.push_back({stem + ".json", dump(j)});
        out.files.push_back({stem + "-probes.csv", probes.str()});
        if (!rep.passed()) {
            out.exit_code = 3;
            out.message = "model: declared bounds violated at " + std::to_string(rep.violations.size()) + " probes";
        }
        break;
    }
    case Command::curves:
    case Command::theta: {
        const auto oracle = make_default_oracle(model, g, oracle_options(c));
        const auto curves = compute_curves(c, model, g, drift, *oracle);
        out.files.push_back({stem + ".csv", curves_csv(curves)});
        json j = {{"model", model.name}, {"terminal", g.name}, {"oracle", backend_name(oracle->backend())}};
        j["curves"] = json::array();
        for (const auto& cv : curves) {
            json e = io::to_json(cv);
            if (c.command == Command::theta) e["theta_estimate"] = io::to_json(estimate_theta(cv));
            j["curves"].push_back(e);
        }
        out.files.push_back({stem + ".json", dump(j)});
        if (c.dump_paths) {
            const auto grid = default_curve_times(model.horizon, c.grid_points, c.grid_far, c.truncation);
            const auto sim = refine_grid(0.0, model.horizon, grid, outer_max_dt(model, drift, c.max_dt));
            const auto paths = euler_maruyama(model, sim, c.n_outer, c.seed, c.threads);
            std::ostringstream bin(std::ios::binary);
            io::write_path_dump(bin, paths);
            out.files.push_back({stem + "-paths.bin", bin.str()});
        }
        break;
    }
    case Command::equivalence: {
        const auto oracle = make_default_oracle(model, g, oracle_options(c));
        EquivalenceOptions eo;
        eo.p = c.p;
        eo.q = c.q;
        eo.theta = c.theta;
        eo.curve = curve_options(c);
        eo.t_grid = default_curve_times(model.horizon, c.grid_points, c.grid_far, c.truncation);
        const auto rep = verify_equivalence(model, g, drift, *oracle, eo);
        out.files.push_back({stem + ".json", dump(io::to_json(rep))});
        out.files.push_back({stem + ".csv", curves_csv({rep.curves.begin(), rep.curves.end()})});
        std::ostringstream txt;
        txt.precision(4);
        txt << "model " << model.name << ", terminal " << g.name << ", measure " << rep.measure << "\n";
        txt << "p = " << rep.p << ", q = " << io::format_double(rep.q) << ", theta = " << rep.theta << "\n";
        static const char* labels[3] = {"(i)  ", "(ii) ", "(iii)"};
        for (std::size_t k = 0; k < 3; ++k)
            txt << labels[k] << " theta_hat = " << rep.estimates[k].theta << " +- " << rep.estimates[k].std_error
                << ", ladder " << ladder_class_name(rep.ladders[k].classification) << "\n";
        for (const auto& pv : rep.pairs)
            txt << pv.pair << ": gap " << pv.theta_gap << ", joint se " << pv.joint_se << ", "
                << verdict_name(pv.verdict) << "\n";
        txt << "verdict: " << verdict_name(rep.verdict) << "\n";
        out.files.push_back({stem + ".txt", txt.str()});
        log << txt.str();
        if (rep.verdict == Verdict::inconclusive) {
            out.exit_code = 4;
            out.message = "equivalence verdict inconclusive at these budgets";
        }
        break;
    }
    case Command::muckenhoupt: {
        const auto grid = refine_grid(0.0, model.horizon, c.check_times, outer_max_dt(model, drift, c.max_dt));
        const auto paths = euler_maruyama(model, grid, c.n_outer, c.seed, c.threads);
        ConditionalCheckOptions co;
        co.n_inner = c.n_inner;
        co.max_dt = c.max_dt;
        co.seed = c.seed;
        co.threads = c.threads;
        const auto a = muckenhoupt_check(model, paths, drift, c.muck_alpha, c.check_times, co);
        const auto rh = reverse_holder_check(model, paths, drift, c.muck_beta, c.check_times, co);
        const auto bmo = bmo_norm_estimate(model, paths, drift, c.check_times, co);
        json j = {{"model", model.name},
                  {"drift", drift.name},
                  {"gamma_sup", drift.gamma_sup},
                  {"A_alpha", io::to_json(a)},
                  {"RH_beta", io::to_json(rh)},
                  {"BMO", io::to_json(bmo)}};
        if (drift.constant) {
            const double c2 = drift.gamma_sup * drift.gamma_sup;
            const double ea = 1.0 / (c.muck_alpha - 1.0);
            json cf = {{"A_alpha", json::array()}, {"RH_beta", json::array()}, {"BMO", json::array()}};
            for (double t : c.check_times) {
                const double tau = model.horizon - t;
                cf["A_alpha"].push_back(std::exp(c2 * tau * ea * (ea + 1.0) / 2.0));
                cf["RH_beta"].push_back(std::exp(c2 * tau * (c.muck_beta - 1.0) / 2.0));
                cf["BMO"].push_back(c2 * tau);
            }
            j["closed_form"] = cf;
        }
        out.files.push_back({stem + ".json", dump(j)});
        break;
    }
    case Command::grids: {
        const auto oracle = make_default_oracle(model, g, oracle_options(c));
        RateStudyOptions ro;
        ro.n_ladder = c.n_ladder;
        ro.theta = c.grid_theta;
        ro.n_paths = c.n_paths;
        ro.master_factor = c.master_factor;
        ro.seed = c.seed;
        ro.threads = c.threads;
        ro.uniform = c.grid_uniform;
        ro.adapted = c.grid_adapted;
        const auto study = rate_study(model, g, drift, *oracle, ro);
        std::ostringstream csv;
        io::write_rate_csv(csv, study);
        out.files.push_back({stem + ".csv", csv.str()});
        json j = io::to_json(study);
        j["model"] = model.name;
        j["terminal"] = g.name;
        out.files.push_back({stem + ".json", dump(j)});
        break;
    }
    case Command::interp_check: {
        const double T = model.horizon;
        std::vector<double> times, d0, d1, d2;
        if (c.interp_source == "synthetic") {
            times = default_curve_times(T, c.interp_points, 1.0, c.truncation);
            for (double t : times) {
                const double tau = T - t;
                d0.push_back(std::pow(tau, c.interp_exponents[0]));
                d1.push_back(std::pow(tau, c.interp_exponents[1]));
                d2.push_back(std::pow(tau, c.interp_exponents[2]));
            }
        } else {
            const auto oracle = make_default_oracle(model, g, oracle_options(c));
            times = default_curve_times(T, c.grid_points, c.grid_far, c.truncation);
            const auto co = curve_options(c);
            const auto r = residual_M_curve(model, g, drift, times, co);
            const auto gr = gradient_curve(model, drift, *oracle, times, co);
            const auto h = hessian_curve(model, drift, *oracle, times, co);
            for (std::size_t i = 0; i < times.size(); ++i) {
                d0.push_back(std::sqrt(T - times[i]) + r.values[i]);
                d1.push_back(1.0 + gr.values[i]);
                d2.push_back(1.0 + h.values[i]);
            }
        }
        double D = c.interp_D.value_or(1.0);
        auto rep = interpolation_check(times, d0, d1, d2, T, c.theta, c.q, c.interp_A, D);
        if (!c.interp_D) {
            D = rep.minimal_D;
            if (std::isfinite(D)) rep = interpolation_check(times, d0, d1, d2, T, c.theta, c.q, c.interp_A, D);
        }
        json j = io::to_json(rep);
        j["source"] = c.interp_source;
        j["A"] = c.interp_A;
        j["D"] = io::number(D);
        out.files.push_back({stem + ".json", dump(j)});
        break;
    }
    }
    return out;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_new(const fs::path& p, const std::string& content) {
    std::ofstream f(p, std::ios::binary);
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!f) throw Error("io: cannot write " + p.string());
}

}  // namespace

RunResult run(const ExperimentConfig& c, std::ostream& log) {
    RunResult result;
    const auto start = std::chrono::steady_clock::now();
    const std::string hash = config_hash(c);
    Outcome out;
    try {
        out = run_command(c, hash, log);
    } catch (const std::exception& e) {
        out.files.clear();
        out.exit_code = exit_code_for(e);
        out.message = e.what();
    }
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    try {
        const fs::path dir(c.output_dir);
        fs::create_directories(dir);
        for (const auto& a : out.files) {
            const fs::path p = dir / a.name;
            if (fs::exists(p)) {
                if (read_file(p) != a.content)
                    throw Error("io: " + p.string() + " exists with different content; refusing to overwrite");
            } else {
                write_new(p, a.content);
            }
            result.outputs.push_back(a.name);
        }
        std::size_t index = 0;
        fs::path manifest;
        do {
            manifest = dir / ("manifest-" + hash + "-" + std::to_string(index++) + ".json");
        } while (fs::exists(manifest));
        json m = {{"version", kVersion},
                  {"command", command_name(c.command)},
                  {"hash", hash},
                  {"seed", c.seed},
                  {"config", canonical_json(c)},
                  {"outputs", result.outputs},
                  {"wall_time_seconds", wall},
                  {"exit_code", out.exit_code},
                  {"message", out.message}};
        write_new(manifest, m.dump(2) + "\n");
        result.manifest = manifest.filename().string();
    } catch (const std::exception& e) {
        if (out.exit_code == 0) {
            out.exit_code = 3;
            out.message = e.what();
        }
    }
    result.exit_code = out.exit_code;
    result.message = out.message;
    if (!result.message.empty()) log << result.message << "\n";
    return result;
}

}  // namespace fsmooth
