// Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any fails.

#include "oracles.hpp"

#include "fsmooth/experiment.hpp"
#include "fsmooth/functionals.hpp"
#include "fsmooth/gridopt.hpp"
#include "fsmooth/measure.hpp"
#include "fsmooth/model.hpp"
#include "fsmooth/simulate.hpp"
#include "fsmooth/smoothness.hpp"
#include "fsmooth/stats.hpp"
#include "fsmooth/valuation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <sstream>
#include <utility>
#include <string>
#include <vector>

using namespace fsmooth;
namespace fs = std::filesystem;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Outcome {
    bool pass = true;
    std::ostringstream detail;
    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail << " [failed: " << what << "]";
        }
    }
};

int failures = 0;
std::vector<int> selected;

// Restricts a batch and its potential factor to a subset of its grid times.
std::pair<PathBatch, PotentialFactor> thin_to(const PathBatch& b, const PotentialFactor& k,
                                              const std::vector<double>& keep) {
    std::vector<std::size_t> idx;
    for (double t : keep) idx.push_back(grid_index(b.times, t, "thin"));
    const std::size_t m = idx.size() - 1;
    PathBatch out;
    out.n_paths = b.n_paths;
    out.dim = b.dim;
    out.base = b.base;
    out.inner_indexed = b.inner_indexed;
    for (std::size_t j : idx) out.times.push_back(b.times[j]);
    out.increments.assign(b.n_paths * m * b.dim, 0.0);
    PotentialFactor kk;
    kk.n_paths = k.n_paths;
    kk.n_times = idx.size();
    for (std::size_t p = 0; p < b.n_paths; ++p)
        for (std::size_t q = 0; q <= m; ++q) {
            const auto x = b.state(p, idx[q]);
            out.states.insert(out.states.end(), x.begin(), x.end());
            kk.log_k.push_back(k.log_at(p, idx[q]));
            if (q == 0) continue;
            for (std::size_t j = idx[q - 1]; j < idx[q]; ++j)
                for (std::size_t a = 0; a < b.dim; ++a)
                    out.increments[(p * m + q - 1) * b.dim + a] += b.increment(p, j)[a];
        }
    return {std::move(out), std::move(kk)};
}

void criterion(int id, const std::function<void(Outcome&)>& body) {
    if (!selected.empty() && std::find(selected.begin(), selected.end(), id) == selected.end()) return;
    Outcome o;
    const auto start = std::chrono::steady_clock::now();
    try {
        body(o);
    } catch (const std::exception& e) {
        o.pass = false;
        o.detail << " [exception: " << e.what() << "]";
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!o.pass) ++failures;
    std::printf("criterion %2d: %s (%.1fs)%s\n", id, o.pass ? "PASS" : "FAIL", secs, o.detail.str().c_str());
    std::fflush(stdout);
}

CurveOptions desk_budget() {
    CurveOptions o;
    o.n_outer = 2000;
    o.n_inner = 2000;
    o.seed = 1;
    return o;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

SmoothnessReport indicator_equivalence(const GirsanovDrift& drift) {
    const auto bm = make_model("bm");
    const auto g = make_terminal("indicator");
    EquivalenceOptions o;
    o.curve = desk_budget();
    return verify_equivalence(bm, g, drift, GaussianOracle(bm, g), o);
}

}  // namespace

int main(int argc, char** argv) {
    for (int i = 1; i < argc; ++i) selected.push_back(std::atoi(argv[i]));
    const auto times = default_curve_times(1.0);
    const auto bm = make_model("bm");

    criterion(1, [&](Outcome& o) {
        const auto c = residual_curve(bm, make_terminal("linear"), zero_drift(), times, desk_budget());
        std::size_t within = 0;
        double worst = 0.0;
        for (std::size_t i = 0; i < c.size(); ++i) {
            const double z = std::abs(c.values[i] - std::sqrt(1.0 - times[i])) / c.std_errors[i];
            worst = std::max(worst, z);
            within += z <= 3.0;
        }
        const auto th = estimate_theta(c);
        o.detail << " R2 within 3 SE at " << within << "/" << c.size() << " points (worst " << worst
                 << " SE); theta=" << th.theta << " +- " << th.std_error;
        o.require(within == c.size(), "R2 = sqrt(1-t) at every point");
        o.require(th.conclusive && std::abs(th.theta - 1.0) <= 0.03, "theta = 1.00 +- 0.03");
    });

    criterion(2, [&](Outcome& o) {
        const auto g = make_terminal("indicator");
        const auto r = residual_curve(bm, g, zero_drift(), times, desk_budget());
        const auto gr = gradient_curve(bm, zero_drift(), GaussianOracle(bm, g), times, desk_budget());
        std::size_t r_in = 0, g_in = 0;
        double r_worst = 0.0, g_worst = 0.0;
        for (std::size_t i = 0; i < times.size(); ++i) {
            const double t = times[i];
            // Squared-value SE by the delta method.
            const double zr = std::abs(r.values[i] * r.values[i] - oracle::indicator_residual_sq(t)) /
                              (2.0 * r.values[i] * r.std_errors[i]);
            const double zg = std::abs(gr.values[i] * gr.values[i] - oracle::indicator_gradient_sq(t)) /
                              (2.0 * gr.values[i] * gr.std_errors[i]);
            r_worst = std::max(r_worst, zr);
            g_worst = std::max(g_worst, zg);
            r_in += zr <= 3.0;
            g_in += zg <= 3.0;
        }
        o.detail << " R2^2 within 3 SE at " << r_in << "/" << times.size() << " (worst " << r_worst << " SE, "
                 << (r.bias_corrected ? "jackknife corrected" : "uncorrected") << "); G2^2 within 3 SE at " << g_in
                 << "/" << times.size() << " (worst " << g_worst << " SE)";
        o.require(r.bias_corrected, "jackknife correction applied");
        o.require(r_in == times.size(), "R2^2 orthant formula at every point");
        o.require(g_in == times.size(), "G2^2 formula at every point");
    });

    SmoothnessReport q_report;
    criterion(3, [&](Outcome& o) {
        q_report = indicator_equivalence(zero_drift());
        double gap = 0.0;
        for (const auto& p : q_report.pairs) gap = std::max(gap, p.theta_gap);
        bool bounded = true;
        for (const auto& l : q_report.ladders) bounded = bounded && l.classification == LadderClass::bounded;
        EquivalenceOptions probe;
        probe.theta = 0.8;
        const auto high = assess_curves(q_report.curves, probe);
        o.detail << " theta=(" << q_report.estimates[0].theta << ", " << q_report.estimates[1].theta << ", "
                 << q_report.estimates[2].theta << "), max pair gap " << gap << "; ladders at 0.5 "
                 << (bounded ? "all bounded" : "not all bounded") << "; (i) ladder at 0.8 "
                 << ladder_class_name(high.ladders[0].classification) << "; verdict " << verdict_name(q_report.verdict);
        for (const auto& e : q_report.estimates) o.require(e.conclusive, "conclusive estimates");
        o.require(gap <= 0.1, "pairwise theta within 0.1");
        o.require(bounded, "ladders bounded at theta 0.5");
        o.require(high.ladders[0].classification == LadderClass::divergent, "(i) ladder divergent at theta 0.8");
    });

    criterion(4, [&](Outcome& o) {
        const auto p_report = indicator_equivalence(constant_drift(1.0));
        double worst = 0.0;
        bool ok = true;
        for (std::size_t k = 0; k < 3; ++k) {
            const auto& a = q_report.estimates[k];
            const auto& b = p_report.estimates[k];
            const double gap = std::abs(a.theta - b.theta);
            const double tol = 0.05 + 3.0 * std::hypot(a.std_error, b.std_error);
            worst = std::max(worst, gap / tol);
            ok = ok && gap <= tol && b.conclusive;
        }
        o.detail << " P theta=(" << p_report.estimates[0].theta << ", " << p_report.estimates[1].theta << ", "
                 << p_report.estimates[2].theta << "), worst gap/tolerance " << worst << "; verdict "
                 << verdict_name(p_report.verdict);
        o.require(ok, "theta under P within 0.05 + 3 SE of Q");
        o.require(p_report.verdict == Verdict::consistent, "verdict consistent");
    });

    criterion(5, [&](Outcome& o) {
        const std::vector<double> check{0.0, 0.25, 0.5, 0.75};
        const auto outer = euler_maruyama(bm, build_grid(TimeGridSpec::uniform(4), 0.0, 1.0), 2000, 5);
        ConditionalCheckOptions opt;
        opt.n_inner = 2000;
        std::size_t total = 0, within = 0;
        double worst = 0.0;
        auto tally = [&](const ConditionalMomentReport& r, const std::function<double(double)>& exact) {
            for (std::size_t k = 0; k < r.times.size(); ++k) {
                const double z = std::abs(r.per_time_mean[k] - exact(1.0 - r.times[k])) / r.per_time_se[k];
                worst = std::max(worst, z);
                within += z <= 3.0;
                ++total;
            }
        };
        for (double c : {0.5, 1.0}) {
            const auto drift = constant_drift(c);
            for (double alpha : {1.5, 2.0})
                tally(muckenhoupt_check(bm, outer, drift, alpha, check, opt),
                      [&](double tau) { return oracle::muckenhoupt_moment(c, tau, alpha); });
            tally(reverse_holder_check(bm, outer, drift, 2.0, check, opt),
                  [&](double tau) { return oracle::reverse_holder_ratio(c, tau, 2.0); });
        }
        o.detail << " " << within << "/" << total << " conditional moments within 3 SE (worst " << worst << " SE)";
        o.require(within == total, "A_alpha and RH_2 closed forms at every check time");
    });

    criterion(6, [&](Outcome& o) {
        std::size_t m_total = 0, m_in = 0, p_total = 0, p_in = 0, fd_total = 0, fd_in = 0;
        std::uint32_t cfg = 0;
        const auto grid = build_grid(TimeGridSpec::uniform(4), 0.0, 1.0);
        const auto catalog = builtin_catalog();
        std::vector<const CatalogEntry*> constant_entries;
        for (const auto& e : catalog) {
            const bool constant = e.model.constant_coefficients;
            if (constant) constant_entries.push_back(&e);
            MonteCarloOptions mo;
            mo.n_inner = 1000;
            mo.max_dt = 0.02;
            const auto oracle = make_default_oracle(e.model, e.terminal, mo);
            const std::size_t n = constant ? 20000 : 1000;
            const auto full = euler_maruyama(e.model, constant ? grid : refine_grid(0.0, 1.0, grid, 0.02), n, 60 + cfg);
            const auto [b, k] = thin_to(full, k_factor(e.model, full), grid);
            const auto M = martingale_M(e.model, e.terminal, b, *oracle, k);
            const std::size_t last = b.steps();
            for (std::size_t j = 0; j < last; ++j) {
                std::vector<double> diff(n);
                for (std::size_t i = 0; i < n; ++i) diff[i] = M.at(i, last) - M.at(i, j);
                const auto est = mean_estimate(diff);
                // Every path starts at x0, so the oracle error there is common to all of them.
                const double common = j == 0 ? oracle->evaluate(0.0, b.state(0, 0), 0).value_se : 0.0;
                const double se = std::hypot(est.std_error, common);
                ++m_total;
                if (std::abs(est.mean) <= 3.0 * se)
                    ++m_in;
                else
                    o.detail << " (" << e.model.name << "+" << e.terminal.name << " t=" << b.times[j] << ": "
                             << est.mean / se << " SE)";
            }
            ++cfg;
        }
        NormalStream probe(StreamId{61, StreamPurpose::probe, 0});
        for (std::uint32_t s = 0; s < 20; ++s) {
            const auto& e = *constant_entries[s % constant_entries.size()];
            const auto c = gaussian_coefficients(e.model);
            const double t = 0.9 * probe.uniform();
            const double x[] = {probe.normal()};
            const auto ref = value_gaussian(t, x, e.terminal, 1.0, c, 1);
            const auto mc = grad_mc(e.model, e.terminal, t, x, 4000, StreamId{62, StreamPurpose::inner, 0, s});
            ++p_total;
            p_in += std::abs(mc.gradient[0] - ref.gradient[0]) <= 3.0 * mc.gradient_se[0] + 1e-12;
            const double h = 1e-3 * std::sqrt(1.0 - t);
            const double xp[] = {x[0] + h}, xm[] = {x[0] - h};
            const double fd = (value_gaussian(t, xp, e.terminal, 1.0, c, 0).value -
                               value_gaussian(t, xm, e.terminal, 1.0, c, 0).value) /
                              (2.0 * h);
            // h^2 times a bound on |v'''| / 6 at this point.
            const double curvature = std::abs(value_gaussian(t, x, e.terminal, 1.0, c, 2).hessian[0]) /
                                         std::sqrt(1.0 - t) + 1.0 / (1.0 - t);
            ++fd_total;
            fd_in += std::abs(mc.gradient[0] - fd) <= std::max(3.0 * mc.gradient_se[0], h * h * curvature) + 1e-12;
        }
        o.detail << " martingale " << m_in << "/" << m_total << "; grad_mc vs Gaussian " << p_in << "/" << p_total
                 << "; grad_mc vs FD " << fd_in << "/" << fd_total;
        o.require(m_in == m_total, "E[M_T - M_t] = 0 within 3 SE");
        o.require(p_in == p_total, "grad_mc within 3 SE of the Gaussian oracle");
        o.require(fd_in == fd_total, "grad_mc within tolerance of central differences");
    });

    criterion(7, [&](Outcome& o) {
        ModelParams mp;
        mp.rate = 0.1;
        const auto rate = make_model("bm-rate", mp);
        const auto g = make_terminal("indicator");
        const auto r = residual_curve(rate, g, zero_drift(), times, desk_budget());
        const auto m = residual_M_curve(rate, g, zero_drift(), times, desk_budget());
        // ||M_T||_{L_2} = e^{rT} ||g(B_1)||_2 = e^{0.1} / sqrt(2).
        const double m_norm = std::exp(0.1) * std::sqrt(0.5);
        std::size_t within = 0;
        for (std::size_t i = 0; i < times.size(); ++i) {
            const double bound = 2.0 * std::exp(0.1) * (0.1 * (1.0 - times[i]) * m_norm + r.values[i]);
            within += std::abs(m.values[i] - r.values[i]) <= bound;
        }
        const auto tr = estimate_theta(r), tm = estimate_theta(m);
        o.detail << " bound holds at " << within << "/" << times.size() << "; theta residual " << tr.theta
                 << ", residual-M " << tm.theta;
        o.require(within == times.size(), "pointwise potential bound");
        o.require(std::abs(tr.theta - tm.theta) <= 0.05, "theta agreement within 0.05");
    });

    criterion(8, [&](Outcome& o) {
        const auto t = default_curve_times(1.0, 200, 0.999, 1e-4);
        std::vector<double> d0, d1, d2, bad;
        for (double s : t) {
            const double tau = 1.0 - s;
            d0.push_back(std::sqrt(tau));
            d1.push_back(1.0);
            d2.push_back(1.0 / std::sqrt(tau));
            bad.push_back(1.0 / (tau * tau));
        }
        const auto good = interpolation_check(t, d0, d1, d2, 1.0, 0.9, kInf, 1.0, 2.0);
        const auto viol = interpolation_check(t, d0, d1, bad, 1.0, 0.9, kInf, 1.0, 2.0);
        o.detail << " good triple: hypotheses " << (good.hypotheses_hold ? "hold" : "violated") << ", bracket "
                 << good.bracket << "; (T-t)^-2 triple: " << viol.violations.size() << " violations";
        if (!viol.violations.empty()) o.detail << " (first: " << viol.violations.front().inequality << ")";
        o.require(good.hypotheses_hold && good.bracket_finite, "hypotheses hold with a finite bracket");
        o.require(!viol.hypotheses_hold && !viol.violations.empty(), "violation reported");
    });

    criterion(9, [&](Outcome& o) {
        const auto ind = make_terminal("indicator");
        const auto call = make_terminal("call");
        RateStudyOptions opt;
        opt.n_paths = 100000;
        opt.seed = 1;
        const auto s = rate_study(bm, ind, zero_drift(), GaussianOracle(bm, ind), opt);
        opt.adapted = false;
        const auto c = rate_study(bm, call, zero_drift(), GaussianOracle(bm, call), opt);
        const double u = s.series[0].fit.slope, a = s.series[1].fit.slope, l = c.series[0].fit.slope;
        o.detail << " indicator uniform slope " << u << " +- " << s.series[0].fit.slope_se << "; adapted(0.5) slope "
                 << a << " +- " << s.series[1].fit.slope_se << "; call uniform slope " << l << " +- "
                 << c.series[0].fit.slope_se;
        o.require(std::abs(u + 0.25) <= 0.05, "uniform indicator slope -0.25 +- 0.05");
        o.require(std::abs(a + 0.50) <= 0.07, "adapted indicator slope -0.50 +- 0.07");
        o.require(std::abs(l + 0.50) <= 0.05, "call uniform slope -0.5 +- 0.05");
    });

    criterion(10, [&](Outcome& o) {
        const auto base = fs::temp_directory_path() / "fsmooth-acceptance-determinism";
        fs::remove_all(base);
        const std::vector<std::string> configs{
            R"({"command": "curves", "drift": {"name": "sine", "c": 1}, "model": {"name": "bounded-sine"},
                "grid": {"points": 12, "truncation": 0.01}, "budgets": {"n_outer": 40, "n_inner": 40, "n_oracle_inner": 100}})",
            R"({"command": "grids", "budgets": {"n_paths": 2000}, "grids": {"n_ladder": [4, 8, 16]}})",
            R"({"command": "equivalence", "budgets": {"n_outer": 100, "n_inner": 100}})",
            R"({"command": "muckenhoupt", "drift": {"name": "sine", "c": 0.5}, "budgets": {"n_outer": 30, "n_inner": 100}})"};
        std::size_t compared = 0, identical = 0;
        for (std::size_t k = 0; k < configs.size(); ++k) {
            std::vector<std::vector<std::string>> contents;
            std::vector<std::string> names;
            for (unsigned threads : {1u, 1u, 3u}) {
                auto c = parse_config_text(configs[k]);
                c.threads = threads;
                c.output_dir = (base / (std::to_string(k) + "-" + std::to_string(contents.size()))).string();
                std::ostringstream log;
                const auto r = run(c, log);
                if (r.exit_code != 0 && r.exit_code != 4) throw std::runtime_error("run failed: " + r.message);
                names = r.outputs;
                std::vector<std::string> bytes;
                for (const auto& f : r.outputs) bytes.push_back(slurp(fs::path(c.output_dir) / f));
                contents.push_back(bytes);
            }
            for (std::size_t f = 0; f < names.size(); ++f) {
                compared += 2;
                identical += (contents[1][f] == contents[0][f]) + (contents[2][f] == contents[0][f]);
            }
        }
        fs::remove_all(base);
        o.detail << " " << identical << "/" << compared << " output comparisons byte-identical (reruns and threads 1 vs 3)";
        o.require(compared > 0 && identical == compared, "byte-identical outputs");
    });

    std::printf("%d criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
