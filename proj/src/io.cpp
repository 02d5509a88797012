#include "fsmooth/io.hpp"

#include "fsmooth/error.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <istream>
#include <ostream>

namespace fsmooth::io {

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

const char* grid_kind_name(GridKind k) noexcept {
    switch (k) {
    case GridKind::uniform: return "uniform";
    case GridKind::geometric_toward_end: return "geometric";
    case GridKind::adapted: return "adapted";
    case GridKind::explicit_points: return "explicit";
    }
    return "unknown";
}

void write_curve_csv(std::ostream& os, const std::vector<NormCurve>& curves) {
    os << "kind,p,q,measure,t,T_minus_t,value,se,inner_budget\n";
    for (const auto& c : curves)
        for (std::size_t i = 0; i < c.size(); ++i) {
            os << curve_kind_name(c.kind) << ',' << format_double(c.p) << ',' << format_double(c.q) << ','
               << c.measure << ',' << format_double(c.times[i]) << ',' << format_double(c.horizon - c.times[i])
               << ',' << format_double(c.values[i]) << ',' << format_double(c.std_errors[i]) << ','
               << c.inner_budget << '\n';
        }
}

void write_rate_csv(std::ostream& os, const RateStudy& study) {
    os << "grid_kind,theta,n,error,se\n";
    for (const auto& s : study.series)
        for (const auto& r : s.rows)
            os << grid_kind_name(s.kind) << ',' << format_double(s.theta) << ',' << r.n_steps << ','
               << format_double(r.error) << ',' << format_double(r.std_error) << '\n';
}

void write_probe_csv(std::ostream& os, const std::vector<ProbeRow>& rows) {
    if (rows.empty()) return;
    const std::size_t d = rows.front().x.size();
    os << "t";
    for (std::size_t i = 0; i < d; ++i) os << ",x_" << i + 1;
    os << ",v,v_se";
    for (std::size_t i = 0; i < d; ++i) os << ",dv_" << i + 1;
    for (std::size_t i = 0; i < d; ++i) os << ",dv_se_" << i + 1;
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) os << ",d2v_" << i + 1 << j + 1;
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) os << ",d2v_se_" << i + 1 << j + 1;
    os << '\n';
    auto list = [&](const std::vector<double>& v, std::size_t n) {
        for (std::size_t i = 0; i < n; ++i) os << ',' << format_double(i < v.size() ? v[i] : 0.0);
    };
    for (const auto& r : rows) {
        os << format_double(r.t);
        list(r.x, d);
        os << ',' << format_double(r.v.value) << ',' << format_double(r.v.value_se);
        list(r.v.gradient, d);
        list(r.v.gradient_se, d);
        list(r.v.hessian, d * d);
        list(r.v.hessian_se, d * d);
        os << '\n';
    }
}

namespace {

template <class T>
void put_le(std::ostream& os, T value) {
    static_assert(sizeof(T) == 8);
    std::uint64_t bits;
    std::memcpy(&bits, &value, 8);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(bits >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 8);
}

template <class T>
T get_le(std::istream& is) {
    unsigned char b[8];
    if (!is.read(reinterpret_cast<char*>(b), 8)) throw Error("io: truncated path dump");
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    T value;
    std::memcpy(&value, &bits, 8);
    return value;
}

}  // namespace

void write_path_dump(std::ostream& os, const PathBatch& paths) {
    put_le<std::uint64_t>(os, paths.dim);
    put_le<std::uint64_t>(os, paths.steps());
    put_le<std::uint64_t>(os, paths.n_paths);
    put_le<double>(os, paths.times.back());
    for (double v : paths.states) put_le<double>(os, v);
}

PathDump read_path_dump(std::istream& is) {
    PathDump d;
    d.dim = get_le<std::uint64_t>(is);
    d.steps = get_le<std::uint64_t>(is);
    d.n_paths = get_le<std::uint64_t>(is);
    d.horizon = get_le<double>(is);
    d.states.resize(d.n_paths * (d.steps + 1) * d.dim);
    for (double& v : d.states) v = get_le<double>(is);
    return d;
}

json number(double v) {
    if (std::isfinite(v)) return v;
    return format_double(v);
}

namespace {

json numbers(const std::vector<double>& v) {
    json a = json::array();
    for (double x : v) a.push_back(number(x));
    return a;
}

}  // namespace

json to_json(const ValidationReport& r) {
    json viol = json::array();
    for (const auto& v : r.violations)
        viol.push_back({{"quantity", v.quantity}, {"observed", number(v.observed)}, {"declared", number(v.declared)},
                        {"t", v.t}, {"x", numbers(v.x)}});
    return {{"n_probe", r.n_probe},
            {"sigma_max", number(r.sigma_max)},
            {"sigma_inv_max", number(r.sigma_inv_max)},
            {"drift_max", number(r.drift_max)},
            {"potential_max", number(r.potential_max)},
            {"potential_grad_max", number(r.potential_grad_max)},
            {"growth_max", number(r.growth_max)},
            {"passed", r.passed()},
            {"violations", viol}};
}

json to_json(const ConditionalMomentReport& r) {
    json j = {{"condition", r.condition},
              {"times", numbers(r.times)},
              {"constant_estimate", number(r.constant_estimate)},
              {"per_time_max", numbers(r.per_time_max)},
              {"per_time_mean", numbers(r.per_time_mean)},
              {"per_time_se", numbers(r.per_time_se)},
              {"inner_budget", r.inner_budget},
              {"n_outer", r.n_outer},
              {"limitation_note", r.limitation_note}};
    if (r.condition == "A_alpha") j["alpha"] = r.parameter;
    if (r.condition == "RH_beta") j["beta"] = r.parameter;
    return j;
}

json to_json(const NormCurve& c, bool with_points) {
    json j = {{"kind", curve_kind_name(c.kind)}, {"p", number(c.p)},         {"q", number(c.q)},
              {"measure", c.measure},             {"horizon", c.horizon},      {"inner_budget", c.inner_budget},
              {"points", c.size()},               {"bias_corrected", c.bias_corrected}};
    if (with_points) {
        j["t"] = numbers(c.times);
        j["value"] = numbers(c.values);
        j["se"] = numbers(c.std_errors);
        if (!c.values_double_budget.empty()) {
            j["value_double_budget"] = numbers(c.values_double_budget);
            j["se_double_budget"] = numbers(c.std_errors_double_budget);
        }
        if (!c.bias_correction.empty()) j["bias_correction"] = numbers(c.bias_correction);
    }
    return j;
}

json to_json(const ThetaEstimate& e) {
    return {{"theta", number(e.theta)},     {"se", number(e.std_error)},     {"slope", number(e.slope)},
            {"intercept", number(e.intercept)}, {"n_used", e.n_used},        {"conclusive", e.conclusive},
            {"in_range", e.in_range},       {"note", e.note}};
}

json to_json(const PhiLadder& l) {
    return {{"q", number(l.q)},
            {"exponent", l.exponent},
            {"truncations", numbers(l.truncations)},
            {"values", numbers(l.values)},
            {"classification", ladder_class_name(l.classification)}};
}

json to_json(const SmoothnessReport& r) {
    static const char* labels[3] = {"i", "ii", "iii"};
    json est = json::object(), lad = json::object(), curves = json::array(), pairs = json::array(),
         ratios = json::object();
    for (std::size_t k = 0; k < 3; ++k) {
        est[labels[k]] = to_json(r.estimates[k]);
        lad[labels[k]] = to_json(r.ladders[k]);
        curves.push_back(to_json(r.curves[k], false));
        const auto& pv = r.pairs[k];
        pairs.push_back({{"pair", pv.pair},
                         {"theta_gap", number(pv.theta_gap)},
                         {"joint_se", number(pv.joint_se)},
                         {"ladders_agree", pv.ladders_agree},
                         {"verdict", verdict_name(pv.verdict)}});
        ratios[pv.pair] = numbers(r.ladder_ratios[k]);
    }
    return {{"p", number(r.p)},         {"q", number(r.q)},       {"theta", r.theta},
            {"measure", r.measure},     {"estimates", est},       {"ladders", lad},
            {"ladder_ratios", ratios},  {"pairs", pairs},         {"verdict", verdict_name(r.verdict)},
            {"curves", curves}};
}

json to_json(const InterpolationReport& r) {
    json viol = json::array();
    for (const auto& v : r.violations)
        viol.push_back({{"inequality", v.inequality}, {"t", v.t}, {"lhs", number(v.lhs)}, {"rhs", number(v.rhs)}});
    json lad = json::array();
    for (const auto& l : r.ladders) lad.push_back(to_json(l));
    return {{"hypotheses_hold", r.hypotheses_hold},
            {"violations", viol},
            {"minimal_D", number(r.minimal_D)},
            {"quantities", numbers({r.quantities.begin(), r.quantities.end()})},
            {"ladders", lad},
            {"bracket", number(r.bracket)},
            {"bracket_finite", r.bracket_finite}};
}

json to_json(const RateStudy& s) {
    json series = json::array();
    for (const auto& x : s.series) {
        json rows = json::array();
        for (const auto& r : x.rows)
            rows.push_back({{"n", r.n_steps}, {"error", number(r.error)}, {"se", number(r.std_error)}});
        series.push_back({{"grid_kind", grid_kind_name(x.kind)},
                          {"theta", x.theta},
                          {"slope", number(x.fit.slope)},
                          {"slope_se", number(x.fit.slope_se)},
                          {"rows", rows}});
    }
    return {{"series", series}};
}

json to_json(const ThetaOneReport& r) {
    return {{"gradient", to_json(r.gradient)},
            {"hessian", to_json(r.hessian)},
            {"gradient_ladder", to_json(r.gradient_ladder)},
            {"hessian_ladder", to_json(r.hessian_ladder)},
            {"summary", r.summary}};
}

}  // namespace fsmooth::io
