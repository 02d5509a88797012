#include "doctest.h"
#include "oracles.hpp"

#include "fsmooth/error.hpp"
#include "fsmooth/functionals.hpp"
#include "fsmooth/measure.hpp"
#include "fsmooth/model.hpp"
#include "fsmooth/smoothness.hpp"
#include "fsmooth/valuation.hpp"

#include <cmath>
#include <limits>

using namespace fsmooth;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

NormCurve power_curve(CurveKind kind, double exponent, std::size_t n = 40, double se_rel = 0.0) {
    NormCurve c;
    c.kind = kind;
    c.times = default_curve_times(1.0, n);
    for (double t : c.times) {
        c.values.push_back(std::pow(1.0 - t, exponent));
        c.std_errors.push_back(se_rel * c.values.back());
    }
    return c;
}

ThetaEstimate estimate(double theta, double se, bool conclusive = true) {
    ThetaEstimate e;
    e.theta = theta;
    e.std_error = se;
    e.conclusive = conclusive;
    return e;
}

PhiLadder ladder(LadderClass c) {
    PhiLadder l;
    l.classification = c;
    return l;
}

}  // namespace

TEST_CASE("theta regression recovers injected power laws") {
    for (double theta : {0.25, 0.5, 0.75, 1.0}) {
        CAPTURE(theta);
        const auto r = estimate_theta(power_curve(CurveKind::residual, theta / 2.0));
        CHECK(r.conclusive);
        CHECK(r.theta == doctest::Approx(theta).epsilon(1e-10));
        CHECK(r.in_range);
        const auto g = estimate_theta(power_curve(CurveKind::gradient, (theta - 1.0) / 2.0));
        CHECK(g.theta == doctest::Approx(theta).epsilon(1e-10));
        const auto h = estimate_theta(power_curve(CurveKind::hessian, (theta - 2.0) / 2.0, 40, 0.01));
        CHECK(h.theta == doctest::Approx(theta).epsilon(1e-10));
        CHECK(h.n_used == 32);
    }
    CHECK(estimate_theta(power_curve(CurveKind::residual, 0.35)).theta == doctest::Approx(0.7).epsilon(1e-12));
    CHECK(estimate_theta(power_curve(CurveKind::residual, 0.5)).theta == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_FALSE(estimate_theta(power_curve(CurveKind::residual, 0.75)).in_range);
}

TEST_CASE("too few usable points are inconclusive") {
    CHECK_FALSE(estimate_theta(power_curve(CurveKind::residual, 0.25, 11)).conclusive);
    CHECK(estimate_theta(power_curve(CurveKind::residual, 0.25, 12)).conclusive);
    auto noisy = power_curve(CurveKind::residual, 0.25, 40, 0.3);
    const auto e = estimate_theta(noisy);
    CHECK_FALSE(e.conclusive);
    CHECK(e.n_used == 0);
}

TEST_CASE("pair verdicts") {
    const EquivalenceOptions o;
    const std::array<PhiLadder, 3> bounded{ladder(LadderClass::bounded), ladder(LadderClass::bounded),
                                           ladder(LadderClass::bounded)};
    auto p = compare_pairs({estimate(0.5, 0.01), estimate(0.55, 0.01), estimate(0.48, 0.01)}, bounded, o);
    CHECK(overall_verdict(p) == Verdict::consistent);
    CHECK(p[0].pair == "i-ii");
    CHECK(p[2].pair == "ii-iii");

    p = compare_pairs({estimate(0.5, 0.01), estimate(0.8, 0.01), estimate(0.5, 0.01)}, bounded, o);
    CHECK(p[0].verdict == Verdict::inconsistent);
    CHECK(p[1].verdict == Verdict::consistent);
    CHECK(overall_verdict(p) == Verdict::inconsistent);

    // Gap 0.3 with joint SE 0.075: above 3 SE, not above 5 SE.
    const double se = 0.075 / std::sqrt(2.0);
    p = compare_pairs({estimate(0.5, se), estimate(0.8, se), estimate(0.5, se)}, bounded, o);
    CHECK(p[0].verdict == Verdict::inconclusive);
    CHECK(overall_verdict(p) == Verdict::inconclusive);

    p = compare_pairs({estimate(0.5, 0.01, false), estimate(0.5, 0.01), estimate(0.5, 0.01)}, bounded, o);
    CHECK(p[0].verdict == Verdict::inconclusive);
    CHECK(p[2].verdict == Verdict::consistent);

    const std::array<PhiLadder, 3> mixed{ladder(LadderClass::divergent), ladder(LadderClass::bounded),
                                         ladder(LadderClass::bounded)};
    p = compare_pairs({estimate(0.5, 0.01), estimate(0.5, 0.01), estimate(0.5, 0.01)}, mixed, o);
    CHECK_FALSE(p[0].ladders_agree);
    CHECK(p[0].verdict == Verdict::inconsistent);
    CHECK(std::string(verdict_name(Verdict::inconclusive)) == "inconclusive");
}

TEST_CASE("exact indicator curves are consistent at theta = 1/2 and diverge at 0.8") {
    std::array<NormCurve, 3> curves;
    const auto times = default_curve_times(1.0);
    for (int k = 0; k < 3; ++k) {
        curves[k].kind = static_cast<CurveKind>(k == 0 ? 0 : k + 1);
        curves[k].times = times;
    }
    for (double t : times) {
        curves[0].values.push_back(std::sqrt(oracle::indicator_residual_sq(t)));
        curves[1].values.push_back(std::sqrt(oracle::indicator_gradient_sq(t)));
        curves[2].values.push_back(std::sqrt(oracle::indicator_hessian_sq(t)));
        for (auto& c : curves) c.std_errors.push_back(1e-3 * c.values.back());
    }
    EquivalenceOptions o;
    const auto r = assess_curves(curves, o);
    for (int k = 0; k < 3; ++k) {
        CAPTURE(k);
        CHECK(r.estimates[k].theta == doctest::Approx(0.5).epsilon(0.1));
        CHECK(r.ladders[k].classification == LadderClass::bounded);
        CHECK(r.ladders[k].exponent == doctest::Approx((k - 0.5) / 2.0));
    }
    CHECK(r.verdict == Verdict::consistent);
    o.theta = 0.8;
    const auto d = assess_curves(curves, o);
    CHECK(d.ladders[0].classification == LadderClass::divergent);
    o.theta = 1.0;
    CHECK_THROWS_AS(assess_curves(curves, o), ConfigError);
}

TEST_CASE("interpolation check on analytic curves") {
    const auto t = default_curve_times(1.0, 200, 0.999, 1e-4);
    std::vector<double> d0, d1, d2;
    for (double s : t) {
        const double tau = 1.0 - s;
        d0.push_back(std::sqrt(tau));
        d1.push_back(1.0);
        d2.push_back(1.0 / std::sqrt(tau));
    }
    const auto r = interpolation_check(t, d0, d1, d2, 1.0, 0.9, kInf, 1.0, 2.0);
    CHECK(r.hypotheses_hold);
    CHECK(r.violations.empty());
    CHECK(r.bracket_finite);
    CHECK(r.bracket == doctest::Approx(1.0).epsilon(1e-3));
    for (double q : r.quantities) CHECK(q == doctest::Approx(2.0).epsilon(1e-3));
    CHECK(r.minimal_D <= 2.0);

    std::vector<double> bad(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) bad[i] = std::pow(1.0 - t[i], -2.0);
    const auto v = interpolation_check(t, d0, d1, bad, 1.0, 0.9, kInf, 1.0, 2.0);
    CHECK_FALSE(v.hypotheses_hold);
    REQUIRE_FALSE(v.violations.empty());
    bool lower_k2 = false;
    for (const auto& e : v.violations) lower_k2 = lower_k2 || e.inequality == "lower-k2";
    CHECK(lower_k2);
    CHECK(v.minimal_D > 100.0);
}

TEST_CASE("interpolation check on the indicator combinations") {
    const auto t = default_curve_times(1.0, 80, 0.9, 1e-3);
    std::vector<double> d0, d1, d2;
    for (double s : t) {
        d0.push_back(std::sqrt(1.0 - s) + std::sqrt(oracle::indicator_residual_sq(s)));
        d1.push_back(1.0 + std::sqrt(oracle::indicator_gradient_sq(s)));
        d2.push_back(1.0 + std::sqrt(oracle::indicator_hessian_sq(s)));
    }
    const auto probe = interpolation_check(t, d0, d1, d2, 1.0, 0.5, kInf, 1.0, 1.0);
    CHECK(std::isfinite(probe.minimal_D));
    const auto r = interpolation_check(t, d0, d1, d2, 1.0, 0.5, kInf, 1.0, probe.minimal_D * (1.0 + 1e-9));
    CHECK(r.hypotheses_hold);
    CHECK(r.bracket_finite);
}

TEST_CASE("theta = 1 diagnostic") {
    const auto bm = make_model("bm");
    CurveOptions o;
    o.n_outer = 10000;
    o.threads = 4;
    {
        const auto g = make_terminal("linear");
        const auto r = theta_one_diagnostic(bm, g, GaussianOracle(bm, g), o);
        CHECK(r.gradient_ladder.classification == LadderClass::bounded);
        CHECK(r.hessian_ladder.classification == LadderClass::bounded);
        CHECK(r.summary.rfind("linear", 0) == 0);
    }
    {
        const auto g = make_terminal("indicator");
        const auto r = theta_one_diagnostic(bm, g, GaussianOracle(bm, g), o);
        CHECK(r.gradient_ladder.classification == LadderClass::divergent);
        CHECK(r.hessian_ladder.classification == LadderClass::divergent);
    }
    {
        const auto g = make_terminal("sqrt-pos");
        const auto r = theta_one_diagnostic(bm, g, GaussianOracle(bm, g), o);
        CHECK(r.gradient_ladder.values.back() > r.gradient_ladder.values.front());
        const auto& h = r.hessian_ladder.values;
        CHECK(h.back() / h.front() < 1.05);
    }
}

TEST_CASE("small verify_equivalence run on the indicator") {
    const auto bm = make_model("bm");
    const auto g = make_terminal("indicator");
    const GaussianOracle oracle(bm, g);
    EquivalenceOptions o;
    o.curve.n_outer = 500;
    o.curve.n_inner = 500;
    o.curve.threads = 4;
    for (const auto& drift : {zero_drift(), constant_drift(1.0)}) {
        const auto r = verify_equivalence(bm, g, drift, oracle, o);
        CAPTURE(r.measure);
        CHECK(r.verdict == Verdict::consistent);
        for (const auto& e : r.estimates) CHECK(std::abs(e.theta - 0.5) < 0.15);
        CHECK(r.curves[0].q == kInf);
    }
}
