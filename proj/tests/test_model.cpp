#include "doctest.h"

#include "fsmooth/error.hpp"
#include "fsmooth/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

using namespace fsmooth;

TEST_CASE("bm with linear payoff passes validation with sigma_inv = 1") {
    const auto m = make_model("bm");
    const auto g = make_terminal("linear");
    ValidationOptions o;
    o.n_probe = 1000;
    const auto r = validate_model(m, g, o);
    CHECK(r.passed());
    CHECK(r.sigma_inv_max == doctest::Approx(1.0));
    CHECK(r.n_probe == 1000);
}

TEST_CASE("bounded-sine sigma inverse stays below 2") {
    ModelParams p;
    p.epsilon = 0.5;
    const auto r = validate_model(make_model("bounded-sine", p), make_terminal("linear"));
    CHECK(r.passed());
    CHECK(r.sigma_inv_max <= 2.0);
    CHECK(r.sigma_inv_max > 1.5);
}

TEST_CASE("sigma(x) = x fails near zero with a named probe") {
    auto m = make_model("bm");
    m.name = "linear-sigma";
    m.constant_coefficients = false;
    m.sigma = [](double, State x, Out out) { out[0] = x[0]; };
    m.bounds.sigma_sup = 10.0;
    m.bounds.sigma_inv_sup = 10.0;
    const auto r = validate_model(m, make_terminal("linear"));
    REQUIRE_FALSE(r.passed());
    const auto it = std::find_if(r.violations.begin(), r.violations.end(),
                                 [](const BoundViolation& v) { return v.quantity == "sigma_inv"; });
    REQUIRE(it != r.violations.end());
    REQUIRE(it->x.size() == 1);
    CHECK(std::abs(it->x[0]) < 0.1);
}

TEST_CASE("non-finite coefficient is a hard failure naming the point") {
    auto m = make_model("bm");
    m.drift = [](double, State x, Out out) { out[0] = x[0] > 1.0 ? std::numeric_limits<double>::quiet_NaN() : 0.0; };
    try {
        validate_model(m, make_terminal("linear"));
        FAIL("expected NumericalError");
    } catch (const NumericalError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("model:") == 0);
        CHECK(msg.find("x=(") != std::string::npos);
    }
}

TEST_CASE("catalog contents and terminal evaluations") {
    const auto cat = builtin_catalog();
    CHECK(std::any_of(cat.begin(), cat.end(), [](const CatalogEntry& e) { return e.name == "bm+indicator"; }));
    const double four[] = {4.0};
    const double zero[] = {0.0};
    const double minus[] = {-1e-300};
    CHECK(make_terminal("sqrt-pos")(four) == 2.0);
    CHECK(make_terminal("indicator")(zero) == 1.0);
    CHECK(make_terminal("indicator")(minus) == 0.0);
    TerminalParams tp;
    tp.strike = 1.0;
    tp.alpha = 0.5;
    const double five[] = {5.0};
    CHECK(make_terminal("power", tp)(five) == doctest::Approx(2.0));
    CHECK(make_terminal("call", tp)(five) == 4.0);
}

TEST_CASE("every catalog entry validates with its declared bounds") {
    for (const auto& e : builtin_catalog()) {
        CAPTURE(e.name);
        ValidationOptions o;
        o.n_probe = 300;
        CHECK(validate_model(e.model, e.terminal, o).passed());
    }
}

TEST_CASE("unknown catalog names are config errors") {
    CHECK_THROWS_AS(make_model("ou"), ConfigError);
    CHECK_THROWS_AS(make_terminal("digital"), ConfigError);
    TerminalParams tp;
    tp.alpha = 1.5;
    CHECK_THROWS_AS(make_terminal("power", tp), ConfigError);
}

TEST_CASE("finite-difference fallback matches the analytic sigma jacobian") {
    auto m = make_model("bounded-sine");
    std::vector<double> exact(1), fd(1);
    const double x[] = {0.7};
    eval_sigma_jacobian(m, 0.0, x, exact);
    m.sigma_jacobian = nullptr;
    eval_sigma_jacobian(m, 0.0, x, fd);
    CHECK(fd[0] == doctest::Approx(exact[0]).epsilon(1e-6));
    m.finite_difference_fallback = false;
    CHECK_THROWS(eval_sigma_jacobian(m, 0.0, x, fd));
}
