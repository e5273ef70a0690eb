#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "geopulse/errors.hpp"
#include "geopulse/expr.hpp"

using geopulse::Expr;

namespace {
const std::vector<std::string> kYVars = {"y0", "y1"};
const std::vector<std::string> kThetaVars = {"theta0"};

double ev(const std::string& src, const std::vector<std::string>& vars,
          std::initializer_list<double> vals) {
    return Expr::parse(src, vars).eval(std::vector<double>(vals));
}
}  // namespace

TEST_CASE("basic parse and arithmetic") {
    CHECK(ev("y0 + 2*y1", kYVars, {3.0, 4.0}) == doctest::Approx(11.0));
    CHECK(Expr::parse("y0 + 2*y1", kYVars).print() == "(y0 + (2*y1))");
    CHECK(ev("exp(0)", kYVars, {0.0, 0.0}) == 1.0);
    CHECK(ev("2^10", {}, {}) == 1024.0);
    CHECK(ev("2^-2", {}, {}) == 0.25);
    CHECK(ev("-y0^2", kYVars, {3.0, 0.0}) == -9.0);  // unary minus binds last
    CHECK(ev("2^3^2", {}, {}) == 512.0);             // right-associative
    CHECK(std::abs(ev("sin(y0)^2 + cos(y0)^2", kYVars, {0.37, 0.0}) - 1.0) < 1e-14);
}

TEST_CASE("bump support and symmetry") {
    CHECK(ev("bump(theta0)", kThetaVars, {2.0}) == 0.0);
    CHECK(ev("bump(theta0)", kThetaVars, {1.0}) == 0.0);
    CHECK(ev("bump(theta0)", kThetaVars, {-1.0}) == 0.0);
    CHECK(ev("bump(theta0)", kThetaVars, {0.0}) == 1.0);
    double b = ev("bump(theta0)", kThetaVars, {0.5});
    CHECK(b > 0.0);
    CHECK(b < 1.0);
    CHECK(ev("bump(theta0)", kThetaVars, {-0.5}) == b);

    // bump'(0) = 0 by centered finite difference
    double h = 1e-5;
    double d = (geopulse::bump(h) - geopulse::bump(-h)) / (2 * h);
    CHECK(std::abs(d) < 1e-6);
}

TEST_CASE("round trip through canonical printer is bitwise") {
    std::mt19937_64 rng(12345);
    std::uniform_real_distribution<double> coef(-3.0, 3.0);
    const char* pieces[] = {"y0",
                            "y1",
                            "sin(y0*0.7)",
                            "cos(y1)",
                            "tanh(y0 - y1)",
                            "bump(y0)",
                            "exp(0.1*y1)",
                            "abs(y0)",
                            "(y0 + y1)^3",
                            "sqrt(abs(y1) + 1)"};
    for (int trial = 0; trial < 200; ++trial) {
        std::string src;
        int terms = 1 + int(rng() % 4);
        for (int t = 0; t < terms; ++t) {
            if (t) src += (rng() % 2) ? " + " : " - ";
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.6f", coef(rng));
            src += std::string(buf) + "*" + pieces[rng() % 10];
        }
        Expr e = Expr::parse(src, kYVars);
        Expr e2 = Expr::parse(e.print(), kYVars);
        double xs[2] = {coef(rng), coef(rng)};
        double a = e.eval(std::span<const double>(xs, 2));
        double b = e2.eval(std::span<const double>(xs, 2));
        CHECK(a == b);  // bitwise
    }
}

TEST_CASE("errors carry positions and kinds") {
    CHECK_THROWS_AS(Expr::parse("y0 + ", kYVars), geopulse::SyntaxError);
    CHECK_THROWS_AS(Expr::parse("q + 1", kYVars), geopulse::UnknownIdentifier);
    CHECK_THROWS_AS(Expr::parse("sin(y0, y1)", kYVars), geopulse::ArityMismatch);
    CHECK_THROWS_AS(Expr::parse("y0(3)", kYVars), geopulse::ArityMismatch);
    CHECK_THROWS_AS(Expr::parse("", kYVars), geopulse::SyntaxError);
    try {
        Expr::parse("y0 + #", kYVars);
        CHECK(false);
    } catch (const geopulse::SyntaxError& e) {
        CHECK(e.offset == 5);
    }
}

TEST_CASE("domain errors are reported, not NaN") {
    CHECK_THROWS_AS(ev("sqrt(0 - 1)", {}, {}), geopulse::DomainError);
    CHECK_THROWS_AS(ev("1/(y0 - y0)", kYVars, {1.0, 0.0}), geopulse::DomainError);
    CHECK_THROWS_AS(ev("(0 - 2)^0.5", {}, {}), geopulse::DomainError);
    CHECK_THROWS_AS(ev("0^(0-1)", {}, {}), geopulse::DomainError);
    CHECK_THROWS_AS(ev("exp(10000)", {}, {}), geopulse::DomainError);
    // negative base with integer literal exponent is fine
    CHECK(ev("(0 - 2)^2", {}, {}) == 4.0);
}

TEST_CASE("depends_on reports free variables") {
    Expr e = Expr::parse("y0 + bump(y1)", kYVars);
    CHECK(e.depends_on("y0"));
    CHECK(e.depends_on("y1"));
    Expr c = Expr::parse("3 + 4", kYVars);
    CHECK(!c.depends_on("y0"));
}
