#pragma once

// Hand-built systems shared by the unit suites.

#include <string>
#include <vector>

#include "geopulse/system.hpp"

namespace testsys {

using geopulse::Expr;
using geopulse::ExprMatrix;
using geopulse::SystemSpec;

inline ExprMatrix parse_matrix(const std::vector<std::vector<std::string>>& rows,
                               const std::vector<std::string>& vars) {
    ExprMatrix out;
    for (const auto& r : rows) {
        out.emplace_back();
        for (const auto& src : r) out.back().push_back(Expr::parse(src, vars));
    }
    return out;
}

// N=2, n=1, B0 = diag(1/2, -1), boundary (1 0), g = bump window; f = 0
inline SystemSpec const_diag2() {
    SystemSpec s;
    s.N = 2;
    s.n = 1;
    auto yv = s.yvar_names();
    s.Bcoef = {parse_matrix({{"0.5", "0"}, {"0", "-1"}}, yv)};
    s.boundary = parse_matrix({{"1", "0"}}, s.ypvar_names());
    std::vector<std::string> gv = s.ypvar_names();
    gv.push_back("theta0");
    s.g = {Expr::parse("bump(theta0)*bump(4*y0 - 1)", gv)};
    s.domain.T0 = 0.5;
    s.domain.alpha = 1.5;
    s.domain.T = 0.3;
    s.domain.y0_min = -0.05;
    s.domain.yn_max = 0.45;
    return s;
}

// N=3, n=1, variable symmetric coefficients with well separated eigenvalues
inline SystemSpec sym3_1d() {
    SystemSpec s;
    s.N = 3;
    s.n = 1;
    auto yv = s.yvar_names();
    s.Bcoef = {parse_matrix(
        {{"0.6 + 0.05*tanh(2*y1)", "0.08 + 0.03*y1", "0.02*y1"},
         {"0.08 + 0.03*y1", "1.3 - 0.06*y1", "0.05 + 0.02*sin(y1)"},
         {"0.02*y1", "0.05 + 0.02*sin(y1)", "-0.9 + 0.04*y1"}},
        yv)};
    s.boundary = parse_matrix({{"1", "0", "0"}, {"0", "1", "0"}}, s.ypvar_names());
    std::vector<std::string> gv = s.ypvar_names();
    gv.push_back("theta0");
    s.g = {Expr::parse("bump(theta0)*bump(4*y0 - 1)", gv),
           Expr::parse("0.7*bump(theta0)*bump(4*y0 - 1)", gv)};
    s.domain.T0 = 0.4;
    s.domain.alpha = 2.0;
    s.domain.T = 0.25;
    s.domain.y0_min = -0.05;
    s.domain.yn_max = 0.35;
    return s;
}

// N=3, n=2, symmetric variable coefficients in both tangential directions
inline SystemSpec sym3_2d() {
    SystemSpec s;
    s.N = 3;
    s.n = 2;
    auto yv = s.yvar_names();
    s.Bcoef = {parse_matrix(
                   {{"0.55 + 0.05*tanh(2*y2)", "0.06 + 0.02*y1", "0.02*y2"},
                    {"0.06 + 0.02*y1", "1.05 - 0.04*y2", "0.03 + 0.015*sin(y1)"},
                    {"0.02*y2", "0.03 + 0.015*sin(y1)", "1.6 + 0.05*y1"}},
                   yv),
               parse_matrix(
                   {{"0.10", "0.02", "0"},
                    {"0.02", "-0.06", "0.01"},
                    {"0", "0.01", "0.08"}},
                   yv)};
    s.boundary = parse_matrix(
        {{"1", "0", "0"}, {"0", "1", "0"}, {"0", "0", "1"}}, s.ypvar_names());
    std::vector<std::string> gv = s.ypvar_names();
    gv.push_back("theta0");
    s.g = {Expr::parse("bump(theta0)*bump(4*y0 - 1)*bump(y1/0.3)", gv),
           Expr::parse("0.6*bump(theta0)*bump(4*y0 - 1)*bump(y1/0.3)", gv),
           Expr::parse("0.4*bump(theta0)*bump(4*y0 - 1)*bump(y1/0.3)", gv)};
    s.domain.T0 = 0.35;
    s.domain.alpha = 2.2;
    s.domain.T = 0.2;
    s.domain.y0_min = -0.04;
    s.domain.y1_half = 0.45;
    s.domain.yn_max = 0.3;
    return s;
}

// scalar semilinear problem: N=1, n=1, B0 = 1 + a*y1, f = q*u^2
inline SystemSpec riccati1(double a = 0.4, const std::string& q = "0.8") {
    SystemSpec s;
    s.N = 1;
    s.n = 1;
    auto yv = s.yvar_names();
    s.Bcoef = {parse_matrix({{"1 + " + std::to_string(a) + "*y1"}}, yv)};
    s.boundary = parse_matrix({{"1"}}, s.ypvar_names());
    std::vector<std::string> gv = s.ypvar_names();
    gv.push_back("theta0");
    s.g = {Expr::parse("bump(theta0)*bump(4*y0 - 1)", gv)};
    s.f_quad = {parse_matrix({{q}}, yv)};
    s.domain.T0 = 0.5;
    s.domain.alpha = 2.0;
    s.domain.T = 0.3;
    s.domain.y0_min = -0.05;
    s.domain.yn_max = 0.4;
    return s;
}

}  // namespace testsys
