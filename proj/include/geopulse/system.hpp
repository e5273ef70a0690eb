#pragma once

// The boundary problem data: coefficient matrices B_j(y) of
//   L u = d_n u + sum_{j<n} B_j(y) d_j u = f(y, u)   in yn > 0,
//   B(y') u = g(y', y0/eps)                           on yn = 0,
// with f either quadratic in the frame coordinates (f_lin/f_quad) or a
// general expression in (y, u) vanishing at u = 0.

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "geopulse/expr.hpp"
#include "geopulse/grid.hpp"

namespace geopulse {

enum class ScenarioMode { Generation, Reflection, ChecksOnly };

struct SystemSpec {
    int N = 0;
    int n = 1;

    std::vector<ExprMatrix> Bcoef;  // n matrices, each N x N in y
    ExprMatrix boundary;            // p x N in y'
    ExprMatrix f_lin;               // N x N coefficients f^l_{km}(y); may be empty
    std::vector<ExprMatrix> f_quad; // per k: N x N with entry (m,p), m <= p; may be empty
    std::vector<Expr> f_general;    // N entries in (y, u1..uN); empty in quadratic mode
    bool general_mode = false;

    std::vector<Expr> g;  // p entries in (y', theta0)
    Expr tau_trace;       // reflection: outgoing trace on the boundary, (y', theta0)
    bool has_tau = false;
    double gamma_refl = 0.0;

    Domain domain;

    int p() const { return static_cast<int>(boundary.size()); }
    int dim() const { return n + 1; }  // spacetime coordinates y0..yn

    std::vector<std::string> yvar_names() const;   // y0..yn
    std::vector<std::string> ypvar_names() const;  // y0..y(n-1)

    // y packed [y0,(y1,)yn]; yp packed [y0,(y1)]
    void eval_B(int j, const double* y, Eigen::MatrixXd& out) const;
    // symbol A(y, eta') = sum_j B_j(y) eta'_j
    void eval_symbol(const double* y, const double* etap, Eigen::MatrixXd& out) const;
    Eigen::MatrixXd eval_boundary_matrix(const double* yp) const;
    Eigen::VectorXd eval_g(const double* yp, double theta0) const;
    double eval_tau(const double* yp, double theta0) const;

    double eval_flin(int k, int m, const double* y) const;
    double eval_fquad(int k, int m, int p_, const double* y) const;  // requires m <= p_
    // general f(y, u)
    Eigen::VectorXd eval_fgen(const double* y, const Eigen::VectorXd& u) const;

    bool f_is_zero() const;
    bool time_dependent_coefficients() const;

    // parse-time validation: shapes, variable sets, g support by sampling
    void validate() const;
};

Eigen::MatrixXd symbol(const SystemSpec& spec, const double* y, const double* etap);

}  // namespace geopulse
