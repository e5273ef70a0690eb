#include "geopulse/system.hpp"

#include <cmath>

#include "geopulse/errors.hpp"

namespace geopulse {

std::vector<std::string> SystemSpec::yvar_names() const {
    std::vector<std::string> v;
    for (int j = 0; j <= n; ++j) v.push_back("y" + std::to_string(j));
    return v;
}

std::vector<std::string> SystemSpec::ypvar_names() const {
    std::vector<std::string> v;
    for (int j = 0; j < n; ++j) v.push_back("y" + std::to_string(j));
    return v;
}

void SystemSpec::eval_B(int j, const double* y, Eigen::MatrixXd& out) const {
    out.resize(N, N);
    std::span<const double> vals(y, std::size_t(dim()));
    for (int r = 0; r < N; ++r)
        for (int c = 0; c < N; ++c) out(r, c) = Bcoef[j][r][c].eval(vals);
}

void SystemSpec::eval_symbol(const double* y, const double* etap,
                             Eigen::MatrixXd& out) const {
    out = Eigen::MatrixXd::Zero(N, N);
    Eigen::MatrixXd Bj;
    for (int j = 0; j < n; ++j) {
        if (etap[j] == 0.0) continue;
        eval_B(j, y, Bj);
        out += etap[j] * Bj;
    }
}

Eigen::MatrixXd SystemSpec::eval_boundary_matrix(const double* yp) const {
    Eigen::MatrixXd out(p(), N);
    std::span<const double> vals(yp, std::size_t(n));
    for (int r = 0; r < p(); ++r)
        for (int c = 0; c < N; ++c) out(r, c) = boundary[r][c].eval(vals);
    return out;
}

Eigen::VectorXd SystemSpec::eval_g(const double* yp, double theta0) const {
    Eigen::VectorXd out(p());
    std::vector<double> vals(yp, yp + n);
    vals.push_back(theta0);
    for (int r = 0; r < p(); ++r) out[r] = g[r].eval(vals);
    return out;
}

double SystemSpec::eval_tau(const double* yp, double theta0) const {
    std::vector<double> vals(yp, yp + n);
    vals.push_back(theta0);
    return tau_trace.eval(vals);
}

double SystemSpec::eval_flin(int k, int m, const double* y) const {
    if (f_lin.empty()) return 0.0;
    std::span<const double> vals(y, std::size_t(dim()));
    return f_lin[k][m].eval(vals);
}

double SystemSpec::eval_fquad(int k, int m, int p_, const double* y) const {
    if (f_quad.empty()) return 0.0;
    std::span<const double> vals(y, std::size_t(dim()));
    return f_quad[k][m][p_].eval(vals);
}

Eigen::VectorXd SystemSpec::eval_fgen(const double* y, const Eigen::VectorXd& u) const {
    std::vector<double> vals(y, y + dim());
    for (int i = 0; i < N; ++i) vals.push_back(u[i]);
    Eigen::VectorXd out(N);
    for (int k = 0; k < N; ++k) out[k] = f_general[k].eval(vals);
    return out;
}

bool SystemSpec::f_is_zero() const {
    return !general_mode && f_lin.empty() && f_quad.empty();
}

bool SystemSpec::time_dependent_coefficients() const {
    for (const auto& mat : Bcoef)
        for (const auto& row : mat)
            for (const auto& e : row)
                if (e.depends_on("y0")) return true;
    return false;
}

void SystemSpec::validate() const {
    if (N < 1) throw ConfigError("system.N must be >= 1");
    if (n < 1 || n > 2) throw ConfigError("system.n must be 1 or 2");
    if (static_cast<int>(Bcoef.size()) != n)
        throw ConfigError("system.B must list n coefficient matrices");
    for (const auto& mat : Bcoef)
        if (static_cast<int>(mat.size()) != N ||
            static_cast<int>(mat[0].size()) != N)
            throw ConfigError("coefficient matrices must be N x N");
    if (general_mode && static_cast<int>(f_general.size()) != N)
        throw ConfigError("f_general must have N entries");
    if (!general_mode) {
        if (!f_lin.empty() && (static_cast<int>(f_lin.size()) != N ||
                               static_cast<int>(f_lin[0].size()) != N))
            throw ConfigError("f_linear must be N x N");
        if (!f_quad.empty() && static_cast<int>(f_quad.size()) != N)
            throw ConfigError("f_quadratic must have N blocks");
    }
    if (static_cast<int>(g.size()) != p())
        throw ConfigError("g must have one entry per boundary row");

    // general f must vanish at u = 0 (sampled)
    if (general_mode) {
        std::vector<double> y(dim(), 0.0);
        Eigen::VectorXd zero = Eigen::VectorXd::Zero(N);
        for (int trial = 0; trial < 9; ++trial) {
            for (int j = 0; j <= n; ++j)
                y[j] = 0.11 * (trial + 1) * ((j % 2) ? -1.0 : 1.0) / (j + 1);
            Eigen::VectorXd f0 = eval_fgen(y.data(), zero);
            if (f0.cwiseAbs().maxCoeff() > 1e-12)
                throw ConfigError("f_general must vanish at u = 0");
        }
    }

    // g must vanish for |theta0| > 1 and, in generation mode, for y0 < 0 (sampled)
    std::vector<double> yp(n, 0.0);
    for (int trial = 0; trial < 64; ++trial) {
        yp[0] = -domain.T0 + (domain.T + domain.T0) * (trial % 8) / 7.0;
        if (n == 2) yp[1] = -domain.y1_half + 2 * domain.y1_half * (trial / 8) / 7.0;
        for (double theta : {-3.0, -1.5, -1.0001, 1.0001, 2.0, 5.0}) {
            if (eval_g(yp.data(), theta).cwiseAbs().maxCoeff() > 0.0)
                throw ConfigError("g must vanish for |theta0| > 1");
        }
        if (!has_tau && yp[0] < 0.0) {
            for (double theta : {-0.5, 0.0, 0.5})
                if (eval_g(yp.data(), theta).cwiseAbs().maxCoeff() > 0.0)
                    throw ConfigError("g must vanish for y0 < 0 in generation mode");
        }
    }
}

Eigen::MatrixXd symbol(const SystemSpec& spec, const double* y, const double* etap) {
    Eigen::MatrixXd out;
    spec.eval_symbol(y, etap, out);
    return out;
}

}  // namespace geopulse
