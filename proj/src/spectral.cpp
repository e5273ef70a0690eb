#include "geopulse/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "geopulse/errors.hpp"

namespace geopulse {

EigenFrame eigendecompose_matrix(const Eigen::MatrixXd& A, const SpectralTols& tols) {
    const int N = static_cast<int>(A.rows());
    EigenFrame out;
    if (N == 1) {
        out.lambda = Eigen::VectorXd::Constant(1, A(0, 0));
        out.R = Eigen::MatrixXd::Ones(1, 1);
        out.L = Eigen::MatrixXd::Ones(1, 1);
        return out;
    }

    Eigen::EigenSolver<Eigen::MatrixXd> solver(A, /*computeEigenvectors=*/true);
    Eigen::VectorXcd ev = solver.eigenvalues();
    double radius = ev.cwiseAbs().maxCoeff();
    double imag_cap = tols.imag_rel * std::max(1.0, radius);
    for (int k = 0; k < N; ++k)
        if (std::abs(ev[k].imag()) > imag_cap)
            throw NonReal("complex eigenvalue of the symbol: imag = " +
                          std::to_string(ev[k].imag()));

    std::vector<int> order(N);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return ev[a].real() < ev[b].real(); });

    out.lambda.resize(N);
    out.R.resize(N, N);
    for (int k = 0; k < N; ++k) {
        out.lambda[k] = ev[order[k]].real();
        Eigen::VectorXd r = solver.eigenvectors().col(order[k]).real();
        double norm = r.norm();
        if (norm == 0.0) throw NearDegenerate("zero eigenvector");
        r /= norm;
        int pivot = 0;
        for (int i = 1; i < N; ++i)
            if (std::abs(r[i]) > std::abs(r[pivot])) pivot = i;
        if (r[pivot] < 0.0) r = -r;
        out.R.col(k) = r;
    }

    double gap = radius;
    for (int k = 0; k + 1 < N; ++k)
        gap = std::min(gap, out.lambda[k + 1] - out.lambda[k]);
    if (gap < tols.gap_rel * std::max(1e-300, radius))
        throw NearDegenerate("eigenvalue gap " + std::to_string(gap) +
                             " below tolerance; strict hyperbolicity at risk");

    out.L = out.R.partialPivLu().inverse();
    return out;
}

EigenFrame eigendecompose(const SystemSpec& spec, const double* y, const double* etap,
                          const SpectralTols& tols) {
    Eigen::MatrixXd A;
    spec.eval_symbol(y, etap, A);
    return eigendecompose_matrix(A, tols);
}

double lambda_eta_derivative(const SystemSpec& spec, const EigenFrame& frame,
                             const double* y, int m, int j) {
    Eigen::MatrixXd Bj;
    spec.eval_B(j, y, Bj);
    return frame.L.row(m) * Bj * frame.R.col(m);
}

double lambda_y_derivative(const SystemSpec& spec, const EigenFrame& frame,
                           const double* y, const double* etap, int m, int j) {
    const double step = 1e-5 * (1.0 + std::abs(y[j]));
    std::vector<double> yp(y, y + spec.dim()), ym(y, y + spec.dim());
    yp[j] += step;
    ym[j] -= step;
    Eigen::MatrixXd Ap, Am;
    spec.eval_symbol(yp.data(), etap, Ap);
    spec.eval_symbol(ym.data(), etap, Am);
    return frame.L.row(m) * ((Ap - Am) / (2.0 * step)) * frame.R.col(m);
}

ModeSplit classify_modes(const SystemSpec& spec) {
    std::vector<double> y(spec.dim(), 0.0), etap(spec.n, 0.0);
    etap[0] = 1.0;
    EigenFrame frame = eigendecompose(spec, y.data(), etap.data());
    ModeSplit split;
    for (int k = 0; k < spec.N; ++k) {
        // X_k carries coefficient 1 on d_n and d_{eta0}lambda_k on d_t
        double dt_coef = lambda_eta_derivative(spec, frame, y.data(), k, 0);
        if (dt_coef > 0.0)
            split.incoming.push_back(k);
        else
            split.outgoing.push_back(k);
    }
    if (split.p() != spec.p())
        throw BoundaryRankMismatch(
            "incoming mode count " + std::to_string(split.p()) +
            " does not match boundary rows " + std::to_string(spec.p()));
    return split;
}

bool check_lopatinski_consequence(const SystemSpec& spec, const ModeSplit& modes,
                                  int samples_per_axis, double cond_cap) {
    const int p = modes.p();
    if (p == 0) return true;
    std::vector<double> etap(spec.n, 0.0);
    etap[0] = 1.0;
    const int n1 = (spec.n == 2) ? samples_per_axis : 1;
    for (int a = 0; a < samples_per_axis; ++a) {
        for (int b = 0; b < n1; ++b) {
            std::vector<double> y(spec.dim(), 0.0);
            y[0] = spec.domain.y0_min +
                   (spec.domain.T - spec.domain.y0_min) * a / (samples_per_axis - 1.0);
            if (spec.n == 2 && n1 > 1)
                y[1] = -spec.domain.y1_half + 2 * spec.domain.y1_half * b / (n1 - 1.0);
            EigenFrame frame = eigendecompose(spec, y.data(), etap.data());
            Eigen::MatrixXd B = spec.eval_boundary_matrix(y.data());
            Eigen::MatrixXd M(p, p);
            for (int c = 0; c < p; ++c) M.col(c) = B * frame.R.col(modes.incoming[c]);
            Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
            double smin = svd.singularValues().minCoeff();
            double smax = svd.singularValues().maxCoeff();
            if (smin <= 0.0 || smax / smin >= cond_cap) return false;
        }
    }
    return true;
}

double estimate_cone_delta(const SystemSpec& spec) {
    if (spec.n == 1) return 8.0;  // no tangential frequencies; cone unrestricted
    auto distinct_real_at = [&](double rho) {
        // sample points and both tangential signs
        for (double y0 : {0.0, 0.5 * spec.domain.T}) {
            for (double y1 : {0.0, 0.5 * spec.domain.y1_half, -0.5 * spec.domain.y1_half}) {
                for (double yn : {0.0, 0.25 * spec.domain.yn_max}) {
                    std::vector<double> y = {y0, y1, yn};
                    for (double s : {1.0, -1.0}) {
                        std::vector<double> etap = {1.0, s * rho};
                        try {
                            eigendecompose(spec, y.data(), etap.data());
                        } catch (const Error&) {
                            return false;
                        }
                    }
                }
            }
        }
        return true;
    };
    double lo = 0.0, hi = 1.0 / 64;
    if (!distinct_real_at(hi)) return hi / 2;
    while (hi < 8.0 && distinct_real_at(2 * hi)) hi *= 2;
    if (hi >= 8.0) return 8.0;
    lo = hi;
    hi = 2 * hi;
    for (int iter = 0; iter < 20; ++iter) {
        double mid = 0.5 * (lo + hi);
        if (distinct_real_at(mid))
            lo = mid;
        else
            hi = mid;
    }
    return lo / 2;
}

}  // namespace geopulse
