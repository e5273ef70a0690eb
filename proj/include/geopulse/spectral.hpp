#pragma once

// Pointwise eigen-structure of the symbol A(y, eta') and the structural
// checks behind the construction: strict hyperbolicity in the cone
// |eta''| <= delta*|eta0|, mode classification, and invertibility of the
// boundary matrix (B r_1 ... B r_p).

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "geopulse/system.hpp"

namespace geopulse {

struct EigenFrame {
    Eigen::VectorXd lambda;  // ascending
    Eigen::MatrixXd R;       // right eigenvectors as columns, unit norm,
                             // largest-magnitude entry positive
    Eigen::MatrixXd L;       // left eigenvectors as rows, L*R = I

    Eigen::MatrixXd Pi(int k) const { return R.col(k) * L.row(k); }
    int size() const { return static_cast<int>(lambda.size()); }
};

// tolerances used by the decomposition
struct SpectralTols {
    double gap_rel = 1e-8;    // NearDegenerate below gap_rel * spectral radius
    double imag_rel = 1e-10;  // NonReal above imag_rel * max(1, radius)
};

EigenFrame eigendecompose_matrix(const Eigen::MatrixXd& A,
                                 const SpectralTols& tols = {});
EigenFrame eigendecompose(const SystemSpec& spec, const double* y, const double* etap,
                          const SpectralTols& tols = {});

struct ModeSplit {
    std::vector<int> incoming;  // ascending eigenvalue indices with inward group velocity
    std::vector<int> outgoing;
    int p() const { return static_cast<int>(incoming.size()); }
};

// Classification at y = 0, eta' = (1, 0, ..., 0): mode k is incoming when the
// d_t and d_n coefficients of its transport field X_k share a sign, i.e. when
// d_{eta0} lambda_k = L_k B_0 R_k > 0 there.  Throws BoundaryRankMismatch when
// |incoming| differs from the row count of the boundary matrix.
ModeSplit classify_modes(const SystemSpec& spec);

// Invertibility consequence of the uniform Lopatinski condition: the p x p
// matrix (B r_1 ... B r_p) at sampled boundary points has condition < 1e8.
bool check_lopatinski_consequence(const SystemSpec& spec, const ModeSplit& modes,
                                  int samples_per_axis = 9, double cond_cap = 1e8);

// Largest ratio |eta''|/|eta0| with distinct real eigenvalues at sampled
// points, halved for margin.  Returns +inf-like cap for n == 1.
double estimate_cone_delta(const SystemSpec& spec);

// d_{eta_j} lambda_m at (y, eta') via L_m B_j R_m
double lambda_eta_derivative(const SystemSpec& spec, const EigenFrame& frame,
                             const double* y, int m, int j);

// d_{y_j} lambda_m via L_m (dA/dy_j) R_m with centered differences of the
// coefficient entries
double lambda_y_derivative(const SystemSpec& spec, const EigenFrame& frame,
                           const double* y, const double* etap, int m, int j);

}  // namespace geopulse
