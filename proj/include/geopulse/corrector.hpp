#pragma once

// Correctors: the single-phase piece V(y,theta) = sum_k V_k(y,theta_k) built
// from the partial inverses Q_k, and the interaction piece
// W(y,theta0,xi_n) = sum_k t_k(y,theta0,xi_n) r_k(y',0) with
//   t_k = int_{xi_n}^{+inf} calH2^k(y, theta0 + omega_k (xi_n - s), s) ds,
// integrated only over the bracketed s-support union of the other modes.
// W^eps multiplies by the sqrt(eps) cutoff chi(y0/sqrt(eps)) chi(yn/sqrt(eps)).

#include <vector>

#include "geopulse/transport.hpp"

namespace geopulse {

// cutoff profile: 1 for |s| <= 1, 0 for |s| >= 2, smooth in between
double chi_cutoff(double s);

struct CorrectorSet {
    FieldLattice lat;
    UniformAxis theta;
    int N = 0;

    // partial inverses Q_k(y) on the lattice: [(node*N + k)*N*N] row-major
    std::vector<double> Q;
    // V_k lattice: per mode, [(node*nt + it)*N + c]; empty when the mode's
    // profile is silent
    std::vector<std::vector<double>> V;
    std::vector<bool> v_zero;

    void Q_at(int k, const double* y, double* out) const;  // N*N row-major
    // V_k(y, theta): exact zero below the lattice, settled value above it
    void V_at(int k, const double* y, double th, double* out) const;
    // d/dtheta of the interpolated V_k
    void dV_at(int k, const double* y, double th, double* out) const;
};

class Correctors {
  public:
    Correctors(const SystemSpec& spec, const std::vector<PhaseField>& phases,
               const FrameFields& frames, const ProfileSet& profiles);

    // builds Q and the V lattices on the profile lattice/theta axis
    void build(const UniformAxis& theta_override = {0, 0, 0});

    const CorrectorSet& set() const { return set_; }

    // H_{1k}(y, theta) from lattice finite differences of sigma_k (arbitrary y)
    void H1_at(int k, const double* y, double th, double* out) const;

    // H2(y, theta_1..theta_N) and calH2(y, theta0, xi_n); exact zero when at
    // most one profile is active at the arguments
    void H2_at(const double* y, const double* theta, double* out) const;
    void calH2_at(const double* y, double th0, double xin, double* out) const;
    double calH2k_at(int k, const double* y, double th0, double xin) const;

    // t_k by bracketed adaptive Simpson; exact zero when the s-support union
    // misses [xi_n, inf)
    double tk_at(int k, const double* y, double th0, double xin, double tol = 1e-9) const;
    double dtk_dtheta0(int k, const double* y, double th0, double xin) const;

    // W^eps and its pieces at scaled arguments theta0 = y0/eps, xi_n = yn/eps
    void W_eps_scaled(const double* y, double eps, double* out) const;
    // [B0(y) - B0(y',0)] d_theta0 W^eps at scaled arguments (the L2 - L2,0 piece)
    void L2_defect_scaled(const double* y, double eps, double* out) const;
    // L(y, d_y) W^eps at scaled arguments (y-derivatives at frozen fast args),
    // by centered differences of step h
    void LW_eps_scaled(const double* y, double eps, double fd_step, double* out) const;

    // |omega_m - omega_k| >= 3 delta check over the boundary lattice
    double min_omega_gap() const;

    // diagnostics
    double qk_identity_residual() const;        // max |L(y,dpsi_k) Q_k - (I - pi_k)|
    double qk_pik_residual() const;             // max |Q_k pi_k|
    double h1_polarization_residual() const;    // max |pi_k H1k| over lattice x theta
    // |L(y,dpsi_k)(-Q_k mean_{theta+-d} H1k) + H1k| at sampled points
    double v_equation_residual(int samples, double delta) const;
    // |[t(th0-w d, xi+d) - t(th0+w d, xi-d)]/(2d) + calH2k| at sampled points
    double t_transport_residual(int samples, double delta, double quad_tol) const;
    double t_sup_bound() const;                 // max |t_k| over a scan lattice

    const SystemSpec& spec() const { return spec_; }

  private:
    const SystemSpec& spec_;
    const std::vector<PhaseField>& phases_;
    const FrameFields& frames_;
    const ProfileSet& profiles_;
    CorrectorSet set_;

    struct H2Workspace;
    void h2_combine(const double* y, const double* sig, double* out) const;
    void h1_row(int k, std::size_t j0, std::size_t j1, std::size_t jn, int it,
                double* out, const std::vector<Eigen::MatrixXd>* Bj = nullptr) const;
    friend struct H2Workspace;
};

}  // namespace geopulse
