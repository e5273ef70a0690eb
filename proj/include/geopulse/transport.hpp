#pragma once

// Leading profiles: boundary coupling (B r_1 ... B r_p) sigma* = rhs and the
// decoupled semilinear transport equations
//   X_k sigma_k + c_k sigma_k - (d_k sigma_k + e_k sigma_k^2) = 0
// integrated along the characteristics of X_k with theta as a parameter.
// Frame fields r_k(y) = R_k(y, d'psi_k(y)) and the coefficients c_k, d_k, e_k
// are precomputed on the field lattice; eigenvector derivatives use centered
// differences of the normalized frames at half-lattice step.

#include <vector>

#include "geopulse/eikonal.hpp"
#include "geopulse/spectral.hpp"
#include "geopulse/system.hpp"

namespace geopulse {

struct FrameFields {
    FieldLattice lat;
    int N = 0;
    int dim = 2;  // n+1
    // node-major, then mode, then component
    std::vector<double> R;   // r_k(y)
    std::vector<double> L;   // l_k(y)
    std::vector<double> LR;  // L(y, d_y) r_k(y)
    std::vector<double> c, d, e;  // node-major, then mode

    std::size_t vec_index(std::size_t node, int k) const {
        return (node * N + k) * N;
    }
    void r_at(int k, const double* y, double* out) const;
    void l_at(int k, const double* y, double* out) const;
    void lr_at(int k, const double* y, double* out) const;  // L(y,d_y) r_k field
    double c_at(int k, const double* y) const;
    double d_at(int k, const double* y) const;
    double e_at(int k, const double* y) const;

  private:
    double field_at(const std::vector<double>& data, std::ptrdiff_t offset,
                    std::ptrdiff_t stride, const double* y) const;
    friend FrameFields build_frame_fields(const SystemSpec&,
                                          const std::vector<PhaseField>&,
                                          const FieldLattice&);
};

FrameFields build_frame_fields(const SystemSpec& spec,
                               const std::vector<PhaseField>& phases,
                               const FieldLattice& lat);

struct ProfileField {
    int k = 0;
    bool identically_zero = true;
    FieldLattice lat;
    UniformAxis theta;
    std::vector<double> sigma;  // [node * theta.count + it]
    std::vector<double> trace;  // [(j0*l1.count + j1) * theta.count + it]

    // sigma_k(y, theta); exactly zero for |theta| >= 1
    double at(const double* y, double th) const;
    double trace_at(double y0, double y1, double th) const;
};

struct ProfileSet {
    std::vector<ProfileField> sigma;  // one per mode
    int tau_mode = -1;                // reflection only
    double trace_residual = 0.0;      // max |(B r) sigma* - rhs| over boundary lattice
    double ode_error_estimate = 0.0;  // Richardson step-halving estimate on sample rays
};

ProfileSet solve_profiles(const SystemSpec& spec, const std::vector<PhaseField>& phases,
                          const FrameFields& frames, const ModeSplit& modes,
                          ScenarioMode scenario, const RaySettings& settings,
                          const UniformAxis& theta, int tau_mode = -1);

// U0(y, theta) = sum_k sigma_k(y, theta_k) r_k(y) and its scaled-argument form
struct LeadingOrder {
    const SystemSpec* spec;
    const std::vector<PhaseField>* phases;
    const FrameFields* frames;
    const ProfileSet* profiles;

    void eval_theta(const double* y, const double* theta, double* out) const;
    void eval_scaled(const double* y, double eps, double* out) const;
    double max_abs_theta0() const;  // sup over lattice of |sigma| (for scales)
};

// diagnostics
// max over lattice x theta of |X_k sigma_k + c sigma - d sigma - e sigma^2|,
// with X_k applied by lattice finite differences (truncation-limited)
double polarized_residual(const SystemSpec& spec, const std::vector<PhaseField>& phases,
                          const FrameFields& frames, const ProfileSet& profiles);
// max |X_k psi_k| over the lattice (tangency of the transport field)
double xk_tangency_residual(const SystemSpec& spec, const std::vector<PhaseField>& phases,
                            const FrameFields& frames);
// max |B U0 - g| over the boundary lattice x theta (generation), or
// |B U0| (reflection)
double boundary_identity_residual(const SystemSpec& spec, const FrameFields& frames,
                                  const ProfileSet& profiles, ScenarioMode scenario);

// single-characteristic integrator exposed for oracle tests:
// d sigma/d yn = (d - c) sigma + e sigma^2 with constant coefficients
double integrate_riccati_constant(double c, double d, double e, double sigma0, double yn,
                                  int steps);

// reflection: solve the corrected outgoing equation for s_N with zero data and
// forcing equal to the residual of tau's own transport equation; returns
// max |s_N|
double reflection_sn_correction(const SystemSpec& spec,
                                const std::vector<PhaseField>& phases,
                                const FrameFields& frames, const ProfileSet& profiles,
                                const RaySettings& settings);

void dump_profile_csv(const ProfileField& pf, const std::string& path);

}  // namespace geopulse
