#pragma once

// Characteristic phases psi_k solving the eikonal problem
//   d_n psi_k = -lambda_k(y, d' psi_k),  psi_k|_{yn=0} = y0,
// integrated by rays (bicharacteristics) launched from the boundary and
// interpolated onto a field lattice.  psi is constant along rays, so a ray
// launched at (c, y1b) traces the level set {psi_k = c}; inverting the
// slice maps recovers psi, d'psi, the graph phi_k of {psi_k = 0}, and
// beta_k with psi_k = (y0 - phi_k) beta_k.

#include <vector>

#include "geopulse/grid.hpp"
#include "geopulse/spectral.hpp"
#include "geopulse/system.hpp"

namespace geopulse {

struct FieldLattice {
    int n = 1;
    UniformAxis l0, l1, ln;

    static FieldLattice cover(const Grid& grid, double target_h);

    std::size_t nodes() const { return std::size_t(l0.count) * l1.count * ln.count; }
    std::size_t index(int j0, int j1, int jn) const {
        return (std::size_t(j0) * l1.count + j1) * ln.count + jn;
    }
    void point(int j0, int j1, int jn, double* y) const {
        y[0] = l0.at(j0);
        if (n == 2) {
            y[1] = l1.at(j1);
            y[2] = ln.at(jn);
        } else {
            y[1] = ln.at(jn);
        }
    }
};

struct RaySettings {
    double lattice_h = 1.0 / 128;  // field lattice spacing
    int substeps = 4;              // RK4 substeps per lattice cell in yn
    double launch_pad = 0.05;      // extra y0 launch range beyond the drift bound
    double speed_safety = 1.3;     // multiplies the sampled speed bound
};

// Bundle of rays for one mode; trajectories stored at every substep.
struct RayFan {
    int k = 0;
    int n = 1;
    UniformAxis b0, b1;  // launch axes on the boundary (b1 trivial for n=1)
    int nsub = 0;        // stored yn stations (substep resolution)
    double hsub = 0.0;
    int substeps = 4;

    // arrays indexed [(ib0*b1.count + ib1)*nsub + is]
    std::vector<double> Y0, Y1, E0, E1;

    std::size_t ray_index(int ib0, int ib1) const {
        return std::size_t(ib0) * b1.count + ib1;
    }
    const double* ray_Y0(int ib0, int ib1) const {
        return Y0.data() + ray_index(ib0, ib1) * nsub;
    }
};

RayFan trace_rays(const SystemSpec& spec, int k, const FieldLattice& lat,
                  const RaySettings& settings);

// Newton inversion of a slice map (b0, b1) -> (Y0, Y1) at station is (n = 2);
// c0/c1 carry the initial guess and receive the launch coordinates
bool invert_slice_2d(const RayFan& fan, int is, double ty0, double ty1, double& c0,
                     double& c1);

struct PhaseField {
    int k = 0;
    double gamma_k = 0.0;
    FieldLattice lat;
    std::vector<double> psi;    // lattice scalar
    std::vector<double> dpsi;   // lattice x (n+1), order (d0, [d1,] dn)
    std::vector<double> phi;    // (l1 x ln) graph of {psi_k = 0}
    std::vector<double> beta;   // lattice scalar
    std::vector<double> omega;  // (l0 x l1) boundary normal derivative

    double psi_at(const double* y) const;
    void dpsi_at(const double* y, double* out) const;  // n+1 entries
    double phi_at(double y1, double yn) const;
    double dphi_at(double y1, double yn, int axis) const;  // axis: 0=y1 (n=2), 1=yn
    double beta_at(const double* y) const;
    double omega_at(double y0, double y1) const;
};

PhaseField solve_phase(const SystemSpec& spec, const Grid& grid, int k,
                       const RaySettings& settings = {});

// max |D4_n psi + lambda(y, D4' psi)| over interior lattice nodes, derivatives
// by 4th-order centered differences of the psi lattice
double eikonal_residual(const SystemSpec& spec, const PhaseField& phase);

struct PhaseRelationsReport {
    double max_abs_psi_minus_graph = 0.0;   // |psi - (y0 - phi)| max
    double fitted_quad_coeff = 0.0;         // lsq c in  omega*yn + phi ~ c*yn^2 (+ c01 y0 yn)
    double max_rel_28kc = 0.0;              // |omega yn + phi| / (|y0 yn| + yn^2)
    double max_dnphi_dev = 0.0;             // max_k |d_n phi_k - gamma_k|
    double max_phi_dev_rel = 0.0;           // max |phi_k - gamma_k yn| / yn
    double max_omega_dev_rel = 0.0;         // max |-omega_k yn - gamma_k yn| / yn
    double min_separation_ratio = 0.0;      // min |phi_m - phi_p| / yn over pairs
    double wedge_delta = 0.0;
    bool separation_ok = false;             // min ratio >= 5 * wedge_delta
    bool wedge_constants_ok = false;
    double transversality_cells = 0.0;      // max cells-from-Delta of paired zero sets
    double min_d0psi = 0.0;
};

PhaseRelationsReport phase_relations_check(const SystemSpec& spec,
                                           const std::vector<PhaseField>& phases,
                                           double wedge_delta);

// delta of the wedge geometry: (1/6) min gap of the boundary eigenvalues
double wedge_delta_from_gammas(const std::vector<double>& gammas);

void dump_phase_csv(const PhaseField& phase, const std::string& path);

}  // namespace geopulse
