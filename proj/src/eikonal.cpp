#include "geopulse/eikonal.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "geopulse/errors.hpp"

namespace geopulse {

FieldLattice FieldLattice::cover(const Grid& grid, double target_h) {
    FieldLattice lat;
    lat.n = grid.n;
    auto axis = [target_h](double lo, double hi) {
        int count = std::max(4, int(std::ceil((hi - lo) / target_h - 0.25)) + 1);
        return UniformAxis{lo, (hi - lo) / (count - 1), count};
    };
    lat.l0 = axis(grid.ax0.x0, grid.ax0.back());
    lat.l1 = (grid.n == 2) ? axis(grid.ax1.x0, grid.ax1.back()) : UniformAxis{0.0, 1.0, 1};
    lat.ln = axis(0.0, grid.axn.back());
    return lat;
}

namespace {

struct RayState {
    double y0, y1, e0, e1;
};

class RayRhs {
  public:
    RayRhs(const SystemSpec& spec, int k) : spec_(spec), k_(k) {}

    RayState operator()(double yn, const RayState& s) const {
        double y[3], etap[2];
        pack(yn, s, y, etap);
        if (etap[0] <= 0.05)
            throw CausticDetected("d0 psi drifted nonpositive along a ray");
        EigenFrame frame = eigendecompose(spec_, y, etap);
        RayState d{};
        d.y0 = lambda_eta_derivative(spec_, frame, y, k_, 0);
        d.e0 = -lambda_y_derivative(spec_, frame, y, etap, k_, 0);
        if (spec_.n == 2) {
            d.y1 = lambda_eta_derivative(spec_, frame, y, k_, 1);
            d.e1 = -lambda_y_derivative(spec_, frame, y, etap, k_, 1);
        }
        return d;
    }

    void pack(double yn, const RayState& s, double* y, double* etap) const {
        y[0] = s.y0;
        if (spec_.n == 2) {
            y[1] = s.y1;
            y[2] = yn;
            etap[1] = s.e1;
        } else {
            y[1] = yn;
        }
        etap[0] = s.e0;
    }

  private:
    const SystemSpec& spec_;
    int k_;
};

RayState axpy(const RayState& a, double c, const RayState& b) {
    return {a.y0 + c * b.y0, a.y1 + c * b.y1, a.e0 + c * b.e0, a.e1 + c * b.e1};
}

double sample_speed_bound(const SystemSpec& spec, int k, const FieldLattice& lat, int j) {
    double bound = 0.0;
    double etap[2] = {1.0, 0.0};
    for (double y0 : {lat.l0.x0, 0.0, lat.l0.back()}) {
        for (double y1 : {lat.l1.x0, lat.l1.back()}) {
            for (double yn : {0.0, 0.5 * lat.ln.back(), lat.ln.back()}) {
                double y[3];
                y[0] = y0;
                if (spec.n == 2) {
                    y[1] = y1;
                    y[2] = yn;
                } else {
                    y[1] = yn;
                }
                EigenFrame frame = eigendecompose(spec, y, etap);
                bound = std::max(bound,
                                 std::abs(lambda_eta_derivative(spec, frame, y, k, j)));
            }
        }
    }
    return bound;
}

}  // namespace

RayFan trace_rays(const SystemSpec& spec, int k, const FieldLattice& lat,
                  const RaySettings& settings) {
    RayFan fan;
    fan.k = k;
    fan.n = spec.n;
    fan.substeps = settings.substeps;
    fan.hsub = lat.ln.h / settings.substeps;
    fan.nsub = (lat.ln.count - 1) * settings.substeps + 1;

    const double ynmax = lat.ln.back();
    double drift0 = settings.speed_safety * sample_speed_bound(spec, k, lat, 0) * ynmax +
                    settings.launch_pad;
    // launch axis aligned to multiples of the spacing so that b0 = 0 is a node
    double spacing = lat.l0.h * (spec.n == 2 ? 2.0 : 1.0);
    double lo = std::floor((lat.l0.x0 - drift0) / spacing) * spacing;
    double hi = lat.l0.back() + drift0;
    int count = int(std::ceil((hi - lo) / spacing)) + 1;
    fan.b0 = UniformAxis{lo, spacing, count};

    if (spec.n == 2) {
        double drift1 = settings.speed_safety * sample_speed_bound(spec, k, lat, 1) * ynmax +
                        settings.launch_pad;
        double s1 = lat.l1.h * 2.0;
        double lo1 = std::floor((lat.l1.x0 - drift1) / s1) * s1;
        double hi1 = lat.l1.back() + drift1;
        int c1 = int(std::ceil((hi1 - lo1) / s1)) + 1;
        fan.b1 = UniformAxis{lo1, s1, c1};
    } else {
        fan.b1 = UniformAxis{0.0, 1.0, 1};
    }

    const std::size_t nrays = std::size_t(fan.b0.count) * fan.b1.count;
    fan.Y0.resize(nrays * fan.nsub);
    fan.Y1.resize(spec.n == 2 ? nrays * fan.nsub : 0);
    fan.E0.resize(nrays * fan.nsub);
    fan.E1.resize(spec.n == 2 ? nrays * fan.nsub : 0);

    RayRhs rhs(spec, k);
    for (int ib0 = 0; ib0 < fan.b0.count; ++ib0) {
        for (int ib1 = 0; ib1 < fan.b1.count; ++ib1) {
            RayState s{fan.b0.at(ib0), fan.b1.at(ib1), 1.0, 0.0};
            std::size_t base = fan.ray_index(ib0, ib1) * fan.nsub;
            for (int is = 0; is < fan.nsub; ++is) {
                fan.Y0[base + is] = s.y0;
                fan.E0[base + is] = s.e0;
                if (spec.n == 2) {
                    fan.Y1[base + is] = s.y1;
                    fan.E1[base + is] = s.e1;
                }
                if (is + 1 == fan.nsub) break;
                double yn = is * fan.hsub;
                double h = fan.hsub;
                RayState k1 = rhs(yn, s);
                RayState k2 = rhs(yn + 0.5 * h, axpy(s, 0.5 * h, k1));
                RayState k3 = rhs(yn + 0.5 * h, axpy(s, 0.5 * h, k2));
                RayState k4 = rhs(yn + h, axpy(s, h, k3));
                s.y0 += h / 6.0 * (k1.y0 + 2 * k2.y0 + 2 * k3.y0 + k4.y0);
                s.y1 += h / 6.0 * (k1.y1 + 2 * k2.y1 + 2 * k3.y1 + k4.y1);
                s.e0 += h / 6.0 * (k1.e0 + 2 * k2.e0 + 2 * k3.e0 + k4.e0);
                s.e1 += h / 6.0 * (k1.e1 + 2 * k2.e1 + 2 * k3.e1 + k4.e1);
            }
        }
    }
    return fan;
}

namespace {

// decreasing-slice caustic check plus inversion helpers for n = 1
void check_monotone_slice(const RayFan& fan, int is) {
    double prev = -1e300;
    for (int ib0 = 0; ib0 < fan.b0.count; ++ib0) {
        double v = fan.Y0[fan.ray_index(ib0, 0) * fan.nsub + is];
        if (v <= prev)
            throw CausticDetected("ray crossing at yn = " + std::to_string(is * fan.hsub) +
                                  ", launch y0 = " + std::to_string(fan.b0.at(ib0)));
        prev = v;
    }
}

}  // namespace

// Newton inversion of the slice map (b0, b1) -> (Y0, Y1) for n = 2
bool invert_slice_2d(const RayFan& fan, int is, double ty0, double ty1, double& c0,
                     double& c1) {
    auto mapY0 = [&](double a, double b) {
        return interp2(fan.b0, fan.b1, fan.Y0.data() + is, fan.nsub, a, b);
    };
    auto mapY1 = [&](double a, double b) {
        return interp2(fan.b0, fan.b1, fan.Y1.data() + is, fan.nsub, a, b);
    };
    double d0 = fan.b0.h * 0.25, d1 = fan.b1.h * 0.25;
    for (int iter = 0; iter < 30; ++iter) {
        double f0 = mapY0(c0, c1) - ty0;
        double f1 = mapY1(c0, c1) - ty1;
        if (std::abs(f0) + std::abs(f1) < 1e-13) return true;
        double j00 = (mapY0(c0 + d0, c1) - mapY0(c0 - d0, c1)) / (2 * d0);
        double j01 = (mapY0(c0, c1 + d1) - mapY0(c0, c1 - d1)) / (2 * d1);
        double j10 = (mapY1(c0 + d0, c1) - mapY1(c0 - d0, c1)) / (2 * d0);
        double j11 = (mapY1(c0, c1 + d1) - mapY1(c0, c1 - d1)) / (2 * d1);
        double det = j00 * j11 - j01 * j10;
        if (det <= 0.0)
            throw CausticDetected("slice map jacobian nonpositive at yn station " +
                                  std::to_string(is));
        c0 -= (j11 * f0 - j01 * f1) / det;
        c1 -= (-j10 * f0 + j00 * f1) / det;
    }
    return std::abs(mapY0(c0, c1) - ty0) + std::abs(mapY1(c0, c1) - ty1) < 1e-10;
}

PhaseField solve_phase(const SystemSpec& spec, const Grid& grid, int k,
                       const RaySettings& settings) {
    PhaseField ph;
    ph.k = k;
    ph.lat = FieldLattice::cover(grid, settings.lattice_h);
    const FieldLattice& lat = ph.lat;

    {
        std::vector<double> y0v(spec.dim(), 0.0), etap(spec.n, 0.0);
        etap[0] = 1.0;
        ph.gamma_k = eigendecompose(spec, y0v.data(), etap.data()).lambda[k];
    }

    RayFan fan = trace_rays(spec, k, lat, settings);

    const int n0 = lat.l0.count, n1 = lat.l1.count, nn = lat.ln.count;
    ph.psi.resize(lat.nodes());
    ph.dpsi.resize(lat.nodes() * (spec.n + 1));
    ph.beta.resize(lat.nodes());
    ph.phi.resize(std::size_t(n1) * nn);
    ph.omega.resize(std::size_t(n0) * n1);

    // boundary normal derivative and gamma: omega_k(y') = -lambda_k((y',0),(1,0))
    {
        std::vector<double> etap(spec.n, 0.0);
        etap[0] = 1.0;
        for (int j0 = 0; j0 < n0; ++j0)
            for (int j1 = 0; j1 < n1; ++j1) {
                double y[3];
                lat.point(j0, j1, 0, y);
                EigenFrame f = eigendecompose(spec, y, etap.data());
                ph.omega[std::size_t(j0) * n1 + j1] = -f.lambda[k];
            }
    }

    // graph phi of the zero level set, from the rays launched at b0 = 0
    int ib0_zero = -1;
    for (int i = 0; i < fan.b0.count; ++i)
        if (std::abs(fan.b0.at(i)) < 1e-12) ib0_zero = i;
    if (ib0_zero < 0) throw Error("launch axis does not contain b0 = 0");
    std::vector<double> slice_b1(fan.b1.count), slice_Y1(fan.b1.count);
    for (int jn = 0; jn < nn; ++jn) {
        int is = jn * settings.substeps;
        if (spec.n == 1) {
            ph.phi[jn] = fan.Y0[fan.ray_index(ib0_zero, 0) * fan.nsub + is];
        } else {
            for (int ib1 = 0; ib1 < fan.b1.count; ++ib1) {
                slice_b1[ib1] = fan.b1.at(ib1);
                slice_Y1[ib1] = fan.Y1[fan.ray_index(ib0_zero, ib1) * fan.nsub + is];
            }
            for (int j1 = 0; j1 < n1; ++j1) {
                double target = lat.l1.at(j1);
                if (target <= slice_Y1.front() || target >= slice_Y1.back())
                    throw ConeExit("zero-level rays do not cover y1 = " +
                                   std::to_string(target));
                double b1s = invert_monotone(slice_b1, slice_Y1, target);
                ph.phi[std::size_t(j1) * nn + jn] =
                    interp1(fan.b1, fan.Y0.data() + fan.ray_index(ib0_zero, 0) * fan.nsub + is,
                            fan.nsub, b1s);
            }
        }
    }

    // psi / dpsi / beta by slice inversion
    std::vector<double> slice_b0(fan.b0.count), slice_Y0(fan.b0.count);
    std::vector<double> etap_node(spec.n, 0.0);
    std::vector<double> c1_prev(std::size_t(n0) * n1, 0.0);
    for (int j0 = 0; j0 < n0; ++j0)
        for (int j1 = 0; j1 < n1; ++j1) c1_prev[std::size_t(j0) * n1 + j1] = lat.l1.at(j1);
    for (int jn = 0; jn < nn; ++jn) {
        int is = jn * settings.substeps;
        if (spec.n == 1) {
            check_monotone_slice(fan, is);
            for (int ib0 = 0; ib0 < fan.b0.count; ++ib0) {
                slice_b0[ib0] = fan.b0.at(ib0);
                slice_Y0[ib0] = fan.Y0[fan.ray_index(ib0, 0) * fan.nsub + is];
            }
        }
        for (int j0 = 0; j0 < n0; ++j0) {
            for (int j1 = 0; j1 < n1; ++j1) {
                double y[3];
                lat.point(j0, j1, jn, y);
                double psi_v, e0, e1 = 0.0;
                if (spec.n == 1) {
                    double ty0 = lat.l0.at(j0);
                    if (ty0 <= slice_Y0.front() || ty0 >= slice_Y0.back())
                        throw ConeExit("rays do not cover y0 = " + std::to_string(ty0) +
                                       " at yn = " + std::to_string(lat.ln.at(jn)));
                    double b0s = invert_monotone(slice_b0, slice_Y0, ty0);
                    psi_v = b0s;
                    e0 = interp1(fan.b0, fan.E0.data() + is, fan.nsub, b0s);
                } else {
                    double c0 = lat.l0.at(j0), c1 = lat.l1.at(j1);
                    if (jn > 0) {
                        // warm start from the node below
                        c0 = ph.psi[lat.index(j0, j1, jn - 1)];
                        c1 = c1_prev[std::size_t(j0) * n1 + j1];
                    }
                    if (!invert_slice_2d(fan, is, lat.l0.at(j0), lat.l1.at(j1), c0, c1))
                        throw ConeExit("slice inversion failed at node");
                    psi_v = c0;
                    c1_prev[std::size_t(j0) * n1 + j1] = c1;
                    e0 = interp2(fan.b0, fan.b1, fan.E0.data() + is, fan.nsub, c0, c1);
                    e1 = interp2(fan.b0, fan.b1, fan.E1.data() + is, fan.nsub, c0, c1);
                }
                std::size_t idx = lat.index(j0, j1, jn);
                ph.psi[idx] = psi_v;
                etap_node[0] = e0;
                if (spec.n == 2) etap_node[1] = e1;
                EigenFrame f = eigendecompose(spec, y, etap_node.data());
                double* dp = ph.dpsi.data() + idx * (spec.n + 1);
                dp[0] = e0;
                if (spec.n == 2) dp[1] = e1;
                dp[spec.n] = -f.lambda[k];

                double phi_v = ph.phi[std::size_t(j1) * nn + jn];
                double dy = y[0] - phi_v;
                ph.beta[idx] = (std::abs(dy) > 2.0 * lat.l0.h) ? psi_v / dy : e0;
            }
        }
    }
    return ph;
}

double PhaseField::psi_at(const double* y) const {
    if (lat.n == 2) return interp3(lat.l0, lat.l1, lat.ln, psi.data(), 1, y[0], y[1], y[2]);
    return interp2(lat.l0, lat.ln, psi.data(), 1, y[0], y[1]);
}

void PhaseField::dpsi_at(const double* y, double* out) const {
    int d = lat.n + 1;
    for (int c = 0; c < d; ++c) {
        if (lat.n == 2)
            out[c] = interp3(lat.l0, lat.l1, lat.ln, dpsi.data() + c, d, y[0], y[1], y[2]);
        else
            out[c] = interp2(lat.l0, lat.ln, dpsi.data() + c, d, y[0], y[1]);
    }
}

double PhaseField::phi_at(double y1, double yn) const {
    if (lat.n == 2) return interp2(lat.l1, lat.ln, phi.data(), 1, y1, yn);
    return interp1(lat.ln, phi.data(), 1, yn);
}

double PhaseField::dphi_at(double y1, double yn, int axis) const {
    double h = (axis == 0) ? lat.l1.h : lat.ln.h;
    if (axis == 0 && lat.n == 1) return 0.0;
    double a = (axis == 0) ? y1 - h : y1;
    double b = (axis == 0) ? y1 + h : y1;
    double c = (axis == 1) ? yn - h : yn;
    double d = (axis == 1) ? yn + h : yn;
    // keep the centered stencil inside the lattice
    if (axis == 1 && c < 0.0) {
        double f0 = phi_at(y1, yn), f1 = phi_at(y1, yn + h), f2 = phi_at(y1, yn + 2 * h);
        return (-3 * f0 + 4 * f1 - f2) / (2 * h);
    }
    if (axis == 1 && d > lat.ln.back()) {
        double f0 = phi_at(y1, yn), f1 = phi_at(y1, yn - h), f2 = phi_at(y1, yn - 2 * h);
        return (3 * f0 - 4 * f1 + f2) / (2 * h);
    }
    return (phi_at(b, d) - phi_at(a, c)) / (2 * h);
}

double PhaseField::beta_at(const double* y) const {
    if (lat.n == 2) return interp3(lat.l0, lat.l1, lat.ln, beta.data(), 1, y[0], y[1], y[2]);
    return interp2(lat.l0, lat.ln, beta.data(), 1, y[0], y[1]);
}

double PhaseField::omega_at(double y0, double y1) const {
    if (lat.n == 2) return interp2(lat.l0, lat.l1, omega.data(), 1, y0, y1);
    return interp1(lat.l0, omega.data(), 1, y0);
}

namespace {
// 4th-order centered difference along a lattice axis
double fd4_lattice(const std::vector<double>& f, const FieldLattice& lat, int axis, int j0,
                   int j1, int jn) {
    auto val = [&](int d) {
        int a = j0 + (axis == 0 ? d : 0);
        int b = j1 + (axis == 1 ? d : 0);
        int c = jn + (axis == 2 ? d : 0);
        return f[lat.index(a, b, c)];
    };
    double h = (axis == 0) ? lat.l0.h : (axis == 1 ? lat.l1.h : lat.ln.h);
    return (-val(2) + 8 * val(1) - 8 * val(-1) + val(-2)) / (12 * h);
}
}  // namespace

double eikonal_residual(const SystemSpec& spec, const PhaseField& phase) {
    const FieldLattice& lat = phase.lat;
    double worst = 0.0;
    std::vector<double> etap(spec.n, 0.0);
    const int m1lo = (spec.n == 2) ? 2 : 0;
    const int m1hi = (spec.n == 2) ? lat.l1.count - 2 : 1;
    for (int j0 = 2; j0 < lat.l0.count - 2; ++j0)
        for (int j1 = m1lo; j1 < m1hi; ++j1)
            for (int jn = 2; jn < lat.ln.count - 2; ++jn) {
                double y[3];
                lat.point(j0, j1, jn, y);
                double d0 = fd4_lattice(phase.psi, lat, 0, j0, j1, jn);
                double dn = fd4_lattice(phase.psi, lat, 2, j0, j1, jn);
                etap[0] = d0;
                if (spec.n == 2) etap[1] = fd4_lattice(phase.psi, lat, 1, j0, j1, jn);
                EigenFrame f = eigendecompose(spec, y, etap.data());
                worst = std::max(worst, std::abs(dn + f.lambda[phase.k]));
            }
    return worst;
}

double wedge_delta_from_gammas(const std::vector<double>& gammas) {
    if (gammas.size() < 2) return 0.25;
    double gap = 1e300;
    for (std::size_t a = 0; a < gammas.size(); ++a)
        for (std::size_t b = a + 1; b < gammas.size(); ++b)
            gap = std::min(gap, std::abs(gammas[a] - gammas[b]));
    return gap / 6.0;
}

PhaseRelationsReport phase_relations_check(const SystemSpec& spec,
                                           const std::vector<PhaseField>& phases,
                                           double wedge_delta) {
    PhaseRelationsReport rep;
    rep.wedge_delta = wedge_delta;
    rep.min_d0psi = 1e300;
    rep.min_separation_ratio = 1e300;
    const FieldLattice& lat = phases[0].lat;
    const int nn = lat.ln.count, n1 = lat.l1.count;

    double s_xx = 0, s_xy = 0, s_yy = 0, r_x = 0, r_y = 0;
    for (const PhaseField& ph : phases) {
        for (int j0 = 0; j0 < lat.l0.count; ++j0)
            for (int j1 = 0; j1 < n1; ++j1)
                for (int jn = 0; jn < nn; ++jn) {
                    double y[3];
                    lat.point(j0, j1, jn, y);
                    double y0 = y[0], yn = lat.ln.at(jn), y1v = (spec.n == 2) ? y[1] : 0.0;
                    std::size_t idx = lat.index(j0, j1, jn);
                    double phi = ph.phi[std::size_t(j1) * nn + jn];
                    double psi = ph.psi[idx];
                    double floor_den = lat.l0.h * lat.ln.h;
                    rep.max_abs_psi_minus_graph = std::max(
                        rep.max_abs_psi_minus_graph,
                        std::abs(psi - (y0 - phi)) /
                            std::max(std::abs(y0 * yn) + yn * yn, floor_den));
                    double omega = ph.omega[std::size_t(j0) * n1 + j1];
                    double rc = omega * yn + phi;
                    double bx = y0 * yn, by = yn * yn;
                    s_xx += bx * bx;
                    s_xy += bx * by;
                    s_yy += by * by;
                    r_x += bx * rc;
                    r_y += by * rc;
                    rep.max_rel_28kc = std::max(
                        rep.max_rel_28kc,
                        std::abs(rc) / std::max(std::abs(bx) + by, floor_den));
                    rep.min_d0psi =
                        std::min(rep.min_d0psi, ph.dpsi[idx * (spec.n + 1)]);
                    if (yn > 0.0) {
                        rep.max_phi_dev_rel = std::max(
                            rep.max_phi_dev_rel, std::abs(phi - ph.gamma_k * yn) / yn);
                        rep.max_omega_dev_rel =
                            std::max(rep.max_omega_dev_rel,
                                     std::abs(-omega * yn - ph.gamma_k * yn) / yn);
                    }
                    double dnphi = ph.dphi_at(y1v, yn, 1);
                    rep.max_dnphi_dev =
                        std::max(rep.max_dnphi_dev, std::abs(dnphi - ph.gamma_k));
                }
    }
    {
        double det = s_xx * s_yy - s_xy * s_xy;
        rep.fitted_quad_coeff = (det > 1e-30) ? (s_xx * r_y - s_xy * r_x) / det : 0.0;
    }

    for (std::size_t a = 0; a < phases.size(); ++a)
        for (std::size_t b = a + 1; b < phases.size(); ++b)
            for (int j1 = 0; j1 < n1; ++j1)
                for (int jn = 1; jn < nn; ++jn) {
                    double yn = lat.ln.at(jn);
                    double d = std::abs(phases[a].phi[std::size_t(j1) * nn + jn] -
                                        phases[b].phi[std::size_t(j1) * nn + jn]);
                    rep.min_separation_ratio = std::min(rep.min_separation_ratio, d / yn);
                }
    if (phases.size() < 2) rep.min_separation_ratio = 1e300;
    rep.separation_ok = rep.min_separation_ratio >= 5.0 * wedge_delta;
    rep.wedge_constants_ok = rep.max_dnphi_dev < wedge_delta / 3.0 &&
                             rep.max_phi_dev_rel < wedge_delta / 2.0 &&
                             rep.max_omega_dev_rel < wedge_delta / 2.0;

    // transversal intersections: the zero-level graphs y0 = phi_a and y0 = phi_b
    // may only meet within a cell of Delta = {y0 = yn = 0}
    double worst_cells = 0.0;
    for (std::size_t a = 0; a < phases.size(); ++a)
        for (std::size_t b = a + 1; b < phases.size(); ++b)
            for (int j1 = 0; j1 < n1; ++j1)
                for (int jn = 1; jn < nn; ++jn) {
                    double da = phases[a].phi[std::size_t(j1) * nn + jn];
                    double db = phases[b].phi[std::size_t(j1) * nn + jn];
                    if (std::abs(da - db) < lat.l0.h)
                        worst_cells = std::max(worst_cells, lat.ln.at(jn) / lat.ln.h);
                }
    rep.transversality_cells = worst_cells;
    return rep;
}

void dump_phase_csv(const PhaseField& phase, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw Error("cannot open " + path);
    std::fprintf(f, "# geopulse phase v1 k=%d gamma=%.17g\n", phase.k, phase.gamma_k);
    std::fprintf(f, "y0,y1,yn,psi,beta\n");
    const FieldLattice& lat = phase.lat;
    for (int j0 = 0; j0 < lat.l0.count; ++j0)
        for (int j1 = 0; j1 < lat.l1.count; ++j1)
            for (int jn = 0; jn < lat.ln.count; ++jn) {
                double y[3];
                lat.point(j0, j1, jn, y);
                std::size_t idx = lat.index(j0, j1, jn);
                std::fprintf(f, "%.17g,%.17g,%.17g,%.17g,%.17g\n", lat.l0.at(j0),
                             (lat.n == 2) ? lat.l1.at(j1) : 0.0, lat.ln.at(jn),
                             phase.psi[idx], phase.beta[idx]);
            }
    std::fclose(f);
}

}  // namespace geopulse
