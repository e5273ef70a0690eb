#include "geopulse/transport.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "geopulse/errors.hpp"

namespace geopulse {

namespace {

void pack_point(int n, double y0, double y1, double yn, double* y) {
    y[0] = y0;
    if (n == 2) {
        y[1] = y1;
        y[2] = yn;
    } else {
        y[1] = yn;
    }
}

}  // namespace

FrameFields build_frame_fields(const SystemSpec& spec,
                               const std::vector<PhaseField>& phases,
                               const FieldLattice& lat) {
    FrameFields ff;
    ff.lat = lat;
    ff.N = spec.N;
    ff.dim = spec.dim();
    const std::size_t nodes = lat.nodes();
    ff.R.assign(nodes * spec.N * spec.N, 0.0);
    ff.L.assign(nodes * spec.N * spec.N, 0.0);
    ff.LR.assign(nodes * spec.N * spec.N, 0.0);
    ff.c.assign(nodes * spec.N, 0.0);
    ff.d.assign(nodes * spec.N, 0.0);
    ff.e.assign(nodes * spec.N, 0.0);

    std::vector<double> etap(spec.n);
    std::vector<Eigen::MatrixXd> Bj(spec.n);
    auto frame_vec = [&](const PhaseField& ph, const double* y, int k, Eigen::VectorXd& r,
                         Eigen::VectorXd& l) {
        std::vector<double> dp(spec.n + 1);
        ph.dpsi_at(y, dp.data());
        EigenFrame f = eigendecompose(spec, y, dp.data());
        r = f.R.col(k);
        l = f.L.row(k).transpose();
    };

    const double steps[3] = {lat.l0.h * 0.5, lat.l1.h * 0.5, lat.ln.h * 0.5};
    for (int j0 = 0; j0 < lat.l0.count; ++j0)
        for (int j1 = 0; j1 < lat.l1.count; ++j1)
            for (int jn = 0; jn < lat.ln.count; ++jn) {
                double y[3];
                lat.point(j0, j1, jn, y);
                std::size_t node = lat.index(j0, j1, jn);
                for (int j = 0; j < spec.n; ++j) spec.eval_B(j, y, Bj[j]);

                for (int k = 0; k < spec.N; ++k) {
                    const PhaseField& ph = phases[k];
                    const double* dp = ph.dpsi.data() + node * (spec.n + 1);
                    for (int j = 0; j < spec.n; ++j) etap[j] = dp[j];
                    EigenFrame f = eigendecompose(spec, y, etap.data());
                    Eigen::VectorXd rk = f.R.col(k);
                    Eigen::VectorXd lk = f.L.row(k).transpose();
                    for (int cidx = 0; cidx < spec.N; ++cidx) {
                        ff.R[ff.vec_index(node, k) + cidx] = rk[cidx];
                        ff.L[ff.vec_index(node, k) + cidx] = lk[cidx];
                    }

                    // L(y, d_y) r_k by half-step centered differences of the frame
                    Eigen::VectorXd LRk = Eigen::VectorXd::Zero(spec.N);
                    for (int axis = 0; axis <= spec.n; ++axis) {
                        int phys = (spec.n == 1 && axis == 1) ? 2 : axis;  // step size slot
                        double h = steps[phys == 2 ? 2 : phys];
                        double yp[3], ym[3];
                        for (int q = 0; q <= spec.n; ++q) yp[q] = ym[q] = y[q];
                        yp[axis] += h;
                        ym[axis] -= h;
                        Eigen::VectorXd rp, rm, lp, lm;
                        frame_vec(ph, yp, k, rp, lp);
                        frame_vec(ph, ym, k, rm, lm);
                        Eigen::VectorXd dr = (rp - rm) / (2.0 * h);
                        if (axis == spec.n)
                            LRk += dr;  // B_n = I
                        else
                            LRk += Bj[axis] * dr;
                    }
                    for (int cidx = 0; cidx < spec.N; ++cidx)
                        ff.LR[ff.vec_index(node, k) + cidx] = LRk[cidx];
                    ff.c[node * spec.N + k] = lk.dot(LRk);
                }

                // d_k, e_k need l_k . r_{k1} across mode frames
                for (int k = 0; k < spec.N; ++k) {
                    double dk = 0.0, ek = 0.0;
                    for (int k1 = 0; k1 < spec.N; ++k1) {
                        double dot = 0.0;
                        for (int cidx = 0; cidx < spec.N; ++cidx)
                            dot += ff.L[ff.vec_index(node, k) + cidx] *
                                   ff.R[ff.vec_index(node, k1) + cidx];
                        if (!spec.f_lin.empty()) dk += spec.eval_flin(k1, k, y) * dot;
                        if (!spec.f_quad.empty()) ek += spec.eval_fquad(k1, k, k, y) * dot;
                    }
                    ff.d[node * spec.N + k] = dk;
                    ff.e[node * spec.N + k] = ek;
                }
            }
    return ff;
}

double FrameFields::field_at(const std::vector<double>& data, std::ptrdiff_t offset,
                             std::ptrdiff_t stride, const double* y) const {
    if (lat.n == 2)
        return interp3(lat.l0, lat.l1, lat.ln, data.data() + offset, stride, y[0], y[1],
                       y[2]);
    return interp2(lat.l0, lat.ln, data.data() + offset, stride, y[0], y[1]);
}

void FrameFields::r_at(int k, const double* y, double* out) const {
    for (int cidx = 0; cidx < N; ++cidx)
        out[cidx] = field_at(R, std::ptrdiff_t(k) * N + cidx, std::ptrdiff_t(N) * N, y);
}

void FrameFields::l_at(int k, const double* y, double* out) const {
    for (int cidx = 0; cidx < N; ++cidx)
        out[cidx] = field_at(L, std::ptrdiff_t(k) * N + cidx, std::ptrdiff_t(N) * N, y);
}

void FrameFields::lr_at(int k, const double* y, double* out) const {
    for (int cidx = 0; cidx < N; ++cidx)
        out[cidx] = field_at(LR, std::ptrdiff_t(k) * N + cidx, std::ptrdiff_t(N) * N, y);
}

double FrameFields::c_at(int k, const double* y) const { return field_at(c, k, N, y); }
double FrameFields::d_at(int k, const double* y) const { return field_at(d, k, N, y); }
double FrameFields::e_at(int k, const double* y) const { return field_at(e, k, N, y); }

double ProfileField::at(const double* y, double th) const {
    if (identically_zero || std::abs(th) >= 1.0) return 0.0;
    int nt = theta.count;
    int i0;
    double t, w[4];
    theta.locate(th, i0, t);
    detail::lagrange4_weights(t, w);
    double acc = 0.0;
    for (int a = 0; a < 4; ++a) {
        double s;
        if (lat.n == 2)
            s = interp3(lat.l0, lat.l1, lat.ln, sigma.data() + (i0 + a), nt, y[0], y[1],
                        y[2]);
        else
            s = interp2(lat.l0, lat.ln, sigma.data() + (i0 + a), nt, y[0], y[1]);
        acc += w[a] * s;
    }
    return acc;
}

double ProfileField::trace_at(double y0, double y1, double th) const {
    if (identically_zero || std::abs(th) >= 1.0) return 0.0;
    int nt = theta.count;
    int i0;
    double t, w[4];
    theta.locate(th, i0, t);
    detail::lagrange4_weights(t, w);
    double acc = 0.0;
    for (int a = 0; a < 4; ++a) {
        double s;
        if (lat.n == 2)
            s = interp2(lat.l0, lat.l1, trace.data() + (i0 + a), nt, y0, y1);
        else
            s = interp1(lat.l0, trace.data() + (i0 + a), nt, y0);
        acc += w[a] * s;
    }
    return acc;
}

namespace {

// boundary data for the traces at an arbitrary boundary point
struct TraceSolver {
    const SystemSpec& spec;
    const ModeSplit& modes;
    ScenarioMode scenario;
    int tau_mode;

    // fills sigma*_k for all modes at y' = (y0, y1); out has size N x nt
    void solve(double y0, double y1, const UniformAxis& theta, std::vector<double>& out,
               double* residual) const {
        const int N = spec.N, p = modes.p(), nt = theta.count;
        out.assign(std::size_t(N) * nt, 0.0);
        double yb[3];
        pack_point(spec.n, y0, y1, 0.0, yb);
        std::vector<double> etap(spec.n, 0.0);
        etap[0] = 1.0;
        EigenFrame f = eigendecompose(spec, yb, etap.data());
        Eigen::MatrixXd B = spec.eval_boundary_matrix(yb);
        Eigen::MatrixXd M(p, p);
        for (int cidx = 0; cidx < p; ++cidx)
            M.col(cidx) = B * f.R.col(modes.incoming[cidx]);
        Eigen::PartialPivLU<Eigen::MatrixXd> lu;
        if (p > 0) {
            lu.compute(M);
            if (std::abs(lu.determinant()) < 1e-12 * std::pow(M.norm() + 1e-300, p))
                throw SingularBoundaryMatrix("boundary matrix singular at y0 = " +
                                             std::to_string(y0));
        }
        Eigen::VectorXd rtau;
        if (scenario == ScenarioMode::Reflection) rtau = B * f.R.col(tau_mode);

        for (int it = 0; it < nt; ++it) {
            double th = theta.at(it);
            Eigen::VectorXd rhs;
            double tau_v = 0.0;
            if (scenario == ScenarioMode::Reflection) {
                tau_v = (std::abs(th) >= 1.0) ? 0.0 : spec.eval_tau(yb, th);
                out[std::size_t(tau_mode) * nt + it] = tau_v;
                rhs = -tau_v * rtau;
            } else {
                rhs = spec.eval_g(yb, th);
            }
            if (p == 0) continue;
            Eigen::VectorXd sol =
                rhs.isZero(0.0) ? Eigen::VectorXd::Zero(p) : Eigen::VectorXd(lu.solve(rhs));
            for (int cidx = 0; cidx < p; ++cidx)
                out[std::size_t(modes.incoming[cidx]) * nt + it] = sol[cidx];
            if (residual) {
                double r = (M * sol - rhs).cwiseAbs().maxCoeff();
                *residual = std::max(*residual, r);
            }
        }
    }
};

struct OdeCoeffs {
    double c, d, e;
};

// sigma RHS at a point for all theta members
class ProfileRhs {
  public:
    ProfileRhs(const SystemSpec& spec, const FrameFields& frames, int k)
        : spec_(spec), frames_(frames), k_(k) {}

    void operator()(const double* y, const std::vector<double>& s,
                    std::vector<double>& ds) const {
        double c = frames_.c_at(k_, y);
        double d = frames_.d_at(k_, y);
        if (!spec_.general_mode) {
            double e = frames_.e_at(k_, y);
            for (std::size_t i = 0; i < s.size(); ++i)
                ds[i] = (d - c) * s[i] + e * s[i] * s[i];
        } else {
            std::vector<double> r(spec_.N), l(spec_.N);
            frames_.r_at(k_, y, r.data());
            frames_.l_at(k_, y, l.data());
            Eigen::VectorXd rk = Eigen::Map<Eigen::VectorXd>(r.data(), spec_.N);
            for (std::size_t i = 0; i < s.size(); ++i) {
                Eigen::VectorXd fv = spec_.eval_fgen(y, s[i] * rk);
                double lf = 0.0;
                for (int cidx = 0; cidx < spec_.N; ++cidx) lf += l[cidx] * fv[cidx];
                ds[i] = -c * s[i] + lf;
            }
        }
    }

  private:
    const SystemSpec& spec_;
    const FrameFields& frames_;
    int k_;
};

}  // namespace

ProfileSet solve_profiles(const SystemSpec& spec, const std::vector<PhaseField>& phases,
                          const FrameFields& frames, const ModeSplit& modes,
                          ScenarioMode scenario, const RaySettings& settings,
                          const UniformAxis& theta, int tau_mode) {
    if (scenario == ScenarioMode::Reflection) {
        if (tau_mode < 0) {
            if (modes.outgoing.size() != 1)
                throw ConfigError("reflection needs tau_mode when outgoing count != 1");
            tau_mode = modes.outgoing[0];
        }
        if (!spec.has_tau) throw ConfigError("reflection scenario needs a tau trace");
    }

    if (settings.substeps % 2 != 0)
        throw ConfigError("ray substeps must be even for the profile integrator");

    ProfileSet out;
    out.tau_mode = (scenario == ScenarioMode::Reflection) ? tau_mode : -1;
    const FieldLattice& lat = phases[0].lat;
    const int nt = theta.count;
    TraceSolver tracer{spec, modes, scenario, tau_mode};

    // modes that carry a transport solve
    std::vector<bool> active(spec.N, false);
    for (int k : modes.incoming) active[k] = true;
    if (scenario == ScenarioMode::Reflection) active[tau_mode] = true;

    // boundary-lattice traces for all modes at once
    const int n0 = lat.l0.count, n1 = lat.l1.count, nn = lat.ln.count;
    std::vector<std::vector<double>> traces(
        spec.N, std::vector<double>(std::size_t(n0) * n1 * nt, 0.0));
    std::vector<double> buf;
    for (int j0 = 0; j0 < n0; ++j0)
        for (int j1 = 0; j1 < n1; ++j1) {
            tracer.solve(lat.l0.at(j0), lat.l1.at(j1), theta, buf, &out.trace_residual);
            for (int k = 0; k < spec.N; ++k)
                for (int it = 0; it < nt; ++it)
                    traces[k][(std::size_t(j0) * n1 + j1) * nt + it] =
                        buf[std::size_t(k) * nt + it];
        }

    for (int k = 0; k < spec.N; ++k) {
        ProfileField pf;
        pf.k = k;
        pf.lat = lat;
        pf.theta = theta;
        pf.trace = traces[k];
        if (!active[k]) {
            pf.identically_zero = true;  // outgoing profiles stay exactly zero
            out.sigma.push_back(std::move(pf));
            continue;
        }
        pf.identically_zero = false;
        pf.sigma.assign(lat.nodes() * nt, 0.0);

        RayFan fan = trace_rays(spec, k, lat, settings);
        const std::size_t nrays = std::size_t(fan.b0.count) * fan.b1.count;
        ProfileRhs rhs(spec, frames, k);

        // integrate sigma along each ray, storing lattice-station values
        std::vector<double> station(nrays * nn * nt, 0.0);
        std::vector<double> s(nt), k1(nt), k2(nt), k3(nt), k4(nt), tmp(nt);
        const int sub = settings.substeps;
        for (int ib0 = 0; ib0 < fan.b0.count; ++ib0)
            for (int ib1 = 0; ib1 < fan.b1.count; ++ib1) {
                std::size_t ray = fan.ray_index(ib0, ib1);
                tracer.solve(fan.b0.at(ib0), fan.b1.at(ib1), theta, buf, nullptr);
                bool all_zero = true;
                for (int it = 0; it < nt; ++it) {
                    s[it] = buf[std::size_t(k) * nt + it];
                    if (s[it] != 0.0) all_zero = false;
                }
                auto store = [&](int jn) {
                    std::copy(s.begin(), s.end(),
                              station.begin() + (ray * nn + jn) * nt);
                };
                store(0);
                if (all_zero) {
                    for (int jn = 1; jn < nn; ++jn) store(jn);  // zeros stay exact
                    continue;
                }
                // RK4 with step 2*hsub; midpoints from the stored trajectory
                auto ray_pt = [&](int is, double* y) {
                    double y0v = fan.Y0[ray * fan.nsub + is];
                    double y1v = (spec.n == 2) ? fan.Y1[ray * fan.nsub + is] : 0.0;
                    pack_point(spec.n, y0v, y1v, is * fan.hsub, y);
                };
                int jn = 0;
                for (int is = 0; is + 2 < fan.nsub; is += 2) {
                    double h = 2.0 * fan.hsub;
                    double ya[3], ym[3], yb[3];
                    ray_pt(is, ya);
                    ray_pt(is + 1, ym);
                    ray_pt(is + 2, yb);
                    rhs(ya, s, k1);
                    for (int it = 0; it < nt; ++it) tmp[it] = s[it] + 0.5 * h * k1[it];
                    rhs(ym, tmp, k2);
                    for (int it = 0; it < nt; ++it) tmp[it] = s[it] + 0.5 * h * k2[it];
                    rhs(ym, tmp, k3);
                    for (int it = 0; it < nt; ++it) tmp[it] = s[it] + h * k3[it];
                    rhs(yb, tmp, k4);
                    double worst = 0.0;
                    for (int it = 0; it < nt; ++it) {
                        s[it] += h / 6.0 * (k1[it] + 2 * k2[it] + 2 * k3[it] + k4[it]);
                        worst = std::max(worst, std::abs(s[it]));
                    }
                    if (worst > 1e6)
                        throw BlowupDetected(
                            "profile blow-up along mode " + std::to_string(k) +
                                " characteristic; shrink T",
                            fan.Y0[ray * fan.nsub + is]);
                    if ((is + 2) % sub == 0) {
                        ++jn;
                        store(jn);
                    }
                }
            }

        // step-halving error estimate on a sample of rays (coarse 2h vs h)
        if (k == (modes.incoming.empty() ? tau_mode : modes.incoming[0])) {
            for (std::size_t ray = 0; ray < nrays; ray += std::max<std::size_t>(1, nrays / 8)) {
                int ib0 = int(ray / fan.b1.count), ib1 = int(ray % fan.b1.count);
                tracer.solve(fan.b0.at(ib0), fan.b1.at(ib1), theta, buf, nullptr);
                std::vector<double> sc(nt), sf(nt);
                for (int it = 0; it < nt; ++it) sc[it] = sf[it] = buf[std::size_t(k) * nt + it];
                auto run = [&](int step, std::vector<double>& st) {
                    for (int is = 0; is + 2 * step < fan.nsub; is += 2 * step) {
                        double h = 2.0 * step * fan.hsub;
                        double ya[3], ym[3], yb[3];
                        auto pt = [&](int q, double* y) {
                            double y0v = fan.Y0[ray * fan.nsub + q];
                            double y1v = (spec.n == 2) ? fan.Y1[ray * fan.nsub + q] : 0.0;
                            pack_point(spec.n, y0v, y1v, q * fan.hsub, y);
                        };
                        pt(is, ya);
                        pt(is + step, ym);
                        pt(is + 2 * step, yb);
                        rhs(ya, st, k1);
                        for (int it = 0; it < nt; ++it) tmp[it] = st[it] + 0.5 * h * k1[it];
                        rhs(ym, tmp, k2);
                        for (int it = 0; it < nt; ++it) tmp[it] = st[it] + 0.5 * h * k2[it];
                        rhs(ym, tmp, k3);
                        for (int it = 0; it < nt; ++it) tmp[it] = st[it] + h * k3[it];
                        rhs(yb, tmp, k4);
                        for (int it = 0; it < nt; ++it)
                            st[it] += h / 6.0 * (k1[it] + 2 * k2[it] + 2 * k3[it] + k4[it]);
                    }
                };
                run(1, sf);
                run(2, sc);
                for (int it = 0; it < nt; ++it)
                    out.ode_error_estimate =
                        std::max(out.ode_error_estimate, std::abs(sf[it] - sc[it]) / 15.0);
            }
        }

        // lattice fill by slice inversion
        std::vector<double> slice_b0(fan.b0.count), slice_Y0(fan.b0.count);
        for (int jn = 0; jn < nn; ++jn) {
            int is = jn * sub;
            if (spec.n == 1) {
                for (int ib0 = 0; ib0 < fan.b0.count; ++ib0) {
                    slice_b0[ib0] = fan.b0.at(ib0);
                    slice_Y0[ib0] = fan.Y0[fan.ray_index(ib0, 0) * fan.nsub + is];
                }
                for (int j0 = 0; j0 < n0; ++j0) {
                    double ty0 = lat.l0.at(j0);
                    if (ty0 <= slice_Y0.front() || ty0 >= slice_Y0.back())
                        throw ConeExit("profile rays do not cover the lattice");
                    double b0s = invert_monotone(slice_b0, slice_Y0, ty0);
                    int i0;
                    double t, w[4];
                    fan.b0.locate(b0s, i0, t);
                    detail::lagrange4_weights(t, w);
                    double* dst = pf.sigma.data() + lat.index(j0, 0, jn) * nt;
                    for (int a = 0; a < 4; ++a) {
                        const double* src = station.data() + ((std::size_t(i0 + a)) * nn + jn) * nt;
                        for (int it = 0; it < nt; ++it) dst[it] += w[a] * src[it];
                    }
                }
            } else {
                for (int j0 = 0; j0 < n0; ++j0)
                    for (int j1 = 0; j1 < n1; ++j1) {
                        double c0 = pf.k >= 0 && jn > 0
                                        ? phases[k].psi[lat.index(j0, j1, jn)]
                                        : lat.l0.at(j0);
                        double c1 = lat.l1.at(j1);
                        if (!invert_slice_2d(fan, is, lat.l0.at(j0), lat.l1.at(j1), c0,
                                             c1))
                            throw ConeExit("profile slice inversion failed");
                        int i0, i1;
                        double t0, t1, w0[4], w1[4];
                        fan.b0.locate(c0, i0, t0);
                        fan.b1.locate(c1, i1, t1);
                        detail::lagrange4_weights(t0, w0);
                        detail::lagrange4_weights(t1, w1);
                        double* dst = pf.sigma.data() + lat.index(j0, j1, jn) * nt;
                        for (int a = 0; a < 4; ++a)
                            for (int b = 0; b < 4; ++b) {
                                std::size_t ray = fan.ray_index(i0 + a, i1 + b);
                                const double* src =
                                    station.data() + (ray * nn + jn) * nt;
                                double w = w0[a] * w1[b];
                                for (int it = 0; it < nt; ++it) dst[it] += w * src[it];
                            }
                    }
            }
        }
        out.sigma.push_back(std::move(pf));
    }
    return out;
}

void LeadingOrder::eval_theta(const double* y, const double* theta, double* out) const {
    const int N = spec->N;
    std::vector<double> r(N);
    for (int cidx = 0; cidx < N; ++cidx) out[cidx] = 0.0;
    for (int k = 0; k < N; ++k) {
        const ProfileField& pf = profiles->sigma[k];
        if (pf.identically_zero) continue;
        double s = pf.at(y, theta[k]);
        if (s == 0.0) continue;
        frames->r_at(k, y, r.data());
        for (int cidx = 0; cidx < N; ++cidx) out[cidx] += s * r[cidx];
    }
}

void LeadingOrder::eval_scaled(const double* y, double eps, double* out) const {
    const int N = spec->N;
    std::vector<double> th(N);
    for (int k = 0; k < N; ++k)
        th[k] = profiles->sigma[k].identically_zero ? 2.0
                                                    : (*phases)[k].psi_at(y) / eps;
    eval_theta(y, th.data(), out);
}

double LeadingOrder::max_abs_theta0() const {
    double m = 0.0;
    for (const auto& pf : profiles->sigma)
        if (!pf.identically_zero)
            for (double v : pf.sigma) m = std::max(m, std::abs(v));
    return m;
}

double polarized_residual(const SystemSpec& spec,
                          const std::vector<PhaseField>& /*phases*/,
                          const FrameFields& frames, const ProfileSet& profiles) {
    const FieldLattice& lat = frames.lat;
    double worst = 0.0;
    std::vector<Eigen::MatrixXd> Bj(spec.n);
    for (int k = 0; k < spec.N; ++k) {
        const ProfileField& pf = profiles.sigma[k];
        if (pf.identically_zero) continue;
        const int nt = pf.theta.count;
        const int j1lo = (spec.n == 2) ? 1 : 0, j1hi = (spec.n == 2) ? lat.l1.count - 1 : 1;
        for (int j0 = 1; j0 + 1 < lat.l0.count; ++j0)
            for (int j1 = j1lo; j1 < j1hi; ++j1)
                for (int jn = 1; jn + 1 < lat.ln.count; ++jn) {
                    double y[3];
                    lat.point(j0, j1, jn, y);
                    std::size_t node = lat.index(j0, j1, jn);
                    for (int j = 0; j < spec.n; ++j) spec.eval_B(j, y, Bj[j]);
                    // transport coefficients a_j = l_k B_j r_k at the node
                    Eigen::Map<const Eigen::VectorXd> rk(
                        frames.R.data() + frames.vec_index(node, k), spec.N);
                    Eigen::Map<const Eigen::VectorXd> lk(
                        frames.L.data() + frames.vec_index(node, k), spec.N);
                    double a0 = lk.dot(Bj[0] * rk);
                    double a1 = (spec.n == 2) ? lk.dot(Bj[1] * rk) : 0.0;
                    double c = frames.c[node * spec.N + k];
                    double d = frames.d[node * spec.N + k];
                    double e = frames.e[node * spec.N + k];
                    for (int it = 0; it < nt; ++it) {
                        auto sg = [&](int a, int b, int cc) {
                            return pf.sigma[lat.index(a, b, cc) * nt + it];
                        };
                        double s = sg(j0, j1, jn);
                        double d0 = (sg(j0 + 1, j1, jn) - sg(j0 - 1, j1, jn)) / (2 * lat.l0.h);
                        double dn = (sg(j0, j1, jn + 1) - sg(j0, j1, jn - 1)) / (2 * lat.ln.h);
                        double d1 = (spec.n == 2) ? (sg(j0, j1 + 1, jn) - sg(j0, j1 - 1, jn)) /
                                                        (2 * lat.l1.h)
                                                  : 0.0;
                        double nonlin;
                        if (!spec.general_mode) {
                            nonlin = d * s + e * s * s;
                        } else {
                            Eigen::VectorXd u = s * rk;
                            Eigen::VectorXd fv = spec.eval_fgen(y, u);
                            nonlin = lk.dot(fv);
                        }
                        double res = dn + a0 * d0 + a1 * d1 + c * s - nonlin;
                        worst = std::max(worst, std::abs(res));
                    }
                }
    }
    return worst;
}

double xk_tangency_residual(const SystemSpec& spec, const std::vector<PhaseField>& phases,
                            const FrameFields& frames) {
    const FieldLattice& lat = frames.lat;
    double worst = 0.0;
    std::vector<Eigen::MatrixXd> Bj(spec.n);
    for (int j0 = 0; j0 < lat.l0.count; ++j0)
        for (int j1 = 0; j1 < lat.l1.count; ++j1)
            for (int jn = 0; jn < lat.ln.count; ++jn) {
                double y[3];
                lat.point(j0, j1, jn, y);
                std::size_t node = lat.index(j0, j1, jn);
                for (int j = 0; j < spec.n; ++j) spec.eval_B(j, y, Bj[j]);
                for (int k = 0; k < spec.N; ++k) {
                    Eigen::Map<const Eigen::VectorXd> rk(
                        frames.R.data() + frames.vec_index(node, k), spec.N);
                    Eigen::Map<const Eigen::VectorXd> lk(
                        frames.L.data() + frames.vec_index(node, k), spec.N);
                    const double* dp = phases[k].dpsi.data() + node * (spec.n + 1);
                    double acc = dp[spec.n];
                    acc += lk.dot(Bj[0] * rk) * dp[0];
                    if (spec.n == 2) acc += lk.dot(Bj[1] * rk) * dp[1];
                    worst = std::max(worst, std::abs(acc));
                }
            }
    return worst;
}

double boundary_identity_residual(const SystemSpec& spec, const FrameFields& frames,
                                  const ProfileSet& profiles, ScenarioMode scenario) {
    const FieldLattice& lat = frames.lat;
    const UniformAxis& theta = profiles.sigma[0].theta;
    double worst = 0.0;
    for (int j0 = 0; j0 < lat.l0.count; ++j0)
        for (int j1 = 0; j1 < lat.l1.count; ++j1) {
            double y[3];
            lat.point(j0, j1, 0, y);
            Eigen::MatrixXd B = spec.eval_boundary_matrix(y);
            std::size_t node = lat.index(j0, j1, 0);
            std::size_t bnode = std::size_t(j0) * lat.l1.count + j1;
            for (int it = 0; it < theta.count; ++it) {
                Eigen::VectorXd u0 = Eigen::VectorXd::Zero(spec.N);
                for (int k = 0; k < spec.N; ++k) {
                    const ProfileField& pf = profiles.sigma[k];
                    double s = pf.trace.empty() ? 0.0 : pf.trace[bnode * theta.count + it];
                    if (s == 0.0) continue;
                    Eigen::Map<const Eigen::VectorXd> rk(
                        frames.R.data() + frames.vec_index(node, k), spec.N);
                    u0 += s * rk;
                }
                Eigen::VectorXd lhs = B * u0;
                if (scenario != ScenarioMode::Reflection) {
                    Eigen::VectorXd gv = spec.eval_g(y, theta.at(it));
                    lhs -= gv;
                }
                if (lhs.size() > 0) worst = std::max(worst, lhs.cwiseAbs().maxCoeff());
            }
        }
    return worst;
}

double integrate_riccati_constant(double c, double d, double e, double sigma0, double yn,
                                  int steps) {
    double s = sigma0;
    double h = yn / steps;
    auto f = [&](double v) { return (d - c) * v + e * v * v; };
    for (int i = 0; i < steps; ++i) {
        double k1 = f(s);
        double k2 = f(s + 0.5 * h * k1);
        double k3 = f(s + 0.5 * h * k2);
        double k4 = f(s + h * k3);
        s += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
    }
    return s;
}

double reflection_sn_correction(const SystemSpec& spec,
                                const std::vector<PhaseField>& /*phases*/,
                                const FrameFields& frames, const ProfileSet& profiles,
                                const RaySettings& settings) {
    const int k = profiles.tau_mode;
    if (k < 0) return 0.0;
    const FieldLattice& lat = frames.lat;
    const ProfileField& tau = profiles.sigma[k];
    RayFan fan = trace_rays(spec, k, lat, settings);
    const int nt = tau.theta.count;
    double worst = 0.0;
    // jointly integrate tau (fresh) and the correction s driven by the
    // deviation of the stored tau from an exact characteristic solution
    for (int ib0 = 0; ib0 < fan.b0.count; ib0 += 4) {
        std::size_t ray = fan.ray_index(ib0, 0);
        double yb[3];
        pack_point(spec.n, fan.b0.at(ib0), 0.0, 0.0, yb);
        std::vector<double> t(nt), sN(nt, 0.0);
        for (int it = 0; it < nt; ++it) {
            double th = tau.theta.at(it);
            t[it] = (std::abs(th) >= 1.0) ? 0.0 : spec.eval_tau(yb, th);
        }
        auto rhs_pair = [&](const double* y, const std::vector<double>& tv,
                            const std::vector<double>& sv, std::vector<double>& dt,
                            std::vector<double>& ds) {
            double c = frames.c_at(k, y);
            double d = frames.d_at(k, y);
            double e = frames.e_at(k, y);
            for (int it = 0; it < nt; ++it) {
                double that = tau.at(y, tau.theta.at(it));
                dt[it] = (d - c) * tv[it] + e * tv[it] * tv[it];
                double forcing = ((d - c) * that + e * that * that) - dt[it];
                ds[it] = (d - c) * sv[it] + e * (sv[it] * sv[it] + 2 * tv[it] * sv[it]) +
                         forcing;
            }
        };
        std::vector<double> dt1(nt), ds1(nt), dt2(nt), ds2(nt), dt3(nt), ds3(nt),
            dt4(nt), ds4(nt), tt(nt), ss(nt);
        for (int is = 0; is + 2 < fan.nsub; is += 2) {
            double h = 2.0 * fan.hsub;
            double ya[3], ym[3], yb2[3];
            auto pt = [&](int q, double* y) {
                pack_point(spec.n, fan.Y0[ray * fan.nsub + q], 0.0, q * fan.hsub, y);
            };
            pt(is, ya);
            pt(is + 1, ym);
            pt(is + 2, yb2);
            rhs_pair(ya, t, sN, dt1, ds1);
            for (int it = 0; it < nt; ++it) {
                tt[it] = t[it] + 0.5 * h * dt1[it];
                ss[it] = sN[it] + 0.5 * h * ds1[it];
            }
            rhs_pair(ym, tt, ss, dt2, ds2);
            for (int it = 0; it < nt; ++it) {
                tt[it] = t[it] + 0.5 * h * dt2[it];
                ss[it] = sN[it] + 0.5 * h * ds2[it];
            }
            rhs_pair(ym, tt, ss, dt3, ds3);
            for (int it = 0; it < nt; ++it) {
                tt[it] = t[it] + h * dt3[it];
                ss[it] = sN[it] + h * ds3[it];
            }
            rhs_pair(yb2, tt, ss, dt4, ds4);
            for (int it = 0; it < nt; ++it) {
                t[it] += h / 6.0 * (dt1[it] + 2 * dt2[it] + 2 * dt3[it] + dt4[it]);
                sN[it] += h / 6.0 * (ds1[it] + 2 * ds2[it] + 2 * ds3[it] + ds4[it]);
                worst = std::max(worst, std::abs(sN[it]));
            }
        }
    }
    return worst;
}

void dump_profile_csv(const ProfileField& pf, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw Error("cannot open " + path);
    std::fprintf(f, "# geopulse profile v1 k=%d\n", pf.k);
    std::fprintf(f, "y0,y1,yn,theta,sigma\n");
    if (!pf.identically_zero) {
        const FieldLattice& lat = pf.lat;
        for (int j0 = 0; j0 < lat.l0.count; ++j0)
            for (int j1 = 0; j1 < lat.l1.count; ++j1)
                for (int jn = 0; jn < lat.ln.count; ++jn)
                    for (int it = 0; it < pf.theta.count; ++it)
                        std::fprintf(f, "%.17g,%.17g,%.17g,%.17g,%.17g\n", lat.l0.at(j0),
                                     (lat.n == 2) ? lat.l1.at(j1) : 0.0, lat.ln.at(jn),
                                     pf.theta.at(it),
                                     pf.sigma[lat.index(j0, j1, jn) * pf.theta.count + it]);
    }
    std::fclose(f);
}

}  // namespace geopulse
