#include "geopulse/corrector.hpp"

#include <algorithm>
#include <cmath>

#include "geopulse/errors.hpp"
#include "geopulse/quadrature.hpp"

namespace geopulse {

double chi_cutoff(double s) { return smooth_step(2.0 - std::abs(s)); }

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

struct Interval {
    double lo, hi;
};

// merge overlapping intervals in place (sorted by lo)
void merge_intervals(std::vector<Interval>& iv) {
    std::sort(iv.begin(), iv.end(), [](const Interval& a, const Interval& b) {
        return a.lo < b.lo;
    });
    std::size_t out = 0;
    for (std::size_t i = 0; i < iv.size(); ++i) {
        if (out > 0 && iv[i].lo <= iv[out - 1].hi + 1e-12)
            iv[out - 1].hi = std::max(iv[out - 1].hi, iv[i].hi);
        else
            iv[out++] = iv[i];
    }
    iv.resize(out);
}

}  // namespace

Correctors::Correctors(const SystemSpec& spec, const std::vector<PhaseField>& phases,
                       const FrameFields& frames, const ProfileSet& profiles)
    : spec_(spec), phases_(phases), frames_(frames), profiles_(profiles) {}

void Correctors::build(const UniformAxis& theta_override) {
    const FieldLattice& lat = frames_.lat;
    set_.lat = lat;
    set_.N = spec_.N;
    set_.theta = (theta_override.count > 0) ? theta_override
                                            : profiles_.sigma[0].theta;
    const int N = spec_.N, nt = set_.theta.count;
    const std::size_t nodes = lat.nodes();

    // partial inverses on the lattice
    set_.Q.assign(nodes * N * N * N, 0.0);
    std::vector<double> etap(spec_.n);
    for (int j0 = 0; j0 < lat.l0.count; ++j0)
        for (int j1 = 0; j1 < lat.l1.count; ++j1)
            for (int jn = 0; jn < lat.ln.count; ++jn) {
                double y[3];
                lat.point(j0, j1, jn, y);
                std::size_t node = lat.index(j0, j1, jn);
                for (int k = 0; k < N; ++k) {
                    const double* dp = phases_[k].dpsi.data() + node * (spec_.n + 1);
                    for (int j = 0; j < spec_.n; ++j) etap[j] = dp[j];
                    EigenFrame f = eigendecompose(spec_, y, etap.data());
                    Eigen::MatrixXd Qk = Eigen::MatrixXd::Zero(N, N);
                    for (int j = 0; j < N; ++j) {
                        if (j == k) continue;
                        double gap = f.lambda[j] - f.lambda[k];
                        Qk += (f.R.col(j) * f.L.row(j)) / gap;
                    }
                    double* dst = set_.Q.data() + (node * N + k) * N * N;
                    for (int r = 0; r < N; ++r)
                        for (int c = 0; c < N; ++c) dst[r * N + c] = Qk(r, c);
                }
            }

    // V_k = -Q_k cumulative(H1k) over theta
    set_.V.assign(N, {});
    set_.v_zero.assign(N, true);
    std::vector<double> h1((std::size_t)nt * N), qrow(N * N), vrow((std::size_t)nt * N);
    for (int k = 0; k < N; ++k) {
        if (profiles_.sigma[k].identically_zero) continue;
        set_.v_zero[k] = false;
        set_.V[k].assign(nodes * nt * N, 0.0);
        const double dth = set_.theta.h;
        for (int j0 = 0; j0 < lat.l0.count; ++j0)
            for (int j1 = 0; j1 < lat.l1.count; ++j1)
                for (int jn = 0; jn < lat.ln.count; ++jn) {
                    std::size_t node = lat.index(j0, j1, jn);
                    for (int it = 0; it < nt; ++it)
                        h1_row(k, j0, j1, jn, it, h1.data() + std::size_t(it) * N);
                    const double* Qk = set_.Q.data() + (node * N + k) * N * N;
                    // integrand rows -Q_k H1k
                    for (int it = 0; it < nt; ++it) {
                        const double* src = h1.data() + std::size_t(it) * N;
                        double* dst = vrow.data() + std::size_t(it) * N;
                        for (int r = 0; r < N; ++r) {
                            double acc = 0.0;
                            for (int c = 0; c < N; ++c) acc += Qk[r * N + c] * src[c];
                            dst[r] = -acc;
                        }
                    }
                    // cumulative integral with exact zero on silent cells
                    double* out = set_.V[k].data() + node * nt * N;
                    for (int c = 0; c < N; ++c) out[c] = 0.0;
                    for (int it = 0; it + 1 < nt; ++it) {
                        const double* f0 = vrow.data() + std::size_t(it) * N;
                        const double* f1 = vrow.data() + std::size_t(it + 1) * N;
                        const double* f2 =
                            (it + 2 < nt) ? vrow.data() + std::size_t(it + 2) * N
                                          : vrow.data() + std::size_t(it - 1) * N;
                        double* dst = out + std::size_t(it + 1) * N;
                        const double* prev = out + std::size_t(it) * N;
                        for (int c = 0; c < N; ++c) {
                            double inc;
                            if (f0[c] == 0.0 && f1[c] == 0.0)
                                inc = 0.0;
                            else if (it + 2 < nt)
                                inc = dth / 12.0 * (5 * f0[c] + 8 * f1[c] - f2[c]);
                            else
                                inc = dth / 12.0 * (-f2[c] + 8 * f0[c] + 5 * f1[c]);
                            dst[c] = prev[c] + inc;
                        }
                    }
                }
    }
}

void CorrectorSet::Q_at(int k, const double* y, double* out) const {
    const int NN = N * N;
    for (int e = 0; e < NN; ++e) {
        if (lat.n == 2)
            out[e] = interp3(lat.l0, lat.l1, lat.ln, Q.data() + std::size_t(k) * NN + e,
                             std::ptrdiff_t(N) * NN, y[0], y[1], y[2]);
        else
            out[e] = interp2(lat.l0, lat.ln, Q.data() + std::size_t(k) * NN + e,
                             std::ptrdiff_t(N) * NN, y[0], y[1]);
    }
}

void CorrectorSet::V_at(int k, const double* y, double th, double* out) const {
    for (int c = 0; c < N; ++c) out[c] = 0.0;
    if (v_zero[k]) return;
    if (th <= theta.x0) return;  // exact zero left of the lattice
    const int nt = theta.count;
    double thc = std::min(th, theta.back());
    int i0;
    double t, w[4];
    theta.locate(thc, i0, t);
    detail::lagrange4_weights(t, w);
    for (int a = 0; a < 4; ++a) {
        for (int c = 0; c < N; ++c) {
            std::ptrdiff_t off = std::ptrdiff_t(i0 + a) * N + c;
            double v;
            if (lat.n == 2)
                v = interp3(lat.l0, lat.l1, lat.ln, V[k].data() + off,
                            std::ptrdiff_t(nt) * N, y[0], y[1], y[2]);
            else
                v = interp2(lat.l0, lat.ln, V[k].data() + off, std::ptrdiff_t(nt) * N,
                            y[0], y[1]);
            out[c] += w[a] * v;
        }
    }
}

void CorrectorSet::dV_at(int k, const double* y, double th, double* out) const {
    for (int c = 0; c < N; ++c) out[c] = 0.0;
    if (v_zero[k] || th <= theta.x0 || th >= theta.back()) return;
    const int nt = theta.count;
    int i0;
    double t, w[4];
    theta.locate(th, i0, t);
    // derivative of the cubic Lagrange weights
    const double t1 = t - 1.0, t2 = t - 2.0, t3 = t - 3.0;
    w[0] = -(t1 * t2 + t1 * t3 + t2 * t3) / 6.0;
    w[1] = (t * t2 + t * t3 + t2 * t3) / 2.0;
    w[2] = -(t * t1 + t * t3 + t1 * t3) / 2.0;
    w[3] = (t * t1 + t * t2 + t1 * t2) / 6.0;
    for (int a = 0; a < 4; ++a) {
        for (int c = 0; c < N; ++c) {
            std::ptrdiff_t off = std::ptrdiff_t(i0 + a) * N + c;
            double v;
            if (lat.n == 2)
                v = interp3(lat.l0, lat.l1, lat.ln, V[k].data() + off,
                            std::ptrdiff_t(nt) * N, y[0], y[1], y[2]);
            else
                v = interp2(lat.l0, lat.ln, V[k].data() + off, std::ptrdiff_t(nt) * N,
                            y[0], y[1]);
            out[c] += w[a] * v / theta.h;
        }
    }
}

void Correctors::h1_row(int k, std::size_t j0, std::size_t j1, std::size_t jn, int it,
                        double* out, const std::vector<Eigen::MatrixXd>* Bj_pre) const {
    const FieldLattice& lat = frames_.lat;
    const ProfileField& pf = profiles_.sigma[k];
    const int N = spec_.N, nt = pf.theta.count;
    double y[3];
    lat.point(int(j0), int(j1), int(jn), y);
    std::size_t node = lat.index(int(j0), int(j1), int(jn));

    // theta values of this corrector row may differ from the profile lattice;
    // they coincide by construction (same axis) in the default build
    double th = set_.theta.count ? set_.theta.at(it) : pf.theta.at(it);
    auto sg = [&](std::size_t a, std::size_t b, std::size_t c) {
        if (pf.identically_zero) return 0.0;
        if (set_.theta.count == nt && set_.theta.h == pf.theta.h &&
            set_.theta.x0 == pf.theta.x0)
            return pf.sigma[lat.index(int(a), int(b), int(c)) * nt + it];
        double yy[3];
        lat.point(int(a), int(b), int(c), yy);
        return pf.at(yy, th);
    };
    double s = sg(j0, j1, jn);
    // centered/one-sided first differences on the lattice
    auto fd = [&](int axis) {
        auto val = [&](int d) {
            std::size_t a = j0 + ((axis == 0) ? d : 0);
            std::size_t b = j1 + ((axis == 1) ? d : 0);
            std::size_t c = jn + ((axis == 2) ? d : 0);
            return sg(a, b, c);
        };
        int count = (axis == 0) ? lat.l0.count : (axis == 1 ? lat.l1.count : lat.ln.count);
        double h = (axis == 0) ? lat.l0.h : (axis == 1 ? lat.l1.h : lat.ln.h);
        std::size_t idx = (axis == 0) ? j0 : (axis == 1 ? j1 : jn);
        if (count < 3) return 0.0;
        if (idx == 0) return (-3.0 * val(0) + 4.0 * val(1) - val(2)) / (2 * h);
        if (idx + 1 == std::size_t(count))
            return (3.0 * val(0) - 4.0 * val(-1) + val(-2)) / (2 * h);
        return (val(1) - val(-1)) / (2 * h);
    };

    Eigen::Map<const Eigen::VectorXd> rk(frames_.R.data() + frames_.vec_index(node, k), N);
    Eigen::Map<const Eigen::VectorXd> lk(frames_.L.data() + frames_.vec_index(node, k), N);
    Eigen::Map<const Eigen::VectorXd> LRk(frames_.LR.data() + frames_.vec_index(node, k),
                                          N);
    // (L(y, d_y) sigma_k) r_k = sum_j (d_j sigma) B_j r_k + (d_n sigma) r_k
    Eigen::VectorXd v = fd(2) * rk;
    std::vector<Eigen::MatrixXd> Bj_local;
    const std::vector<Eigen::MatrixXd>* Bj = Bj_pre;
    if (!Bj) {
        Bj_local.resize(spec_.n);
        for (int j = 0; j < spec_.n; ++j) spec_.eval_B(j, y, Bj_local[j]);
        Bj = &Bj_local;
    }
    v += fd(0) * ((*Bj)[0] * rk);
    if (spec_.n == 2) v += fd(1) * ((*Bj)[1] * rk);
    v += s * LRk;
    // subtract the single-phase nonlinearity f^{l,k} + f^{q,k}
    if (!spec_.general_mode) {
        for (int k1 = 0; k1 < N; ++k1) {
            double coef = 0.0;
            if (!spec_.f_lin.empty()) coef += spec_.eval_flin(k1, k, y) * s;
            if (!spec_.f_quad.empty()) coef += spec_.eval_fquad(k1, k, k, y) * s * s;
            if (coef != 0.0)
                v -= coef * Eigen::Map<const Eigen::VectorXd>(
                                frames_.R.data() + frames_.vec_index(node, k1), N);
        }
    } else if (s != 0.0) {
        v -= spec_.eval_fgen(y, s * rk);
    }
    // project off the polarized part
    double lv = lk.dot(v);
    for (int c = 0; c < N; ++c) out[c] = v[c] - lv * rk[c];
}

void Correctors::H1_at(int k, const double* y, double th, double* out) const {
    const FieldLattice& lat = frames_.lat;
    const ProfileField& pf = profiles_.sigma[k];
    const int N = spec_.N;
    for (int c = 0; c < N; ++c) out[c] = 0.0;
    if (pf.identically_zero) return;
    std::vector<double> rk(N), lk(N), LRk(N);
    frames_.r_at(k, y, rk.data());
    frames_.l_at(k, y, lk.data());
    frames_.lr_at(k, y, LRk.data());
    double s = pf.at(y, th);
    auto sfd = [&](int axis) {
        double h = (axis == 0) ? lat.l0.h : (axis == 1 ? lat.l1.h : lat.ln.h);
        h *= 0.5;
        double yp[3] = {y[0], y[1], (spec_.n == 2) ? y[2] : 0.0};
        double ym[3] = {y[0], y[1], (spec_.n == 2) ? y[2] : 0.0};
        int slot = (spec_.n == 1 && axis == 2) ? 1 : axis;
        yp[slot] += h;
        ym[slot] -= h;
        return (pf.at(yp, th) - pf.at(ym, th)) / (2 * h);
    };
    Eigen::VectorXd rkv = Eigen::Map<Eigen::VectorXd>(rk.data(), N);
    Eigen::VectorXd v = sfd(2) * rkv;
    Eigen::MatrixXd Bj;
    spec_.eval_B(0, y, Bj);
    v += sfd(0) * (Bj * rkv);
    if (spec_.n == 2) {
        spec_.eval_B(1, y, Bj);
        v += sfd(1) * (Bj * rkv);
    }
    v += s * Eigen::Map<Eigen::VectorXd>(LRk.data(), N);
    if (!spec_.general_mode) {
        std::vector<double> rk1(N);
        for (int k1 = 0; k1 < N; ++k1) {
            double coef = 0.0;
            if (!spec_.f_lin.empty()) coef += spec_.eval_flin(k1, k, y) * s;
            if (!spec_.f_quad.empty()) coef += spec_.eval_fquad(k1, k, k, y) * s * s;
            if (coef != 0.0) {
                frames_.r_at(k1, y, rk1.data());
                for (int c = 0; c < N; ++c) v[c] -= coef * rk1[c];
            }
        }
    } else if (s != 0.0) {
        v -= spec_.eval_fgen(y, s * rkv);
    }
    double lv = 0.0;
    for (int c = 0; c < N; ++c) lv += lk[c] * v[c];
    for (int c = 0; c < N; ++c) out[c] = v[c] - lv * rk[c];
}

// per-point cache for the interaction combine: quadratic coefficients and the
// frame vectors r_{k1}(y) are s-independent inside the t_k quadrature
struct Correctors::H2Workspace {
    int N = 0;
    bool general = false;
    const SystemSpec* spec = nullptr;
    double y[3] = {0, 0, 0};
    std::vector<double> fq;    // [k1*N*N + m*N + p], m < p
    std::vector<double> rmat;  // [m*N + c]

    void init(const Correctors& corr, const double* yy) {
        const SystemSpec& sp = corr.spec_;
        N = sp.N;
        general = sp.general_mode;
        spec = &sp;
        for (int j = 0; j <= sp.n; ++j) y[j] = yy[j];
        rmat.resize(std::size_t(N) * N);
        for (int m = 0; m < N; ++m) corr.frames_.r_at(m, yy, rmat.data() + m * N);
        if (!general) {
            fq.assign(std::size_t(N) * N * N, 0.0);
            if (!sp.f_quad.empty())
                for (int k1 = 0; k1 < N; ++k1)
                    for (int m = 0; m < N; ++m)
                        for (int p = m + 1; p < N; ++p)
                            fq[(std::size_t(k1) * N + m) * N + p] =
                                sp.eval_fquad(k1, m, p, yy);
        }
    }

    void combine(const double* sig, double* out) const {
        for (int c = 0; c < N; ++c) out[c] = 0.0;
        int active = 0;
        for (int m = 0; m < N; ++m)
            if (sig[m] != 0.0) ++active;
        if (active <= 1) return;  // vanishing diagonal, exactly
        if (!general) {
            for (int k1 = 0; k1 < N; ++k1) {
                double coef = 0.0;
                for (int m = 0; m < N; ++m) {
                    if (sig[m] == 0.0) continue;
                    for (int p = m + 1; p < N; ++p) {
                        if (sig[p] == 0.0) continue;
                        coef += fq[(std::size_t(k1) * N + m) * N + p] * sig[m] * sig[p];
                    }
                }
                if (coef != 0.0)
                    for (int c = 0; c < N; ++c) out[c] -= coef * rmat[k1 * N + c];
            }
        } else {
            Eigen::VectorXd u = Eigen::VectorXd::Zero(N);
            Eigen::VectorXd acc = Eigen::VectorXd::Zero(N);
            for (int m = 0; m < N; ++m) {
                if (sig[m] == 0.0) continue;
                Eigen::Map<const Eigen::VectorXd> rmv(rmat.data() + m * N, N);
                u += sig[m] * rmv;
                acc += spec->eval_fgen(y, sig[m] * rmv);
            }
            acc -= spec->eval_fgen(y, u);
            for (int c = 0; c < N; ++c) out[c] = acc[c];
        }
    }
};

void Correctors::h2_combine(const double* y, const double* sig, double* out) const {
    H2Workspace ws;
    ws.init(*this, y);
    ws.combine(sig, out);
}

void Correctors::H2_at(const double* y, const double* theta, double* out) const {
    const int N = spec_.N;
    std::vector<double> sig(N);
    for (int m = 0; m < N; ++m) sig[m] = profiles_.sigma[m].at(y, theta[m]);
    h2_combine(y, sig.data(), out);
}

void Correctors::calH2_at(const double* y, double th0, double xin, double* out) const {
    const int N = spec_.N;
    std::vector<double> sig(N);
    double y0 = y[0], y1 = (spec_.n == 2) ? y[1] : 0.0;
    for (int m = 0; m < N; ++m)
        sig[m] = profiles_.sigma[m].at(y, th0 + phases_[m].omega_at(y0, y1) * xin);
    h2_combine(y, sig.data(), out);
}

double Correctors::calH2k_at(int k, const double* y, double th0, double xin) const {
    const int N = spec_.N;
    std::vector<double> h2(N), lkb(N);
    calH2_at(y, th0, xin, h2.data());
    double yb[3];
    pack_point(spec_.n, y[0], (spec_.n == 2) ? y[1] : 0.0, 0.0, yb);
    frames_.l_at(k, yb, lkb.data());
    double acc = 0.0;
    for (int c = 0; c < N; ++c) acc += lkb[c] * h2[c];
    return acc;
}

double Correctors::tk_at(int k, const double* y, double th0, double xin,
                         double tol) const {
    const int N = spec_.N;
    double y0 = y[0], y1 = (spec_.n == 2) ? y[1] : 0.0;
    std::vector<double> omega(N);
    for (int m = 0; m < N; ++m) omega[m] = phases_[m].omega_at(y0, y1);
    const double zeta = th0 + omega[k] * xin;

    // s-support: union over active mode pairs of K_m \cap K_j, where
    // K_m = {|zeta + s(omega_m - omega_k)| <= 1} and K_k = all s if |zeta|<1
    auto mode_interval = [&](int m, Interval& iv) -> bool {
        if (profiles_.sigma[m].identically_zero) return false;
        if (m == k) {
            if (std::abs(zeta) >= 1.0) return false;
            iv = {-1e30, 1e30};
            return true;
        }
        double dw = omega[m] - omega[k];
        if (std::abs(dw) < 1e-9)
            throw UnboundedSupport("omega gap vanished between modes " +
                                   std::to_string(m) + " and " + std::to_string(k));
        double a = (-1.0 - zeta) / dw, b = (1.0 - zeta) / dw;
        iv = {std::min(a, b), std::max(a, b)};
        return true;
    };
    std::vector<Interval> ivs;
    for (int m = 0; m < N; ++m) {
        Interval im;
        if (!mode_interval(m, im)) continue;
        for (int j = m + 1; j < N; ++j) {
            Interval ij;
            if (!mode_interval(j, ij)) continue;
            double lo = std::max({im.lo, ij.lo, xin});
            double hi = std::min(im.hi, ij.hi);
            if (hi > lo) ivs.push_back({lo, hi});
        }
    }
    if (ivs.empty()) return 0.0;
    merge_intervals(ivs);

    // cached boundary-frame coefficient row and slow data
    std::vector<double> lkb(N), h2(N);
    double yb[3];
    pack_point(spec_.n, y0, y1, 0.0, yb);
    frames_.l_at(k, yb, lkb.data());
    H2Workspace ws;
    ws.init(*this, y);
    std::vector<double> sig(N);
    auto integrand = [&](double s) {
        for (int m = 0; m < N; ++m)
            sig[m] = profiles_.sigma[m].at(y, zeta + s * (omega[m] - omega[k]));
        ws.combine(sig.data(), h2.data());
        double acc = 0.0;
        for (int c = 0; c < N; ++c) acc += lkb[c] * h2[c];
        return acc;
    };

    double rate = 1e-3;
    for (int m = 0; m < N; ++m)
        if (m != k && !profiles_.sigma[m].identically_zero)
            rate = std::max(rate, std::abs(omega[m] - omega[k]));
    double total = 0.0;
    for (const Interval& iv : ivs) {
        int cells = std::clamp(int((iv.hi - iv.lo) * rate / 0.05), 16, 512);
        total += simpson_richardson(integrand, iv.lo, iv.hi, cells, tol);
    }
    return total;
}

double Correctors::dtk_dtheta0(int k, const double* y, double th0, double xin) const {
    const double d = 1e-3;
    return (tk_at(k, y, th0 + d, xin, 1e-10) - tk_at(k, y, th0 - d, xin, 1e-10)) /
           (2 * d);
}

void Correctors::W_eps_scaled(const double* y, double eps, double* out) const {
    const int N = spec_.N;
    for (int c = 0; c < N; ++c) out[c] = 0.0;
    double y0 = y[0], yn = (spec_.n == 2) ? y[2] : y[1];
    double cut = chi_cutoff(y0 / std::sqrt(eps)) * chi_cutoff(yn / std::sqrt(eps));
    if (cut == 0.0) return;
    double th0 = y0 / eps, xin = yn / eps;
    std::vector<double> rk(N);
    double yb[3];
    pack_point(spec_.n, y0, (spec_.n == 2) ? y[1] : 0.0, 0.0, yb);
    for (int k = 0; k < N; ++k) {
        double t = tk_at(k, y, th0, xin);
        if (t == 0.0) continue;
        frames_.r_at(k, yb, rk.data());
        for (int c = 0; c < N; ++c) out[c] += cut * t * rk[c];
    }
}

void Correctors::L2_defect_scaled(const double* y, double eps, double* out) const {
    const int N = spec_.N;
    for (int c = 0; c < N; ++c) out[c] = 0.0;
    double y0 = y[0], yn = (spec_.n == 2) ? y[2] : y[1];
    double cut = chi_cutoff(y0 / std::sqrt(eps)) * chi_cutoff(yn / std::sqrt(eps));
    if (cut == 0.0) return;
    double th0 = y0 / eps, xin = yn / eps;
    double yb[3];
    pack_point(spec_.n, y0, (spec_.n == 2) ? y[1] : 0.0, 0.0, yb);
    Eigen::MatrixXd B0y, B0b;
    spec_.eval_B(0, y, B0y);
    spec_.eval_B(0, yb, B0b);
    Eigen::MatrixXd D = B0y - B0b;
    if (D.cwiseAbs().maxCoeff() == 0.0) return;
    std::vector<double> rk(N);
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(N);
    for (int k = 0; k < N; ++k) {
        double dt = dtk_dtheta0(k, y, th0, xin);
        if (dt == 0.0) continue;
        frames_.r_at(k, yb, rk.data());
        acc += dt * Eigen::Map<Eigen::VectorXd>(rk.data(), N);
    }
    Eigen::VectorXd v = cut * (D * acc);
    for (int c = 0; c < N; ++c) out[c] = v[c];
}

void Correctors::LW_eps_scaled(const double* y, double eps, double fd_step,
                               double* out) const {
    const int N = spec_.N;
    double y0 = y[0], yn = (spec_.n == 2) ? y[2] : y[1];
    double th0 = y0 / eps, xin = yn / eps;
    // W at frozen fast arguments as a function of the slow point
    auto wfun = [&](const double* yy, double* res) {
        double yy0 = yy[0], yyn = (spec_.n == 2) ? yy[2] : yy[1];
        double cut = chi_cutoff(yy0 / std::sqrt(eps)) * chi_cutoff(yyn / std::sqrt(eps));
        for (int c = 0; c < N; ++c) res[c] = 0.0;
        if (cut == 0.0) return;
        std::vector<double> rk(N);
        double yb[3];
        pack_point(spec_.n, yy0, (spec_.n == 2) ? yy[1] : 0.0, 0.0, yb);
        for (int k = 0; k < N; ++k) {
            double t = tk_at(k, yy, th0, xin);
            if (t == 0.0) continue;
            frames_.r_at(k, yb, rk.data());
            for (int c = 0; c < N; ++c) res[c] += cut * t * rk[c];
        }
    };
    std::vector<double> vp(N), vm(N);
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(N);
    Eigen::MatrixXd Bj;
    for (int axis = 0; axis <= spec_.n; ++axis) {
        int slot = (spec_.n == 1 && axis == 1) ? 1 : axis;
        double yp[3] = {y[0], y[1], (spec_.n == 2) ? y[2] : 0.0};
        double ym[3] = {y[0], y[1], (spec_.n == 2) ? y[2] : 0.0};
        double h = fd_step;
        yp[slot] += h;
        ym[slot] -= h;
        // keep yn >= 0: shift to a one-sided pair when needed
        bool normal_axis = (axis == spec_.n);
        if (normal_axis && ym[slot] < 0.0) {
            ym[slot] = y[slot];
            yp[slot] = y[slot] + h;
            wfun(yp, vp.data());
            wfun(ym, vm.data());
            for (int c = 0; c < N; ++c) vp[c] = (vp[c] - vm[c]) / h;
        } else {
            wfun(yp, vp.data());
            wfun(ym, vm.data());
            for (int c = 0; c < N; ++c) vp[c] = (vp[c] - vm[c]) / (2 * h);
        }
        Eigen::Map<Eigen::VectorXd> dv(vp.data(), N);
        if (axis == spec_.n) {
            acc += dv;
        } else {
            spec_.eval_B(axis, y, Bj);
            acc += Bj * dv;
        }
    }
    for (int c = 0; c < N; ++c) out[c] = acc[c];
}

double Correctors::min_omega_gap() const {
    const FieldLattice& lat = frames_.lat;
    double gap = 1e300;
    for (int j0 = 0; j0 < lat.l0.count; ++j0)
        for (int j1 = 0; j1 < lat.l1.count; ++j1) {
            double y0 = lat.l0.at(j0), y1 = lat.l1.at(j1);
            for (int m = 0; m < spec_.N; ++m)
                for (int k = m + 1; k < spec_.N; ++k)
                    gap = std::min(gap, std::abs(phases_[m].omega_at(y0, y1) -
                                                 phases_[k].omega_at(y0, y1)));
        }
    return gap;
}

double Correctors::qk_identity_residual() const {
    const FieldLattice& lat = frames_.lat;
    const int N = spec_.N;
    double worst = 0.0;
    std::vector<double> etap(spec_.n);
    for (int j0 = 0; j0 < lat.l0.count; ++j0)
        for (int j1 = 0; j1 < lat.l1.count; ++j1)
            for (int jn = 0; jn < lat.ln.count; ++jn) {
                double y[3];
                lat.point(j0, j1, jn, y);
                std::size_t node = lat.index(j0, j1, jn);
                for (int k = 0; k < N; ++k) {
                    const double* dp = phases_[k].dpsi.data() + node * (spec_.n + 1);
                    for (int j = 0; j < spec_.n; ++j) etap[j] = dp[j];
                    Eigen::MatrixXd A;
                    spec_.eval_symbol(y, etap.data(), A);
                    Eigen::MatrixXd Lmat =
                        dp[spec_.n] * Eigen::MatrixXd::Identity(N, N) + A;
                    Eigen::Map<const Eigen::MatrixXd> Qk(
                        set_.Q.data() + (node * N + k) * N * N, N, N);
                    Eigen::Map<const Eigen::VectorXd> rk(
                        frames_.R.data() + frames_.vec_index(node, k), N);
                    Eigen::Map<const Eigen::VectorXd> lk(
                        frames_.L.data() + frames_.vec_index(node, k), N);
                    Eigen::MatrixXd pik = rk * lk.transpose();
                    // stored Q is row-major; Eigen map is column-major: transpose
                    Eigen::MatrixXd Qm = Qk.transpose();
                    Eigen::MatrixXd R1 =
                        Lmat * Qm - (Eigen::MatrixXd::Identity(N, N) - pik);
                    Eigen::MatrixXd R2 =
                        Qm * Lmat - (Eigen::MatrixXd::Identity(N, N) - pik);
                    worst = std::max({worst, R1.cwiseAbs().maxCoeff(),
                                      R2.cwiseAbs().maxCoeff()});
                }
            }
    return worst;
}

double Correctors::qk_pik_residual() const {
    const FieldLattice& lat = frames_.lat;
    const int N = spec_.N;
    double worst = 0.0;
    for (std::size_t node = 0; node < lat.nodes(); ++node)
        for (int k = 0; k < N; ++k) {
            Eigen::Map<const Eigen::MatrixXd> Qk(set_.Q.data() + (node * N + k) * N * N, N,
                                                 N);
            Eigen::Map<const Eigen::VectorXd> rk(
                frames_.R.data() + frames_.vec_index(node, k), N);
            Eigen::Map<const Eigen::VectorXd> lk(
                frames_.L.data() + frames_.vec_index(node, k), N);
            Eigen::MatrixXd pik = rk * lk.transpose();
            worst = std::max(worst, (Qk.transpose() * pik).cwiseAbs().maxCoeff());
        }
    return worst;
}

double Correctors::h1_polarization_residual() const {
    const FieldLattice& lat = frames_.lat;
    const int N = spec_.N, nt = set_.theta.count;
    double worst = 0.0;
    std::vector<double> h1(N);
    for (int k = 0; k < N; ++k) {
        if (profiles_.sigma[k].identically_zero) continue;
        for (int j0 = 0; j0 < lat.l0.count; j0 += 2)
            for (int j1 = 0; j1 < lat.l1.count; j1 += 2)
                for (int jn = 0; jn < lat.ln.count; jn += 2) {
                    std::size_t node = lat.index(j0, j1, jn);
                    Eigen::Map<const Eigen::VectorXd> rk(
                        frames_.R.data() + frames_.vec_index(node, k), N);
                    Eigen::Map<const Eigen::VectorXd> lk(
                        frames_.L.data() + frames_.vec_index(node, k), N);
                    for (int it = 0; it < nt; it += 2) {
                        h1_row(k, j0, j1, jn, it, h1.data());
                        double lv = 0.0;
                        for (int c = 0; c < N; ++c) lv += lk[c] * h1[c];
                        worst = std::max(worst, std::abs(lv) * rk.cwiseAbs().maxCoeff());
                    }
                }
    }
    return worst;
}

double Correctors::v_equation_residual(int samples, double delta) const {
    const FieldLattice& lat = frames_.lat;
    const int N = spec_.N;
    double worst = 0.0;
    std::vector<double> etap(spec_.n), h1c(N), h1m(N);
    std::size_t stride = std::max<std::size_t>(1, lat.nodes() / std::size_t(samples));
    for (int k = 0; k < N; ++k) {
        if (profiles_.sigma[k].identically_zero) continue;
        for (std::size_t node = 0; node < lat.nodes(); node += stride) {
            int jn = int(node % lat.ln.count);
            int j1 = int((node / lat.ln.count) % lat.l1.count);
            int j0 = int(node / (std::size_t(lat.ln.count) * lat.l1.count));
            double y[3];
            lat.point(j0, j1, jn, y);
            const double* dp = phases_[k].dpsi.data() + node * (spec_.n + 1);
            for (int j = 0; j < spec_.n; ++j) etap[j] = dp[j];
            Eigen::MatrixXd A;
            spec_.eval_symbol(y, etap.data(), A);
            Eigen::MatrixXd Lmat = dp[spec_.n] * Eigen::MatrixXd::Identity(N, N) + A;
            Eigen::Map<const Eigen::MatrixXd> Qk(set_.Q.data() + (node * N + k) * N * N, N,
                                                 N);
            for (double th : {-0.8, -0.3, 0.1, 0.6, 0.95}) {
                // mean of H1 over [th-delta, th+delta] per component (gauss5)
                Eigen::VectorXd mean = Eigen::VectorXd::Zero(N);
                static const double xs[5] = {-0.9061798459386640, -0.5384693101056831,
                                             0.0, 0.5384693101056831, 0.9061798459386640};
                static const double ws[5] = {0.2369268850561891, 0.4786286704993665,
                                             0.5688888888888889, 0.4786286704993665,
                                             0.2369268850561891};
                for (int q = 0; q < 5; ++q) {
                    H1_at(k, y, th + delta * xs[q], h1m.data());
                    for (int c = 0; c < N; ++c) mean[c] += 0.5 * ws[q] * h1m[c];
                }
                H1_at(k, y, th, h1c.data());
                Eigen::VectorXd res =
                    Lmat * (Qk.transpose() * (-mean)) +
                    Eigen::Map<Eigen::VectorXd>(h1c.data(), N);
                worst = std::max(worst, res.cwiseAbs().maxCoeff());
            }
        }
    }
    return worst;
}

double Correctors::t_transport_residual(int samples, double delta, double quad_tol) const {
    const FieldLattice& lat = frames_.lat;
    double worst = 0.0;
    int done = 0;
    for (int k = 0; k < spec_.N && done < samples; ++k) {
        for (int j0 = 1; j0 < lat.l0.count - 1 && done < samples; j0 += 3)
            for (int jn = 0; jn < lat.ln.count && done < samples; jn += 3) {
                double y[3];
                lat.point(j0, lat.l1.count / 2, jn, y);
                double y0 = y[0], y1v = (spec_.n == 2) ? y[1] : 0.0;
                double w = phases_[k].omega_at(y0, y1v);
                for (double xin : {0.0, 0.4, 1.1}) {
                    for (double u : {-0.7, 0.0, 0.5}) {
                        double th0 = -w * xin + u;
                        double hc = calH2k_at(k, y, th0, xin);
                        double tp = tk_at(k, y, th0 - w * delta, xin + delta, quad_tol);
                        double tm = tk_at(k, y, th0 + w * delta, xin - delta, quad_tol);
                        if (hc == 0.0 && tp == 0.0 && tm == 0.0) continue;
                        worst = std::max(worst, std::abs((tp - tm) / (2 * delta) + hc));
                        ++done;
                    }
                }
            }
    }
    return worst;
}

double Correctors::t_sup_bound() const {
    const FieldLattice& lat = frames_.lat;
    double sup = 0.0;
    for (int k = 0; k < spec_.N; ++k)
        for (int j0 = 0; j0 < lat.l0.count; j0 += 4)
            for (int jn = 0; jn < lat.ln.count; jn += 4) {
                double y[3];
                lat.point(j0, lat.l1.count / 2, jn, y);
                double w = phases_[k].omega_at(y[0], (spec_.n == 2) ? y[1] : 0.0);
                for (double xin : {0.0, 0.5, 1.5, 4.0})
                    for (double u : {-1.5, -0.75, 0.0, 0.75, 1.5})
                        sup = std::max(sup, std::abs(tk_at(k, y, -w * xin + u, xin)));
            }
    return sup;
}

}  // namespace geopulse
