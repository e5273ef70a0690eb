#pragma once

// Local cubic (4-point Lagrange) interpolation on uniform axes, with tensor
// products for 2-D/3-D lattices and a nonuniform variant for ray slices.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

namespace geopulse {

struct UniformAxis {
    double x0 = 0.0;
    double h = 1.0;
    int count = 0;

    double at(int i) const { return x0 + h * i; }
    double back() const { return at(count - 1); }

    // 4-point stencil [i0..i0+3] and local coordinate t measured from node i0.
    // Stencil is shifted at the edges; degenerates gracefully for count < 4.
    void locate(double x, int& i0, double& t) const {
        double s = (x - x0) / h;
        int base = static_cast<int>(std::floor(s)) - 1;
        base = std::clamp(base, 0, std::max(0, count - 4));
        i0 = base;
        t = s - base;
    }
};

namespace detail {

// weights of cubic Lagrange interpolation on nodes {0,1,2,3} at t
inline void lagrange4_weights(double t, double w[4]) {
    const double t1 = t - 1.0, t2 = t - 2.0, t3 = t - 3.0;
    w[0] = -t1 * t2 * t3 / 6.0;
    w[1] = t * t2 * t3 / 2.0;
    w[2] = -t * t1 * t3 / 2.0;
    w[3] = t * t1 * t2 / 6.0;
}

inline void linear2_weights(double t, double w[2]) {
    w[0] = 1.0 - t;
    w[1] = t;
}

}  // namespace detail

// 1-D interpolation of data[i*stride] over axis
inline double interp1(const UniformAxis& ax, const double* data, std::ptrdiff_t stride,
                      double x) {
    if (ax.count == 1) return data[0];
    if (ax.count < 4) {
        double s = std::clamp((x - ax.x0) / ax.h, 0.0, double(ax.count - 1));
        int i = std::min(static_cast<int>(s), ax.count - 2);
        double w[2];
        detail::linear2_weights(s - i, w);
        return w[0] * data[i * stride] + w[1] * data[(i + 1) * stride];
    }
    int i0;
    double t, w[4];
    ax.locate(x, i0, t);
    detail::lagrange4_weights(t, w);
    double acc = 0.0;
    for (int a = 0; a < 4; ++a) acc += w[a] * data[(i0 + a) * stride];
    return acc;
}

// 2-D tensor interpolation; data indexed data[(i*ny + j)*stride]
inline double interp2(const UniformAxis& axx, const UniformAxis& axy, const double* data,
                      std::ptrdiff_t stride, double x, double y) {
    if (axx.count == 1) return interp1(axy, data, stride, y);
    if (axx.count < 4) {
        double s = std::clamp((x - axx.x0) / axx.h, 0.0, double(axx.count - 1));
        int i = std::min(static_cast<int>(s), axx.count - 2);
        double w[2];
        detail::linear2_weights(s - i, w);
        double acc = 0.0;
        for (int a = 0; a < 2; ++a)
            acc += w[a] * interp1(axy, data + (i + a) * axy.count * stride, stride, y);
        return acc;
    }
    int i0;
    double t, w[4];
    axx.locate(x, i0, t);
    detail::lagrange4_weights(t, w);
    double acc = 0.0;
    for (int a = 0; a < 4; ++a)
        acc += w[a] * interp1(axy, data + (i0 + a) * axy.count * stride, stride, y);
    return acc;
}

// 3-D tensor interpolation; data indexed data[((i*ny + j)*nz + k)*stride]
inline double interp3(const UniformAxis& axx, const UniformAxis& axy, const UniformAxis& axz,
                      const double* data, std::ptrdiff_t stride, double x, double y,
                      double z) {
    if (axx.count == 1) return interp2(axy, axz, data, stride, y, z);
    std::ptrdiff_t plane = std::ptrdiff_t(axy.count) * axz.count * stride;
    if (axx.count < 4) {
        double s = std::clamp((x - axx.x0) / axx.h, 0.0, double(axx.count - 1));
        int i = std::min(static_cast<int>(s), axx.count - 2);
        double w[2];
        detail::linear2_weights(s - i, w);
        double acc = 0.0;
        for (int a = 0; a < 2; ++a)
            acc += w[a] * interp2(axy, axz, data + (i + a) * plane, stride, y, z);
        return acc;
    }
    int i0;
    double t, w[4];
    axx.locate(x, i0, t);
    detail::lagrange4_weights(t, w);
    double acc = 0.0;
    for (int a = 0; a < 4; ++a)
        acc += w[a] * interp2(axy, axz, data + (i0 + a) * plane, stride, y, z);
    return acc;
}

// Cubic interpolation on strictly increasing nonuniform nodes.
inline double interp1_nonuniform(const std::vector<double>& xs, const double* fs,
                                 std::ptrdiff_t stride, double x) {
    const int m = static_cast<int>(xs.size());
    if (m == 1) return fs[0];
    auto it = std::upper_bound(xs.begin(), xs.end(), x);
    int i = static_cast<int>(it - xs.begin()) - 1;
    i = std::clamp(i, 0, m - 2);
    if (m < 4) {
        double t = (x - xs[i]) / (xs[i + 1] - xs[i]);
        return (1.0 - t) * fs[i * stride] + t * fs[(i + 1) * stride];
    }
    int i0 = std::clamp(i - 1, 0, m - 4);
    double acc = 0.0;
    for (int a = 0; a < 4; ++a) {
        double w = 1.0;
        for (int b = 0; b < 4; ++b) {
            if (a == b) continue;
            w *= (x - xs[i0 + b]) / (xs[i0 + a] - xs[i0 + b]);
        }
        acc += w * fs[(i0 + a) * stride];
    }
    return acc;
}

// Inverse of a strictly increasing sampled map xs -> vs: find x with v(x)=v.
// Newton on the local cubic, bisection fallback.
inline double invert_monotone(const std::vector<double>& xs, const std::vector<double>& vs,
                              double v) {
    const int m = static_cast<int>(xs.size());
    auto it = std::upper_bound(vs.begin(), vs.end(), v);
    int i = std::clamp(static_cast<int>(it - vs.begin()) - 1, 0, m - 2);
    double lo = xs[i], hi = xs[i + 1];
    double x = lo + (hi - lo) * (v - vs[i]) / (vs[i + 1] - vs[i]);
    for (int iter = 0; iter < 50; ++iter) {
        double f = interp1_nonuniform(xs, vs.data(), 1, x) - v;
        double d = 1e-7 * (std::abs(hi - lo) + 1e-30);
        double fp = (interp1_nonuniform(xs, vs.data(), 1, x + d) -
                     interp1_nonuniform(xs, vs.data(), 1, x - d)) /
                    (2 * d);
        if (f > 0)
            hi = x;
        else
            lo = x;
        double step = (fp != 0.0) ? f / fp : 0.0;
        double xn = x - step;
        if (!(xn > lo && xn < hi)) xn = 0.5 * (lo + hi);
        if (std::abs(xn - x) < 1e-15 * (1.0 + std::abs(x))) return xn;
        x = xn;
    }
    return x;
}

}  // namespace geopulse
