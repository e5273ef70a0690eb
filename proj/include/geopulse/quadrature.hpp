#pragma once

// Composite Simpson helpers and a bracketed adaptive rule for compactly
// supported integrands.

#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

namespace geopulse {

// Composite Simpson over n uniform cells (n even preferred; odd tails use
// Simpson 3/8 on the last three cells).
template <class F>
double simpson(F&& f, double a, double b, int cells) {
    if (cells < 2) cells = 2;
    if (cells % 2 == 1) ++cells;
    const double h = (b - a) / cells;
    double acc = f(a) + f(b);
    for (int i = 1; i < cells; ++i) acc += f(a + i * h) * ((i % 2) ? 4.0 : 2.0);
    return acc * h / 3.0;
}

// Simpson with one Richardson halving step; |I_h/2 - I_h|/15 estimates the error.
template <class F>
double simpson_richardson(F&& f, double a, double b, int cells, double tol,
                          double* err_out = nullptr) {
    double coarse = simpson(f, a, b, cells);
    double fine = simpson(f, a, b, 2 * cells);
    double err = std::abs(fine - coarse) / 15.0;
    int c = 2 * cells;
    while (err > tol && c < (1 << 20)) {
        coarse = fine;
        c *= 2;
        fine = simpson(f, a, b, c);
        err = std::abs(fine - coarse) / 15.0;
    }
    if (err_out) *err_out = err;
    return fine;
}

// Cumulative integral over a uniform lattice: out[j] = int_{x0}^{x_j} f.
// Parabolic (Simpson-consistent) per-cell increments from node triples.
inline std::vector<double> cumulative_integral(const std::vector<double>& f, double h) {
    const std::size_t m = f.size();
    std::vector<double> out(m, 0.0);
    if (m < 2) return out;
    for (std::size_t j = 0; j + 1 < m; ++j) {
        double inc;
        if (j + 2 < m) {
            inc = h / 12.0 * (5.0 * f[j] + 8.0 * f[j + 1] - f[j + 2]);
        } else {
            inc = h / 12.0 * (-f[j - 1] + 8.0 * f[j] + 5.0 * f[j + 1]);
        }
        out[j + 1] = out[j] + inc;
    }
    return out;
}

// 5-point Gauss-Legendre on [a, b]
template <class F>
double gauss5(F&& f, double a, double b) {
    static const double xs[5] = {-0.9061798459386640, -0.5384693101056831, 0.0,
                                 0.5384693101056831, 0.9061798459386640};
    static const double ws[5] = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889,
                                 0.4786286704993665, 0.2369268850561891};
    const double c = 0.5 * (a + b), r = 0.5 * (b - a);
    double acc = 0.0;
    for (int i = 0; i < 5; ++i) acc += ws[i] * f(c + r * xs[i]);
    return acc * r;
}

}  // namespace geopulse
