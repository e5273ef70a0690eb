#pragma once

// Spacetime grid over the half-space box covering the truncated cone
//   Omega_T = {-T0 < y0 < min(T, T0 - alpha*|(y'',yn)|), yn >= 0},
// plus R^N-valued node fields.

#include <cstdint>
#include <string>
#include <vector>

#include "geopulse/interp.hpp"

namespace geopulse {

struct Domain {
    double T0 = 0.5;
    double alpha = 1.0;
    double T = 0.3;
    double y0_min = -0.1;   // stored box starts here; fields vanish below it
    double y1_half = 0.0;   // lateral half-width (n == 2)
    double yn_max = 0.5;
};

struct Grid {
    int n = 1;  // space dimension (1 or 2)
    UniformAxis ax0, ax1, axn;
    double T0 = 0.5, alpha = 1.0, T = 0.3;

    static Grid make(int n, const Domain& dom, double h0, double h1, double hn);

    int n0() const { return ax0.count; }
    int n1() const { return ax1.count; }
    int nn() const { return axn.count; }
    std::size_t nodes() const { return std::size_t(n0()) * n1() * nn(); }

    std::size_t node_index(int i0, int i1, int in) const {
        return (std::size_t(i0) * n1() + i1) * nn() + in;
    }

    double y0(int i0) const { return ax0.at(i0); }
    double y1(int i1) const { return ax1.at(i1); }
    double yn(int in) const { return axn.at(in); }

    // point packed as [y0, (y1,) yn]
    void point(int i0, int i1, int in, double* y) const {
        y[0] = y0(i0);
        if (n == 2) {
            y[1] = y1(i1);
            y[2] = yn(in);
        } else {
            y[1] = yn(in);
        }
    }

    bool in_cone(double y0v, double y1v, double ynv) const {
        double r = (n == 2) ? std::sqrt(y1v * y1v + ynv * ynv) : std::abs(ynv);
        return ynv >= 0.0 && y0v > -T0 && y0v < T && y0v < T0 - alpha * r;
    }
    bool in_cone(int i0, int i1, int in) const {
        return in_cone(y0(i0), y1(i1), yn(in));
    }

    // trapezoid weight of a node (product over axes), without the cone mask
    double quad_weight(int i0, int i1, int in) const;
};

struct GridFunction {
    const Grid* grid = nullptr;
    int ncomp = 1;
    std::string label;
    std::vector<double> values;

    GridFunction() = default;
    GridFunction(const Grid& g, int ncomp_, std::string label_ = "")
        : grid(&g), ncomp(ncomp_), label(std::move(label_)),
          values(g.nodes() * ncomp_, 0.0) {}

    double* at(int i0, int i1, int in) {
        return values.data() + grid->node_index(i0, i1, in) * ncomp;
    }
    const double* at(int i0, int i1, int in) const {
        return values.data() + grid->node_index(i0, i1, in) * ncomp;
    }

    bool all_finite() const;
    double max_abs() const;
    // max |.| over cone nodes (euclidean norm across components per node)
    double max_abs_cone() const;

    void write_csv(const std::string& path) const;
    void write_checkpoint(const std::string& path, double eps) const;
    static GridFunction read_checkpoint(const std::string& path, const Grid& g,
                                        double* eps_out);
};

// second-order FD of component c along axis (0 = y0, 1 = y1, 2 = yn), with
// one-sided stencils at the box edges
double fd_axis(const GridFunction& f, int axis, int c, int i0, int i1, int in);

}  // namespace geopulse
