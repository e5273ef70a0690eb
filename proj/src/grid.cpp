#include "geopulse/grid.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "geopulse/errors.hpp"

namespace geopulse {

Grid Grid::make(int n, const Domain& dom, double h0, double h1, double hn) {
    Grid g;
    g.n = n;
    g.T0 = dom.T0;
    g.alpha = dom.alpha;
    g.T = dom.T;
    auto axis = [](double lo, double hi, double h) {
        int count = std::max(2, int(std::ceil((hi - lo) / h + 0.5)) + 1);
        return UniformAxis{lo, (hi - lo) / (count - 1), count};
    };
    g.ax0 = axis(dom.y0_min, dom.T, h0);
    if (n == 2)
        g.ax1 = axis(-dom.y1_half, dom.y1_half, h1);
    else
        g.ax1 = UniformAxis{0.0, 1.0, 1};
    g.axn = axis(0.0, dom.yn_max, hn);
    return g;
}

double Grid::quad_weight(int i0, int i1, int in) const {
    auto w = [](int i, int count, double h) {
        if (count == 1) return 1.0;
        return (i == 0 || i == count - 1) ? 0.5 * h : h;
    };
    double acc = w(i0, n0(), ax0.h) * w(in, nn(), axn.h);
    if (n == 2) acc *= w(i1, n1(), ax1.h);
    return acc;
}

bool GridFunction::all_finite() const {
    for (double v : values)
        if (!std::isfinite(v)) return false;
    return true;
}

double GridFunction::max_abs() const {
    double m = 0.0;
    for (double v : values) m = std::max(m, std::abs(v));
    return m;
}

double GridFunction::max_abs_cone() const {
    double m = 0.0;
    const Grid& g = *grid;
    for (int i0 = 0; i0 < g.n0(); ++i0)
        for (int i1 = 0; i1 < g.n1(); ++i1)
            for (int in = 0; in < g.nn(); ++in) {
                if (!g.in_cone(i0, i1, in)) continue;
                const double* v = at(i0, i1, in);
                for (int c = 0; c < ncomp; ++c) m = std::max(m, std::abs(v[c]));
            }
    return m;
}

void GridFunction::write_csv(const std::string& path) const {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw Error("cannot open " + path);
    std::fprintf(f, "# geopulse gridfunction v1 label=%s ncomp=%d\n", label.c_str(), ncomp);
    std::fprintf(f, "y0,y1,yn");
    for (int c = 0; c < ncomp; ++c) std::fprintf(f, ",u%d", c + 1);
    std::fprintf(f, "\n");
    const Grid& g = *grid;
    for (int i0 = 0; i0 < g.n0(); ++i0)
        for (int i1 = 0; i1 < g.n1(); ++i1)
            for (int in = 0; in < g.nn(); ++in) {
                std::fprintf(f, "%.17g,%.17g,%.17g", g.y0(i0), g.y1(i1), g.yn(in));
                const double* v = at(i0, i1, in);
                for (int c = 0; c < ncomp; ++c) std::fprintf(f, ",%.17g", v[c]);
                std::fprintf(f, "\n");
            }
    std::fclose(f);
}

namespace {
struct CheckpointHeader {
    char magic[8];
    std::int32_t n, n0, n1, nn, ncomp;
    double x00, h0, x10, h1, xn0, hn, eps;
};
}  // namespace

void GridFunction::write_checkpoint(const std::string& path, double eps) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open " + path);
    CheckpointHeader h{};
    std::memcpy(h.magic, "GPCHK1\0\0", 8);
    const Grid& g = *grid;
    h.n = g.n;
    h.n0 = g.n0();
    h.n1 = g.n1();
    h.nn = g.nn();
    h.ncomp = ncomp;
    h.x00 = g.ax0.x0;
    h.h0 = g.ax0.h;
    h.x10 = g.ax1.x0;
    h.h1 = g.ax1.h;
    h.xn0 = g.axn.x0;
    h.hn = g.axn.h;
    h.eps = eps;
    out.write(reinterpret_cast<const char*>(&h), sizeof h);
    out.write(reinterpret_cast<const char*>(values.data()),
              std::streamsize(values.size() * sizeof(double)));
}

GridFunction GridFunction::read_checkpoint(const std::string& path, const Grid& g,
                                           double* eps_out) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path);
    CheckpointHeader h{};
    in.read(reinterpret_cast<char*>(&h), sizeof h);
    if (std::memcmp(h.magic, "GPCHK1", 6) != 0) throw Error("bad checkpoint magic");
    if (h.n != g.n || h.n0 != g.n0() || h.n1 != g.n1() || h.nn != g.nn())
        throw Error("checkpoint grid mismatch");
    GridFunction f(g, h.ncomp);
    in.read(reinterpret_cast<char*>(f.values.data()),
            std::streamsize(f.values.size() * sizeof(double)));
    if (!in) throw Error("truncated checkpoint");
    if (eps_out) *eps_out = h.eps;
    return f;
}

double fd_axis(const GridFunction& f, int axis, int c, int i0, int i1, int in) {
    const Grid& g = *f.grid;
    int idx, count;
    double h;
    if (axis == 0) {
        idx = i0;
        count = g.n0();
        h = g.ax0.h;
    } else if (axis == 1) {
        idx = i1;
        count = g.n1();
        h = g.ax1.h;
    } else {
        idx = in;
        count = g.nn();
        h = g.axn.h;
    }
    if (count < 3) return 0.0;
    auto val = [&](int j) {
        int a = (axis == 0) ? j : i0;
        int b = (axis == 1) ? j : i1;
        int cc = (axis == 2) ? j : in;
        return f.at(a, b, cc)[c];
    };
    if (idx == 0) return (-3.0 * val(0) + 4.0 * val(1) - val(2)) / (2.0 * h);
    if (idx == count - 1)
        return (3.0 * val(count - 1) - 4.0 * val(count - 2) + val(count - 3)) / (2.0 * h);
    return (val(idx + 1) - val(idx - 1)) / (2.0 * h);
}

}  // namespace geopulse
