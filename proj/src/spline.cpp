#include "vpme/spline.hpp"

#include <cmath>

namespace vpme {

namespace {

struct Stencil {
    int idx[3][4];
    double w[3][4];
};

inline void axis_weights(double x, int n, int* idx, double* w) {
    double u = (wrap(x) + 0.5) * n;
    double f = std::floor(u);
    double t = u - f;
    int i0 = static_cast<int>(f);
    double t2 = t * t, t3 = t2 * t, s = 1.0 - t;
    w[0] = s * s * s / 6.0;
    w[1] = (3.0 * t3 - 6.0 * t2 + 4.0) / 6.0;
    w[2] = (-3.0 * t3 + 3.0 * t2 + 3.0 * t + 1.0) / 6.0;
    w[3] = t3 / 6.0;
    for (int j = 0; j < 4; ++j) {
        int q = (i0 - 1 + j) % n;
        if (q < 0) q += n;
        idx[j] = q;
    }
}

inline Stencil stencil(const Point& x, const TorusGrid& g) {
    Stencil s{};
    for (int a = 0; a < g.dim; ++a) axis_weights(x[a], g.n, s.idx[a], s.w[a]);
    return s;
}

inline double contract(const Stencil& s, const TorusGrid& g, const double* c) {
    const std::size_t n = g.n;
    double acc = 0;
    if (g.dim == 1) {
        for (int i = 0; i < 4; ++i) acc += s.w[0][i] * c[s.idx[0][i]];
    } else if (g.dim == 2) {
        for (int i = 0; i < 4; ++i) {
            const double* row = c + s.idx[0][i] * n;
            double r = 0;
            for (int j = 0; j < 4; ++j) r += s.w[1][j] * row[s.idx[1][j]];
            acc += s.w[0][i] * r;
        }
    } else {
        for (int i = 0; i < 4; ++i) {
            double p = 0;
            for (int j = 0; j < 4; ++j) {
                const double* row = c + (s.idx[0][i] * n + s.idx[1][j]) * n;
                double r = 0;
                for (int k = 0; k < 4; ++k) r += s.w[2][k] * row[s.idx[2][k]];
                p += s.w[1][j] * r;
            }
            acc += s.w[0][i] * p;
        }
    }
    return acc;
}

std::vector<double> prefilter(const std::vector<double>& samples, const TorusGrid& g) {
    const Spectral& sp = Spectral::of(g);
    auto ws = sp.workspace();
    std::vector<double> out(g.size());
    sp.apply(samples.data(), out.data(), [&](const Wave& k) { return cplx(1.0 / bspline_symbol(k, g)); }, ws);
    return out;
}

}  // namespace

double bspline_symbol(const Wave& k, const TorusGrid& g) {
    double s = 1.0;
    for (int a = 0; a < g.dim; ++a) s *= (4.0 + 2.0 * std::cos(2.0 * M_PI * k[a] / g.n)) / 6.0;
    return s;
}

double SplineField::eval(const Point& x, int comp) const {
    return contract(stencil(x, grid), grid, coef[comp].data());
}

Point SplineField::eval_vector(const Point& x) const {
    Stencil s = stencil(x, grid);
    Point p{};
    for (int a = 0; a < components; ++a) p[a] = contract(s, grid, coef[a].data());
    return p;
}

SplineField make_spline(const ScalarField& f) {
    SplineField s;
    s.grid = f.grid;
    s.components = 1;
    s.coef[0] = prefilter(f.v, f.grid);
    return s;
}

SplineField make_spline(const VectorField& f) {
    SplineField s;
    s.grid = f.grid;
    s.components = f.grid.dim;
    for (int a = 0; a < f.grid.dim; ++a) s.coef[a] = prefilter(f.c[a], f.grid);
    return s;
}

}  // namespace vpme
