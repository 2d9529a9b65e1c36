#include "vpme/torus.hpp"

#include <algorithm>
#include <cmath>

#include "vpme/spectral.hpp"

namespace vpme {

double wrap(double x) {
    double y = x - std::floor(x + 0.5);
    if (y < -0.5) y += 1.0;
    if (y >= 0.5) y -= 1.0;
    return y;
}

Point wrap(const Point& x, int dim) {
    Point y{};
    for (int a = 0; a < dim; ++a) y[a] = wrap(x[a]);
    return y;
}

Point displacement(const Point& x, const Point& y, int dim) {
    Point z{};
    for (int a = 0; a < dim; ++a) z[a] = wrap(x[a] - y[a]);
    return z;
}

double norm(const Point& x, int dim) {
    double s = 0;
    for (int a = 0; a < dim; ++a) s += x[a] * x[a];
    return std::sqrt(s);
}

double distance(const Point& x, const Point& y, int dim) { return norm(displacement(x, y, dim), dim); }

std::size_t TorusGrid::size() const {
    std::size_t s = 1;
    for (int a = 0; a < dim; ++a) s *= static_cast<std::size_t>(n);
    return s;
}

double TorusGrid::cell_volume() const { return std::pow(1.0 / n, dim); }

std::size_t TorusGrid::index(const std::array<int, 3>& m) const {
    std::size_t idx = 0;
    for (int a = 0; a < dim; ++a) {
        int q = m[a] % n;
        if (q < 0) q += n;
        idx = idx * n + q;
    }
    return idx;
}

std::array<int, 3> TorusGrid::multi_index(std::size_t idx) const {
    std::array<int, 3> m{};
    for (int a = dim - 1; a >= 0; --a) {
        m[a] = static_cast<int>(idx % n);
        idx /= n;
    }
    return m;
}

Point TorusGrid::node(const std::array<int, 3>& m) const {
    Point p{};
    for (int a = 0; a < dim; ++a) p[a] = -0.5 + static_cast<double>(m[a]) / n;
    return p;
}

Point TorusGrid::node(std::size_t idx) const { return node(multi_index(idx)); }

std::size_t TorusGrid::nearest(const Point& x) const {
    std::array<int, 3> m{};
    for (int a = 0; a < dim; ++a) {
        double u = (wrap(x[a]) + 0.5) * n;
        m[a] = static_cast<int>(std::lround(u)) % n;
    }
    return index(m);
}

TorusGrid make_grid(int d, int n) {
    if (d < 1 || d > 3) throw DomainError("dimension must be 1, 2 or 3");
    if (n < 8 || (n & (n - 1)) != 0) throw DomainError("grid size must be a power of two >= 8");
    return TorusGrid{d, n};
}

int pow2_at_least(double x) {
    int n = 8;
    while (n < x) n *= 2;
    return n;
}

double ScalarField::integral() const {
    double s = 0;
    for (double x : v) s += x;
    return s * grid.cell_volume();
}

double ScalarField::mean() const {
    double s = 0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double ScalarField::max() const { return *std::max_element(v.begin(), v.end()); }
double ScalarField::min() const { return *std::min_element(v.begin(), v.end()); }

double ScalarField::lp_norm(double p) const {
    if (std::isinf(p)) {
        double m = 0;
        for (double x : v) m = std::max(m, std::abs(x));
        return m;
    }
    double s = 0;
    for (double x : v) s += std::pow(std::abs(x), p);
    return std::pow(s * grid.cell_volume(), 1.0 / p);
}

VectorField::VectorField(const TorusGrid& g) : grid(g) {
    for (int a = 0; a < g.dim; ++a) c[a].assign(g.size(), 0.0);
}

Point VectorField::at(std::size_t idx) const {
    Point p{};
    for (int a = 0; a < grid.dim; ++a) p[a] = c[a][idx];
    return p;
}

double VectorField::sup_norm() const {
    double m = 0;
    for (std::size_t i = 0; i < grid.size(); ++i) m = std::max(m, norm(at(i), grid.dim));
    return m;
}

std::size_t covering_mesh_size(int d, double s) {
    if (!(s > 0 && s < 0.5)) throw DomainError("mesh spacing must lie in (0, 1/2)");
    std::size_t m = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(d)) / s));
    std::size_t total = 1;
    for (int a = 0; a < d; ++a) total *= m;
    return total;
}

std::vector<Point> covering_mesh(int d, double s) {
    if (d < 1 || d > 3) throw DomainError("dimension must be 1, 2 or 3");
    if (!(s > 0 && s < 0.5)) throw DomainError("mesh spacing must lie in (0, 1/2)");
    int m = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(d)) / s));
    std::size_t total = covering_mesh_size(d, s);
    std::vector<Point> pts;
    pts.reserve(total);
    for (std::size_t i = 0; i < total; ++i) {
        Point p{};
        std::size_t q = i;
        for (int a = d - 1; a >= 0; --a) {
            p[a] = -0.5 + (static_cast<double>(q % m) + 0.5) / m;
            q /= m;
        }
        pts.push_back(p);
    }
    return pts;
}

VectorField gradient(const ScalarField& f) {
    const Spectral& sp = Spectral::of(f.grid);
    auto ws = sp.workspace();
    VectorField out(f.grid);
    sp.forward(f.v.data(), ws);
    AlignedVec<cplx> base = ws.spec;
    for (int a = 0; a < f.grid.dim; ++a) {
        for (std::size_t k = 0; k < sp.spectrum_size(); ++k) {
            double kk = sp.nyquist(k, a) ? 0.0 : sp.wave(k)[a];
            ws.spec[k] = base[k] * cplx(0.0, 2.0 * M_PI * kk);
        }
        sp.backward(ws, out.c[a].data());
    }
    return out;
}

ScalarField divergence(const VectorField& f) {
    const Spectral& sp = Spectral::of(f.grid);
    auto ws = sp.workspace();
    AlignedVec<cplx> acc(sp.spectrum_size(), cplx(0.0));
    for (int a = 0; a < f.grid.dim; ++a) {
        sp.forward(f.c[a].data(), ws);
        for (std::size_t k = 0; k < sp.spectrum_size(); ++k) {
            double kk = sp.nyquist(k, a) ? 0.0 : sp.wave(k)[a];
            acc[k] += ws.spec[k] * cplx(0.0, 2.0 * M_PI * kk);
        }
    }
    ScalarField out(f.grid);
    ws.spec = acc;
    sp.backward(ws, out.v.data());
    return out;
}

ScalarField laplacian_inverse(const ScalarField& f) {
    double sup = f.lp_norm(INFINITY);
    if (std::abs(f.mean()) > 1e-12 * std::max(sup, 1e-300) && sup > 0)
        throw DomainError("laplacian_inverse requires a zero-mean right-hand side");
    ScalarField out(f.grid);
    const Spectral& sp = Spectral::of(f.grid);
    auto ws = sp.workspace();
    sp.apply(f.v.data(), out.v.data(),
             [](const Wave& k) {
                 double k2 = double(k[0]) * k[0] + double(k[1]) * k[1] + double(k[2]) * k[2];
                 return k2 == 0 ? cplx(0.0) : cplx(1.0 / (4.0 * M_PI * M_PI * k2));
             },
             ws);
    return out;
}

}  // namespace vpme
