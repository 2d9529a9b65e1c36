#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace vpme {

// Points on the flat torus; unused trailing coordinates stay zero.
using Point = std::array<double, 3>;

class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, double last_residual, int iterations)
        : std::runtime_error(what), last_residual(last_residual), iterations(iterations) {}
    double last_residual;
    int iterations;
};

// Representative of x in [-1/2, 1/2).
double wrap(double x);
Point wrap(const Point& x, int dim);

// Shortest displacement x - y on the torus, componentwise in [-1/2, 1/2).
Point displacement(const Point& x, const Point& y, int dim);
double norm(const Point& x, int dim);
double distance(const Point& x, const Point& y, int dim);

struct TorusGrid {
    int dim = 0;
    int n = 0;

    std::size_t size() const;
    double spacing() const { return 1.0 / n; }
    double cell_volume() const;
    // Row-major index with the last axis fastest.
    std::size_t index(const std::array<int, 3>& m) const;
    std::array<int, 3> multi_index(std::size_t idx) const;
    Point node(std::size_t idx) const;
    Point node(const std::array<int, 3>& m) const;
    // Nearest node to a point.
    std::size_t nearest(const Point& x) const;
    bool operator==(const TorusGrid& o) const { return dim == o.dim && n == o.n; }
};

// Throws DomainError unless d in {1,2,3} and n a power of two >= 8.
TorusGrid make_grid(int d, int n);

// Smallest power of two >= max(8, x).
int pow2_at_least(double x);

struct ScalarField {
    TorusGrid grid;
    std::vector<double> v;

    ScalarField() = default;
    explicit ScalarField(const TorusGrid& g, double fill = 0.0) : grid(g), v(g.size(), fill) {}
    double integral() const;
    double mean() const;
    double max() const;
    double min() const;
    // Grid L^p norm; p = infinity gives the max of |v|.
    double lp_norm(double p) const;
};

struct VectorField {
    TorusGrid grid;
    std::array<std::vector<double>, 3> c;

    VectorField() = default;
    explicit VectorField(const TorusGrid& g);
    Point at(std::size_t idx) const;
    // Grid max of the Euclidean norm.
    double sup_norm() const;
};

template <class F>
ScalarField sample(const TorusGrid& g, F&& f) {
    ScalarField out(g);
    for (std::size_t i = 0; i < g.size(); ++i) out.v[i] = f(g.node(i));
    return out;
}

// Regular lattice with ceil(sqrt(d)/s) points per axis; every point of the
// torus lies within s of the mesh.
std::vector<Point> covering_mesh(int d, double s);
std::size_t covering_mesh_size(int d, double s);

// Spectral calculus on grid samples.
VectorField gradient(const ScalarField& f);
ScalarField divergence(const VectorField& f);
// Zero-mean solution u of -Lap u = f; requires |mean f| <= 1e-12 ||f||_inf.
ScalarField laplacian_inverse(const ScalarField& f);

}  // namespace vpme
