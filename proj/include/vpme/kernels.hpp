#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "vpme/mollifier.hpp"
#include "vpme/spectral.hpp"
#include "vpme/spline.hpp"
#include "vpme/torus.hpp"

namespace vpme {

// Fourier coefficients of the zero-mean Green's function of -Lap on T^d.
cplx green_coefficient(const Wave& k);

// Band-limited samples of G and K = -grad G on the grid.
ScalarField green(int d, int n);
VectorField kernel(int d, int n);

struct KernelModuli {
    ModulusField L;  // sup of |grad K_r| over B_r
    ModulusField Q;  // sup of |grad^2 K_r| over B_2r
};

// Regularized kernels K_r = chi_r * K for a list of radii on one grid,
// with cubic-spline off-grid evaluation and the matching moduli.
class KernelFamily {
public:
    KernelFamily(int d, int n, std::vector<double> radii);

    const TorusGrid& grid() const { return grid_; }
    const std::vector<double>& radii() const { return radii_; }

    const VectorField& K_r(double r) const;
    const SplineField& spline(double r) const;
    Point eval_K_r(double r, const Point& x) const;
    const KernelModuli& moduli(double r) const;
    // Fourier coefficients of chi_r * G.
    std::vector<cplx> smoothed_green_coefficients(double r) const;

    // Binary cache: header (magic, d, n, count, radii) then little-endian
    // float64 payload of K_r components, L_r and Q_r per radius.
    void save(const std::string& path) const;
    static KernelFamily load(const std::string& path);

private:
    KernelFamily() = default;
    struct Entry {
        VectorField Kr;
        SplineField spline;
        KernelModuli moduli;
    };
    std::size_t slot(double r) const;
    void build(std::size_t i);

    TorusGrid grid_;
    std::vector<double> radii_;
    std::vector<Entry> entries_;
};

// Free-function forms.
VectorField regularized_kernel(const KernelFamily& family, double r);
Point eval_K_r(const KernelFamily& family, double r, const Point& x);
const KernelModuli& kernel_moduli(const KernelFamily& family, double r);

// Frobenius norm of the m-th derivative tensor of a band-limited function
// given by its half-spectrum coefficients.
std::vector<double> derivative_norm(const TorusGrid& g, const std::vector<cplx>& coef, int m);

}  // namespace vpme
