#pragma once

#include <array>
#include <vector>

#include "vpme/torus.hpp"

namespace vpme {

// Normalized bump chi(x) = C exp(-1/(1-|x|^2)) on the unit ball of R^d.
class Mollifier {
public:
    explicit Mollifier(int d);

    int dim() const { return d_; }
    double constant() const { return c_; }

    // chi as a function of t = |x|^2, and its first three t-derivatives.
    double profile(double t) const;
    std::array<double, 4> profile_derivatives(double t) const;
    // Tabulated profile, accurate to ~1e-14 relative; used by deposition.
    double profile_fast(double t) const;

    // Scaled kernel chi_r at an unwrapped displacement x.
    double value_r(double r, const Point& x) const;
    Point gradient_r(double r, const Point& x) const;
    // Frobenius norms of the m-th derivative tensor of chi_r, m = 1, 2, 3.
    double derivative_norm_r(int m, double r, const Point& x) const;

private:
    int d_;
    double c_;
    std::vector<double> table_;
    double table_step_ = 0;
};

// chi_r(x) with x taken modulo the torus; requires 0 < r < 1/2.
double chi_r(const Mollifier& chi, double r, const Point& x);
ScalarField sample_chi_r(const Mollifier& chi, double r, const TorusGrid& g);

// Grid representation of an r-local modulus h(y) = sup over a ball around y.
// Values are node maxima over a search ball enlarged by one cell diagonal,
// inflated by (sqrt(d)/n) times the next-derivative maximum over the same
// ball. Off-grid evaluation uses the nearest node, which keeps h an upper
// bound for the continuous supremum.
struct ModulusField {
    TorusGrid grid;
    std::vector<double> v;
    double radius = 0;

    double eval(const Point& y) const { return v[grid.nearest(y)]; }
    double lp_norm(double p) const;
    ScalarField as_field() const;
};

// Max of f over nodes within distance R of each node (periodic).
std::vector<double> ball_max(const std::vector<double>& f, const TorusGrid& g, double R);

ModulusField modulus_from_samples(const std::vector<double>& base, const std::vector<double>& next,
                                  const TorusGrid& g, double ball_radius);

// Throws DomainError unless 0 < r < 1/2 and n >= 16/r.
void check_resolution(double r, const TorusGrid& g);

// psi_r: modulus of chi_r over B_r; eta_r: modulus of psi_r over B_2r.
ModulusField psi_r(const Mollifier& chi, double r, const TorusGrid& g);
ModulusField eta_r(const Mollifier& chi, double r, const TorusGrid& g);

}  // namespace vpme
