#pragma once

#include "vpme/spectral.hpp"
#include "vpme/torus.hpp"

namespace vpme {

// Periodic cubic B-spline interpolant; interpolates the grid samples exactly
// and is C^2 everywhere.
struct SplineField {
    TorusGrid grid;
    int components = 0;
    std::array<std::vector<double>, 3> coef;

    double eval(const Point& x, int comp = 0) const;
    Point eval_vector(const Point& x) const;
};

// Symbol of the B-spline sampling operator; never zero.
double bspline_symbol(const Wave& k, const TorusGrid& g);

SplineField make_spline(const ScalarField& f);
SplineField make_spline(const VectorField& f);

}  // namespace vpme
