#include "vpme/mollifier.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace vpme {

namespace {

constexpr int kTableIntervals = 8192;

double sphere_area(int d) {
    switch (d) {
        case 1: return 2.0;
        case 2: return 2.0 * M_PI;
        default: return 4.0 * M_PI;
    }
}

double raw_profile(double t) { return t < 1.0 ? std::exp(-1.0 / (1.0 - t)) : 0.0; }

}  // namespace

Mollifier::Mollifier(int d) : d_(d) {
    if (d < 1 || d > 3) throw DomainError("dimension must be 1, 2 or 3");
    auto radial = [d](double s) { return raw_profile(s * s) * std::pow(s, d - 1); };
    double err = 0;
    double mass = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(radial, 0.0, 1.0, 20, 1e-14, &err);
    c_ = 1.0 / (sphere_area(d) * mass);

    table_step_ = 1.0 / kTableIntervals;
    table_.resize(2 * (kTableIntervals + 1));
    for (int i = 0; i <= kTableIntervals; ++i) {
        double t = i * table_step_;
        auto p = profile_derivatives(t);
        table_[2 * i] = p[0];
        table_[2 * i + 1] = p[1] * table_step_;
    }
}

double Mollifier::profile(double t) const { return c_ * raw_profile(t); }

std::array<double, 4> Mollifier::profile_derivatives(double t) const {
    if (t >= 1.0) return {0, 0, 0, 0};
    double q = 1.0 / (1.0 - t);
    double p = c_ * std::exp(-q);
    double q2 = q * q, q3 = q2 * q, q4 = q2 * q2;
    return {p, -q2 * p, (q4 - 2.0 * q3) * p, (-q4 * q2 + 6.0 * q4 * q - 6.0 * q4) * p};
}

double Mollifier::profile_fast(double t) const {
    if (t >= 1.0) return 0.0;
    double u = t * kTableIntervals;
    int i = static_cast<int>(u);
    double s = u - i;
    const double* e = &table_[2 * i];
    double p0 = e[0], m0 = e[1], p1 = e[2], m1 = e[3];
    double s2 = s * s, s3 = s2 * s;
    return (2 * s3 - 3 * s2 + 1) * p0 + (s3 - 2 * s2 + s) * m0 + (-2 * s3 + 3 * s2) * p1 + (s3 - s2) * m1;
}

double Mollifier::value_r(double r, const Point& x) const {
    double t = 0;
    for (int a = 0; a < d_; ++a) t += x[a] * x[a];
    return profile(t / (r * r)) / std::pow(r, d_);
}

Point Mollifier::gradient_r(double r, const Point& x) const {
    double t = 0;
    for (int a = 0; a < d_; ++a) t += x[a] * x[a];
    auto p = profile_derivatives(t / (r * r));
    double s = 2.0 * p[1] / std::pow(r, d_ + 2);
    Point g{};
    for (int a = 0; a < d_; ++a) g[a] = s * x[a];
    return g;
}

double Mollifier::derivative_norm_r(int m, double r, const Point& x) const {
    Point y{};
    for (int a = 0; a < d_; ++a) y[a] = x[a] / r;
    double t = y[0] * y[0] + y[1] * y[1] + y[2] * y[2];
    auto p = profile_derivatives(t);
    double a1 = p[1], a2 = p[2], a3 = p[3];
    double val = 0;
    if (m == 1) {
        val = 2.0 * std::sqrt(t) * std::abs(a1);
    } else if (m == 2) {
        val = 4.0 * d_ * a1 * a1 + 16.0 * a1 * a2 * t + 16.0 * a2 * a2 * t * t;
        val = std::sqrt(std::max(val, 0.0));
    } else if (m == 3) {
        val = 16.0 * (3.0 * d_ + 6.0) * t * a2 * a2 + 192.0 * t * t * a2 * a3 + 64.0 * t * t * t * a3 * a3;
        val = std::sqrt(std::max(val, 0.0));
    } else {
        throw DomainError("derivative order must be 1, 2 or 3");
    }
    return val / std::pow(r, d_ + m);
}

double chi_r(const Mollifier& chi, double r, const Point& x) {
    if (!(r > 0 && r < 0.5)) throw DomainError("mollification radius must lie in (0, 1/2)");
    return chi.value_r(r, wrap(x, chi.dim()));
}

ScalarField sample_chi_r(const Mollifier& chi, double r, const TorusGrid& g) {
    if (!(r > 0 && r < 0.5)) throw DomainError("mollification radius must lie in (0, 1/2)");
    return sample(g, [&](const Point& y) { return chi.value_r(r, y); });
}

double ModulusField::lp_norm(double p) const { return as_field().lp_norm(p); }

ScalarField ModulusField::as_field() const {
    ScalarField f(grid);
    f.v = v;
    return f;
}

namespace {

// Periodic sliding max with half-width w over every row along the last axis.
void row_max(const std::vector<double>& f, std::vector<double>& out, int n, int w) {
    const std::size_t rows = f.size() / n;
    out.resize(f.size());
    if (2 * w + 1 >= n) {
        for (std::size_t r = 0; r < rows; ++r) {
            const double* src = &f[r * n];
            double m = *std::max_element(src, src + n);
            std::fill(out.begin() + r * n, out.begin() + (r + 1) * n, m);
        }
        return;
    }
    const int k = 2 * w + 1;
    const int L = n + 2 * w;
    std::vector<double> e(L), pre(L), suf(L);
    for (std::size_t r = 0; r < rows; ++r) {
        const double* src = &f[r * n];
        for (int i = 0; i < L; ++i) e[i] = src[((i - w) % n + n) % n];
        for (int i = 0; i < L; ++i) pre[i] = (i % k == 0) ? e[i] : std::max(pre[i - 1], e[i]);
        for (int i = L - 1; i >= 0; --i)
            suf[i] = (i == L - 1 || (i + 1) % k == 0) ? e[i] : std::max(suf[i + 1], e[i]);
        double* dst = &out[r * n];
        for (int i = 0; i < n; ++i) dst[i] = std::max(suf[i], pre[i + k - 1]);
    }
}

}  // namespace

std::vector<double> ball_max(const std::vector<double>& f, const TorusGrid& g, double R) {
    const int n = g.n;
    const double h = g.spacing();
    const double Rh = R / h + 1e-9;
    const int reach = static_cast<int>(std::floor(Rh));
    // Chords along the last axis, grouped by half-width.
    std::map<int, std::vector<std::array<int, 2>>> chords;
    const int lo = -reach, hi = reach;
    if (g.dim == 1) {
        chords[reach].push_back({0, 0});
    } else if (g.dim == 2) {
        for (int a = lo; a <= hi; ++a) {
            double rem = Rh * Rh - double(a) * a;
            if (rem < 0) continue;
            chords[static_cast<int>(std::floor(std::sqrt(rem)))].push_back({a, 0});
        }
    } else {
        for (int a = lo; a <= hi; ++a)
            for (int b = lo; b <= hi; ++b) {
                double rem = Rh * Rh - double(a) * a - double(b) * b;
                if (rem < 0) continue;
                chords[static_cast<int>(std::floor(std::sqrt(rem)))].push_back({a, b});
            }
    }
    std::vector<double> out(f.size(), -INFINITY), rm;
    const std::size_t N = n;
    for (auto& [w, offs] : chords) {
        row_max(f, rm, n, w);
        for (auto& o : offs) {
            if (g.dim == 1) {
                for (std::size_t i = 0; i < N; ++i) out[i] = std::max(out[i], rm[i]);
            } else if (g.dim == 2) {
                for (std::size_t i = 0; i < N; ++i) {
                    std::size_t src = ((i + o[0]) % N + N) % N;
                    const double* s = &rm[src * N];
                    double* d = &out[i * N];
                    for (std::size_t j = 0; j < N; ++j) d[j] = std::max(d[j], s[j]);
                }
            } else {
                for (std::size_t i = 0; i < N; ++i)
                    for (std::size_t j = 0; j < N; ++j) {
                        std::size_t si = ((i + o[0]) % N + N) % N;
                        std::size_t sj = ((j + o[1]) % N + N) % N;
                        const double* s = &rm[(si * N + sj) * N];
                        double* d = &out[(i * N + j) * N];
                        for (std::size_t k = 0; k < N; ++k) d[k] = std::max(d[k], s[k]);
                    }
            }
        }
    }
    return out;
}

ModulusField modulus_from_samples(const std::vector<double>& base, const std::vector<double>& next,
                                  const TorusGrid& g, double ball_radius) {
    const double diag = std::sqrt(static_cast<double>(g.dim)) / g.n;
    const double R = ball_radius + diag;
    ModulusField m;
    m.grid = g;
    m.radius = ball_radius;
    m.v = ball_max(base, g, R);
    auto nx = ball_max(next, g, R);
    for (std::size_t i = 0; i < m.v.size(); ++i) m.v[i] += diag * nx[i];
    return m;
}

void check_resolution(double r, const TorusGrid& g) {
    if (!(r > 0 && r < 0.5)) throw DomainError("mollification radius must lie in (0, 1/2)");
    if (g.n < 16.0 / r - 1e-9) throw DomainError("grid too coarse: need n >= 16/r");
}

namespace {

ModulusField chi_modulus(const Mollifier& chi, double r, const TorusGrid& g, int order, double ball) {
    check_resolution(r, g);
    std::vector<double> base(g.size()), next(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        Point y = g.node(i);
        base[i] = chi.derivative_norm_r(order, r, y);
        next[i] = chi.derivative_norm_r(order + 1, r, y);
    }
    return modulus_from_samples(base, next, g, ball);
}

}  // namespace

ModulusField psi_r(const Mollifier& chi, double r, const TorusGrid& g) { return chi_modulus(chi, r, g, 1, r); }

ModulusField eta_r(const Mollifier& chi, double r, const TorusGrid& g) { return chi_modulus(chi, r, g, 2, 2 * r); }

}  // namespace vpme
