#include "vpme/ensemble.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <random>

#include <boost/math/special_functions/erf.hpp>

namespace vpme {

void InitialDatum::validate() const {
    if (dim < 1 || dim > 3) throw DomainError("dimension must be 1, 2 or 3");
    if (!(theta > 0)) throw DomainError("temperature must be positive");
    if (!(amplitude >= 0 && amplitude < 1)) throw DomainError("perturbation amplitude must lie in [0, 1)");
}

double InitialDatum::vmax() const { return 8.0 * std::sqrt(theta); }

double InitialDatum::spatial_density(const Point& x) const {
    double p = 1.0;
    for (int a = 0; a < dim; ++a) p *= 1.0 + amplitude * std::cos(2.0 * M_PI * x[a]);
    return p;
}

double InitialDatum::density_sup() const { return std::pow(1.0 + amplitude, dim); }

ScalarField InitialDatum::marginal(const TorusGrid& g) const {
    return sample(g, [&](const Point& x) { return spatial_density(x); });
}

double inverse_axis_cdf(double u, double a) {
    if (a == 0) return wrap(u - 0.5);
    auto F = [a](double x) { return x + 0.5 + a * std::sin(2.0 * M_PI * x) / (2.0 * M_PI); };
    double lo = -0.5, hi = 0.5, x = u - 0.5;
    // Newton steps kept inside a shrinking bisection bracket.
    while (hi - lo > 1e-14) {
        double fx = F(x) - u;
        if (fx > 0) hi = x; else lo = x;
        double dfx = 1.0 + a * std::cos(2.0 * M_PI * x);
        double nx = x - fx / dfx;
        if (!(nx > lo && nx < hi) || std::abs(fx) < 1e-16) nx = 0.5 * (lo + hi);
        if (std::abs(fx) < 1e-16) break;
        x = nx;
    }
    return wrap(x);
}

Point ParticleEnsemble::position(std::size_t i) const {
    Point p{};
    for (int a = 0; a < dim; ++a) p[a] = x[i * dim + a];
    return p;
}

Point ParticleEnsemble::velocity(std::size_t i) const {
    Point p{};
    for (int a = 0; a < dim; ++a) p[a] = v[i * dim + a];
    return p;
}

uint64_t derive_seed(uint64_t master, uint64_t stream, uint64_t index) {
    auto mix = [](uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    };
    return mix(mix(mix(master) ^ stream) ^ index);
}

ParticleEnsemble sample_iid(const InitialDatum& f0, std::size_t N, uint64_t seed) {
    f0.validate();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, std::sqrt(f0.theta));
    ParticleEnsemble e;
    e.dim = f0.dim;
    e.x.resize(N * f0.dim);
    e.v.resize(N * f0.dim);
    const double vmax = f0.vmax();
    for (std::size_t i = 0; i < N; ++i) {
        for (int a = 0; a < f0.dim; ++a) e.x[i * f0.dim + a] = inverse_axis_cdf(unif(rng), f0.amplitude);
        for (;;) {
            double s = 0;
            for (int a = 0; a < f0.dim; ++a) {
                double w = gauss(rng);
                e.v[i * f0.dim + a] = w;
                s += w * w;
            }
            if (std::sqrt(s) <= vmax) break;
        }
    }
    return e;
}

namespace {
double radical_inverse(std::size_t i, unsigned base) {
    double inv = 1.0 / base, f = inv, r = 0;
    while (i > 0) {
        r += f * static_cast<double>(i % base);
        i /= base;
        f *= inv;
    }
    return r;
}
}  // namespace

ParticleEnsemble sample_quiet(const InitialDatum& f0, std::size_t N) {
    f0.validate();
    std::size_t m = static_cast<std::size_t>(std::llround(std::pow(static_cast<double>(N), 1.0 / f0.dim)));
    std::size_t total = 1;
    for (int a = 0; a < f0.dim; ++a) total *= m;
    if (total != N) throw DomainError("quiet sampling needs a perfect d-th power");
    ParticleEnsemble e;
    e.dim = f0.dim;
    e.x.resize(N * f0.dim);
    e.v.resize(N * f0.dim);
    static const unsigned bases[3] = {2, 3, 5};
    const double vmax = f0.vmax(), sd = std::sqrt(f0.theta);
    for (std::size_t i = 0; i < N; ++i) {
        std::size_t q = i;
        for (int a = f0.dim - 1; a >= 0; --a) {
            double u = (static_cast<double>(q % m) + 0.5) / m;
            q /= m;
            e.x[i * f0.dim + a] = inverse_axis_cdf(u, f0.amplitude);
        }
        double s = 0;
        for (int a = 0; a < f0.dim; ++a) {
            double u = radical_inverse(i + 1, bases[a]);
            double w = sd * std::sqrt(2.0) * boost::math::erf_inv(2.0 * u - 1.0);
            e.v[i * f0.dim + a] = w;
            s += w * w;
        }
        if (std::sqrt(s) > vmax)
            for (int a = 0; a < f0.dim; ++a) e.v[i * f0.dim + a] *= vmax / std::sqrt(s);
    }
    return e;
}

double deposit_into(const double* x, std::size_t N, double r, const TorusGrid& g, const Mollifier& chi,
                    std::vector<double>& out, bool normalize) {
    check_resolution(r, g);
    const int d = g.dim, n = g.n;
    out.assign(g.size(), 0.0);
    const double inv_r2 = 1.0 / (r * r);
    const int reach = static_cast<int>(std::ceil(r * n)) + 1;
    const int span = 2 * reach + 1;
    std::vector<double> t2(3 * span);
    std::vector<std::size_t> id(3 * span);
    for (std::size_t j = 0; j < N; ++j) {
        for (int a = 0; a < d; ++a) {
            double u = (x[j * d + a] + 0.5) * n;
            int c = static_cast<int>(std::floor(u));
            for (int s = 0; s < span; ++s) {
                int node = c - reach + s;
                double dx = (node - u) / n;
                t2[a * span + s] = dx * dx * inv_r2;
                id[a * span + s] = static_cast<std::size_t>(((node % n) + n) % n);
            }
        }
        if (d == 1) {
            for (int s = 0; s < span; ++s) {
                double t = t2[s];
                if (t < 1.0) out[id[s]] += chi.profile_fast(t);
            }
        } else if (d == 2) {
            for (int s = 0; s < span; ++s) {
                double t0 = t2[s];
                if (t0 >= 1.0) continue;
                double* row = &out[id[s] * n];
                for (int q = 0; q < span; ++q) {
                    double t = t0 + t2[span + q];
                    if (t < 1.0) row[id[span + q]] += chi.profile_fast(t);
                }
            }
        } else {
            for (int s = 0; s < span; ++s) {
                double t0 = t2[s];
                if (t0 >= 1.0) continue;
                for (int q = 0; q < span; ++q) {
                    double t1 = t0 + t2[span + q];
                    if (t1 >= 1.0) continue;
                    double* row = &out[(id[s] * n + id[span + q]) * n];
                    for (int w = 0; w < span; ++w) {
                        double t = t1 + t2[2 * span + w];
                        if (t < 1.0) row[id[2 * span + w]] += chi.profile_fast(t);
                    }
                }
            }
        }
    }
    const double scale = 1.0 / (std::pow(r, d) * static_cast<double>(N));
    double sum = 0;
    for (double& v : out) {
        v *= scale;
        sum += v;
    }
    const double mass = sum * g.cell_volume();
    if (normalize)
        for (double& v : out) v /= mass;
    return mass;
}

ScalarField deposit(const ParticleEnsemble& ens, double r, const TorusGrid& g, const Mollifier& chi) {
    if (ens.dim != g.dim) throw DomainError("ensemble and grid dimensions differ");
    ScalarField f(g);
    deposit_into(ens.x.data(), ens.size(), r, g, chi, f.v);
    return f;
}

std::vector<double> empirical_convolution(const std::function<double(const Point&)>& g, const ParticleEnsemble& ens,
                                          const std::vector<Point>& mesh) {
    std::vector<double> out(mesh.size(), 0.0);
    const std::size_t N = ens.size();
    for (std::size_t m = 0; m < mesh.size(); ++m) {
        double s = 0;
        for (std::size_t j = 0; j < N; ++j) s += g(displacement(mesh[m], ens.position(j), ens.dim));
        out[m] = s / static_cast<double>(N);
    }
    return out;
}

void write_csv(std::ostream& os, int trial, const ParticleEnsemble& ens, bool header) {
    if (header) {
        os << "trial,particle";
        for (int a = 1; a <= ens.dim; ++a) os << ",x" << a;
        for (int a = 1; a <= ens.dim; ++a) os << ",v" << a;
        os << '\n';
    }
    char buf[32];
    for (std::size_t i = 0; i < ens.size(); ++i) {
        os << trial << ',' << i;
        for (int a = 0; a < ens.dim; ++a) {
            std::snprintf(buf, sizeof buf, "%.17g", ens.x[i * ens.dim + a]);
            os << ',' << buf;
        }
        for (int a = 0; a < ens.dim; ++a) {
            std::snprintf(buf, sizeof buf, "%.17g", ens.v[i * ens.dim + a]);
            os << ',' << buf;
        }
        os << '\n';
    }
}

}  // namespace vpme
