#include "vpme/kernels.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

namespace vpme {

static_assert(std::endian::native == std::endian::little, "kernel cache assumes a little-endian host");

cplx green_coefficient(const Wave& k) {
    double k2 = double(k[0]) * k[0] + double(k[1]) * k[1] + double(k[2]) * k[2];
    return k2 == 0 ? cplx(0.0) : cplx(1.0 / (4.0 * M_PI * M_PI * k2));
}

namespace {

std::vector<cplx> green_coefficients(const TorusGrid& g) {
    const Spectral& sp = Spectral::of(g);
    std::vector<cplx> c(sp.spectrum_size());
    for (std::size_t k = 0; k < c.size(); ++k) c[k] = green_coefficient(sp.wave(k));
    return c;
}

VectorField minus_gradient_samples(const TorusGrid& g, const std::vector<cplx>& c) {
    const Spectral& sp = Spectral::of(g);
    VectorField out(g);
    std::vector<cplx> ca(c.size());
    for (int a = 0; a < g.dim; ++a) {
        for (std::size_t k = 0; k < c.size(); ++k)
            ca[k] = sp.nyquist(k, a) ? cplx(0.0) : c[k] * cplx(0.0, -2.0 * M_PI * sp.wave(k)[a]);
        out.c[a] = from_coefficients(g, ca).v;
    }
    return out;
}

void multi_indices(int dim, int m, std::array<int, 3>& cur, int axis, std::vector<std::array<int, 3>>& out) {
    if (axis == dim - 1) {
        cur[axis] = m;
        out.push_back(cur);
        cur[axis] = 0;
        return;
    }
    for (int j = 0; j <= m; ++j) {
        cur[axis] = j;
        multi_indices(dim, m - j, cur, axis + 1, out);
    }
    cur[axis] = 0;
}

double factorial(int m) {
    double f = 1;
    for (int i = 2; i <= m; ++i) f *= i;
    return f;
}

}  // namespace

std::vector<double> derivative_norm(const TorusGrid& g, const std::vector<cplx>& coef, int m) {
    const Spectral& sp = Spectral::of(g);
    std::vector<std::array<int, 3>> alphas;
    std::array<int, 3> cur{};
    multi_indices(g.dim, m, cur, 0, alphas);
    std::vector<double> acc(g.size(), 0.0);
    std::vector<cplx> ca(coef.size());
    for (auto& al : alphas) {
        double mult = factorial(m);
        for (int a = 0; a < g.dim; ++a) mult /= factorial(al[a]);
        for (std::size_t k = 0; k < coef.size(); ++k) {
            cplx f = coef[k];
            const Wave& w = sp.waves()[k];
            for (int a = 0; a < g.dim; ++a) {
                if (al[a] == 0) continue;
                if ((al[a] & 1) && sp.nyquist(k, a)) {
                    f = 0;
                    break;
                }
                f *= std::pow(cplx(0.0, 2.0 * M_PI * w[a]), al[a]);
            }
            ca[k] = f;
        }
        auto s = from_coefficients(g, ca);
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += mult * s.v[i] * s.v[i];
    }
    for (double& x : acc) x = std::sqrt(x);
    return acc;
}

ScalarField green(int d, int n) {
    TorusGrid g = make_grid(d, n);
    return from_coefficients(g, green_coefficients(g));
}

VectorField kernel(int d, int n) {
    TorusGrid g = make_grid(d, n);
    return minus_gradient_samples(g, green_coefficients(g));
}

KernelFamily::KernelFamily(int d, int n, std::vector<double> radii) : grid_(make_grid(d, n)), radii_(std::move(radii)) {
    for (double r : radii_) check_resolution(r, grid_);
    entries_.resize(radii_.size());
    for (std::size_t i = 0; i < radii_.size(); ++i) build(i);
}

std::vector<cplx> KernelFamily::smoothed_green_coefficients(double r) const {
    Mollifier chi(grid_.dim);
    auto cchi = fourier_coefficients(sample_chi_r(chi, r, grid_));
    auto cg = green_coefficients(grid_);
    for (std::size_t k = 0; k < cg.size(); ++k) cg[k] *= cchi[k];
    return cg;
}

void KernelFamily::build(std::size_t i) {
    const double r = radii_[i];
    auto c = smoothed_green_coefficients(r);
    Entry& e = entries_[i];
    e.Kr = minus_gradient_samples(grid_, c);
    e.spline = make_spline(e.Kr);
    auto d2 = derivative_norm(grid_, c, 2);
    auto d3 = derivative_norm(grid_, c, 3);
    e.moduli.L = modulus_from_samples(d2, d3, grid_, r);
    auto d4 = derivative_norm(grid_, c, 4);
    e.moduli.Q = modulus_from_samples(d3, d4, grid_, 2 * r);
}

std::size_t KernelFamily::slot(double r) const {
    for (std::size_t i = 0; i < radii_.size(); ++i)
        if (std::abs(radii_[i] - r) <= 1e-12 * r) return i;
    throw DomainError("radius not present in kernel family");
}

const VectorField& KernelFamily::K_r(double r) const { return entries_[slot(r)].Kr; }
const SplineField& KernelFamily::spline(double r) const { return entries_[slot(r)].spline; }
Point KernelFamily::eval_K_r(double r, const Point& x) const { return entries_[slot(r)].spline.eval_vector(x); }
const KernelModuli& KernelFamily::moduli(double r) const { return entries_[slot(r)].moduli; }

VectorField regularized_kernel(const KernelFamily& family, double r) { return family.K_r(r); }
Point eval_K_r(const KernelFamily& family, double r, const Point& x) { return family.eval_K_r(r, x); }
const KernelModuli& kernel_moduli(const KernelFamily& family, double r) { return family.moduli(r); }

namespace {
constexpr char kMagic[8] = {'V', 'P', 'M', 'E', 'K', 'R', 'N', '1'};

void write_doubles(std::ofstream& os, const std::vector<double>& v) {
    os.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
}

void read_doubles(std::ifstream& is, std::vector<double>& v, std::size_t n) {
    v.resize(n);
    is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)));
    if (!is) throw std::runtime_error("kernel cache truncated");
}
}  // namespace

void KernelFamily::save(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write kernel cache " + path);
    os.write(kMagic, sizeof kMagic);
    int32_t hdr[3] = {grid_.dim, grid_.n, static_cast<int32_t>(radii_.size())};
    os.write(reinterpret_cast<const char*>(hdr), sizeof hdr);
    write_doubles(os, radii_);
    for (const Entry& e : entries_) {
        for (int a = 0; a < grid_.dim; ++a) write_doubles(os, e.Kr.c[a]);
        write_doubles(os, e.moduli.L.v);
        write_doubles(os, e.moduli.Q.v);
    }
}

KernelFamily KernelFamily::load(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot read kernel cache " + path);
    char magic[8];
    is.read(magic, sizeof magic);
    if (!is || std::memcmp(magic, kMagic, sizeof magic) != 0) throw std::runtime_error("not a kernel cache: " + path);
    int32_t hdr[3];
    is.read(reinterpret_cast<char*>(hdr), sizeof hdr);
    KernelFamily f;
    f.grid_ = make_grid(hdr[0], hdr[1]);
    read_doubles(is, f.radii_, static_cast<std::size_t>(hdr[2]));
    f.entries_.resize(f.radii_.size());
    const std::size_t sz = f.grid_.size();
    for (std::size_t i = 0; i < f.radii_.size(); ++i) {
        Entry& e = f.entries_[i];
        e.Kr = VectorField(f.grid_);
        for (int a = 0; a < f.grid_.dim; ++a) read_doubles(is, e.Kr.c[a], sz);
        e.spline = make_spline(e.Kr);
        e.moduli.L.grid = e.moduli.Q.grid = f.grid_;
        e.moduli.L.radius = f.radii_[i];
        e.moduli.Q.radius = 2 * f.radii_[i];
        read_doubles(is, e.moduli.L.v, sz);
        read_doubles(is, e.moduli.Q.v, sz);
    }
    return f;
}

}  // namespace vpme
