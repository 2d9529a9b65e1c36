#include "vpme/spectral.hpp"

#include <cmath>
#include <map>
#include <mutex>

namespace vpme {

namespace {
std::mutex planner_mutex;
}

const Spectral& Spectral::of(const TorusGrid& g) {
    static std::map<std::pair<int, int>, std::unique_ptr<Spectral>> cache;
    std::lock_guard<std::mutex> lock(planner_mutex);
    auto key = std::make_pair(g.dim, g.n);
    auto it = cache.find(key);
    if (it == cache.end()) it = cache.emplace(key, std::unique_ptr<Spectral>(new Spectral(g))).first;
    return *it->second;
}

Spectral::Spectral(const TorusGrid& g) : grid_(g) {
    int dims[3] = {g.n, g.n, g.n};
    nspec_ = 1;
    for (int a = 0; a < g.dim - 1; ++a) nspec_ *= g.n;
    nspec_ *= g.n / 2 + 1;
    auto ws = workspace();
    // ESTIMATE keeps plan choice, and hence rounding, identical across runs.
    fwd_ = fftw_plan_dft_r2c(g.dim, dims, ws.real.data(), reinterpret_cast<fftw_complex*>(ws.spec.data()),
                             FFTW_ESTIMATE);
    bwd_ = fftw_plan_dft_c2r(g.dim, dims, reinterpret_cast<fftw_complex*>(ws.spec.data()), ws.real.data(),
                             FFTW_ESTIMATE | FFTW_DESTROY_INPUT);
    waves_.resize(nspec_);
    int half = g.n / 2 + 1;
    for (std::size_t k = 0; k < nspec_; ++k) {
        Wave w{};
        std::size_t q = k;
        int last = static_cast<int>(q % half);
        q /= half;
        w[g.dim - 1] = last;
        for (int a = g.dim - 2; a >= 0; --a) {
            int j = static_cast<int>(q % g.n);
            q /= g.n;
            w[a] = j <= g.n / 2 ? j : j - g.n;
        }
        waves_[k] = w;
    }
}

Spectral::~Spectral() {
    if (fwd_) fftw_destroy_plan(fwd_);
    if (bwd_) fftw_destroy_plan(bwd_);
}

Spectral::Workspace Spectral::workspace() const {
    Workspace ws;
    ws.real.assign(grid_.size(), 0.0);
    ws.spec.assign(nspec_, cplx(0.0));
    return ws;
}

void Spectral::forward(const double* in, Workspace& ws) const {
    std::copy(in, in + grid_.size(), ws.real.begin());
    fftw_execute_dft_r2c(fwd_, ws.real.data(), reinterpret_cast<fftw_complex*>(ws.spec.data()));
}

void Spectral::backward(Workspace& ws, double* out) const {
    fftw_execute_dft_c2r(bwd_, reinterpret_cast<fftw_complex*>(ws.spec.data()), ws.real.data());
    const double scale = 1.0 / static_cast<double>(grid_.size());
    for (std::size_t i = 0; i < grid_.size(); ++i) out[i] = ws.real[i] * scale;
}

Wave Spectral::wave(std::size_t k) const { return waves_[k]; }

bool Spectral::nyquist(std::size_t k, int axis) const {
    int w = waves_[k][axis];
    return w == grid_.n / 2 || w == -grid_.n / 2;
}

void Spectral::apply(const double* in, double* out, const std::function<cplx(const Wave&)>& m,
                     Workspace& ws) const {
    forward(in, ws);
    for (std::size_t k = 0; k < nspec_; ++k) ws.spec[k] *= m(waves_[k]);
    backward(ws, out);
}

namespace {
double parity(const Wave& w) { return ((w[0] + w[1] + w[2]) & 1) ? -1.0 : 1.0; }
}  // namespace

std::vector<cplx> fourier_coefficients(const ScalarField& f) {
    const Spectral& sp = Spectral::of(f.grid);
    auto ws = sp.workspace();
    sp.forward(f.v.data(), ws);
    std::vector<cplx> c(sp.spectrum_size());
    const double scale = 1.0 / static_cast<double>(f.grid.size());
    for (std::size_t k = 0; k < c.size(); ++k) c[k] = ws.spec[k] * (scale * parity(sp.wave(k)));
    return c;
}

ScalarField from_coefficients(const TorusGrid& g, const std::vector<cplx>& c) {
    const Spectral& sp = Spectral::of(g);
    auto ws = sp.workspace();
    const double scale = static_cast<double>(g.size());
    for (std::size_t k = 0; k < c.size(); ++k) ws.spec[k] = c[k] * (scale * parity(sp.wave(k)));
    ScalarField out(g);
    sp.backward(ws, out.v.data());
    return out;
}

}  // namespace vpme
