#pragma once

#include <complex>
#include <functional>
#include <memory>
#include <vector>

#include <fftw3.h>

#include "vpme/torus.hpp"

namespace vpme {

using cplx = std::complex<double>;

template <class T>
struct FftwAllocator {
    using value_type = T;
    FftwAllocator() = default;
    template <class U>
    FftwAllocator(const FftwAllocator<U>&) {}
    T* allocate(std::size_t n) {
        void* p = fftw_malloc(n * sizeof(T));
        if (!p) throw std::bad_alloc();
        return static_cast<T*>(p);
    }
    void deallocate(T* p, std::size_t) { fftw_free(p); }
    template <class U>
    bool operator==(const FftwAllocator<U>&) const { return true; }
};

template <class T>
using AlignedVec = std::vector<T, FftwAllocator<T>>;

// Integer wavenumbers of a half-spectrum entry.
using Wave = std::array<int, 3>;

// Real-to-complex transforms on one grid. Plans are shared and created once
// per (d, n); execution is reentrant with caller-owned workspaces.
class Spectral {
public:
    struct Workspace {
        AlignedVec<double> real;
        AlignedVec<cplx> spec;
    };

    static const Spectral& of(const TorusGrid& g);
    ~Spectral();

    const TorusGrid& grid() const { return grid_; }
    std::size_t spectrum_size() const { return nspec_; }
    Workspace workspace() const;

    // ws.spec = DFT(in).
    void forward(const double* in, Workspace& ws) const;
    // out = DFT^{-1}(ws.spec) / n^d. Destroys ws.spec.
    void backward(Workspace& ws, double* out) const;

    Wave wave(std::size_t k) const;
    const std::vector<Wave>& waves() const { return waves_; }
    // True when some axis sits at the Nyquist wavenumber n/2.
    bool nyquist(std::size_t k, int axis) const;

    // out = f convolved with the multiplier m(k); m is applied to DFT(f).
    void apply(const double* in, double* out, const std::function<cplx(const Wave&)>& m,
               Workspace& ws) const;

private:
    explicit Spectral(const TorusGrid& g);
    TorusGrid grid_;
    std::size_t nspec_ = 0;
    fftw_plan fwd_ = nullptr;
    fftw_plan bwd_ = nullptr;
    std::vector<Wave> waves_;
};

// Continuous Fourier coefficients c_k of grid samples whose origin sits at
// node n/2 (the grid covers [-1/2,1/2)^d).
std::vector<cplx> fourier_coefficients(const ScalarField& f);
// Samples of the band-limited function with coefficients c (half spectrum).
ScalarField from_coefficients(const TorusGrid& g, const std::vector<cplx>& c);

}  // namespace vpme
