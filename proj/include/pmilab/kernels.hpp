#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace pmilab::kernels {

// Dense inner loops of the scorer. Every routine has a scalar reference
// version; wider variants must agree with it to rounding.

using AxpyFn = void (*)(double alpha, const double* x, double* y, std::size_t n);
using DotFn = double (*)(const double* x, const double* y, std::size_t n);
using PreluFn = void (*)(double slope, const double* z, double* out, std::size_t n);
using PreluBackwardFn = void (*)(double slope, const double* z, const double* grad_out,
                                 double* grad_in, std::size_t n);

struct KernelTable {
    std::string_view name;
    AxpyFn axpy;                     // y += alpha * x
    DotFn dot;                       // sum x[k] * y[k]
    PreluFn prelu;                   // out = z > 0 ? z : slope * z
    PreluBackwardFn prelu_backward;  // grad_in = grad_out * (z > 0 ? 1 : slope)
};

namespace scalar {
void axpy(double alpha, const double* x, double* y, std::size_t n);
double dot(const double* x, const double* y, std::size_t n);
void prelu(double slope, const double* z, double* out, std::size_t n);
void prelu_backward(double slope, const double* z, const double* grad_out, double* grad_in,
                    std::size_t n);
}  // namespace scalar

#if defined(PMILAB_HAVE_AVX2)
namespace avx2 {
void axpy(double alpha, const double* x, double* y, std::size_t n);
double dot(const double* x, const double* y, std::size_t n);
void prelu(double slope, const double* z, double* out, std::size_t n);
void prelu_backward(double slope, const double* z, const double* grad_out, double* grad_in,
                    std::size_t n);
}  // namespace avx2
#endif

const KernelTable& scalar_table() noexcept;

/// True when the AVX2 variant is compiled in and the CPU reports AVX2+FMA.
bool avx2_available() noexcept;

/// Kernel tables usable on this machine, scalar first.
std::vector<const KernelTable*> available_tables();

/// The table used by the scorer. Picked on first use: the widest
/// available variant, unless PMILAB_KERNELS names one ("scalar", "avx2").
const KernelTable& active() noexcept;

/// Overrides the active table. Throws Error(usage) for an unknown or
/// unavailable name.
void select(std::string_view name);

}  // namespace pmilab::kernels
