#include <atomic>
#include <cstdlib>
#include <string>

#include "pmilab/error.hpp"
#include "pmilab/kernels.hpp"

namespace pmilab::kernels {

namespace scalar {

void axpy(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) y[k] += alpha * x[k];
}

double dot(const double* x, const double* y, std::size_t n) {
    double sum = 0.0;
    for (std::size_t k = 0; k < n; ++k) sum += x[k] * y[k];
    return sum;
}

void prelu(double slope, const double* z, double* out, std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) out[k] = z[k] > 0.0 ? z[k] : slope * z[k];
}

void prelu_backward(double slope, const double* z, const double* grad_out, double* grad_in,
                    std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) grad_in[k] = z[k] > 0.0 ? grad_out[k] : slope * grad_out[k];
}

}  // namespace scalar

namespace {

constexpr KernelTable kScalar{"scalar", scalar::axpy, scalar::dot, scalar::prelu,
                              scalar::prelu_backward};

#if defined(PMILAB_HAVE_AVX2)
constexpr KernelTable kAvx2{"avx2", avx2::axpy, avx2::dot, avx2::prelu, avx2::prelu_backward};
#endif

const KernelTable* lookup(std::string_view name) {
    if (name == "scalar") return &kScalar;
#if defined(PMILAB_HAVE_AVX2)
    if (name == "avx2" && avx2_available()) return &kAvx2;
#endif
    return nullptr;
}

const KernelTable* initial_table() noexcept {
    if (const char* forced = std::getenv("PMILAB_KERNELS")) {
        if (const KernelTable* table = lookup(forced)) return table;
    }
    return available_tables().back();
}

std::atomic<const KernelTable*>& current() {
    static std::atomic<const KernelTable*> table{initial_table()};
    return table;
}

}  // namespace

const KernelTable& scalar_table() noexcept { return kScalar; }

bool avx2_available() noexcept {
#if defined(PMILAB_HAVE_AVX2)
    static const bool ok = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
    return ok;
#else
    return false;
#endif
}

std::vector<const KernelTable*> available_tables() {
    std::vector<const KernelTable*> tables{&kScalar};
#if defined(PMILAB_HAVE_AVX2)
    if (avx2_available()) tables.push_back(&kAvx2);
#endif
    return tables;
}

const KernelTable& active() noexcept { return *current().load(std::memory_order_relaxed); }

void select(std::string_view name) {
    const KernelTable* table = lookup(name);
    if (table == nullptr) {
        fail(ErrorKind::usage, "kernel set '" + std::string(name) + "' is not available");
    }
    current().store(table, std::memory_order_relaxed);
}

}  // namespace pmilab::kernels
