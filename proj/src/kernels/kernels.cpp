#include "ssae/kernels.hpp"

#include <cstdlib>
#include <string>

#include "ssae/errors.hpp"

namespace ssae::kernels {

namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void gemv_scalar(const double* a, std::size_t rows, std::size_t cols, const double* x, double* y) {
    for (std::size_t i = 0; i < rows; ++i) y[i] += dot_scalar(a + i * cols, x, cols);
}

constexpr KernelTable kScalar{Isa::scalar, &dot_scalar, &axpy_scalar, &gemv_scalar};

}  // namespace

#if !defined(SSAE_HAVE_AVX2_KERNELS)
const KernelTable* avx2_table() { return nullptr; }
#endif
#if !defined(SSAE_HAVE_NEON_KERNELS)
const KernelTable* neon_table() { return nullptr; }
#endif

const KernelTable& scalar_table() { return kScalar; }

std::string_view isa_name(Isa isa) {
    switch (isa) {
        case Isa::scalar: return "scalar";
        case Isa::avx2: return "avx2";
        case Isa::neon: return "neon";
    }
    return "unknown";
}

bool isa_supported(Isa isa) {
    switch (isa) {
        case Isa::scalar: return true;
        case Isa::avx2:
#if defined(SSAE_HAVE_AVX2_KERNELS)
            return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
            return false;
#endif
        case Isa::neon: return neon_table() != nullptr;
    }
    return false;
}

namespace {

const KernelTable* table_for(Isa isa) {
    switch (isa) {
        case Isa::scalar: return &kScalar;
        case Isa::avx2: return avx2_table();
        case Isa::neon: return neon_table();
    }
    return nullptr;
}

const KernelTable* detect() {
    if (const char* env = std::getenv("SSAE_KERNELS")) {
        const std::string_view want(env);
        for (Isa isa : {Isa::scalar, Isa::avx2, Isa::neon}) {
            if (want == isa_name(isa) && isa_supported(isa)) return table_for(isa);
        }
    }
    if (isa_supported(Isa::avx2)) return avx2_table();
    if (isa_supported(Isa::neon)) return neon_table();
    return &kScalar;
}

const KernelTable*& current() {
    static const KernelTable* table = detect();
    return table;
}

}  // namespace

Isa active_isa() { return current()->isa; }

void set_isa(Isa isa) {
    if (!isa_supported(isa)) {
        throw ContractError("kernel variant not supported on this CPU: " + std::string(isa_name(isa)));
    }
    current() = table_for(isa);
}

const KernelTable& active() { return *current(); }

double dot(std::span<const double> a, std::span<const double> b) {
    require(a.size() == b.size(), "dot: length mismatch");
    return current()->dot(a.data(), b.data(), a.size());
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    require(x.size() == y.size(), "axpy: length mismatch");
    current()->axpy(alpha, x.data(), y.data(), x.size());
}

void gemv(ConstMatrixView a, std::span<const double> x, std::span<double> y) {
    require(a.cols == x.size() && a.rows == y.size(), "gemv: shape mismatch");
    current()->gemv(a.data.data(), a.rows, a.cols, x.data(), y.data());
}

void gemv_t(ConstMatrixView a, std::span<const double> x, std::span<double> y) {
    require(a.rows == x.size() && a.cols == y.size(), "gemv_t: shape mismatch");
    const auto* k = current();
    for (std::size_t i = 0; i < a.rows; ++i) {
        if (x[i] != 0.0) k->axpy(x[i], a.data.data() + i * a.cols, y.data(), a.cols);
    }
}

void ger(double alpha, std::span<const double> x, std::span<const double> y, Matrix& a) {
    require(a.rows() == x.size() && a.cols() == y.size(), "ger: shape mismatch");
    const auto* k = current();
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double s = alpha * x[i];
        if (s != 0.0) k->axpy(s, y.data(), a.row(i).data(), y.size());
    }
}

}  // namespace ssae::kernels
