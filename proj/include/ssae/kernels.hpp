#pragma once

// Inner-loop arithmetic for the LSTM and dense layers.
//
// Every primitive has a scalar reference implementation and, where the CPU
// allows it, a vectorized variant (AVX2+FMA on x86-64, NEON on AArch64). The
// variant is picked once at startup from CPUID; SSAE_KERNELS=scalar|avx2|neon
// overrides the choice. Variants may differ from scalar in the last bits
// because the summation order changes; within one variant results are
// deterministic.

#include <cstddef>
#include <span>
#include <string_view>

#include "ssae/tensor.hpp"

namespace ssae::kernels {

enum class Isa { scalar, avx2, neon };

std::string_view isa_name(Isa isa);
bool isa_supported(Isa isa);

// Currently dispatched variant.
Isa active_isa();

// Throws ContractError when `isa` is not supported on this machine.
void set_isa(Isa isa);

// Raw primitive signatures, shared by every variant.
struct KernelTable {
    Isa isa;
    double (*dot)(const double* a, const double* b, std::size_t n);
    void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
    // y[i] += sum_j a[i*cols + j] * x[j]
    void (*gemv)(const double* a, std::size_t rows, std::size_t cols, const double* x, double* y);
};

const KernelTable& scalar_table();
// nullptr when the variant was not compiled in.
const KernelTable* avx2_table();
const KernelTable* neon_table();

const KernelTable& active();

// Span-level API over the active variant.
double dot(std::span<const double> a, std::span<const double> b);
void axpy(double alpha, std::span<const double> x, std::span<double> y);
// y += A x
void gemv(ConstMatrixView a, std::span<const double> x, std::span<double> y);
// y += A^T x
void gemv_t(ConstMatrixView a, std::span<const double> x, std::span<double> y);
// A += alpha * x y^T, A is x.size() by y.size()
void ger(double alpha, std::span<const double> x, std::span<const double> y, Matrix& a);

}  // namespace ssae::kernels
