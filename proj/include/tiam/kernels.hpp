#pragma once

// Dense inner-loop kernels. Every kernel has a scalar reference version and,
// on x86-64, an AVX2+FMA version. The active table is chosen once at startup
// from CPUID and can be overridden with TIAM_ISA=scalar|avx2 or set_isa().

#include <cstddef>
#include <optional>
#include <string_view>

namespace tiam::kernels {

enum class Isa { Scalar, Avx2 };

struct KernelTable {
    Isa isa;
    std::string_view name;

    // c[m x n] = a[m x k] * b[k x n]
    void (*gemm_nn)(std::size_t m, std::size_t n, std::size_t k,
                    const double* a, const double* b, double* c);
    // c[m x n] = a[k x m]^T * b[k x n]
    void (*gemm_tn)(std::size_t m, std::size_t n, std::size_t k,
                    const double* a, const double* b, double* c);
    // c[m x n] = a[m x k] * b[n x k]^T
    void (*gemm_nt)(std::size_t m, std::size_t n, std::size_t k,
                    const double* a, const double* b, double* c);

    double (*dot)(const double* x, const double* y, std::size_t n);
    double (*sum_sq)(const double* x, std::size_t n);
    // out = alpha * x + beta * y; out may alias x or y
    void (*axpby)(std::size_t n, double alpha, const double* x, double beta,
                  const double* y, double* out);
    // out = min(max(x, lo), hi); infinite lo/hi entries leave x unclipped
    void (*clip)(std::size_t n, const double* x, const double* lo, const double* hi,
                 double* out);
};

const KernelTable& scalar_table();
/// Null when the build or the CPU lacks AVX2+FMA.
const KernelTable* avx2_table();

/// The table used by every DenseMatrix operation.
const KernelTable& active();
/// Returns false (and leaves the selection unchanged) if the ISA is unavailable.
bool set_isa(Isa isa);
std::optional<Isa> parse_isa(std::string_view name);

}  // namespace tiam::kernels
