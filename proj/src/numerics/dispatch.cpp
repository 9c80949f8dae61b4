#include "kernel_tables.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

namespace tiam::kernels {
namespace {

bool cpu_has_avx2() {
#if defined(TIAM_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

const KernelTable* initial_table() {
    const KernelTable* best = avx2_table();
    if (const char* env = std::getenv("TIAM_ISA")) {
        if (auto isa = parse_isa(env)) {
            if (*isa == Isa::Scalar) return &scalar_table();
            if (best != nullptr) return best;
        }
    }
    return best != nullptr ? best : &scalar_table();
}

std::atomic<const KernelTable*>& current() {
    static std::atomic<const KernelTable*> table{initial_table()};
    return table;
}

}  // namespace

const KernelTable& scalar_table() { return detail::kScalarTable; }

const KernelTable* avx2_table() {
#if defined(TIAM_HAVE_AVX2)
    static const bool ok = cpu_has_avx2();
    return ok ? &detail::kAvx2Table : nullptr;
#else
    return nullptr;
#endif
}

const KernelTable& active() { return *current().load(std::memory_order_acquire); }

bool set_isa(Isa isa) {
    const KernelTable* t = isa == Isa::Scalar ? &scalar_table() : avx2_table();
    if (t == nullptr) return false;
    current().store(t, std::memory_order_release);
    return true;
}

std::optional<Isa> parse_isa(std::string_view name) {
    if (name == "scalar") return Isa::Scalar;
    if (name == "avx2") return Isa::Avx2;
    return std::nullopt;
}

}  // namespace tiam::kernels
