#include "skipscope/simd.hpp"

#include "skipscope/error.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

namespace skipscope::simd {

namespace {

struct KernelTable {
    Isa isa;
    CosineTerms (*cosine_terms)(std::span<const float>, std::span<const float>);
    double (*dot)(std::span<const double>, std::span<const double>);
    double (*squared_distance)(std::span<const double>, std::span<const double>);
    void (*matvec)(std::span<const double>, std::span<const double>, std::span<double>);
};

constexpr KernelTable scalar_table{Isa::scalar, scalar::cosine_terms, scalar::dot, scalar::squared_distance,
                                   scalar::matvec};

#if defined(SKIPSCOPE_HAVE_AVX2)
constexpr KernelTable avx2_table{Isa::avx2, avx2::cosine_terms, avx2::dot, avx2::squared_distance, avx2::matvec};
#endif

bool cpu_has_avx2() noexcept
{
#if defined(SKIPSCOPE_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

const KernelTable* table_for(Isa isa) noexcept
{
#if defined(SKIPSCOPE_HAVE_AVX2)
    if (isa == Isa::avx2) {
        return &avx2_table;
    }
#endif
    (void)isa;
    return &scalar_table;
}

const KernelTable* initial_table() noexcept
{
    if (const char* forced = std::getenv("SKIPSCOPE_ISA"); forced != nullptr && std::string(forced) == "scalar") {
        return &scalar_table;
    }
    return cpu_has_avx2() ? table_for(Isa::avx2) : &scalar_table;
}

std::atomic<const KernelTable*>& current()
{
    static std::atomic<const KernelTable*> table{initial_table()};
    return table;
}

} // namespace

CosineTerms cosine_terms(std::span<const float> x, std::span<const float> y)
{
    return current().load(std::memory_order_relaxed)->cosine_terms(x, y);
}

double dot(std::span<const double> x, std::span<const double> y)
{
    return current().load(std::memory_order_relaxed)->dot(x, y);
}

double squared_distance(std::span<const double> x, std::span<const double> y)
{
    return current().load(std::memory_order_relaxed)->squared_distance(x, y);
}

void matvec(std::span<const double> matrix, std::span<const double> x, std::span<double> out)
{
    current().load(std::memory_order_relaxed)->matvec(matrix, x, out);
}

Isa active_isa() noexcept
{
    return current().load(std::memory_order_relaxed)->isa;
}

bool isa_available(Isa isa) noexcept
{
    return isa == Isa::scalar || (isa == Isa::avx2 && cpu_has_avx2());
}

void set_isa(Isa isa)
{
    if (!isa_available(isa)) {
        throw Error(ErrorCode::invalid_argument, std::string("instruction set not available: ") + std::string(isa_name(isa)));
    }
    current().store(table_for(isa), std::memory_order_relaxed);
}

std::string_view isa_name(Isa isa) noexcept
{
    return isa == Isa::avx2 ? "avx2" : "scalar";
}

} // namespace skipscope::simd
