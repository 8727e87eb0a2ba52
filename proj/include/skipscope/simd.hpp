#pragma once

// Data-parallel inner loops. Every kernel has a scalar reference in
// skipscope::simd::scalar and, where the build supports it, an AVX2/FMA
// variant in skipscope::simd::avx2. The free functions in skipscope::simd
// dispatch to the best variant available on the running CPU.
//
// Set SKIPSCOPE_ISA=scalar in the environment to force the reference path.

#include <cstddef>
#include <span>
#include <string_view>

namespace skipscope::simd {

enum class Isa { scalar, avx2 };

// Accumulators for a cosine computation, summed in double precision.
struct CosineTerms {
    double dot = 0.0;
    double xx = 0.0;
    double yy = 0.0;
};

CosineTerms cosine_terms(std::span<const float> x, std::span<const float> y);
double dot(std::span<const double> x, std::span<const double> y);
double squared_distance(std::span<const double> x, std::span<const double> y);
// out[r] = sum_c matrix[r * x.size() + c] * x[c]
void matvec(std::span<const double> matrix, std::span<const double> x, std::span<double> out);

Isa active_isa() noexcept;
bool isa_available(Isa isa) noexcept;
// Throws skipscope::Error(invalid_argument) if the CPU cannot run `isa`.
void set_isa(Isa isa);
std::string_view isa_name(Isa isa) noexcept;

namespace scalar {
CosineTerms cosine_terms(std::span<const float> x, std::span<const float> y);
double dot(std::span<const double> x, std::span<const double> y);
double squared_distance(std::span<const double> x, std::span<const double> y);
void matvec(std::span<const double> matrix, std::span<const double> x, std::span<double> out);
} // namespace scalar

#if defined(SKIPSCOPE_HAVE_AVX2)
namespace avx2 {
CosineTerms cosine_terms(std::span<const float> x, std::span<const float> y);
double dot(std::span<const double> x, std::span<const double> y);
double squared_distance(std::span<const double> x, std::span<const double> y);
void matvec(std::span<const double> matrix, std::span<const double> x, std::span<double> out);
} // namespace avx2
#endif

} // namespace skipscope::simd
