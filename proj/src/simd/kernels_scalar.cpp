#include "skipscope/simd.hpp"

namespace skipscope::simd::scalar {

CosineTerms cosine_terms(std::span<const float> x, std::span<const float> y)
{
    CosineTerms acc;
    const std::size_t n = x.size();
    for (std::size_t i = 0; i < n; ++i) {
        const double a = x[i];
        const double b = y[i];
        acc.dot += a * b;
        acc.xx += a * a;
        acc.yy += b * b;
    }
    return acc;
}

double dot(std::span<const double> x, std::span<const double> y)
{
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        acc += x[i] * y[i];
    }
    return acc;
}

double squared_distance(std::span<const double> x, std::span<const double> y)
{
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - y[i];
        acc += d * d;
    }
    return acc;
}

void matvec(std::span<const double> matrix, std::span<const double> x, std::span<double> out)
{
    const std::size_t cols = x.size();
    for (std::size_t r = 0; r < out.size(); ++r) {
        out[r] = dot(matrix.subspan(r * cols, cols), x);
    }
}

} // namespace skipscope::simd::scalar
