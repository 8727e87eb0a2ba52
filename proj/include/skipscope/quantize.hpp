#pragma once

#include "skipscope/trace.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace skipscope {

inline constexpr int kmeans_iterations = 25;

struct Codebook {
    std::size_t k = 0;
    std::size_t dim = 0;
    std::vector<double> centroids; // k * dim, unit norm
    std::vector<std::string> warnings;
};

// Spherical k-means on unit-normalized rows (n * dim). Farthest-point
// initialization starting from a seeded pick; k is reduced to the number of
// distinct normalized rows when that is smaller.
Codebook fit_codebook(const std::vector<double>& rows, std::size_t dim, std::size_t k, std::uint64_t seed);

// Nearest centroid by cosine (ties to the lowest index).
std::size_t assign(const Codebook& book, const double* unit_row);

struct QuantizedLayer {
    Codebook codebook;
    std::vector<std::size_t> tokens;                             // token ids of the modality
    std::vector<std::pair<std::size_t, std::size_t>> pairs;       // (label at layer, label at layer - 1)
    std::vector<double> dissimilarity;                            // k * k cosine distance between centroids
};

QuantizedLayer quantize_trace(const HiddenTrace& trace, std::size_t layer, Modality modality, std::size_t k,
                              std::uint64_t seed);
// Pools the modality tokens of several traces into one codebook; `tokens` then
// indexes the concatenated token list.
QuantizedLayer quantize_traces(std::span<const HiddenTrace> traces, std::size_t layer, Modality modality,
                               std::size_t k, std::uint64_t seed);

} // namespace skipscope
