#include "skipscope/quantize.hpp"

#include "skipscope/error.hpp"
#include "skipscope/rng.hpp"
#include "skipscope/simd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace skipscope {

namespace {

void normalize(std::span<double> v)
{
    const double norm = std::sqrt(simd::dot(v, v));
    if (!(norm > 0.0)) {
        throw Error(ErrorCode::degenerate_vector, "cannot quantize a zero-norm vector");
    }
    for (double& x : v) {
        x /= norm;
    }
}

double unit_distance(const double* a, const double* b, std::size_t dim)
{
    const double c = simd::dot({a, dim}, {b, dim});
    return std::clamp(1.0 - c, 0.0, 2.0);
}

} // namespace

std::size_t assign(const Codebook& book, const double* unit_row)
{
    std::size_t best = 0;
    double best_sim = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < book.k; ++c) {
        const double sim = simd::dot({unit_row, book.dim}, {book.centroids.data() + c * book.dim, book.dim});
        if (sim > best_sim) {
            best_sim = sim;
            best = c;
        }
    }
    return best;
}

Codebook fit_codebook(const std::vector<double>& rows, std::size_t dim, std::size_t k, std::uint64_t seed)
{
    if (k < 2) {
        throw Error(ErrorCode::invalid_argument, "codebook size must be >= 2");
    }
    if (dim == 0 || rows.empty() || rows.size() % dim != 0) {
        throw Error(ErrorCode::empty_input, "no vectors to quantize");
    }
    const std::size_t n = rows.size() / dim;

    std::vector<double> unit = rows;
    for (std::size_t i = 0; i < n; ++i) {
        normalize({unit.data() + i * dim, dim});
    }

    // Distinct rows in lexicographic order, so the fit ignores input order.
    std::vector<std::vector<double>> distinct;
    distinct.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        distinct.emplace_back(unit.begin() + static_cast<std::ptrdiff_t>(i * dim),
                              unit.begin() + static_cast<std::ptrdiff_t>((i + 1) * dim));
    }
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

    Codebook book;
    book.dim = dim;
    book.k = k;
    if (distinct.size() < k) {
        book.warnings.push_back("only " + std::to_string(distinct.size()) + " distinct vectors; k reduced from " +
                                std::to_string(k) + " to " + std::to_string(distinct.size()));
        book.k = distinct.size();
    }

    // farthest-point init
    Rng rng(seed);
    std::vector<std::size_t> chosen{static_cast<std::size_t>(rng.below(distinct.size()))};
    std::vector<double> nearest(distinct.size(), std::numeric_limits<double>::infinity());
    while (chosen.size() < book.k) {
        const double* last = distinct[chosen.back()].data();
        std::size_t pick = 0;
        double far = -1.0;
        for (std::size_t i = 0; i < distinct.size(); ++i) {
            nearest[i] = std::min(nearest[i], unit_distance(distinct[i].data(), last, dim));
            if (nearest[i] > far) {
                far = nearest[i];
                pick = i;
            }
        }
        chosen.push_back(pick);
    }
    book.centroids.reserve(book.k * dim);
    for (std::size_t c : chosen) {
        book.centroids.insert(book.centroids.end(), distinct[c].begin(), distinct[c].end());
    }

    std::vector<double> sums(book.k * dim);
    std::vector<std::size_t> counts(book.k);
    for (int iter = 0; iter < kmeans_iterations; ++iter) {
        std::fill(sums.begin(), sums.end(), 0.0);
        std::fill(counts.begin(), counts.end(), 0);
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t c = assign(book, unit.data() + i * dim);
            ++counts[c];
            for (std::size_t d = 0; d < dim; ++d) {
                sums[c * dim + d] += unit[i * dim + d];
            }
        }
        bool moved = false;
        for (std::size_t c = 0; c < book.k; ++c) {
            if (counts[c] == 0) {
                continue; // empty cluster keeps its centroid
            }
            std::span<double> s{sums.data() + c * dim, dim};
            const double norm = std::sqrt(simd::dot(s, s));
            if (!(norm > 0.0)) {
                continue;
            }
            for (std::size_t d = 0; d < dim; ++d) {
                const double v = s[d] / norm;
                moved = moved || v != book.centroids[c * dim + d];
                book.centroids[c * dim + d] = v;
            }
        }
        if (!moved) {
            break;
        }
    }
    return book;
}

QuantizedLayer quantize_traces(std::span<const HiddenTrace> traces, std::size_t layer, Modality modality,
                               std::size_t k, std::uint64_t seed)
{
    if (traces.empty()) {
        throw Error(ErrorCode::empty_input, "no traces to quantize");
    }
    const std::size_t dim = traces.front().dim;
    QuantizedLayer q;
    std::vector<double> rows;
    std::size_t global = 0;
    for (const auto& tr : traces) {
        if (layer < 1 || layer >= tr.layer_count) {
            throw Error(ErrorCode::invalid_argument, "layer " + std::to_string(layer) + " outside [1, " +
                                                         std::to_string(tr.layer_count - 1) + "]");
        }
        if (tr.dim != dim) {
            throw Error(ErrorCode::shape_mismatch, "traces differ in dim");
        }
        for (std::size_t i = 0; i < tr.token_count; ++i, ++global) {
            if (tr.modality_mask[i] != modality) {
                continue;
            }
            q.tokens.push_back(global);
            const auto prev = tr.state(layer - 1, i);
            const auto cur = tr.state(layer, i);
            rows.insert(rows.end(), prev.begin(), prev.end());
            rows.insert(rows.end(), cur.begin(), cur.end());
        }
    }
    if (q.tokens.empty()) {
        throw Error(ErrorCode::empty_modality, "no " + std::string(modality_name(modality)) + " tokens");
    }

    q.codebook = fit_codebook(rows, dim, k, seed);
    const Codebook& book = q.codebook;

    std::vector<double> unit(dim);
    auto label_of = [&](std::size_t row) {
        std::copy_n(rows.begin() + static_cast<std::ptrdiff_t>(row * dim), dim, unit.begin());
        normalize(unit);
        return assign(book, unit.data());
    };
    q.pairs.reserve(q.tokens.size());
    for (std::size_t i = 0; i < q.tokens.size(); ++i) {
        const std::size_t prev = label_of(2 * i);
        const std::size_t cur = label_of(2 * i + 1);
        q.pairs.emplace_back(cur, prev);
    }

    q.dissimilarity.assign(book.k * book.k, 0.0);
    for (std::size_t a = 0; a < book.k; ++a) {
        for (std::size_t b = a + 1; b < book.k; ++b) {
            const double d = unit_distance(book.centroids.data() + a * dim, book.centroids.data() + b * dim, dim);
            q.dissimilarity[a * book.k + b] = d;
            q.dissimilarity[b * book.k + a] = d;
        }
    }
    return q;
}

QuantizedLayer quantize_trace(const HiddenTrace& trace, std::size_t layer, Modality modality, std::size_t k,
                              std::uint64_t seed)
{
    return quantize_traces(std::span<const HiddenTrace>(&trace, 1), layer, modality, k, seed);
}

} // namespace skipscope
