#pragma once

// Generators shared by the unit and acceptance tests.

#include "skipscope/rng.hpp"
#include "skipscope/trace.hpp"

#include <cmath>
#include <utility>
#include <vector>

namespace skipscope::testing {

// Mask alternates TEXT/VISION with token 0 always TEXT.
inline HiddenTrace random_hidden(std::uint64_t seed, std::size_t layers, std::size_t tokens, std::size_t dim)
{
    Rng rng(seed);
    HiddenTrace h(layers, tokens, dim);
    for (auto& x : h.states) {
        x = static_cast<float>(rng.normal());
    }
    h.modality_mask.resize(tokens);
    for (std::size_t i = 0; i < tokens; ++i) {
        h.modality_mask[i] = (i % 2 == 0) ? Modality::text : Modality::vision;
    }
    h.sample_id = "rand-" + std::to_string(seed);
    h.answer_token_index = 0;
    return h;
}

// Attention for the answer token (index 0) with softmax-normalized rows.
inline std::pair<HiddenTrace, AttentionTrace> random_trace_with_attention(std::uint64_t seed, std::size_t layers,
                                                                          std::size_t tokens, std::size_t dim,
                                                                          std::size_t heads)
{
    HiddenTrace h = random_hidden(seed, layers, tokens, dim);
    AttentionTrace a(layers - 1, heads, tokens, {0});
    a.vision_key_mask = h.modality_mask;
    Rng rng(seed ^ 0xa77e);
    for (std::size_t l = 0; l + 1 < layers; ++l) {
        for (std::size_t hd = 0; hd < heads; ++hd) {
            auto row = a.row(0, l, hd);
            double z = 0.0;
            std::vector<double> w(tokens);
            for (auto& v : w) {
                v = std::exp(rng.normal());
                z += v;
            }
            for (std::size_t k = 0; k < tokens; ++k) {
                row[k] = static_cast<float>(w[k] / z);
            }
        }
    }
    return {std::move(h), std::move(a)};
}

// Unit vector in the (e0, e1) plane at cosine distance `rho` from e0.
inline std::vector<float> at_distance(double rho, std::size_t dim, double scale = 1.0)
{
    std::vector<float> v(dim, 0.0f);
    const double c = 1.0 - rho;
    v[0] = static_cast<float>(scale * c);
    v[1] = static_cast<float>(scale * std::sqrt(std::max(0.0, 1.0 - c * c)));
    return v;
}

} // namespace skipscope::testing
