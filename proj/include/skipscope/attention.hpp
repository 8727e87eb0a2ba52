#pragma once

#include "skipscope/trace.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace skipscope {

struct VarEntry {
    std::size_t layer = 0; // block index, 1-based like the redundancy layers
    double var_raw = 0.0;  // in [0, head_count]
    double var_normalized = 0.0;
    double text_sum = 0.0; // attention mass on non-vision keys, summed over heads
};

struct VarProfile {
    std::size_t query_token = 0;
    std::size_t head_count = 0;
    std::size_t vision_key_count = 0;
    std::size_t sample_count = 1;
    std::vector<VarEntry> layers;

    const VarEntry* find(std::size_t layer) const;
};

// Sum over heads and vision keys of the query token's attention row, per layer.
VarProfile var_profile(const AttentionTrace& attention, std::size_t query_token);

// Per-layer mean across samples; all profiles must share head_count and layer range.
VarProfile pool_var_profiles(std::span<const VarProfile> profiles);

// CSV: layer,query_token,var_raw,var_normalized,head_count
std::string var_csv(const VarProfile& profile);
std::string var_json(const VarProfile& profile);

} // namespace skipscope
