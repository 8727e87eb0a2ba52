#include "skipscope/attention.hpp"

#include "skipscope/error.hpp"
#include "skipscope/report.hpp"

#include <json.hpp>

namespace skipscope {

const VarEntry* VarProfile::find(std::size_t layer) const
{
    for (const auto& e : layers) {
        if (e.layer == layer) {
            return &e;
        }
    }
    return nullptr;
}

VarProfile var_profile(const AttentionTrace& attention, std::size_t query_token)
{
    const auto slot = attention.query_slot(query_token);
    if (!slot) {
        throw Error(ErrorCode::missing_query, "query token " + std::to_string(query_token) + " has no stored attention");
    }
    if (attention.vision_key_mask.size() != attention.key_count) {
        throw Error(ErrorCode::shape_mismatch, "vision_key_mask length differs from key_count");
    }
    VarProfile p;
    p.query_token = query_token;
    p.head_count = attention.head_count;
    for (Modality m : attention.vision_key_mask) {
        p.vision_key_count += m == Modality::vision ? 1 : 0;
    }
    if (p.vision_key_count == 0) {
        throw Error(ErrorCode::empty_modality, "attention trace has no vision keys");
    }
    for (std::size_t l = 0; l < attention.layer_count; ++l) {
        VarEntry e;
        e.layer = l + 1;
        for (std::size_t h = 0; h < attention.head_count; ++h) {
            const auto row = attention.row(*slot, l, h);
            for (std::size_t k = 0; k < attention.key_count; ++k) {
                (attention.vision_key_mask[k] == Modality::vision ? e.var_raw : e.text_sum) += row[k];
            }
        }
        e.var_normalized = e.var_raw / static_cast<double>(attention.head_count);
        p.layers.push_back(e);
    }
    return p;
}

VarProfile pool_var_profiles(std::span<const VarProfile> profiles)
{
    if (profiles.empty()) {
        throw Error(ErrorCode::empty_input, "no VAR profiles to pool");
    }
    VarProfile pooled = profiles.front();
    if (profiles.size() == 1) {
        return pooled;
    }
    pooled.sample_count = profiles.size();
    for (auto& e : pooled.layers) {
        e.var_raw = e.var_normalized = e.text_sum = 0.0;
    }
    for (const auto& p : profiles) {
        if (p.head_count != pooled.head_count || p.layers.size() != pooled.layers.size()) {
            throw Error(ErrorCode::shape_mismatch, "VAR profiles differ in head count or layer range");
        }
        for (std::size_t i = 0; i < p.layers.size(); ++i) {
            pooled.layers[i].var_raw += p.layers[i].var_raw;
            pooled.layers[i].text_sum += p.layers[i].text_sum;
        }
    }
    const double n = static_cast<double>(profiles.size());
    for (auto& e : pooled.layers) {
        e.var_raw /= n;
        e.text_sum /= n;
        e.var_normalized = e.var_raw / static_cast<double>(pooled.head_count);
    }
    return pooled;
}

std::string var_csv(const VarProfile& profile)
{
    std::string out = "layer,query_token,var_raw,var_normalized,head_count\n";
    for (const auto& e : profile.layers) {
        out += std::to_string(e.layer) + ',' + std::to_string(profile.query_token) + ',' + format_number(e.var_raw) +
               ',' + format_number(e.var_normalized) + ',' + std::to_string(profile.head_count) + '\n';
    }
    return out;
}

std::string var_json(const VarProfile& profile)
{
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& e : profile.layers) {
        rows.push_back({{"layer", e.layer},
                        {"var_raw", e.var_raw},
                        {"var_normalized", e.var_normalized},
                        {"text_sum", e.text_sum}});
    }
    nlohmann::json doc = {{"query_token", profile.query_token},
                          {"head_count", profile.head_count},
                          {"vision_key_count", profile.vision_key_count},
                          {"sample_count", profile.sample_count},
                          {"layers", std::move(rows)}};
    return doc.dump(2) + "\n";
}

} // namespace skipscope
