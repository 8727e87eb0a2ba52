#pragma once

#include "skipscope/attention.hpp"
#include "skipscope/redundancy.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace skipscope {

struct Thresholds {
    double eps_geo = 0.03;
    double eps_prox = 0.10;
    double tau_var = 0.05;
    double t = default_threshold;
};

void validate_thresholds(const Thresholds& th);

struct LayerFlags {
    std::size_t layer = 0;
    double mean_cos_dist = 0.0;
    double proximal_frac = 0.0;
    double var_normalized = 0.0;
    bool geometric_ok = false; // D <= eps_geo
    bool proximal_ok = false;  // p >= 1 - eps_prox
    bool var_ok = false;       // VAR / H <= tau_var

    bool late_entry_ok() const { return geometric_ok && proximal_ok && var_ok; }
};

struct LayerConditions {
    Modality modality = Modality::vision;
    Thresholds thresholds;
    std::vector<LayerFlags> layers; // ascending
};

// Layers are those present in both inputs; the two layer sets must be equal.
LayerConditions evaluate_conditions(const RedundancyProfile& profile, const VarProfile& var,
                                    const Thresholds& thresholds, Modality skipped = Modality::vision);

struct SkipPlan {
    Modality modality = Modality::vision;
    std::size_t late_entry_layer = 0;
    std::optional<std::size_t> early_exit_layer;
    std::vector<std::size_t> late_entry_viable; // always contains 0
    std::vector<std::size_t> early_exit_viable;
    LayerConditions rationale;
};

// Late entry: the longest prefix of evaluated layers that all satisfy the three
// conditions. Early exit: the smallest evaluated layer from which every layer
// onward is var_ok.
SkipPlan plan_skips(const LayerConditions& conditions);

std::string plan_json(const SkipPlan& plan);
std::string rationale_csv(const SkipPlan& plan);

// Profile CSV (layer,modality,mean_cos_dist,proximal_frac,t,n_tokens) and VAR
// CSV (layer,query_token,var_raw,var_normalized,head_count). A header row is optional.
RedundancyProfile load_profile_csv(const std::string& text);
VarProfile load_var_csv(const std::string& text);
std::pair<RedundancyProfile, VarProfile> load_external_metrics(const std::string& profile_csv,
                                                               const std::string& var_csv);

} // namespace skipscope
