#pragma once

#include "skipscope/trace.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace skipscope {

inline constexpr double default_threshold = 0.05;

// 1 - <x,y> / (|x| |y|), clamped to [0, 2]. Throws DEGENERATE_VECTOR on a zero norm.
double cosine_distance(std::span<const float> x, std::span<const float> y);
double cosine_distance(std::span<const double> x, std::span<const double> y);

struct LayerMetrics {
    double mean_cos_dist = 0.0;
    double proximal_frac = 0.0;
    std::size_t n_tokens = 0;
};

// Distances between layer and layer - 1 for every token of `modality`, in token order.
std::vector<double> layer_distances(const HiddenTrace& trace, std::size_t layer, Modality modality);

LayerMetrics layer_metrics(const HiddenTrace& trace, std::size_t layer, Modality modality, double t);

struct ProfileEntry {
    std::size_t layer = 0;
    Modality modality = Modality::text;
    double mean_cos_dist = 0.0;
    double proximal_frac = 0.0;
    double t = default_threshold;
    std::size_t n_tokens = 0;
    // Per-sample aggregation, only meaningful when several traces were pooled.
    std::size_t sample_count = 0;
    double sample_mean = 0.0;
    double sample_ci95 = 0.0; // half-width, normal approximation
};

struct RedundancyProfile {
    double t = default_threshold;
    std::size_t layer_count = 0;
    std::vector<ProfileEntry> entries; // sorted by (layer, modality)

    const ProfileEntry* find(std::size_t layer, Modality modality) const;
};

// Token-level pooling over all traces. Modalities with no tokens anywhere are omitted.
RedundancyProfile redundancy_profile(std::span<const HiddenTrace> traces, double t = default_threshold);

// CSV: layer,modality,mean_cos_dist,proximal_frac,t,n_tokens
std::string profile_csv(const RedundancyProfile& profile);
std::string profile_json(const RedundancyProfile& profile);

} // namespace skipscope
