#pragma once

// Hand-wired attention-only transformer for a synthetic "is the queried
// attribute somewhere in the image grid?" task.
//
// Sequence: [BOS, 8 vision cells, query, answer]. Residual layout:
//   0..5 attribute one-hot   6 vision   7 text   8 bos   9 query   10 answer
//   11 bias   12 found   13 label   14..19 scene   20.. positional filler
// Heads per block: 0 reader (answer <- query.found, all blocks),
// 1 match (query/vision <- matching vision cells, copy block only),
// 2.. scan (answer <- all vision cells, copy block only). Outside the copy
// block the match and scan heads only see the BOS sink and write nothing.

#include "skipscope/trace.hpp"

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace skipscope {

inline constexpr std::size_t toy_attributes = 6;
inline constexpr std::size_t toy_grid_cells = 8;
inline constexpr std::size_t toy_head_dim = 8;
inline constexpr std::size_t toy_token_count = toy_grid_cells + 3;
inline constexpr std::size_t toy_query_token = toy_grid_cells + 1;
inline constexpr std::size_t toy_answer_token = toy_grid_cells + 2;

struct ToyModelConfig {
    std::size_t layer_count = 12;
    std::size_t dim = 32;
    std::size_t head_count = 4;
    std::size_t copy_first = 5;
    std::size_t copy_last = 8;
    double noise_scale = 0.0;
    std::uint64_t seed = 0;
};

void validate_config(const ToyModelConfig& config);

struct ToyHead {
    std::vector<double> wq, wk, wv; // toy_head_dim x dim
    std::vector<double> wo;         // dim x toy_head_dim
};

struct ToyModel {
    ToyModelConfig config;
    std::vector<std::vector<ToyHead>> blocks; // [block][head], block 0 is layer 1
    std::vector<double> positional;           // token_count x dim (filler dims only)

    std::vector<double> flat_weights() const;
};

ToyModel build_model(const ToyModelConfig& config);

struct SynthSample {
    std::size_t index = 0;
    std::uint64_t seed = 0;
    std::vector<std::size_t> grid; // attribute per cell
    std::size_t query_attribute = 0;
    bool label = false;
};

std::vector<SynthSample> synth_dataset(std::uint64_t seed, std::size_t count);

enum class SkipMode { baseline, late_entry, early_exit };

struct ForwardMode {
    SkipMode kind = SkipMode::baseline;
    std::size_t layer = 0;
};

std::string mode_name(const ForwardMode& mode); // "BASELINE", "LATE_ENTRY(4)", ...

struct ForwardResult {
    HiddenTrace hidden;
    AttentionTrace attention;
    double logit = 0.0; // answer token's label coordinate at the last layer
    bool predicted = false;
};

ForwardResult forward(const ToyModel& model, const SynthSample& sample, const ForwardMode& mode);

double evaluate_accuracy(const ToyModel& model, const std::vector<SynthSample>& dataset, const ForwardMode& mode);

} // namespace skipscope
