#pragma once

// Binary trace container ("VLMT") shared by trace producers and the analysis
// modules.
//
// Layout:
//   bytes 0..3   magic "VLMT"
//   bytes 4..5   format version, u16 little-endian (= 1)
//   bytes 6..9   header length N, u32 little-endian
//   next N bytes UTF-8 JSON header
//   sections     float32 little-endian payloads; section offsets in the
//                header are relative to the first byte after the header.
//
// Section "hidden" is row-major [layer][token][dim]. Optional section
// "attention" is row-major [query][layer][head][key]; attention layer a
// describes the block that produces hidden layer a + 1, so an attention
// trace always has hidden.layer_count - 1 layers.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace skipscope {

enum class Modality : std::uint8_t { text, vision };

std::string_view modality_name(Modality m) noexcept; // "TEXT" / "VISION"
Modality parse_modality(std::string_view name);      // accepts TEXT/VISION/T/V, case-insensitive

struct HiddenTrace {
    std::size_t layer_count = 0; // includes the embedding layer 0
    std::size_t token_count = 0;
    std::size_t dim = 0;
    std::vector<float> states;   // [layer][token][dim]
    std::vector<Modality> modality_mask;
    std::string sample_id;
    std::optional<std::size_t> answer_token_index;

    HiddenTrace() = default;
    HiddenTrace(std::size_t layers, std::size_t tokens, std::size_t dims);

    std::span<const float> state(std::size_t layer, std::size_t token) const
    {
        return {states.data() + (layer * token_count + token) * dim, dim};
    }
    std::span<float> state(std::size_t layer, std::size_t token)
    {
        return {states.data() + (layer * token_count + token) * dim, dim};
    }

    std::size_t count(Modality m) const noexcept;
    std::vector<std::size_t> tokens_of(Modality m) const;
};

struct AttentionTrace {
    std::size_t layer_count = 0;
    std::size_t head_count = 0;
    std::size_t key_count = 0;
    std::vector<std::size_t> query_token_ids;
    std::vector<float> rows; // [query][layer][head][key]
    std::vector<Modality> vision_key_mask;

    AttentionTrace() = default;
    AttentionTrace(std::size_t layers, std::size_t heads, std::size_t keys, std::vector<std::size_t> queries);

    std::span<const float> row(std::size_t query_slot, std::size_t layer, std::size_t head) const
    {
        return {rows.data() + ((query_slot * layer_count + layer) * head_count + head) * key_count, key_count};
    }
    std::span<float> row(std::size_t query_slot, std::size_t layer, std::size_t head)
    {
        return {rows.data() + ((query_slot * layer_count + layer) * head_count + head) * key_count, key_count};
    }

    // Index of `token` within query_token_ids, if stored.
    std::optional<std::size_t> query_slot(std::size_t token) const;
};

struct Diagnostic {
    std::string invariant; // stable machine-readable name
    std::string location;
    std::string message;

    bool operator==(const Diagnostic&) const = default;
};

inline constexpr double attention_row_tolerance = 1e-5;

// Empty iff every invariant holds. Deterministic: diagnostics are emitted in
// a fixed scan order.
std::vector<Diagnostic> validate_trace(const HiddenTrace& trace, const AttentionTrace* attention = nullptr);

std::size_t write_trace(const HiddenTrace& trace, const AttentionTrace* attention, std::ostream& sink);

struct TraceFile {
    HiddenTrace hidden;
    std::optional<AttentionTrace> attention;
};

TraceFile read_trace(std::istream& source);

// File helpers; writes go to a temporary sibling and are renamed into place.
std::size_t write_trace_file(const std::filesystem::path& path, const HiddenTrace& trace,
                             const AttentionTrace* attention = nullptr);
TraceFile read_trace_file(const std::filesystem::path& path);

// Byte-level equality (distinguishes -0.0 from 0.0 and NaN payloads).
bool bit_identical(const HiddenTrace& a, const HiddenTrace& b);
bool bit_identical(const AttentionTrace& a, const AttentionTrace& b);

} // namespace skipscope
