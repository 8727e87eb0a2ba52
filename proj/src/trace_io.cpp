#include "skipscope/trace.hpp"

#include "skipscope/error.hpp"
#include "skipscope/report.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <iterator>
#include <limits>
#include <ostream>
#include <sstream>

namespace skipscope {

using nlohmann::json;

namespace {

constexpr std::array<char, 4> magic{'V', 'L', 'M', 'T'};
constexpr std::uint16_t format_version = 1;
constexpr std::size_t max_finite_diagnostics = 64;

std::string mask_to_string(const std::vector<Modality>& mask)
{
    std::string s;
    s.reserve(mask.size());
    for (Modality m : mask) {
        s.push_back(m == Modality::text ? 'T' : 'V');
    }
    return s;
}

std::vector<Modality> mask_from_string(const std::string& s, const char* field)
{
    std::vector<Modality> mask;
    mask.reserve(s.size());
    for (char c : s) {
        if (c == 'T') {
            mask.push_back(Modality::text);
        } else if (c == 'V') {
            mask.push_back(Modality::vision);
        } else {
            throw Error(ErrorCode::format_rejected, std::string(field) + " contains a character other than 'T'/'V'");
        }
    }
    return mask;
}

void put_u16(std::string& out, std::uint16_t v)
{
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
}

void put_u32(std::string& out, std::uint32_t v)
{
    for (int i = 0; i < 4; ++i) {
        out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    }
}

void put_floats(std::string& out, std::span<const float> values)
{
    const std::size_t start = out.size();
    out.resize(start + values.size() * 4);
    char* dst = out.data() + start;
    if constexpr (std::endian::native == std::endian::little) {
        std::memcpy(dst, values.data(), values.size() * 4);
    } else {
        for (float f : values) {
            const auto bits = std::bit_cast<std::uint32_t>(f);
            for (int i = 0; i < 4; ++i) {
                *dst++ = static_cast<char>((bits >> (8 * i)) & 0xff);
            }
        }
    }
}

void get_floats(const char* src, std::span<float> values)
{
    if constexpr (std::endian::native == std::endian::little) {
        std::memcpy(values.data(), src, values.size() * 4);
    } else {
        for (float& f : values) {
            std::uint32_t bits = 0;
            for (int i = 0; i < 4; ++i) {
                bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(*src++)) << (8 * i);
            }
            f = std::bit_cast<float>(bits);
        }
    }
}

std::uint32_t get_u32(const unsigned char* p)
{
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

// a * b * ... with overflow detection against a sane cap (2^40 elements).
std::size_t checked_product(std::initializer_list<std::size_t> factors)
{
    constexpr std::size_t cap = std::size_t{1} << 40;
    std::size_t result = 1;
    for (std::size_t f : factors) {
        if (f != 0 && result > cap / f) {
            throw Error(ErrorCode::format_rejected, "header dimensions are implausibly large");
        }
        result *= f;
    }
    return result;
}

std::string loc(std::initializer_list<std::pair<const char*, std::size_t>> parts)
{
    std::string s;
    for (const auto& [name, value] : parts) {
        if (!s.empty()) {
            s += ' ';
        }
        s += name;
        s += '=';
        s += std::to_string(value);
    }
    return s;
}

std::size_t require_size(const json& header, const char* key)
{
    const auto it = header.find(key);
    if (it == header.end() || !it->is_number_unsigned()) {
        throw Error(ErrorCode::format_rejected, std::string("header field missing or not an unsigned integer: ") + key);
    }
    return it->get<std::size_t>();
}

} // namespace

std::string_view modality_name(Modality m) noexcept
{
    return m == Modality::text ? "TEXT" : "VISION";
}

Modality parse_modality(std::string_view name)
{
    std::string upper(name);
    std::transform(upper.begin(), upper.end(), upper.begin(), [](unsigned char c) { return std::toupper(c); });
    if (upper == "TEXT" || upper == "T") {
        return Modality::text;
    }
    if (upper == "VISION" || upper == "V") {
        return Modality::vision;
    }
    throw Error(ErrorCode::format_rejected, "unknown modality: " + std::string(name));
}

HiddenTrace::HiddenTrace(std::size_t layers, std::size_t tokens, std::size_t dims)
    : layer_count(layers), token_count(tokens), dim(dims), states(layers * tokens * dims, 0.0f),
      modality_mask(tokens, Modality::text)
{
}

std::size_t HiddenTrace::count(Modality m) const noexcept
{
    return static_cast<std::size_t>(std::count(modality_mask.begin(), modality_mask.end(), m));
}

std::vector<std::size_t> HiddenTrace::tokens_of(Modality m) const
{
    std::vector<std::size_t> ids;
    for (std::size_t i = 0; i < modality_mask.size(); ++i) {
        if (modality_mask[i] == m) {
            ids.push_back(i);
        }
    }
    return ids;
}

AttentionTrace::AttentionTrace(std::size_t layers, std::size_t heads, std::size_t keys,
                               std::vector<std::size_t> queries)
    : layer_count(layers), head_count(heads), key_count(keys), query_token_ids(std::move(queries)),
      rows(query_token_ids.size() * layers * heads * keys, 0.0f), vision_key_mask(keys, Modality::text)
{
}

std::optional<std::size_t> AttentionTrace::query_slot(std::size_t token) const
{
    const auto it = std::find(query_token_ids.begin(), query_token_ids.end(), token);
    if (it == query_token_ids.end()) {
        return std::nullopt;
    }
    return static_cast<std::size_t>(it - query_token_ids.begin());
}

std::vector<Diagnostic> validate_trace(const HiddenTrace& trace, const AttentionTrace* attention)
{
    std::vector<Diagnostic> out;
    auto add = [&out](std::string inv, std::string where, std::string msg) {
        out.push_back({std::move(inv), std::move(where), std::move(msg)});
    };

    bool shape_ok = true;
    if (trace.layer_count < 1 || trace.token_count < 1 || trace.dim < 1) {
        add("shape", "header", "layer_count, token_count and dim must all be >= 1");
        shape_ok = false;
    } else if (trace.states.size() != trace.layer_count * trace.token_count * trace.dim) {
        add("shape", "hidden",
            "states holds " + std::to_string(trace.states.size()) + " values, expected layer_count*token_count*dim = " +
                std::to_string(trace.layer_count * trace.token_count * trace.dim));
        shape_ok = false;
    }

    if (shape_ok) {
        std::size_t bad_vectors = 0;
        for (std::size_t l = 0; l < trace.layer_count; ++l) {
            for (std::size_t t = 0; t < trace.token_count; ++t) {
                const auto v = trace.state(l, t);
                const bool finite = std::all_of(v.begin(), v.end(), [](float x) { return std::isfinite(x); });
                if (!finite) {
                    if (bad_vectors < max_finite_diagnostics) {
                        add("finite-states", loc({{"layer", l}, {"token", t}}), "hidden state contains NaN or Inf");
                    }
                    ++bad_vectors;
                }
            }
        }
        if (bad_vectors > max_finite_diagnostics) {
            add("finite-states", "hidden",
                std::to_string(bad_vectors - max_finite_diagnostics) + " further non-finite hidden states omitted");
        }
    }

    if (trace.modality_mask.size() != trace.token_count) {
        add("modality-mask-length", "modality_mask",
            "length " + std::to_string(trace.modality_mask.size()) + " != token_count " +
                std::to_string(trace.token_count));
    }
    if (trace.count(Modality::text) == 0) {
        add("missing-text", "modality_mask", "at least one TEXT token is required");
    }
    if (trace.answer_token_index) {
        const std::size_t a = *trace.answer_token_index;
        if (a >= trace.token_count) {
            add("answer-index-range", loc({{"answer_token_index", a}}), "answer token index out of range");
        } else if (a < trace.modality_mask.size() && trace.modality_mask[a] != Modality::text) {
            add("answer-index-text", loc({{"answer_token_index", a}}), "answer token must be tagged TEXT");
        }
    }

    if (attention == nullptr) {
        return out;
    }
    const AttentionTrace& att = *attention;
    bool att_shape_ok = true;
    if (att.layer_count < 1 || att.head_count < 1 || att.key_count < 1) {
        add("attention-shape", "attention", "layer_count, head_count and key_count must all be >= 1");
        att_shape_ok = false;
    } else if (att.rows.size() != att.query_token_ids.size() * att.layer_count * att.head_count * att.key_count) {
        add("attention-shape", "attention", "rows size does not match query*layer*head*key");
        att_shape_ok = false;
    }
    if (trace.layer_count >= 1 && att.layer_count != trace.layer_count - 1) {
        add("attention-layer-count", "attention",
            "attention layer_count " + std::to_string(att.layer_count) + " != hidden layer_count - 1 (" +
                std::to_string(trace.layer_count - 1) + ")");
    }
    if (att.vision_key_mask.size() != att.key_count) {
        add("vision-key-mask-length", "vision_key_mask",
            "length " + std::to_string(att.vision_key_mask.size()) + " != key_count " + std::to_string(att.key_count));
    }
    if (att.query_token_ids.empty()) {
        add("attention-shape", "query_token_ids", "attention section stores no query tokens");
    }
    for (std::size_t q = 0; q < att.query_token_ids.size(); ++q) {
        if (att.query_token_ids[q] >= trace.token_count) {
            add("query-token-range", loc({{"query_token", att.query_token_ids[q]}}), "query token outside the sequence");
        }
    }
    if (!att_shape_ok) {
        return out;
    }
    for (std::size_t q = 0; q < att.query_token_ids.size(); ++q) {
        for (std::size_t l = 0; l < att.layer_count; ++l) {
            for (std::size_t h = 0; h < att.head_count; ++h) {
                const auto row = att.row(q, l, h);
                const std::string where = loc({{"query_token", att.query_token_ids[q]}, {"layer", l + 1}, {"head", h}});
                double sum = 0.0;
                bool finite = true;
                bool nonnegative = true;
                for (float w : row) {
                    finite = finite && std::isfinite(w);
                    nonnegative = nonnegative && !(w < 0.0f);
                    sum += w;
                }
                if (!finite) {
                    add("attention-finite", where, "attention row contains NaN or Inf");
                    continue;
                }
                if (!nonnegative) {
                    add("attention-nonnegative", where, "attention row has a negative weight");
                }
                if (std::abs(sum - 1.0) > attention_row_tolerance) {
                    add("attention-row-normalization", where, "attention row sums to " + format_number(sum));
                }
            }
        }
    }
    return out;
}

std::size_t write_trace(const HiddenTrace& trace, const AttentionTrace* attention, std::ostream& sink)
{
    const auto diagnostics = validate_trace(trace, attention);
    if (!diagnostics.empty()) {
        throw Error(ErrorCode::format_rejected,
                    "trace violates " + diagnostics.front().invariant + " at " + diagnostics.front().location + ": " +
                        diagnostics.front().message);
    }

    const std::size_t hidden_bytes = trace.states.size() * 4;
    json sections = json::array();
    sections.push_back({{"name", "hidden"}, {"offset", 0}, {"byte_len", hidden_bytes}});

    json header = {
        {"layer_count", trace.layer_count},
        {"token_count", trace.token_count},
        {"dim", trace.dim},
        {"sample_id", trace.sample_id},
        {"modality_mask", mask_to_string(trace.modality_mask)},
    };
    if (trace.answer_token_index) {
        header["answer_token_index"] = *trace.answer_token_index;
    }
    if (attention != nullptr) {
        header["head_count"] = attention->head_count;
        header["key_count"] = attention->key_count;
        header["vision_key_mask"] = mask_to_string(attention->vision_key_mask);
        header["query_token_ids"] = attention->query_token_ids;
        sections.push_back({{"name", "attention"}, {"offset", hidden_bytes}, {"byte_len", attention->rows.size() * 4}});
    }
    header["sections"] = std::move(sections);

    const std::string header_text = header.dump();
    if (header_text.size() > std::numeric_limits<std::uint32_t>::max()) {
        throw Error(ErrorCode::format_rejected, "header too large");
    }

    std::string out;
    out.reserve(10 + header_text.size() + hidden_bytes + (attention ? attention->rows.size() * 4 : 0));
    out.append(magic.data(), magic.size());
    put_u16(out, format_version);
    put_u32(out, static_cast<std::uint32_t>(header_text.size()));
    out += header_text;
    put_floats(out, trace.states);
    if (attention != nullptr) {
        put_floats(out, attention->rows);
    }

    sink.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!sink) {
        throw Error(ErrorCode::io_error, "failed writing trace to sink");
    }
    return out.size();
}

TraceFile read_trace(std::istream& source)
{
    std::array<unsigned char, 10> prefix{};
    source.read(reinterpret_cast<char*>(prefix.data()), 6);
    if (source.gcount() < 4) {
        throw Error(ErrorCode::io_error, "stream ended before the magic bytes");
    }
    if (!std::equal(magic.begin(), magic.end(), prefix.begin(), [](char a, unsigned char b) {
            return static_cast<unsigned char>(a) == b;
        })) {
        throw Error(ErrorCode::format_rejected, "bad magic (expected \"VLMT\")");
    }
    if (source.gcount() < 6) {
        throw Error(ErrorCode::io_error, "stream ended inside the version field");
    }
    const std::uint16_t version = static_cast<std::uint16_t>(prefix[4] | (prefix[5] << 8));
    if (version != format_version) {
        throw Error(ErrorCode::format_rejected, "unsupported format version " + std::to_string(version));
    }
    source.read(reinterpret_cast<char*>(prefix.data() + 6), 4);
    if (source.gcount() < 4) {
        throw Error(ErrorCode::io_error, "stream ended inside the header length");
    }
    const std::uint32_t header_len = get_u32(prefix.data() + 6);
    std::string header_text(header_len, '\0');
    source.read(header_text.data(), header_len);
    if (static_cast<std::size_t>(source.gcount()) < header_len) {
        throw Error(ErrorCode::io_error, "stream ended inside the JSON header");
    }

    json header;
    try {
        header = json::parse(header_text);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::format_rejected, std::string("header is not valid JSON: ") + e.what());
    }
    if (!header.is_object()) {
        throw Error(ErrorCode::format_rejected, "header is not a JSON object");
    }

    TraceFile file;
    HiddenTrace& trace = file.hidden;
    std::optional<AttentionTrace> attention;
    std::size_t hidden_offset = 0;
    std::size_t hidden_len = 0;
    std::size_t attention_offset = 0;
    std::size_t attention_len = 0;
    bool has_hidden = false;

    try {
        trace.layer_count = require_size(header, "layer_count");
        trace.token_count = require_size(header, "token_count");
        trace.dim = require_size(header, "dim");
        trace.sample_id = header.at("sample_id").get<std::string>();
        trace.modality_mask = mask_from_string(header.at("modality_mask").get<std::string>(), "modality_mask");
        if (const auto it = header.find("answer_token_index"); it != header.end() && !it->is_null()) {
            trace.answer_token_index = require_size(header, "answer_token_index");
        }

        for (const auto& section : header.at("sections")) {
            const auto name = section.at("name").get<std::string>();
            const auto offset = section.at("offset").get<std::size_t>();
            const auto len = section.at("byte_len").get<std::size_t>();
            if (name == "hidden") {
                hidden_offset = offset;
                hidden_len = len;
                has_hidden = true;
            } else if (name == "attention") {
                attention_offset = offset;
                attention_len = len;
                attention.emplace();
            } else {
                throw Error(ErrorCode::format_rejected, "unknown section: " + name);
            }
        }
        if (attention) {
            attention->head_count = require_size(header, "head_count");
            attention->key_count = require_size(header, "key_count");
            attention->layer_count = trace.layer_count == 0 ? 0 : trace.layer_count - 1;
            attention->vision_key_mask =
                mask_from_string(header.at("vision_key_mask").get<std::string>(), "vision_key_mask");
            attention->query_token_ids = header.at("query_token_ids").get<std::vector<std::size_t>>();
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::format_rejected, std::string("malformed header: ") + e.what());
    }

    if (!has_hidden) {
        throw Error(ErrorCode::format_rejected, "header has no \"hidden\" section");
    }
    const std::size_t hidden_values = checked_product({trace.layer_count, trace.token_count, trace.dim});
    if (hidden_len != hidden_values * 4) {
        throw Error(ErrorCode::format_rejected, "hidden section length does not match layer_count*token_count*dim");
    }
    std::size_t attention_values = 0;
    if (attention) {
        attention_values = checked_product(
            {attention->query_token_ids.size(), attention->layer_count, attention->head_count, attention->key_count});
        if (attention_len != attention_values * 4) {
            throw Error(ErrorCode::format_rejected, "attention section length does not match its shape");
        }
    }

    const std::string payload((std::istreambuf_iterator<char>(source)), std::istreambuf_iterator<char>());
    auto section_fits = [&payload](std::size_t offset, std::size_t len) {
        return offset <= payload.size() && len <= payload.size() - offset;
    };
    if (!section_fits(hidden_offset, hidden_len)) {
        throw Error(ErrorCode::io_error, "payload truncated inside the hidden section");
    }
    trace.states.resize(hidden_values);
    get_floats(payload.data() + hidden_offset, trace.states);
    if (attention) {
        if (!section_fits(attention_offset, attention_len)) {
            throw Error(ErrorCode::io_error, "payload truncated inside the attention section");
        }
        attention->rows.resize(attention_values);
        get_floats(payload.data() + attention_offset, attention->rows);
    }

    const auto diagnostics = validate_trace(trace, attention ? &*attention : nullptr);
    if (!diagnostics.empty()) {
        throw Error(ErrorCode::validation_error, diagnostics.front().invariant + " at " + diagnostics.front().location +
                                                     ": " + diagnostics.front().message);
    }
    file.attention = std::move(attention);
    return file;
}

std::size_t write_trace_file(const std::filesystem::path& path, const HiddenTrace& trace,
                             const AttentionTrace* attention)
{
    std::ostringstream buffer;
    const std::size_t n = write_trace(trace, attention, buffer);
    write_file_atomic(path, buffer.str());
    return n;
}

TraceFile read_trace_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::io_error, "cannot open trace: " + path.string());
    }
    return read_trace(in);
}

bool bit_identical(const HiddenTrace& a, const HiddenTrace& b)
{
    return a.layer_count == b.layer_count && a.token_count == b.token_count && a.dim == b.dim &&
           a.modality_mask == b.modality_mask && a.sample_id == b.sample_id &&
           a.answer_token_index == b.answer_token_index && a.states.size() == b.states.size() &&
           std::memcmp(a.states.data(), b.states.data(), a.states.size() * sizeof(float)) == 0;
}

bool bit_identical(const AttentionTrace& a, const AttentionTrace& b)
{
    return a.layer_count == b.layer_count && a.head_count == b.head_count && a.key_count == b.key_count &&
           a.query_token_ids == b.query_token_ids && a.vision_key_mask == b.vision_key_mask &&
           a.rows.size() == b.rows.size() &&
           std::memcmp(a.rows.data(), b.rows.data(), a.rows.size() * sizeof(float)) == 0;
}

} // namespace skipscope
