#include "skipscope/error.hpp"
#include "skipscope/rng.hpp"
#include "skipscope/trace.hpp"

#include "fixtures.hpp"

#include <doctest.h>

#include <cstring>
#include <limits>
#include <sstream>

using namespace skipscope;

namespace {

std::string serialize(const HiddenTrace& h, const AttentionTrace* a = nullptr)
{
    std::ostringstream os(std::ios::binary);
    write_trace(h, a, os);
    return os.str();
}

TraceFile deserialize(const std::string& bytes)
{
    std::istringstream is(bytes, std::ios::binary);
    return read_trace(is);
}

ErrorCode read_error(const std::string& bytes)
{
    try {
        deserialize(bytes);
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("read_trace accepted a bad container");
    return ErrorCode::io_error;
}

} // namespace

TEST_CASE("1x1x2 trace round-trips bit-exactly")
{
    HiddenTrace h(1, 1, 2);
    h.states = {1.0f, 0.0f};
    h.modality_mask = {Modality::text};
    h.sample_id = "one";
    const std::string bytes = serialize(h);
    CHECK(bytes.size() > 10);
    const TraceFile back = deserialize(bytes);
    CHECK(bit_identical(back.hidden, h));
    CHECK_FALSE(back.attention);
}

TEST_CASE("seeded 3x4x8 trace round-trips bit-exactly")
{
    const HiddenTrace h = testing::random_hidden(7, 3, 4, 8);
    const TraceFile back = deserialize(serialize(h));
    CHECK(bit_identical(back.hidden, h));
}

TEST_CASE("negative zero and subnormals survive the round trip")
{
    HiddenTrace h(1, 1, 3);
    h.states = {-0.0f, std::numeric_limits<float>::denorm_min(), -1e-30f};
    h.modality_mask = {Modality::text};
    const TraceFile back = deserialize(serialize(h));
    CHECK(bit_identical(back.hidden, h));
}

TEST_CASE("attention section round-trips")
{
    const auto [h, a] = testing::random_trace_with_attention(3, 4, 6, 5, 2);
    CHECK(validate_trace(h, &a).empty());
    const TraceFile back = deserialize(serialize(h, &a));
    REQUIRE(back.attention);
    CHECK(bit_identical(back.hidden, h));
    CHECK(bit_identical(*back.attention, a));
}

TEST_CASE("writer rejects NaN")
{
    HiddenTrace h(1, 1, 2);
    h.states = {std::numeric_limits<float>::quiet_NaN(), 0.0f};
    h.modality_mask = {Modality::text};
    std::ostringstream os;
    try {
        write_trace(h, nullptr, os);
        FAIL("accepted NaN");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::format_rejected);
    }
}

TEST_CASE("altered magic is FORMAT_REJECTED")
{
    std::string bytes = serialize(testing::random_hidden(7, 3, 4, 8));
    bytes[0] = 'X';
    CHECK(read_error(bytes) == ErrorCode::format_rejected);
}

TEST_CASE("unknown version is FORMAT_REJECTED")
{
    std::string bytes = serialize(testing::random_hidden(7, 3, 4, 8));
    bytes[4] = 2;
    CHECK(read_error(bytes) == ErrorCode::format_rejected);
}

TEST_CASE("truncation mid-array is IO_ERROR")
{
    const std::string bytes = serialize(testing::random_hidden(7, 3, 4, 8));
    CHECK(read_error(bytes.substr(0, bytes.size() - 5)) == ErrorCode::io_error);
    CHECK(read_error(bytes.substr(0, bytes.size() / 2)) == ErrorCode::io_error);
    CHECK(read_error(bytes.substr(0, 3)) == ErrorCode::io_error);
}

TEST_CASE("reader rejects a payload that violates invariants")
{
    // Write a valid file then poke a NaN into the hidden section.
    HiddenTrace h(1, 1, 2);
    h.states = {1.0f, 2.0f};
    h.modality_mask = {Modality::text};
    std::string bytes = serialize(h);
    const float nan = std::numeric_limits<float>::quiet_NaN();
    std::memcpy(bytes.data() + bytes.size() - 4, &nan, 4);
    CHECK(read_error(bytes) == ErrorCode::validation_error);
}

TEST_CASE("writes are deterministic")
{
    const auto [h, a] = testing::random_trace_with_attention(9, 5, 7, 4, 3);
    CHECK(serialize(h, &a) == serialize(h, &a));
}

TEST_CASE("validate_trace diagnostics")
{
    SUBCASE("valid trace")
    {
        CHECK(validate_trace(testing::random_hidden(1, 2, 3, 4)).empty());
    }
    SUBCASE("attention row summing to 0.8")
    {
        auto [h, a] = testing::random_trace_with_attention(4, 3, 5, 2, 1);
        auto row = a.row(0, 1, 0);
        std::fill(row.begin(), row.end(), 0.0f);
        row[0] = 0.8f;
        const auto d = validate_trace(h, &a);
        REQUIRE(d.size() == 1);
        CHECK(d[0].invariant == "attention-row-normalization");
        CHECK(d[0].location.find("layer=2") != std::string::npos);
    }
    SUBCASE("all-VISION mask")
    {
        HiddenTrace h = testing::random_hidden(2, 2, 3, 4);
        std::fill(h.modality_mask.begin(), h.modality_mask.end(), Modality::vision);
        h.answer_token_index.reset();
        const auto d = validate_trace(h);
        REQUIRE(d.size() == 1);
        CHECK(d[0].invariant == "missing-text");
    }
    SUBCASE("answer index tagged VISION")
    {
        HiddenTrace h = testing::random_hidden(2, 2, 3, 4);
        h.modality_mask = {Modality::vision, Modality::text, Modality::text};
        h.answer_token_index = 0;
        const auto d = validate_trace(h);
        REQUIRE(d.size() == 1);
        CHECK(d[0].invariant == "answer-index-text");
    }
    SUBCASE("diagnostics are a function of content")
    {
        HiddenTrace h = testing::random_hidden(3, 2, 3, 4);
        h.states[5] = std::numeric_limits<float>::infinity();
        h.modality_mask.pop_back();
        CHECK(validate_trace(h) == validate_trace(h));
        CHECK(validate_trace(h).size() == 2);
    }
}

TEST_CASE("round-trip identity on 100 generated traces")
{
    for (std::uint64_t s = 0; s < 100; ++s) {
        Rng rng(s);
        const std::size_t layers = 1 + rng.below(5), tokens = 1 + rng.below(9), dim = 1 + rng.below(17);
        if (s % 2 == 0 && layers > 1) {
            const auto [h, a] = testing::random_trace_with_attention(s, layers, tokens, dim, 1 + rng.below(4));
            const TraceFile back = deserialize(serialize(h, &a));
            CHECK(bit_identical(back.hidden, h));
            REQUIRE(back.attention);
            CHECK(bit_identical(*back.attention, a));
        } else {
            const HiddenTrace h = testing::random_hidden(s, layers, tokens, dim);
            CHECK(bit_identical(deserialize(serialize(h)).hidden, h));
        }
    }
}
