#include "skipscope/attention.hpp"
#include "skipscope/error.hpp"
#include "skipscope/redundancy.hpp"
#include "skipscope/toy_model.hpp"

#include <doctest.h>

#include <cstring>

using namespace skipscope;

namespace {

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

const ToyModel& default_model()
{
    static const ToyModel m = build_model(ToyModelConfig{});
    return m;
}

const std::vector<SynthSample>& default_data()
{
    static const std::vector<SynthSample> d = synth_dataset(0, 512);
    return d;
}

} // namespace

TEST_CASE("build_model is deterministic")
{
    const auto a = build_model(ToyModelConfig{}).flat_weights();
    const auto b = build_model(ToyModelConfig{}).flat_weights();
    REQUIRE(a.size() == b.size());
    CHECK(std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
}

TEST_CASE("config validation")
{
    ToyModelConfig c;
    c.copy_first = 0;
    CHECK_THROWS_AS(validate_config(c), Error);
    c = {};
    c.copy_last = 12;
    CHECK_THROWS_AS(validate_config(c), Error);
    c = {};
    c.copy_first = 9;
    CHECK_THROWS_AS(validate_config(c), Error);
    c = {};
    c.noise_scale = -1;
    CHECK_THROWS_AS(validate_config(c), Error);
}

TEST_CASE("VAR concentrates in the copy block")
{
    const auto& m = default_model();
    for (std::size_t i = 0; i < 8; ++i) {
        const auto r = forward(m, default_data()[i], {});
        CHECK(validate_trace(r.hidden, &r.attention).empty());
        const auto v = var_profile(r.attention, toy_answer_token);
        double inside = 0, outside = 0;
        std::size_t ni = 0, no = 0;
        for (const auto& e : v.layers) {
            if (e.layer >= 5 && e.layer <= 8) {
                inside += e.var_normalized, ++ni;
            } else {
                outside += e.var_normalized, ++no;
            }
        }
        inside /= double(ni);
        outside /= double(no);
        CHECK(inside >= 5.0 * outside);
        for (const auto& e : v.layers) {
            if (e.layer >= 5 && e.layer <= 8) CHECK(e.var_normalized >= inside / 5.0);
        }
    }
}

TEST_CASE("outside-block vision distances are tiny without noise")
{
    std::vector<HiddenTrace> traces;
    for (std::size_t i = 0; i < 16; ++i) traces.push_back(forward(default_model(), default_data()[i], {}).hidden);
    const auto p = redundancy_profile(traces);
    for (const auto& e : p.entries) {
        if (e.modality == Modality::vision && (e.layer < 5 || e.layer > 8)) {
            CAPTURE(e.layer);
            CHECK(e.mean_cos_dist < 0.01);
        }
    }
}

TEST_CASE("empty skips are bit-identical to baseline")
{
    const auto& m = default_model();
    for (std::size_t i = 0; i < 32; ++i) {
        const auto& s = default_data()[i];
        const auto base = forward(m, s, {});
        const auto le0 = forward(m, s, {SkipMode::late_entry, 0});
        const auto een = forward(m, s, {SkipMode::early_exit, m.config.layer_count});
        CHECK(same_bits(base.logit, le0.logit));
        CHECK(same_bits(base.logit, een.logit));
        CHECK(bit_identical(base.hidden, le0.hidden));
        CHECK(bit_identical(base.hidden, een.hidden));
        CHECK(bit_identical(base.attention, een.attention));
    }
    CHECK_THROWS_AS(forward(m, default_data()[0], {SkipMode::late_entry, 13}), Error);
}

TEST_CASE("early exit after the copy block keeps every prediction")
{
    const auto& m = default_model();
    for (std::size_t l = m.config.copy_last; l <= m.config.layer_count; ++l) {
        for (const auto& s : default_data()) {
            const bool base = forward(m, s, {}).predicted;
            CHECK(forward(m, s, {SkipMode::early_exit, l}).predicted == base);
        }
    }
}

TEST_CASE("early-exit traces keep text tokens and drop vision attention")
{
    const auto r = forward(default_model(), default_data()[3], {SkipMode::early_exit, 6});
    CHECK(validate_trace(r.hidden, &r.attention).empty());
    const auto v = var_profile(r.attention, toy_answer_token);
    for (const auto& e : v.layers) {
        if (e.layer > 6) CHECK(e.var_raw == 0.0);
    }
    // Vision states are frozen after the exit layer.
    for (std::size_t l = 7; l <= 12; ++l)
        for (std::size_t t = 1; t <= toy_grid_cells; ++t) {
            const auto a = r.hidden.state(l, t), b = r.hidden.state(6, t);
            CHECK(std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0);
        }
}

TEST_CASE("synth_dataset")
{
    const auto d = synth_dataset(0, 4);
    REQUIRE(d.size() == 4);
    for (const auto& s : d) {
        bool present = false;
        for (auto a : s.grid) present = present || a == s.query_attribute;
        CHECK(present == s.label);
        CHECK(s.grid.size() == toy_grid_cells);
    }
    const auto a = synth_dataset(9, 50), b = synth_dataset(9, 50);
    for (std::size_t i = 0; i < 50; ++i) {
        CHECK(a[i].grid == b[i].grid);
        CHECK(a[i].query_attribute == b[i].query_attribute);
        CHECK(a[i].label == b[i].label);
    }
    const auto big = synth_dataset(1, 1000);
    std::size_t pos = 0;
    for (const auto& s : big) pos += s.label;
    CHECK(double(pos) / 1000.0 >= 0.4);
    CHECK(double(pos) / 1000.0 <= 0.6);
}

TEST_CASE("accuracy examples")
{
    const auto& m = default_model();
    const auto& d = default_data();
    const double base = evaluate_accuracy(m, d, {});
    CHECK(base == 1.0);
    for (std::size_t l = 0; l < m.config.copy_first; ++l) {
        CAPTURE(l);
        CHECK(evaluate_accuracy(m, d, {SkipMode::late_entry, l}) == base);
        CHECK(evaluate_accuracy(m, d, {SkipMode::early_exit, l}) <= 0.6);
    }
}

TEST_CASE("noise is seeded")
{
    ToyModelConfig c;
    c.noise_scale = 0.05;
    c.seed = 3;
    const auto m = build_model(c);
    const auto s = synth_dataset(3, 2);
    const auto a = forward(m, s[1], {}), b = forward(m, s[1], {});
    CHECK(bit_identical(a.hidden, b.hidden));
    const auto clean = forward(build_model(ToyModelConfig{}), s[1], {});
    CHECK_FALSE(bit_identical(a.hidden, clean.hidden));
}
