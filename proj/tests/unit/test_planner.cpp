#include "skipscope/error.hpp"
#include "skipscope/planner.hpp"
#include "skipscope/report.hpp"
#include "skipscope/rng.hpp"

#include <doctest.h>

#include <filesystem>

using namespace skipscope;

namespace {

std::string fixture(const std::string& name)
{
    return read_file(std::filesystem::path(SKIPSCOPE_FIXTURE_DIR) / name);
}

SkipPlan plan_fixture(const std::string& stem, Thresholds th = {})
{
    const auto [profile, var] = load_external_metrics(fixture(stem + "_profile.csv"), fixture(stem + "_var.csv"));
    return plan_skips(evaluate_conditions(profile, var, th));
}

// Synthetic dense profile: layers 1..n with the given vision metrics and VAR/H.
std::pair<RedundancyProfile, VarProfile> dense(const std::vector<double>& D, const std::vector<double>& p,
                                               const std::vector<double>& var)
{
    RedundancyProfile rp;
    rp.layer_count = D.size() + 1;
    VarProfile vp;
    vp.head_count = 1;
    for (std::size_t i = 0; i < D.size(); ++i) {
        ProfileEntry e;
        e.layer = i + 1;
        e.modality = Modality::vision;
        e.mean_cos_dist = D[i];
        e.proximal_frac = p[i];
        e.n_tokens = 10;
        rp.entries.push_back(e);
        vp.layers.push_back({i + 1, var[i], var[i], 1.0 - var[i]});
    }
    return {rp, vp};
}

ErrorCode error_of(auto&& fn)
{
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an error");
    return ErrorCode::io_error;
}

} // namespace

TEST_CASE("evaluate_conditions on published 7B layers")
{
    const auto [profile, var] = load_external_metrics(fixture("llava15_7b_gqa_late_profile.csv"),
                                                      fixture("llava15_7b_gqa_late_var.csv"));
    const auto c = evaluate_conditions(profile, var, Thresholds{});
    REQUIRE(c.layers.size() == 3);
    CHECK(c.layers[0].layer == 4);
    CHECK(c.layers[0].geometric_ok);
    CHECK(c.layers[0].proximal_ok);
    CHECK(c.layers[0].var_ok);
    CHECK(c.layers[1].layer == 8);
    CHECK_FALSE(c.layers[1].geometric_ok);
    CHECK_FALSE(c.layers[1].proximal_ok);
}

TEST_CASE("all-zero distances, p = 1, VAR = 0")
{
    const auto [rp, vp] = dense({0, 0, 0}, {1, 1, 1}, {0, 0, 0});
    const auto c = evaluate_conditions(rp, vp, Thresholds{});
    for (const auto& f : c.layers) CHECK(f.late_entry_ok());
    const auto plan = plan_skips(c);
    CHECK(plan.late_entry_layer == 3);
    CHECK(plan.early_exit_layer == 1u);
}

TEST_CASE("prefix and suffix rules")
{
    SUBCASE("layer 5 breaks the prefix")
    {
        const auto [rp, vp] = dense({0.01, 0.01, 0.01, 0.01, 0.01, 0.01}, {1, 1, 1, 1, 0.5, 1}, {0, 0, 0, 0, 0, 0});
        const auto plan = plan_skips(evaluate_conditions(rp, vp, Thresholds{}));
        CHECK(plan.late_entry_layer == 4);
        CHECK(plan.late_entry_viable == std::vector<std::size_t>{0, 1, 2, 3, 4});
    }
    SUBCASE("nothing satisfies the conditions")
    {
        const auto [rp, vp] = dense({0.5, 0.5, 0.5}, {0.1, 0.1, 0.1}, {0.9, 0.9, 0.9});
        const auto plan = plan_skips(evaluate_conditions(rp, vp, Thresholds{}));
        CHECK(plan.late_entry_layer == 0);
        CHECK_FALSE(plan.early_exit_layer.has_value());
        CHECK(plan.late_entry_viable == std::vector<std::size_t>{0});
        CHECK(plan.early_exit_viable.empty());
    }
    SUBCASE("var_ok only from layer 24 onward")
    {
        std::vector<double> D(32, 0.5), p(32, 0.1), var(32, 0.4);
        for (std::size_t l = 24; l <= 32; ++l) var[l - 1] = 0.01;
        const auto [rp, vp] = dense(D, p, var);
        const auto plan = plan_skips(evaluate_conditions(rp, vp, Thresholds{}));
        CHECK(plan.early_exit_layer == 24u);
    }
    SUBCASE("a late var violation moves early exit past it")
    {
        const auto [rp, vp] = dense({0, 0, 0, 0}, {1, 1, 1, 1}, {0, 0, 0.3, 0});
        const auto plan = plan_skips(evaluate_conditions(rp, vp, Thresholds{}));
        CHECK(plan.early_exit_layer == 4u);
        CHECK(plan.late_entry_layer == 2);
    }
}

TEST_CASE("published late-entry metrics give viable layers {0, 4}")
{
    for (const char* stem : {"llava15_7b_gqa_late", "llava15_13b_gqa_late", "llavanext_7b_gqa_late"}) {
        CAPTURE(stem);
        const auto plan = plan_fixture(stem);
        CHECK(plan.late_entry_layer == 4);
        CHECK(plan.late_entry_viable == std::vector<std::size_t>{0, 4});
    }
}

TEST_CASE("published early-exit metrics flag {24, 28}")
{
    const auto plan = plan_fixture("llava15_7b_gqa_exit");
    CHECK(plan.early_exit_layer == 24u);
    CHECK(plan.early_exit_viable == std::vector<std::size_t>{24, 28});
}

TEST_CASE("load_external_metrics")
{
    SUBCASE("published layer-4 row")
    {
        const auto p = load_profile_csv("4,VISION,0.025,0.972,0.05,576\n");
        REQUIRE(p.entries.size() == 1);
        const auto& e = p.entries[0];
        CHECK(e.layer == 4);
        CHECK(e.modality == Modality::vision);
        CHECK(e.mean_cos_dist == 0.025);
        CHECK(e.proximal_frac == 0.972);
        CHECK(e.t == 0.05);
        CHECK(e.n_tokens == 576);
    }
    SUBCASE("empty input")
    {
        CHECK(error_of([] { load_profile_csv(""); }) == ErrorCode::empty_input);
        CHECK(error_of([] { load_profile_csv("layer,modality,mean_cos_dist,proximal_frac,t,n_tokens\n"); }) ==
              ErrorCode::empty_input);
    }
    SUBCASE("proximal_frac out of range")
    {
        try {
            load_profile_csv("4,VISION,0.025,1.3,0.05,576\n");
            FAIL("accepted 1.3");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::format_rejected);
            CHECK(e.detail().find("row 1") != std::string::npos);
            CHECK(e.detail().find("proximal_frac") != std::string::npos);
        }
    }
    SUBCASE("malformed rows")
    {
        CHECK(error_of([] { load_profile_csv("4,VISION,0.025\n"); }) == ErrorCode::format_rejected);
        CHECK(error_of([] { load_profile_csv("4,AUDIO,0.025,0.9,0.05,5\n"); }) == ErrorCode::format_rejected);
        CHECK(error_of([] { load_var_csv("4,0,0.64,0.5,32\n"); }) == ErrorCode::format_rejected);
    }
    SUBCASE("layer sets must match")
    {
        CHECK(error_of([] {
                  const auto [p, v] =
                      load_external_metrics("4,VISION,0.025,0.972,0.05,576\n", "8,0,0.64,0.02,32\n");
                  evaluate_conditions(p, v, Thresholds{});
              }) == ErrorCode::shape_mismatch);
    }
    SUBCASE("round trip through the CSV writers is idempotent")
    {
        const auto [p1, v1] = load_external_metrics(fixture("llava15_7b_gqa_exit_profile.csv"),
                                                    fixture("llava15_7b_gqa_exit_var.csv"));
        const auto [p2, v2] = load_external_metrics(profile_csv(p1), var_csv(v1));
        const auto c1 = evaluate_conditions(p1, v1, Thresholds{});
        const auto c2 = evaluate_conditions(p2, v2, Thresholds{});
        CHECK(rationale_csv(plan_skips(c1)) == rationale_csv(plan_skips(c2)));
        CHECK(profile_csv(p1) == profile_csv(p2));
    }
}

TEST_CASE("threshold monotonicity")
{
    Rng rng(3);
    for (int trial = 0; trial < 300; ++trial) {
        std::vector<double> D(8), p(8), v(8);
        for (std::size_t i = 0; i < 8; ++i) {
            D[i] = rng.uniform(0.0, 0.08);
            p[i] = rng.uniform(0.6, 1.0);
            v[i] = rng.uniform(0.0, 0.12);
        }
        const auto [rp, vp] = dense(D, p, v);
        const Thresholds base{rng.uniform(0.005, 0.05), rng.uniform(0.01, 0.3), rng.uniform(0.01, 0.1), 0.05};
        const auto p0 = plan_skips(evaluate_conditions(rp, vp, base));
        for (int which = 0; which < 3; ++which) {
            Thresholds relaxed = base;
            (which == 0 ? relaxed.eps_geo : which == 1 ? relaxed.eps_prox : relaxed.tau_var) *= 1.5;
            const auto p1 = plan_skips(evaluate_conditions(rp, vp, relaxed));
            CHECK(p1.late_entry_layer >= p0.late_entry_layer);
            if (p0.early_exit_layer) {
                REQUIRE(p1.early_exit_layer);
                CHECK(*p1.early_exit_layer <= *p0.early_exit_layer);
            }
        }
    }
}

TEST_CASE("threshold validation")
{
    Thresholds th;
    th.eps_prox = 1.5;
    CHECK(error_of([&] { validate_thresholds(th); }) == ErrorCode::invalid_argument);
    th = {};
    th.tau_var = -0.1;
    CHECK(error_of([&] { validate_thresholds(th); }) == ErrorCode::invalid_argument);
}
