#include "skipscope/error.hpp"
#include "skipscope/redundancy.hpp"

#include "fixtures.hpp"

#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <sstream>

using namespace skipscope;

namespace {

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

// Two layers; token i of layer 1 sits at cosine distance dists[i] from layer 0.
HiddenTrace two_layer_trace(const std::vector<double>& dists, Modality m, std::size_t dim = 4)
{
    const std::size_t n = dists.size() + 1;
    HiddenTrace h(2, n, dim);
    h.modality_mask.assign(n, m);
    h.modality_mask[0] = Modality::text;
    h.state(0, 0)[0] = 1.0f;
    h.state(1, 0)[0] = 1.0f;
    for (std::size_t i = 0; i < dists.size(); ++i) {
        h.state(0, i + 1)[0] = 1.0f;
        const auto v = testing::at_distance(dists[i], dim, 1.0 + static_cast<double>(i));
        std::copy(v.begin(), v.end(), h.state(1, i + 1).begin());
    }
    return h;
}

// Direct formula, independent of the library's kernel.
double naive_rho(std::span<const float> x, std::span<const float> y)
{
    long double d = 0, a = 0, b = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        d += static_cast<long double>(x[i]) * y[i];
        a += static_cast<long double>(x[i]) * x[i];
        b += static_cast<long double>(y[i]) * y[i];
    }
    return static_cast<double>(1.0L - d / std::sqrt(a * b));
}

} // namespace

TEST_CASE("cosine_distance basics")
{
    const std::vector<double> e0{1, 0}, e1{0, 1}, m0{-1, 0};
    CHECK(cosine_distance(std::span<const double>(e0), std::span<const double>(e0)) == 0.0);
    CHECK(cosine_distance(std::span<const double>(e0), std::span<const double>(e1)) == 1.0);
    CHECK(cosine_distance(std::span<const double>(e0), std::span<const double>(m0)) == 2.0);

    const std::vector<double> z{0, 0};
    CHECK(error_of([&] { cosine_distance(std::span<const double>(e0), std::span<const double>(z)); }) ==
          ErrorCode::degenerate_vector);

    Rng rng(5);
    for (int i = 0; i < 200; ++i) {
        std::vector<float> x(13), y(13);
        for (auto& v : x) v = static_cast<float>(rng.normal());
        for (auto& v : y) v = static_cast<float>(rng.normal());
        const double r = cosine_distance(std::span<const float>(x), std::span<const float>(y));
        CHECK(r == doctest::Approx(naive_rho(x, y)).epsilon(1e-12));
        CHECK(r == cosine_distance(std::span<const float>(y), std::span<const float>(x)));
        CHECK(std::abs(cosine_distance(std::span<const float>(x), std::span<const float>(x))) <= 1e-12);
    }
}

TEST_CASE("layer_metrics examples")
{
    SUBCASE("identical layers")
    {
        HiddenTrace h = testing::random_hidden(3, 2, 6, 5);
        std::copy_n(h.states.begin(), 6 * 5, h.states.begin() + 6 * 5);
        const auto m = layer_metrics(h, 1, Modality::vision, 0.05);
        CHECK(m.mean_cos_dist == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(m.proximal_frac == 1.0);
    }
    SUBCASE("distances 0.04 and 0.06 at t = 0.05")
    {
        const HiddenTrace h = two_layer_trace({0.04, 0.06}, Modality::vision);
        const auto m = layer_metrics(h, 1, Modality::vision, 0.05);
        CHECK(m.mean_cos_dist == doctest::Approx(0.05).epsilon(1e-6));
        CHECK(m.proximal_frac == 0.5);
        CHECK(m.n_tokens == 2);
        std::vector<double> brute;
        for (std::size_t i = 1; i < 3; ++i) {
            brute.push_back(naive_rho(h.state(1, i), h.state(0, i)));
        }
        CHECK(m.mean_cos_dist == doctest::Approx((brute[0] + brute[1]) / 2).epsilon(1e-9));
    }
    SUBCASE("orthogonal across layers")
    {
        HiddenTrace h(2, 3, 2);
        h.modality_mask = {Modality::text, Modality::vision, Modality::vision};
        for (std::size_t i = 0; i < 3; ++i) {
            h.state(0, i)[0] = 1.0f;
            h.state(1, i)[1] = 2.0f;
        }
        const auto m = layer_metrics(h, 1, Modality::text, 0.05);
        CHECK(m.mean_cos_dist == 1.0);
        CHECK(m.proximal_frac == 0.0);
    }
    SUBCASE("errors")
    {
        HiddenTrace h = testing::random_hidden(1, 2, 2, 3);
        h.modality_mask = {Modality::text, Modality::text};
        CHECK(error_of([&] { layer_metrics(h, 1, Modality::vision, 0.05); }) == ErrorCode::empty_modality);
        std::fill(h.state(1, 1).begin(), h.state(1, 1).end(), 0.0f);
        CHECK(error_of([&] { layer_metrics(h, 1, Modality::text, 0.05); }) == ErrorCode::degenerate_vector);
        CHECK(error_of([&] { layer_metrics(h, 0, Modality::text, 0.05); }) == ErrorCode::invalid_argument);
    }
}

TEST_CASE("redundancy_profile pooling")
{
    const HiddenTrace a = testing::random_hidden(10, 4, 9, 6);
    const HiddenTrace b = testing::random_hidden(11, 4, 5, 6);

    SUBCASE("single trace equals per-layer metrics")
    {
        const auto p = redundancy_profile(std::span<const HiddenTrace>(&a, 1), 0.7);
        for (std::size_t l = 1; l < 4; ++l) {
            for (Modality m : {Modality::text, Modality::vision}) {
                const auto lm = layer_metrics(a, l, m, 0.7);
                const ProfileEntry* e = p.find(l, m);
                REQUIRE(e != nullptr);
                CHECK(e->mean_cos_dist == doctest::Approx(lm.mean_cos_dist).epsilon(1e-14));
                CHECK(e->proximal_frac == lm.proximal_frac);
            }
        }
    }
    SUBCASE("duplicates are idempotent")
    {
        const std::vector<HiddenTrace> one{a}, two{a, a};
        const auto p1 = redundancy_profile(one, 0.5), p2 = redundancy_profile(two, 0.5);
        REQUIRE(p1.entries.size() == p2.entries.size());
        for (std::size_t i = 0; i < p1.entries.size(); ++i) {
            CHECK(p1.entries[i].mean_cos_dist == doctest::Approx(p2.entries[i].mean_cos_dist).epsilon(1e-14));
            CHECK(p1.entries[i].proximal_frac == p2.entries[i].proximal_frac);
        }
    }
    SUBCASE("token-weighted mean and order independence")
    {
        const std::vector<HiddenTrace> ab{a, b}, ba{b, a};
        const auto pab = redundancy_profile(ab, 0.9), pba = redundancy_profile(ba, 0.9);
        CHECK(profile_csv(pab) == profile_csv(pba));
        for (std::size_t l = 1; l < 4; ++l) {
            std::vector<double> all;
            for (const auto* h : {&a, &b}) {
                for (std::size_t i = 0; i < h->token_count; ++i) {
                    if (h->modality_mask[i] == Modality::vision) {
                        all.push_back(naive_rho(h->state(l, i), h->state(l - 1, i)));
                    }
                }
            }
            const double mean = std::accumulate(all.begin(), all.end(), 0.0) / static_cast<double>(all.size());
            const double frac =
                static_cast<double>(std::count_if(all.begin(), all.end(), [](double r) { return r < 0.9; })) /
                static_cast<double>(all.size());
            const ProfileEntry* e = pab.find(l, Modality::vision);
            REQUIRE(e != nullptr);
            CHECK(e->n_tokens == all.size());
            CHECK(e->mean_cos_dist == doctest::Approx(mean).epsilon(1e-9));
            CHECK(e->proximal_frac == doctest::Approx(frac));
            CHECK(e->sample_count == 2);
        }
    }
    SUBCASE("shape mismatch")
    {
        const std::vector<HiddenTrace> bad{a, testing::random_hidden(2, 3, 5, 6)};
        CHECK(error_of([&] { redundancy_profile(bad, 0.05); }) == ErrorCode::shape_mismatch);
    }
    SUBCASE("threshold domain")
    {
        const std::vector<HiddenTrace> one{a};
        CHECK(error_of([&] { redundancy_profile(one, 0.0); }) == ErrorCode::invalid_argument);
        CHECK(error_of([&] { redundancy_profile(one, 2.0); }) == ErrorCode::invalid_argument);
    }
}

TEST_CASE("profile properties")
{
    for (std::uint64_t s = 0; s < 20; ++s) {
        HiddenTrace h = testing::random_hidden(100 + s, 5, 8, 4);
        // Pull layers together so the proximal fraction is non-trivial.
        Rng rng(s);
        for (std::size_t l = 1; l < 5; ++l) {
            for (std::size_t i = 0; i < 8; ++i) {
                for (std::size_t d = 0; d < 4; ++d) {
                    h.state(l, i)[d] = h.state(l - 1, i)[d] + static_cast<float>(0.3 * rng.normal());
                }
            }
        }
        const std::vector<HiddenTrace> one{h};
        const auto base = redundancy_profile(one, 0.05);

        HiddenTrace scaled = h;
        for (std::size_t l = 0; l < 5; ++l) {
            for (std::size_t i = 0; i < 8; ++i) {
                const float c = static_cast<float>(1 << ((l + i) % 5));
                for (auto& x : scaled.state(l, i)) x *= c;
            }
        }
        const std::vector<HiddenTrace> sv{scaled};
        const auto sp = redundancy_profile(sv, 0.05);

        std::vector<double> prev_p(base.entries.size(), 0.0);
        for (double t : {0.01, 0.05, 0.1, 0.3, 1.0, 1.9}) {
            const auto p = redundancy_profile(one, t);
            for (std::size_t k = 0; k < p.entries.size(); ++k) {
                const auto& e = p.entries[k];
                CHECK(e.proximal_frac >= prev_p[k]);
                prev_p[k] = e.proximal_frac;
                CHECK(e.mean_cos_dist >= 0.0);
                CHECK(e.mean_cos_dist <= 2.0);
                CHECK(e.mean_cos_dist < t * e.proximal_frac + 2.0 * (1.0 - e.proximal_frac) + 1e-9);
            }
        }
        for (std::size_t k = 0; k < base.entries.size(); ++k) {
            CHECK(sp.entries[k].mean_cos_dist == doctest::Approx(base.entries[k].mean_cos_dist).epsilon(1e-6));
        }
    }
}

TEST_CASE("token permutation within a modality leaves the profile unchanged")
{
    const HiddenTrace h = testing::random_hidden(77, 3, 10, 5);
    HiddenTrace p = h;
    // Swap vision tokens 1 and 9 (same modality under the alternating mask).
    for (std::size_t l = 0; l < 3; ++l) {
        std::swap_ranges(p.state(l, 1).begin(), p.state(l, 1).end(), p.state(l, 9).begin());
    }
    const std::vector<HiddenTrace> a{h}, b{p};
    CHECK(profile_csv(redundancy_profile(a)) == profile_csv(redundancy_profile(b)));
}

TEST_CASE("profile CSV schema")
{
    const std::vector<HiddenTrace> one{two_layer_trace({0.04, 0.06}, Modality::vision)};
    const std::string csv = profile_csv(redundancy_profile(one));
    std::istringstream in(csv);
    std::string header, row;
    std::getline(in, header);
    CHECK(header == "layer,modality,mean_cos_dist,proximal_frac,t,n_tokens");
    int rows = 0;
    while (std::getline(in, row)) {
        ++rows;
        CHECK(std::count(row.begin(), row.end(), ',') == 5);
    }
    CHECK(rows == 2);
}
