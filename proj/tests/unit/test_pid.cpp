#include "skipscope/error.hpp"
#include "skipscope/pid.hpp"
#include "skipscope/rng.hpp"

#include "pid_grid.hpp"

#include <doctest.h>

#include <cmath>
#include <json.hpp>

using namespace skipscope;

namespace {

TripleJoint make(std::size_t nx, std::size_t ny, std::size_t nz, auto&& f)
{
    TripleJoint j{nx, ny, nz, std::vector<double>(nx * ny * nz, 0.0)};
    for (std::size_t x = 0; x < nx; ++x)
        for (std::size_t y = 0; y < ny; ++y)
            for (std::size_t z = 0; z < nz; ++z) j.pmf[(x * ny + y) * nz + z] = f(x, y, z);
    return j;
}

TripleJoint xor_triple()
{
    return make(2, 2, 2, [](auto x, auto y, auto z) { return x == (y ^ z) ? 0.25 : 0.0; });
}
TripleJoint copy_triple()
{
    return make(2, 2, 2, [](auto x, auto y, auto z) { return (x == y && y == z) ? 0.5 : 0.0; });
}
TripleJoint copy_xy_indep_z()
{
    return make(2, 2, 2, [](auto x, auto y, auto) { return x == y ? 0.25 : 0.0; });
}
TripleJoint independent()
{
    return make(2, 3, 2, [](auto x, auto y, auto z) {
        const double px[] = {0.3, 0.7}, py[] = {0.2, 0.5, 0.3}, pz[] = {0.6, 0.4};
        return px[x] * py[y] * pz[z];
    });
}

TripleJoint random_triple(std::uint64_t seed, std::size_t nx, std::size_t ny, std::size_t nz, double zero_frac = 0.0)
{
    Rng rng(seed);
    TripleJoint j{nx, ny, nz, std::vector<double>(nx * ny * nz)};
    double total = 0.0;
    for (auto& v : j.pmf) {
        v = rng.uniform() < zero_frac ? 0.0 : -std::log(1.0 - rng.uniform());
        total += v;
    }
    if (total == 0.0) {
        j.pmf[0] = total = 1.0;
    }
    for (auto& v : j.pmf) v /= total;
    return j;
}

double h_x_given_y(const std::vector<double>& pxy, std::size_t nx, std::size_t ny)
{
    double h = 0.0;
    for (std::size_t y = 0; y < ny; ++y) {
        double py = 0.0;
        for (std::size_t x = 0; x < nx; ++x) py += pxy[x * ny + y];
        for (std::size_t x = 0; x < nx; ++x)
            if (pxy[x * ny + y] > 0) h -= pxy[x * ny + y] * std::log2(pxy[x * ny + y] / py);
    }
    return h;
}

void check_marginals(const TripleJoint& p, const TripleJoint& q, double tol)
{
    for (std::size_t x = 0; x < p.nx; ++x) {
        for (std::size_t y = 0; y < p.ny; ++y) {
            double a = 0, b = 0;
            for (std::size_t z = 0; z < p.nz; ++z) a += p.p(x, y, z), b += q.p(x, y, z);
            CHECK(std::abs(a - b) <= tol);
        }
        for (std::size_t z = 0; z < p.nz; ++z) {
            double a = 0, b = 0;
            for (std::size_t y = 0; y < p.ny; ++y) a += p.p(x, y, z), b += q.p(x, y, z);
            CHECK(std::abs(a - b) <= tol);
        }
    }
}

} // namespace

TEST_CASE("BROJA examples")
{
    CHECK(broja_unique(copy_xy_indep_z()).uni == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(std::abs(broja_unique(xor_triple()).uni) <= 1e-3);
    CHECK(std::abs(broja_unique(copy_triple()).uni) <= 1e-3);
}

TEST_CASE("PID examples")
{
    SUBCASE("independent")
    {
        const auto r = pid_decompose(independent());
        for (double v : {r.uni_XY, r.uni_XZ, r.red, r.syn}) CHECK(std::abs(v) <= 1e-3);
    }
    SUBCASE("XOR")
    {
        const auto r = pid_decompose(xor_triple());
        CHECK(std::abs(r.syn - 1.0) <= 1e-3);
        for (double v : {r.uni_XY, r.uni_XZ, r.red}) CHECK(std::abs(v) <= 1e-3);
    }
    SUBCASE("copy")
    {
        const auto r = pid_decompose(copy_triple());
        CHECK(std::abs(r.red - 1.0) <= 1e-3);
        for (double v : {r.uni_XY, r.uni_XZ, r.syn}) CHECK(std::abs(v) <= 1e-3);
    }
}

TEST_CASE("decomposition identities and feasibility on random joints")
{
    for (std::uint64_t s = 0; s < 25; ++s) {
        const TripleJoint p = random_triple(s, 2 + s % 3, 2 + (s / 3) % 3, 2 + (s / 9) % 2, s % 4 == 0 ? 0.3 : 0.0);
        const auto r = pid_decompose(p);
        const auto info = triple_info(p);
        for (double v : {r.uni_XY, r.uni_XZ, r.red, r.syn}) CHECK(v >= -1e-6);
        CHECK(std::abs(r.uni_XY + r.red - info.I_XY) <= 1e-4);
        CHECK(std::abs(r.uni_XZ + r.red - info.I_XZ) <= 1e-4);
        CHECK(std::abs(r.uni_XY + r.uni_XZ + r.red + r.syn - info.I_XYZ) <= 1e-4);
        check_marginals(p, r.Q_star, 1e-7);
    }
}

TEST_CASE("self-unique lemma on 100 random joints")
{
    for (std::uint64_t s = 0; s < 100; ++s) {
        const std::size_t nx = 2 + s % 4, ny = 2 + (s / 4) % 3;
        Rng rng(1000 + s);
        std::vector<double> pxy(nx * ny);
        double total = 0.0;
        for (auto& v : pxy) total += (v = -std::log(1.0 - rng.uniform()));
        for (auto& v : pxy) v /= total;
        // Triple (X; X, Y): the second variable is a copy of X.
        const TripleJoint t = make(nx, nx, ny, [&](auto x, auto x2, auto y) { return x == x2 ? pxy[x * ny + y] : 0.0; });
        const auto r = broja_unique(t);
        CHECK(std::abs(r.uni - h_x_given_y(pxy, nx, ny)) <= 1e-4);
    }
}

TEST_CASE("2x2x2 grid oracle equivalence")
{
    std::vector<TripleJoint> cases{xor_triple(), copy_triple(), copy_xy_indep_z()};
    for (std::uint64_t s = 0; s < 12; ++s) {
        cases.push_back(random_triple(50 + s, 2, 2, 2, s % 3 == 0 ? 0.25 : 0.0));
    }
    for (const auto& p : cases) {
        const double grid = testing::grid_unique(p);
        const double solved = broja_unique(p).uni;
        CHECK(std::abs(grid - solved) <= 2e-3);
    }
}

TEST_CASE("objective is nonincreasing along every restart")
{
    BrojaOptions opt;
    opt.record_history = true;
    for (std::uint64_t s = 0; s < 10; ++s) {
        const auto r = broja_unique(random_triple(200 + s, 3, 3, 3), opt);
        REQUIRE(r.histories.size() == opt.restarts);
        for (const auto& h : r.histories) {
            for (std::size_t i = 1; i < h.size(); ++i) CHECK(h[i] <= h[i - 1] + 1e-12);
        }
    }
}

TEST_CASE("pid input handling")
{
    const auto nested = triple_from_json(R"({"pmf": [[[0.25, 0], [0, 0.25]], [[0, 0.25], [0.25, 0]]]})");
    CHECK(nested.nx == 2);
    CHECK(nested.p(0, 0, 0) == 0.25);
    CHECK(nested.p(1, 0, 1) == 0.25);
    const auto flat = triple_from_json(R"({"shape": [2,2,2], "pmf": [0.25,0,0,0.25,0,0.25,0.25,0]})");
    CHECK(flat.pmf == nested.pmf);
    CHECK_THROWS_AS(triple_from_json(R"({"pmf": [[[0.5, 0.6]]]})"), Error);
    TripleJoint big{17, 1, 1, std::vector<double>(17, 1.0 / 17)};
    CHECK_THROWS_AS(broja_unique(big), Error);

    const auto j = nlohmann::json::parse(pid_json(pid_decompose(xor_triple())));
    for (const char* k : {"uni_XY", "uni_XZ", "red", "syn", "solver_gap"}) CHECK(j.contains(k));
}

TEST_CASE("deterministic across runs")
{
    const auto p = random_triple(77, 3, 4, 2);
    CHECK(pid_json(pid_decompose(p)) == pid_json(pid_decompose(p)));
}
