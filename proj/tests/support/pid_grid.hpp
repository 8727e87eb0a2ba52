#pragma once

// Exhaustive search over Delta_P for 2x2x2 joints. For each x the (y, z)
// table has fixed row sums P(x, y) and column sums P(x, z), leaving one free
// coordinate q_x = Q(x, 0, 0). Both q_0 and q_1 are swept on a 1001-point grid.

#include "skipscope/pid.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace skipscope::testing {

inline double grid_cmi(const std::array<double, 8>& q)
{
    // I(X; Y | Z) = sum q(x,y,z) log [ q(x,y,z) q(z) / (q(x,z) q(y,z)) ]
    auto at = [&](int x, int y, int z) { return q[(x * 2 + y) * 2 + z]; };
    double s = 0.0;
    for (int z = 0; z < 2; ++z) {
        double qz = 0.0;
        for (int x = 0; x < 2; ++x)
            for (int y = 0; y < 2; ++y) qz += at(x, y, z);
        for (int x = 0; x < 2; ++x)
            for (int y = 0; y < 2; ++y) {
                const double v = at(x, y, z);
                if (v <= 0.0) continue;
                const double qxz = at(x, 0, z) + at(x, 1, z);
                const double qyz = at(0, y, z) + at(1, y, z);
                s += v * std::log2(v * qz / (qxz * qyz));
            }
    }
    return s;
}

inline double grid_unique(const TripleJoint& p, std::size_t steps = 1000)
{
    std::array<double, 2> lo{}, hi{};
    std::array<std::array<double, 2>, 2> pxy{}, pxz{};
    for (int x = 0; x < 2; ++x) {
        for (int y = 0; y < 2; ++y)
            for (int z = 0; z < 2; ++z) {
                pxy[x][y] += p.p(x, y, z);
                pxz[x][z] += p.p(x, y, z);
            }
        const double px = pxy[x][0] + pxy[x][1];
        lo[x] = std::max(0.0, pxy[x][0] + pxz[x][0] - px);
        hi[x] = std::min(pxy[x][0], pxz[x][0]);
    }
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i <= steps; ++i) {
        for (std::size_t j = 0; j <= steps; ++j) {
            const std::array<double, 2> q0{lo[0] + (hi[0] - lo[0]) * double(i) / double(steps),
                                           lo[1] + (hi[1] - lo[1]) * double(j) / double(steps)};
            std::array<double, 8> q{};
            for (int x = 0; x < 2; ++x) {
                const double a = q0[x];
                q[(x * 2 + 0) * 2 + 0] = a;
                q[(x * 2 + 0) * 2 + 1] = std::max(0.0, pxy[x][0] - a);
                q[(x * 2 + 1) * 2 + 0] = std::max(0.0, pxz[x][0] - a);
                q[(x * 2 + 1) * 2 + 1] = std::max(0.0, pxy[x][1] - pxz[x][0] + a);
            }
            best = std::min(best, grid_cmi(q));
        }
    }
    return best;
}

} // namespace skipscope::testing
