#pragma once

// Partial information decomposition of I(X; Y, Z) with the BROJA unique
// information Uni(X : Y \ Z) = min over Q in Delta_P of I_Q(X; Y | Z), where
// Delta_P holds the joints that agree with P on the (X,Y) and (X,Z) marginals.
//
// Solver: alternating minimisation of D(Q || r(y,z)) over Q in Delta_P and r.
// The r-step is r = Q_yz; the Q-step is the KL projection of r onto Delta_P,
// which separates per x into a matrix-scaling problem on the support allowed
// by P. Both steps can only lower the objective, so every restart descends
// monotonically.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace skipscope {

inline constexpr std::size_t pid_max_support = 16;

struct TripleJoint {
    std::size_t nx = 0, ny = 0, nz = 0;
    std::vector<double> pmf; // [x][y][z]

    double p(std::size_t x, std::size_t y, std::size_t z) const { return pmf[(x * ny + y) * nz + z]; }
};

void validate_triple(const TripleJoint& joint);
TripleJoint swap_yz(const TripleJoint& joint);

// Accepts {"pmf": [[[...]]]} (nested [x][y][z]) or {"shape": [nx,ny,nz], "pmf": [flat]}.
TripleJoint triple_from_json(const std::string& text);

struct TripleInfo {
    double I_XY = 0.0;
    double I_XZ = 0.0;
    double I_XYZ = 0.0; // I(X; Y, Z)
    double I_XY_given_Z = 0.0;
};
TripleInfo triple_info(const TripleJoint& joint); // bits

// I_Q(X; Y | Z) in bits, evaluated in log space.
double conditional_mi_xy_z(const TripleJoint& q);

struct BrojaOptions {
    std::size_t restarts = 20;
    std::size_t max_iterations = 100000;
    std::size_t plateau_window = 50;
    double plateau_tol = 1e-9;
    double stall_gap = 1e-3;
    std::uint64_t seed = 0;
    bool record_history = false;
};

struct BrojaResult {
    double uni = 0.0;
    TripleJoint Q_star;
    double solver_gap = 0.0;
    std::vector<double> restart_objectives;
    std::vector<std::size_t> restart_iterations;
    std::vector<std::vector<double>> histories; // only with record_history
};

BrojaResult broja_unique(const TripleJoint& joint, const BrojaOptions& options = {});

struct PIDResult {
    double uni_XY = 0.0;
    double uni_XZ = 0.0;
    double red = 0.0;
    double syn = 0.0;
    double solver_gap = 0.0;
    TripleJoint Q_star;
    TripleInfo info;
};

PIDResult pid_decompose(const TripleJoint& joint, const BrojaOptions& options = {});

std::string pid_json(const PIDResult& result);

} // namespace skipscope
