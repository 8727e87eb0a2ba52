#pragma once

// Exact discrete entropies and the informational-redundancy bounds.
//
// A DiscreteJoint is the law of (X, Y) = (X_l, X_{l-1}) on a shared finite
// support of n labels. pmf is row-major [x][y]. All reported entropies are in
// bits; functional_gap_bound converts to nats internally.

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace skipscope {

struct DiscreteJoint {
    std::size_t n = 0;                 // shared support size
    std::vector<double> pmf;           // n * n, [x][y]
    std::vector<double> dissimilarity; // n * n or empty
    std::vector<std::size_t> labels;   // external label id of each support index

    double p(std::size_t x, std::size_t y) const { return pmf[x * n + y]; }
    double rho(std::size_t a, std::size_t b) const { return dissimilarity[a * n + b]; }
    bool has_metric() const { return !dissimilarity.empty(); }
};

// Throws VALIDATION_ERROR naming the broken invariant.
void validate_joint(const DiscreteJoint& joint);

// Empirical joint of (first, second) pairs. `metric`, when given, is a square
// matrix over the external label universe; the result keeps only observed labels.
DiscreteJoint joint_from_pairs(const std::vector<std::pair<std::size_t, std::size_t>>& pairs,
                               const std::vector<double>* metric = nullptr, std::size_t metric_size = 0);

struct EntropyStats {
    double H_X = 0.0;
    double H_Y = 0.0;
    double H_XY = 0.0;
    double H_X_given_Y = 0.0;
    double H_Y_given_X = 0.0;
    double I = 0.0;
};

EntropyStats entropy_stats(const DiscreteJoint& joint);

double binary_entropy(double p); // bits, 0 log 0 = 0

struct BoundReport {
    double t = 0.0;
    double P_t = 0.0;
    double H2_Pt = 0.0;
    std::size_t N_t_max = 0;
    std::size_t N_t_min = 0;
    double p_min = 0.0;
    double p_max = 0.0;
    double fano_upper = 0.0;
    double mi_lower = 0.0;
    bool applicable_fano = false;
    bool applicable_mi = false;
    double H_cond = 0.0;
    double I_exact = 0.0;
};

// Fills t, P_t, H2_Pt, N_t_max, N_t_min, fano_upper, applicable_fano.
BoundReport fano_upper_bound(const DiscreteJoint& joint, double t);
// Fills t, P_t, H2_Pt, p_min, p_max, mi_lower, applicable_mi.
BoundReport mi_lower_bound(const DiscreteJoint& joint, double t);
// Both bounds plus the exact H(X|Y) and I(X;Y).
BoundReport bound_report(const DiscreteJoint& joint, double t);

// 2 B^2 H, with H given in bits and used in nats.
double functional_gap_bound(double B, double H_cond_bits);

} // namespace skipscope
