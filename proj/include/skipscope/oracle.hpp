#pragma once

// Exhaustive checks of the functional-redundancy theorems on small discrete
// instances where every expectation is a finite sum.
//
// An instance lives on a universe of n = max(nx, ny) unit points. X = X_l
// ranges over the first nx points, Y = X_{l-1} over the first ny. Because the
// support is shared, h(x, y) is tabulated on the whole n x n grid and the
// Lipschitz constants are measured there.

#include "skipscope/infotheory.hpp"

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace skipscope {

struct OracleSizes {
    std::size_t support_x = 3;
    std::size_t support_y = 3;
    std::size_t d = 2;
};

struct OracleInstance {
    std::uint64_t seed = 0;
    std::size_t nx = 0, ny = 0, n = 0;
    std::size_t d = 0;         // dimension of Z
    std::size_t point_dim = 0; // dimension of the unit support points
    std::size_t atoms = 0;     // atoms per x in the law of Z
    bool markov = false;

    std::vector<double> pmf;    // nx * ny, [x][y]
    std::vector<double> points; // n * point_dim
    // Law of Z given (x, y): atom z[x][k] with probability weight[x][y][k].
    std::vector<double> z_atoms; // n * atoms * d
    std::vector<double> weights; // n * n * atoms

    // derived by finalize()
    std::vector<double> h; // n * n * d
    double alpha = 0.0;
    double beta = 0.0;
    double B = 0.0;

    // estimator tables for thm2; f_hat_l indexed by x < nx, f_hat_lm1 by y < ny
    std::vector<double> f_hat_l;   // nx * d
    std::vector<double> f_hat_lm1; // ny * d
    double eta_l = 0.0;
    double eta_lm1 = 0.0;

    double epsilon = 0.0;

    double p(std::size_t x, std::size_t y) const { return pmf[x * ny + y]; }
    const double* point(std::size_t i) const { return points.data() + i * point_dim; }
};

// Recomputes h, alpha, beta, B from the Z law and eta from the estimator tables.
void finalize(OracleInstance& inst);

OracleInstance random_instance(std::uint64_t seed, OracleSizes sizes, bool markov = false);

double expected_rho(const OracleInstance& inst);
std::vector<double> f_star_l(const OracleInstance& inst);   // nx * d, E[Z | X_l = x] (0 where P(x) = 0)
std::vector<double> f_star_lm1(const OracleInstance& inst); // ny * d
bool is_markov(const OracleInstance& inst, double tol = 1e-12);
double conditional_entropy_nats(const OracleInstance& inst); // H(X_l | X_{l-1})

struct CheckReport {
    double lhs = 0.0;
    double rhs = 0.0;
    bool pass = false;
};

inline constexpr double oracle_tolerance = 1e-9;

// Throw Error(PREMISE_FAILED) when the theorem's assumptions do not hold.
CheckReport check_thm1(const OracleInstance& inst);
CheckReport check_thm2(const OracleInstance& inst);
CheckReport check_thm5(const OracleInstance& inst);

struct Prop1Report {
    bool premise_holds = false;
    bool conclusion_holds = false;
    double P_gt_t = 0.0;
    double mean = 0.0;
    bool pass = false;
};

Prop1Report check_prop1(const std::vector<double>& values, const std::vector<double>& probs, double t, double epsilon);

// Lemma helpers; each returns (lhs, rhs) of an identity or inequality.
struct LemmaSides {
    double lhs = 0.0;
    double rhs = 0.0;
};
LemmaSides lemma_cos_l2(const std::vector<double>& x, const std::vector<double>& y); // |x-y|^2 vs 2 rho
LemmaSides lemma_three_norm(const std::vector<double>& a, const std::vector<double>& b, const std::vector<double>& c);

// Markov chain Y - X - Z given by p(y), p(x|y), p(z|x). Returns
// (E_{X,Y} KL(p_{Z|X} || p_{Z|Y}), I(Z; X | Y)), both in nats.
LemmaSides lemma_kl_mi(const std::vector<double>& p_y, const std::vector<double>& p_x_given_y,
                       const std::vector<double>& p_z_given_x, std::size_t ny, std::size_t nx, std::size_t nz);

// Random joint on a shared support of 2..7 labels with a random symmetric
// dissimilarity (zero diagonal), used for the bound suites.
DiscreteJoint random_joint(std::uint64_t seed);
double random_threshold(const DiscreteJoint& joint, std::uint64_t seed);

struct SuiteSummary {
    std::string theorem;
    std::size_t instances = 0;
    std::size_t passes = 0;
    std::size_t premise_failures = 0;
    std::size_t failures = 0;
    double worst_slack = 0.0;
    double seconds = 0.0;
    std::vector<std::string> failing_fixtures; // JSON documents, one per failing instance
};

// Suites: prop1 thm1 thm2 thm5 lemma-cos-l2 lemma-three-norm lemma-kl-mi fano mi-lower
const std::vector<std::string>& suite_names();
SuiteSummary run_suite(const std::string& name, std::size_t instances, std::uint64_t seed);

std::string summary_json(const std::vector<SuiteSummary>& summaries);
std::string instance_json(const OracleInstance& inst);

} // namespace skipscope
