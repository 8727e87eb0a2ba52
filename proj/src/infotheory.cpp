#include "skipscope/infotheory.hpp"

#include "skipscope/error.hpp"
#include "skipscope/report.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>

namespace skipscope {

namespace {

double plogp(double p)
{
    return p > 0.0 ? -p * std::log2(p) : 0.0;
}

void require_metric(const DiscreteJoint& joint)
{
    if (!joint.has_metric()) {
        throw Error(ErrorCode::missing_metric, "joint has no dissimilarity attached");
    }
}

std::vector<double> marginal_x(const DiscreteJoint& j)
{
    std::vector<double> m(j.n, 0.0);
    for (std::size_t x = 0; x < j.n; ++x) {
        for (std::size_t y = 0; y < j.n; ++y) {
            m[x] += j.p(x, y);
        }
    }
    return m;
}

std::vector<double> marginal_y(const DiscreteJoint& j)
{
    std::vector<double> m(j.n, 0.0);
    for (std::size_t x = 0; x < j.n; ++x) {
        for (std::size_t y = 0; y < j.n; ++y) {
            m[y] += j.p(x, y);
        }
    }
    return m;
}

// Probability mass outside the closed t-ball: P[rho(X, Y) > t].
double tail_mass(const DiscreteJoint& j, double t)
{
    double pt = 0.0;
    for (std::size_t x = 0; x < j.n; ++x) {
        for (std::size_t y = 0; y < j.n; ++y) {
            if (j.rho(x, y) > t) {
                pt += j.p(x, y);
            }
        }
    }
    return std::clamp(pt, 0.0, 1.0);
}

} // namespace

void validate_joint(const DiscreteJoint& joint)
{
    if (joint.n == 0 || joint.pmf.size() != joint.n * joint.n) {
        throw Error(ErrorCode::validation_error, "pmf must be an n x n table with n >= 1");
    }
    double total = 0.0;
    for (double v : joint.pmf) {
        if (!(v >= 0.0) || !std::isfinite(v)) {
            throw Error(ErrorCode::validation_error, "pmf entries must be finite and nonnegative");
        }
        total += v;
    }
    if (std::abs(total - 1.0) > 1e-9) {
        throw Error(ErrorCode::validation_error, "pmf sums to " + format_number(total));
    }
    if (!joint.has_metric()) {
        return;
    }
    if (joint.dissimilarity.size() != joint.n * joint.n) {
        throw Error(ErrorCode::validation_error, "dissimilarity must be n x n");
    }
    for (std::size_t a = 0; a < joint.n; ++a) {
        if (joint.rho(a, a) != 0.0) {
            throw Error(ErrorCode::validation_error, "dissimilarity(a, a) != 0 at index " + std::to_string(a));
        }
        for (std::size_t b = a + 1; b < joint.n; ++b) {
            if (joint.rho(a, b) != joint.rho(b, a)) {
                throw Error(ErrorCode::validation_error, "dissimilarity not symmetric at (" + std::to_string(a) +
                                                             ", " + std::to_string(b) + ")");
            }
        }
    }
}

DiscreteJoint joint_from_pairs(const std::vector<std::pair<std::size_t, std::size_t>>& pairs,
                               const std::vector<double>* metric, std::size_t metric_size)
{
    if (pairs.empty()) {
        throw Error(ErrorCode::empty_input, "no label pairs");
    }
    std::vector<std::size_t> labels;
    for (const auto& [a, b] : pairs) {
        labels.push_back(a);
        labels.push_back(b);
    }
    std::sort(labels.begin(), labels.end());
    labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
    std::map<std::size_t, std::size_t> index;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        index[labels[i]] = i;
    }

    DiscreteJoint j;
    j.n = labels.size();
    j.labels = labels;
    std::vector<std::size_t> counts(j.n * j.n, 0);
    for (const auto& [a, b] : pairs) {
        ++counts[index[a] * j.n + index[b]];
    }
    j.pmf.resize(counts.size());
    for (std::size_t i = 0; i < counts.size(); ++i) {
        j.pmf[i] = static_cast<double>(counts[i]) / static_cast<double>(pairs.size());
    }

    if (metric != nullptr) {
        if (metric->size() != metric_size * metric_size || labels.back() >= metric_size) {
            throw Error(ErrorCode::shape_mismatch, "metric does not cover the observed labels");
        }
        j.dissimilarity.resize(j.n * j.n);
        for (std::size_t a = 0; a < j.n; ++a) {
            for (std::size_t b = 0; b < j.n; ++b) {
                j.dissimilarity[a * j.n + b] = (*metric)[labels[a] * metric_size + labels[b]];
            }
        }
    }
    return j;
}

double binary_entropy(double p)
{
    return plogp(p) + plogp(1.0 - p);
}

EntropyStats entropy_stats(const DiscreteJoint& joint)
{
    EntropyStats s;
    for (double v : joint.pmf) {
        s.H_XY += plogp(v);
    }
    for (double v : marginal_x(joint)) {
        s.H_X += plogp(v);
    }
    for (double v : marginal_y(joint)) {
        s.H_Y += plogp(v);
    }
    s.H_X_given_Y = std::max(0.0, s.H_XY - s.H_Y);
    s.H_Y_given_X = std::max(0.0, s.H_XY - s.H_X);
    s.I = std::max(0.0, s.H_X - s.H_X_given_Y);
    return s;
}

BoundReport fano_upper_bound(const DiscreteJoint& joint, double t)
{
    require_metric(joint);
    if (!(t >= 0.0)) {
        throw Error(ErrorCode::invalid_argument, "t must be >= 0");
    }
    BoundReport r;
    r.t = t;
    r.P_t = tail_mass(joint, t);
    r.H2_Pt = binary_entropy(r.P_t);

    // Ball sizes are taken over the whole shared support.
    r.N_t_max = 0;
    r.N_t_min = std::numeric_limits<std::size_t>::max();
    for (std::size_t x = 0; x < joint.n; ++x) {
        std::size_t ball = 0;
        for (std::size_t y = 0; y < joint.n; ++y) {
            ball += joint.rho(x, y) <= t ? 1 : 0;
        }
        r.N_t_max = std::max(r.N_t_max, ball);
        r.N_t_min = std::min(r.N_t_min, ball);
    }

    const double outside = static_cast<double>(joint.n - r.N_t_min);
    const double nmax = static_cast<double>(r.N_t_max);
    double middle = 0.0;
    r.applicable_fano = outside > 0.0;
    if (r.applicable_fano) {
        middle = r.P_t * std::log2(outside / nmax);
    }
    r.fano_upper = r.H2_Pt + middle + std::log2(nmax);
    return r;
}

BoundReport mi_lower_bound(const DiscreteJoint& joint, double t)
{
    require_metric(joint);
    if (!(t >= 0.0)) {
        throw Error(ErrorCode::invalid_argument, "t must be >= 0");
    }
    BoundReport r;
    r.t = t;
    r.P_t = tail_mass(joint, t);
    r.H2_Pt = binary_entropy(r.P_t);

    const auto px = marginal_x(joint);
    const auto py = marginal_y(joint);
    r.p_min = 1.0;
    r.p_max = 0.0;
    for (std::size_t x = 0; x < joint.n; ++x) {
        if (!(px[x] > 0.0)) {
            continue;
        }
        double mass = 0.0;
        for (std::size_t y = 0; y < joint.n; ++y) {
            if (joint.rho(y, x) <= t) {
                mass += py[y];
            }
        }
        mass = std::clamp(mass, 0.0, 1.0);
        r.p_min = std::min(r.p_min, mass);
        r.p_max = std::max(r.p_max, mass);
    }
    r.applicable_mi = r.p_min >= 0.0 && r.p_min < 1.0 && r.p_max > 0.0 && r.p_max <= 1.0 && r.p_min + r.p_max < 1.0;

    // Each term follows 0 * log(anything) = 0; an unbounded term can only
    // appear outside the applicability gate.
    const auto term = [](double weight, double arg) {
        if (weight == 0.0) {
            return 0.0;
        }
        return arg > 0.0 ? weight * std::log2(arg) : -std::numeric_limits<double>::infinity();
    };
    r.mi_lower = -term(1.0 - r.P_t, r.p_max) - term(r.P_t, 1.0 - r.p_min) - r.H2_Pt;
    if (std::isinf(r.mi_lower)) {
        r.mi_lower = 0.0;
        r.applicable_mi = false;
    }
    return r;
}

BoundReport bound_report(const DiscreteJoint& joint, double t)
{
    BoundReport r = fano_upper_bound(joint, t);
    const BoundReport mi = mi_lower_bound(joint, t);
    r.p_min = mi.p_min;
    r.p_max = mi.p_max;
    r.mi_lower = mi.mi_lower;
    r.applicable_mi = mi.applicable_mi;
    const EntropyStats s = entropy_stats(joint);
    r.H_cond = s.H_X_given_Y;
    r.I_exact = s.I;
    return r;
}

double functional_gap_bound(double B, double H_cond_bits)
{
    if (!(B >= 0.0) || !(H_cond_bits >= 0.0)) {
        throw Error(ErrorCode::invalid_argument, "B and H must be nonnegative");
    }
    return 2.0 * B * B * (H_cond_bits * std::numbers::ln2);
}

} // namespace skipscope
