#include "skipscope/oracle.hpp"

#include "skipscope/error.hpp"
#include "skipscope/redundancy.hpp"
#include "skipscope/rng.hpp"
#include "skipscope/simd.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <span>

namespace skipscope {

using nlohmann::json;

namespace {

double norm2(std::span<const double> v)
{
    return simd::dot(v, v);
}

double dist2(const double* a, const double* b, std::size_t n)
{
    return simd::squared_distance({a, n}, {b, n});
}

std::vector<double> random_simplex(Rng& rng, std::size_t n)
{
    // Normalized exponentials: a flat Dirichlet draw.
    std::vector<double> w(n);
    double total = 0.0;
    for (auto& v : w) {
        v = -std::log(1.0 - rng.uniform());
        total += v;
    }
    for (auto& v : w) {
        v /= total;
    }
    return w;
}

std::vector<double> random_unit(Rng& rng, std::size_t dim)
{
    std::vector<double> v(dim);
    double n = 0.0;
    while (!(n > 1e-6)) {
        for (auto& x : v) {
            x = rng.normal();
        }
        n = std::sqrt(norm2(v));
    }
    for (auto& x : v) {
        x /= n;
    }
    return v;
}

double rho_points(const OracleInstance& inst, std::size_t a, std::size_t b)
{
    return cosine_distance(std::span<const double>(inst.point(a), inst.point_dim),
                           std::span<const double>(inst.point(b), inst.point_dim));
}

std::vector<double> px_of(const OracleInstance& inst)
{
    std::vector<double> px(inst.nx, 0.0);
    for (std::size_t x = 0; x < inst.nx; ++x) {
        for (std::size_t y = 0; y < inst.ny; ++y) {
            px[x] += inst.p(x, y);
        }
    }
    return px;
}

std::vector<double> py_of(const OracleInstance& inst)
{
    std::vector<double> py(inst.ny, 0.0);
    for (std::size_t x = 0; x < inst.nx; ++x) {
        for (std::size_t y = 0; y < inst.ny; ++y) {
            py[y] += inst.p(x, y);
        }
    }
    return py;
}

void check_unit_points(const OracleInstance& inst)
{
    for (std::size_t i = 0; i < inst.n; ++i) {
        const double n2 = norm2({inst.point(i), inst.point_dim});
        if (std::abs(std::sqrt(n2) - 1.0) > 1e-9) {
            throw Error(ErrorCode::premise_failed, "support point " + std::to_string(i) + " is not unit norm");
        }
    }
}

void check_geometric_premise(const OracleInstance& inst)
{
    check_unit_points(inst);
    const double mean = expected_rho(inst);
    if (!(mean < inst.epsilon / 2.0)) {
        throw Error(ErrorCode::premise_failed,
                    "E[rho] = " + std::to_string(mean) + " is not below epsilon/2 = " + std::to_string(inst.epsilon / 2));
    }
}

double gap_lhs(const OracleInstance& inst, const std::vector<double>& fl, const std::vector<double>& flm1)
{
    double lhs = 0.0;
    for (std::size_t x = 0; x < inst.nx; ++x) {
        for (std::size_t y = 0; y < inst.ny; ++y) {
            if (inst.p(x, y) > 0.0) {
                lhs += inst.p(x, y) * dist2(fl.data() + x * inst.d, flm1.data() + y * inst.d, inst.d);
            }
        }
    }
    return lhs;
}

} // namespace

std::vector<double> f_star_l(const OracleInstance& inst)
{
    std::vector<double> f(inst.nx * inst.d, 0.0);
    const auto px = px_of(inst);
    for (std::size_t x = 0; x < inst.nx; ++x) {
        if (!(px[x] > 0.0)) {
            continue;
        }
        for (std::size_t y = 0; y < inst.ny; ++y) {
            const double w = inst.p(x, y) / px[x];
            for (std::size_t k = 0; k < inst.d; ++k) {
                f[x * inst.d + k] += w * inst.h[(x * inst.n + y) * inst.d + k];
            }
        }
    }
    return f;
}

std::vector<double> f_star_lm1(const OracleInstance& inst)
{
    std::vector<double> f(inst.ny * inst.d, 0.0);
    const auto py = py_of(inst);
    for (std::size_t y = 0; y < inst.ny; ++y) {
        if (!(py[y] > 0.0)) {
            continue;
        }
        for (std::size_t x = 0; x < inst.nx; ++x) {
            const double w = inst.p(x, y) / py[y];
            for (std::size_t k = 0; k < inst.d; ++k) {
                f[y * inst.d + k] += w * inst.h[(x * inst.n + y) * inst.d + k];
            }
        }
    }
    return f;
}

void finalize(OracleInstance& inst)
{
    const std::size_t n = inst.n;
    const std::size_t d = inst.d;
    inst.h.assign(n * n * d, 0.0);
    for (std::size_t x = 0; x < n; ++x) {
        for (std::size_t y = 0; y < n; ++y) {
            for (std::size_t k = 0; k < inst.atoms; ++k) {
                const double w = inst.weights[(x * n + y) * inst.atoms + k];
                for (std::size_t j = 0; j < d; ++j) {
                    inst.h[(x * n + y) * d + j] += w * inst.z_atoms[(x * inst.atoms + k) * d + j];
                }
            }
        }
    }

    const auto ratio = [&](const double* ha, const double* hb, std::size_t pa, std::size_t pb) {
        const double num = std::sqrt(dist2(ha, hb, d));
        const double den = std::sqrt(dist2(inst.point(pa), inst.point(pb), inst.point_dim));
        if (den == 0.0) {
            return num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
        }
        return num / den;
    };
    inst.alpha = 0.0;
    inst.beta = 0.0;
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = a + 1; b < n; ++b) {
            for (std::size_t c = 0; c < n; ++c) {
                inst.alpha = std::max(inst.alpha, ratio(&inst.h[(a * n + c) * d], &inst.h[(b * n + c) * d], a, b));
                inst.beta = std::max(inst.beta, ratio(&inst.h[(c * n + a) * d], &inst.h[(c * n + b) * d], a, b));
            }
        }
    }

    inst.B = 0.0;
    for (std::size_t i = 0; i < n * inst.atoms; ++i) {
        inst.B = std::max(inst.B, std::sqrt(norm2({inst.z_atoms.data() + i * d, d})));
    }

    const auto fl = f_star_l(inst);
    const auto flm1 = f_star_lm1(inst);
    if (inst.f_hat_l.empty()) {
        inst.f_hat_l = fl;
    }
    if (inst.f_hat_lm1.empty()) {
        inst.f_hat_lm1 = flm1;
    }
    const auto px = px_of(inst);
    const auto py = py_of(inst);
    inst.eta_l = 0.0;
    for (std::size_t x = 0; x < inst.nx; ++x) {
        inst.eta_l += px[x] * dist2(inst.f_hat_l.data() + x * d, fl.data() + x * d, d);
    }
    inst.eta_lm1 = 0.0;
    for (std::size_t y = 0; y < inst.ny; ++y) {
        inst.eta_lm1 += py[y] * dist2(inst.f_hat_lm1.data() + y * d, flm1.data() + y * d, d);
    }
}

OracleInstance random_instance(std::uint64_t seed, OracleSizes sizes, bool markov)
{
    if (sizes.support_x < 2 || sizes.support_y < 2 || sizes.d < 1) {
        throw Error(ErrorCode::invalid_argument, "oracle sizes must satisfy support >= 2 and d >= 1");
    }
    Rng rng(seed);
    OracleInstance inst;
    inst.seed = seed;
    inst.nx = sizes.support_x;
    inst.ny = sizes.support_y;
    inst.n = std::max(inst.nx, inst.ny);
    inst.d = sizes.d;
    inst.point_dim = 3;
    inst.atoms = 3;
    inst.markov = markov;

    // Points clustered around a random direction so that E[rho] is often small.
    const auto centre = random_unit(rng, inst.point_dim);
    const double spread = rng.uniform(0.02, 0.8);
    inst.points.reserve(inst.n * inst.point_dim);
    for (std::size_t i = 0; i < inst.n; ++i) {
        std::vector<double> p(inst.point_dim);
        double nn = 0.0;
        for (std::size_t j = 0; j < inst.point_dim; ++j) {
            p[j] = centre[j] + spread * rng.normal();
            nn += p[j] * p[j];
        }
        nn = std::sqrt(nn);
        for (auto& v : p) {
            v /= nn;
        }
        inst.points.insert(inst.points.end(), p.begin(), p.end());
    }

    // Joint biased towards nearby pairs.
    const double temperature = rng.uniform(0.02, 0.5);
    inst.pmf.assign(inst.nx * inst.ny, 0.0);
    double total = 0.0;
    for (std::size_t x = 0; x < inst.nx; ++x) {
        for (std::size_t y = 0; y < inst.ny; ++y) {
            double w = rng.uniform(0.05, 1.0) * std::exp(-rho_points(inst, x, y) / temperature);
            if (x != y && rng.uniform() < 0.15) {
                w = 0.0;
            }
            inst.pmf[x * inst.ny + y] = w;
            total += w;
        }
    }
    for (auto& v : inst.pmf) {
        v /= total;
    }

    const double z_scale = rng.uniform(0.2, 2.0);
    inst.z_atoms.resize(inst.n * inst.atoms * inst.d);
    for (auto& v : inst.z_atoms) {
        v = z_scale * rng.normal();
    }
    inst.weights.resize(inst.n * inst.n * inst.atoms);
    for (std::size_t x = 0; x < inst.n; ++x) {
        const auto shared = random_simplex(rng, inst.atoms);
        for (std::size_t y = 0; y < inst.n; ++y) {
            const auto w = markov ? shared : random_simplex(rng, inst.atoms);
            std::copy(w.begin(), w.end(), inst.weights.begin() + static_cast<std::ptrdiff_t>((x * inst.n + y) * inst.atoms));
        }
    }

    inst.h.clear();
    finalize(inst);

    const double noise = rng.uniform(0.0, 0.5);
    for (auto& v : inst.f_hat_l) {
        v += noise * rng.normal();
    }
    for (auto& v : inst.f_hat_lm1) {
        v += noise * rng.normal();
    }
    finalize(inst);

    inst.epsilon = std::max(2.0 * expected_rho(inst) * rng.uniform(0.5, 3.0), 1e-3);
    return inst;
}

double expected_rho(const OracleInstance& inst)
{
    double e = 0.0;
    for (std::size_t x = 0; x < inst.nx; ++x) {
        for (std::size_t y = 0; y < inst.ny; ++y) {
            if (inst.p(x, y) > 0.0) {
                e += inst.p(x, y) * rho_points(inst, x, y);
            }
        }
    }
    return e;
}

bool is_markov(const OracleInstance& inst, double tol)
{
    for (std::size_t x = 0; x < inst.nx; ++x) {
        const double* ref = nullptr;
        for (std::size_t y = 0; y < inst.ny; ++y) {
            if (!(inst.p(x, y) > 0.0)) {
                continue;
            }
            const double* w = &inst.weights[(x * inst.n + y) * inst.atoms];
            if (ref == nullptr) {
                ref = w;
                continue;
            }
            for (std::size_t k = 0; k < inst.atoms; ++k) {
                if (std::abs(w[k] - ref[k]) > tol) {
                    return false;
                }
            }
        }
    }
    return true;
}

double conditional_entropy_nats(const OracleInstance& inst)
{
    const auto py = py_of(inst);
    double h = 0.0;
    for (std::size_t x = 0; x < inst.nx; ++x) {
        for (std::size_t y = 0; y < inst.ny; ++y) {
            const double p = inst.p(x, y);
            if (p > 0.0) {
                h -= p * std::log(p / py[y]);
            }
        }
    }
    return std::max(0.0, h);
}

CheckReport check_thm1(const OracleInstance& inst)
{
    check_geometric_premise(inst);
    CheckReport r;
    r.lhs = gap_lhs(inst, f_star_l(inst), f_star_lm1(inst));
    r.rhs = 2.0 * (inst.alpha * inst.alpha + inst.beta * inst.beta) * inst.epsilon;
    r.pass = r.lhs <= r.rhs + oracle_tolerance;
    return r;
}

CheckReport check_thm2(const OracleInstance& inst)
{
    check_geometric_premise(inst);
    if (inst.f_hat_l.size() != inst.nx * inst.d || inst.f_hat_lm1.size() != inst.ny * inst.d) {
        throw Error(ErrorCode::premise_failed, "estimator tables missing or misshaped");
    }
    CheckReport r;
    r.lhs = gap_lhs(inst, inst.f_hat_l, inst.f_hat_lm1);
    r.rhs = 3.0 * inst.eta_l + 3.0 * inst.eta_lm1 +
            6.0 * (inst.alpha * inst.alpha + inst.beta * inst.beta) * inst.epsilon;
    r.pass = r.lhs <= r.rhs + oracle_tolerance;
    return r;
}

CheckReport check_thm5(const OracleInstance& inst)
{
    if (!is_markov(inst)) {
        throw Error(ErrorCode::premise_failed, "law of Z depends on X_{l-1} given X_l");
    }
    CheckReport r;
    r.lhs = gap_lhs(inst, f_star_l(inst), f_star_lm1(inst));
    r.rhs = 2.0 * inst.B * inst.B * conditional_entropy_nats(inst);
    r.pass = r.lhs <= r.rhs + oracle_tolerance;
    return r;
}

Prop1Report check_prop1(const std::vector<double>& values, const std::vector<double>& probs, double t, double epsilon)
{
    if (values.size() != probs.size() || values.empty()) {
        throw Error(ErrorCode::invalid_argument, "values and probabilities must be nonempty and equally long");
    }
    if (!(t > 0.0 && t < 1.0) || !(epsilon > t && epsilon <= 1.0)) {
        throw Error(ErrorCode::invalid_argument, "need 0 < t < 1 and t < epsilon <= 1");
    }
    Prop1Report r;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!(values[i] >= 0.0 && values[i] <= 1.0)) {
            throw Error(ErrorCode::domain_violation, "rho value outside [0, 1]");
        }
        if (!(probs[i] >= 0.0)) {
            throw Error(ErrorCode::invalid_argument, "negative probability");
        }
        r.mean += values[i] * probs[i];
        if (values[i] > t) {
            r.P_gt_t += probs[i];
        }
    }
    r.premise_holds = r.P_gt_t < (epsilon - t) / (1.0 - t);
    r.conclusion_holds = r.mean < epsilon;
    r.pass = !r.premise_holds || r.conclusion_holds;
    return r;
}

LemmaSides lemma_cos_l2(const std::vector<double>& x, const std::vector<double>& y)
{
    return {simd::squared_distance(x, y), 2.0 * cosine_distance(std::span<const double>(x), std::span<const double>(y))};
}

LemmaSides lemma_three_norm(const std::vector<double>& a, const std::vector<double>& b, const std::vector<double>& c)
{
    std::vector<double> s(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        s[i] = a[i] + b[i] + c[i];
    }
    return {norm2(s), 3.0 * (norm2(a) + norm2(b) + norm2(c))};
}

LemmaSides lemma_kl_mi(const std::vector<double>& p_y, const std::vector<double>& p_x_given_y,
                       const std::vector<double>& p_z_given_x, std::size_t ny, std::size_t nx, std::size_t nz)
{
    // p(z|y) = sum_x p(x|y) p(z|x)
    std::vector<double> pz_y(ny * nz, 0.0);
    for (std::size_t y = 0; y < ny; ++y) {
        for (std::size_t x = 0; x < nx; ++x) {
            for (std::size_t z = 0; z < nz; ++z) {
                pz_y[y * nz + z] += p_x_given_y[y * nx + x] * p_z_given_x[x * nz + z];
            }
        }
    }
    double kl = 0.0;
    for (std::size_t y = 0; y < ny; ++y) {
        for (std::size_t x = 0; x < nx; ++x) {
            const double pxy = p_y[y] * p_x_given_y[y * nx + x];
            if (!(pxy > 0.0)) {
                continue;
            }
            for (std::size_t z = 0; z < nz; ++z) {
                const double a = p_z_given_x[x * nz + z];
                if (a > 0.0) {
                    kl += pxy * a * std::log(a / pz_y[y * nz + z]);
                }
            }
        }
    }

    // I(Z; X | Y) = H(X,Y) + H(Y,Z) - H(X,Y,Z) - H(Y), from the full joint.
    const auto ent = [](double p) { return p > 0.0 ? -p * std::log(p) : 0.0; };
    double h_xy = 0.0, h_yz = 0.0, h_xyz = 0.0, h_y = 0.0;
    std::vector<double> yz(ny * nz, 0.0);
    for (std::size_t y = 0; y < ny; ++y) {
        h_y += ent(p_y[y]);
        for (std::size_t x = 0; x < nx; ++x) {
            const double pxy = p_y[y] * p_x_given_y[y * nx + x];
            h_xy += ent(pxy);
            for (std::size_t z = 0; z < nz; ++z) {
                const double pxyz = pxy * p_z_given_x[x * nz + z];
                h_xyz += ent(pxyz);
                yz[y * nz + z] += pxyz;
            }
        }
    }
    for (double v : yz) {
        h_yz += ent(v);
    }
    return {kl, h_xy + h_yz - h_xyz - h_y};
}

DiscreteJoint random_joint(std::uint64_t seed)
{
    Rng rng(seed);
    DiscreteJoint j;
    j.n = 2 + static_cast<std::size_t>(rng.below(6));
    j.pmf.resize(j.n * j.n);
    double total = 0.0;
    const double sparsity = rng.uniform(0.0, 0.6);
    for (auto& v : j.pmf) {
        v = rng.uniform() < sparsity ? 0.0 : -std::log(1.0 - rng.uniform());
        total += v;
    }
    if (total == 0.0) {
        j.pmf[0] = total = 1.0;
    }
    for (auto& v : j.pmf) {
        v /= total;
    }
    j.dissimilarity.assign(j.n * j.n, 0.0);
    const bool geometric = rng.uniform() < 0.5;
    std::vector<double> pts(j.n * 2);
    for (auto& v : pts) {
        v = rng.uniform();
    }
    for (std::size_t a = 0; a < j.n; ++a) {
        for (std::size_t b = a + 1; b < j.n; ++b) {
            const double d = geometric ? std::hypot(pts[2 * a] - pts[2 * b], pts[2 * a + 1] - pts[2 * b + 1])
                                       : rng.uniform(0.0, 2.0);
            j.dissimilarity[a * j.n + b] = d;
            j.dissimilarity[b * j.n + a] = d;
        }
    }
    for (std::size_t i = 0; i < j.n; ++i) {
        j.labels.push_back(i);
    }
    return j;
}

double random_threshold(const DiscreteJoint& joint, std::uint64_t seed)
{
    Rng rng(seed);
    if (rng.uniform() < 0.15) {
        return 0.0;
    }
    const double top = *std::max_element(joint.dissimilarity.begin(), joint.dissimilarity.end());
    return rng.uniform(0.0, top);
}

namespace {

json joint_json(const DiscreteJoint& j, double t)
{
    return {{"n", j.n}, {"pmf", j.pmf}, {"dissimilarity", j.dissimilarity}, {"t", t}};
}

} // namespace

const std::vector<std::string>& suite_names()
{
    static const std::vector<std::string> names{"prop1", "thm1", "thm2", "thm5", "lemma-cos-l2",
                                                "lemma-three-norm", "lemma-kl-mi", "fano", "mi-lower"};
    return names;
}

SuiteSummary run_suite(const std::string& name, std::size_t instances, std::uint64_t seed)
{
    const auto start = std::chrono::steady_clock::now();
    SuiteSummary s;
    s.theorem = name;
    s.instances = instances;
    s.worst_slack = std::numeric_limits<double>::infinity();

    const auto record = [&s](double slack, bool pass, const json& fixture) {
        s.worst_slack = std::min(s.worst_slack, slack);
        if (pass) {
            ++s.passes;
        } else {
            ++s.failures;
            s.failing_fixtures.push_back(fixture.dump(2) + "\n");
        }
    };

    for (std::size_t i = 0; i < instances; ++i) {
        const std::uint64_t inst_seed = mix_seed(seed, i);
        Rng rng(mix_seed(inst_seed, 0x5eed));
        if (name == "thm1" || name == "thm2" || name == "thm5") {
            OracleSizes sizes;
            sizes.support_x = 2 + static_cast<std::size_t>(rng.below(5));
            sizes.support_y = 2 + static_cast<std::size_t>(rng.below(5));
            sizes.d = 1 + static_cast<std::size_t>(rng.below(4));
            const OracleInstance inst = random_instance(inst_seed, sizes, name == "thm5");
            try {
                const CheckReport r =
                    name == "thm1" ? check_thm1(inst) : name == "thm2" ? check_thm2(inst) : check_thm5(inst);
                record(r.rhs - r.lhs, r.pass, json::parse(instance_json(inst)));
            } catch (const Error& e) {
                if (e.code() != ErrorCode::premise_failed) {
                    throw;
                }
                ++s.premise_failures;
            }
        } else if (name == "prop1") {
            const std::size_t m = 1 + static_cast<std::size_t>(rng.below(6));
            const double power = rng.uniform(1.0, 6.0);
            std::vector<double> values(m);
            for (auto& v : values) {
                v = std::pow(rng.uniform(), power);
            }
            const auto probs = random_simplex(rng, m);
            const double t = rng.uniform(0.02, 0.9);
            const double eps = t + (1.0 - t) * (1.0 - rng.uniform());
            const Prop1Report r = check_prop1(values, probs, t, eps);
            if (!r.premise_holds) {
                ++s.premise_failures;
                continue;
            }
            record(eps - r.mean, r.pass, {{"values", values}, {"probs", probs}, {"t", t}, {"epsilon", eps}});
        } else if (name == "lemma-cos-l2") {
            const std::size_t dim = 1 + static_cast<std::size_t>(rng.below(16));
            const auto x = random_unit(rng, dim);
            const auto y = random_unit(rng, dim);
            const LemmaSides r = lemma_cos_l2(x, y);
            const double err = std::abs(r.lhs - r.rhs);
            record(oracle_tolerance - err, err <= oracle_tolerance, {{"x", x}, {"y", y}});
        } else if (name == "lemma-three-norm") {
            const std::size_t dim = 1 + static_cast<std::size_t>(rng.below(16));
            std::vector<double> a(dim), b(dim), c(dim);
            const double scale = rng.uniform(0.01, 10.0);
            for (std::size_t k = 0; k < dim; ++k) {
                a[k] = scale * rng.normal();
                b[k] = scale * rng.normal();
                c[k] = scale * rng.normal();
            }
            const LemmaSides r = lemma_three_norm(a, b, c);
            record(r.rhs - r.lhs, r.lhs <= r.rhs + oracle_tolerance, {{"a", a}, {"b", b}, {"c", c}});
        } else if (name == "lemma-kl-mi") {
            const std::size_t ny = 2 + static_cast<std::size_t>(rng.below(4));
            const std::size_t nx = 2 + static_cast<std::size_t>(rng.below(4));
            const std::size_t nz = 2 + static_cast<std::size_t>(rng.below(4));
            const auto p_y = random_simplex(rng, ny);
            std::vector<double> pxy, pzx;
            for (std::size_t y = 0; y < ny; ++y) {
                const auto row = random_simplex(rng, nx);
                pxy.insert(pxy.end(), row.begin(), row.end());
            }
            for (std::size_t x = 0; x < nx; ++x) {
                const auto row = random_simplex(rng, nz);
                pzx.insert(pzx.end(), row.begin(), row.end());
            }
            const LemmaSides r = lemma_kl_mi(p_y, pxy, pzx, ny, nx, nz);
            const double err = std::abs(r.lhs - r.rhs);
            record(oracle_tolerance - err, err <= oracle_tolerance,
                   {{"p_y", p_y}, {"p_x_given_y", pxy}, {"p_z_given_x", pzx}});
        } else if (name == "fano" || name == "mi-lower") {
            const DiscreteJoint j = random_joint(inst_seed);
            const double t = random_threshold(j, mix_seed(inst_seed, 1));
            const BoundReport r = bound_report(j, t);
            if (name == "fano") {
                if (!r.applicable_fano) {
                    ++s.premise_failures;
                    continue;
                }
                record(r.fano_upper - r.H_cond, r.H_cond <= r.fano_upper + oracle_tolerance, joint_json(j, t));
            } else {
                if (!r.applicable_mi) {
                    ++s.premise_failures;
                    continue;
                }
                record(r.I_exact - r.mi_lower, r.I_exact >= r.mi_lower - oracle_tolerance, joint_json(j, t));
            }
        } else {
            throw Error(ErrorCode::invalid_argument, "unknown suite: " + name);
        }
    }
    if (!std::isfinite(s.worst_slack)) {
        s.worst_slack = 0.0;
    }
    s.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return s;
}

std::string summary_json(const std::vector<SuiteSummary>& summaries)
{
    json arr = json::array();
    for (const auto& s : summaries) {
        arr.push_back({{"theorem", s.theorem},
                       {"instances", s.instances},
                       {"passes", s.passes},
                       {"premise_failures", s.premise_failures},
                       {"failures", s.failures},
                       {"worst_slack", s.worst_slack}});
    }
    return (summaries.size() == 1 ? arr.front() : arr).dump(2) + "\n";
}

std::string instance_json(const OracleInstance& inst)
{
    json doc = {
        {"seed", inst.seed},       {"nx", inst.nx},           {"ny", inst.ny},
        {"d", inst.d},             {"point_dim", inst.point_dim}, {"atoms", inst.atoms},
        {"markov", inst.markov},   {"pmf", inst.pmf},         {"points", inst.points},
        {"z_atoms", inst.z_atoms}, {"weights", inst.weights}, {"alpha", inst.alpha},
        {"beta", inst.beta},       {"B", inst.B},             {"f_hat_l", inst.f_hat_l},
        {"f_hat_lm1", inst.f_hat_lm1}, {"eta_l", inst.eta_l}, {"eta_lm1", inst.eta_lm1},
        {"epsilon", inst.epsilon},
    };
    return doc.dump(2) + "\n";
}

} // namespace skipscope
