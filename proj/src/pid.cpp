#include "skipscope/pid.hpp"

#include "skipscope/error.hpp"
#include "skipscope/report.hpp"
#include "skipscope/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace skipscope {

using nlohmann::json;

namespace {

constexpr double sinkhorn_tol = 1e-13;
constexpr std::size_t sinkhorn_max_sweeps = 20000;

double ent_bits(double p)
{
    return p > 0.0 ? -p * std::log2(p) : 0.0;
}

struct Marginals {
    std::vector<double> xy, xz, x;
};

Marginals marginals(const TripleJoint& j)
{
    Marginals m{std::vector<double>(j.nx * j.ny, 0.0), std::vector<double>(j.nx * j.nz, 0.0),
                std::vector<double>(j.nx, 0.0)};
    for (std::size_t x = 0; x < j.nx; ++x) {
        for (std::size_t y = 0; y < j.ny; ++y) {
            for (std::size_t z = 0; z < j.nz; ++z) {
                const double v = j.p(x, y, z);
                m.xy[x * j.ny + y] += v;
                m.xz[x * j.nz + z] += v;
                m.x[x] += v;
            }
        }
    }
    return m;
}

// Per-x diagonal scaling of a nonnegative (y,z) kernel onto the (X,Y) and
// (X,Z) marginals of P. Scaling vectors persist between calls.
class Projector {
public:
    Projector(const TripleJoint& p, const Marginals& m) : p_(p), m_(m)
    {
        a_.assign(p.nx * p.ny, 1.0);
        b_.assign(p.nx * p.nz, 1.0);
        allowed_.resize(p.pmf.size());
        for (std::size_t x = 0; x < p.nx; ++x) {
            for (std::size_t y = 0; y < p.ny; ++y) {
                for (std::size_t z = 0; z < p.nz; ++z) {
                    allowed_[idx(x, y, z)] = m.xy[x * p.ny + y] > 0.0 && m.xz[x * p.nz + z] > 0.0;
                }
            }
        }
    }

    bool allowed(std::size_t i) const { return allowed_[i]; }

    void reset()
    {
        std::fill(a_.begin(), a_.end(), 1.0);
        std::fill(b_.begin(), b_.end(), 1.0);
    }

    // kernel(x, y, z) is given as a full [x][y][z] array (zero outside the allowed support).
    void project(const std::vector<double>& kernel, std::vector<double>& out)
    {
        const std::size_t ny = p_.ny, nz = p_.nz;
        out.assign(kernel.size(), 0.0);
        for (std::size_t x = 0; x < p_.nx; ++x) {
            if (!(m_.x[x] > 0.0)) {
                continue;
            }
            double* a = &a_[x * ny];
            double* b = &b_[x * nz];
            const double* k = &kernel[x * ny * nz];
            const double* row_target = &m_.xy[x * ny];
            const double* col_target = &m_.xz[x * nz];
            for (std::size_t sweep = 0; sweep < sinkhorn_max_sweeps; ++sweep) {
                for (std::size_t y = 0; y < ny; ++y) {
                    double s = 0.0;
                    for (std::size_t z = 0; z < nz; ++z) {
                        s += k[y * nz + z] * b[z];
                    }
                    a[y] = s > 0.0 ? row_target[y] / s : 0.0;
                }
                for (std::size_t z = 0; z < nz; ++z) {
                    double s = 0.0;
                    for (std::size_t y = 0; y < ny; ++y) {
                        s += a[y] * k[y * nz + z];
                    }
                    b[z] = s > 0.0 ? col_target[z] / s : 0.0;
                }
                // columns are exact after the b-step; test the rows
                double err = 0.0;
                for (std::size_t y = 0; y < ny; ++y) {
                    double s = 0.0;
                    for (std::size_t z = 0; z < nz; ++z) {
                        s += a[y] * k[y * nz + z] * b[z];
                    }
                    err = std::max(err, std::abs(s - row_target[y]));
                }
                if (err < sinkhorn_tol) {
                    break;
                }
            }
            for (std::size_t y = 0; y < ny; ++y) {
                for (std::size_t z = 0; z < nz; ++z) {
                    out[idx(x, y, z)] = a[y] * k[y * nz + z] * b[z];
                }
            }
            // Zero scaling factors can leave a stale 0 that would block later
            // projections; reset them to 1 for the next warm start.
            for (std::size_t y = 0; y < ny; ++y) {
                if (!(a[y] > 0.0) || !std::isfinite(a[y])) {
                    a[y] = 1.0;
                }
            }
            for (std::size_t z = 0; z < nz; ++z) {
                if (!(b[z] > 0.0) || !std::isfinite(b[z])) {
                    b[z] = 1.0;
                }
            }
        }
    }

private:
    std::size_t idx(std::size_t x, std::size_t y, std::size_t z) const { return (x * p_.ny + y) * p_.nz + z; }

    const TripleJoint& p_;
    const Marginals& m_;
    std::vector<double> a_, b_;
    std::vector<bool> allowed_;
};

double cmi_of(const std::vector<double>& q, std::size_t nx, std::size_t ny, std::size_t nz)
{
    std::vector<double> qz(nz, 0.0), qxz(nx * nz, 0.0), qyz(ny * nz, 0.0);
    for (std::size_t x = 0; x < nx; ++x) {
        for (std::size_t y = 0; y < ny; ++y) {
            for (std::size_t z = 0; z < nz; ++z) {
                const double v = q[(x * ny + y) * nz + z];
                qz[z] += v;
                qxz[x * nz + z] += v;
                qyz[y * nz + z] += v;
            }
        }
    }
    double s = 0.0;
    for (std::size_t x = 0; x < nx; ++x) {
        for (std::size_t y = 0; y < ny; ++y) {
            for (std::size_t z = 0; z < nz; ++z) {
                const double v = q[(x * ny + y) * nz + z];
                if (v > 0.0) {
                    s += v * (std::log2(v) + std::log2(qz[z]) - std::log2(qxz[x * nz + z]) - std::log2(qyz[y * nz + z]));
                }
            }
        }
    }
    return s;
}

} // namespace

void validate_triple(const TripleJoint& j)
{
    for (std::size_t n : {j.nx, j.ny, j.nz}) {
        if (n < 1 || n > pid_max_support) {
            throw Error(ErrorCode::invalid_argument,
                        "support sizes must lie in [1, " + std::to_string(pid_max_support) + "]");
        }
    }
    if (j.pmf.size() != j.nx * j.ny * j.nz) {
        throw Error(ErrorCode::shape_mismatch, "pmf size does not match nx*ny*nz");
    }
    double total = 0.0;
    for (double v : j.pmf) {
        if (!(v >= 0.0) || !std::isfinite(v)) {
            throw Error(ErrorCode::validation_error, "pmf entries must be finite and nonnegative");
        }
        total += v;
    }
    if (std::abs(total - 1.0) > 1e-9) {
        throw Error(ErrorCode::validation_error, "pmf sums to " + format_number(total));
    }
}

TripleJoint swap_yz(const TripleJoint& j)
{
    TripleJoint s{j.nx, j.nz, j.ny, std::vector<double>(j.pmf.size())};
    for (std::size_t x = 0; x < j.nx; ++x) {
        for (std::size_t y = 0; y < j.ny; ++y) {
            for (std::size_t z = 0; z < j.nz; ++z) {
                s.pmf[(x * s.ny + z) * s.nz + y] = j.p(x, y, z);
            }
        }
    }
    return s;
}

TripleJoint triple_from_json(const std::string& text)
{
    TripleJoint j;
    try {
        const json doc = json::parse(text);
        const json& pmf = doc.at("pmf");
        if (doc.contains("shape")) {
            const auto shape = doc.at("shape").get<std::vector<std::size_t>>();
            if (shape.size() != 3) {
                throw Error(ErrorCode::format_rejected, "shape must have three entries");
            }
            j.nx = shape[0];
            j.ny = shape[1];
            j.nz = shape[2];
            j.pmf = pmf.get<std::vector<double>>();
        } else {
            j.nx = pmf.size();
            j.ny = j.nx ? pmf.at(0).size() : 0;
            j.nz = j.ny ? pmf.at(0).at(0).size() : 0;
            for (const auto& plane : pmf) {
                if (plane.size() != j.ny) {
                    throw Error(ErrorCode::format_rejected, "ragged pmf array");
                }
                for (const auto& row : plane) {
                    if (row.size() != j.nz) {
                        throw Error(ErrorCode::format_rejected, "ragged pmf array");
                    }
                    for (const auto& v : row) {
                        j.pmf.push_back(v.get<double>());
                    }
                }
            }
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::format_rejected, std::string("cannot read pmf JSON: ") + e.what());
    }
    try {
        validate_triple(j);
    } catch (const Error& e) {
        throw Error(ErrorCode::format_rejected, e.detail());
    }
    return j;
}

TripleInfo triple_info(const TripleJoint& j)
{
    const Marginals m = marginals(j);
    std::vector<double> py(j.ny, 0.0), pz(j.nz, 0.0), pyz(j.ny * j.nz, 0.0);
    for (std::size_t x = 0; x < j.nx; ++x) {
        for (std::size_t y = 0; y < j.ny; ++y) {
            for (std::size_t z = 0; z < j.nz; ++z) {
                const double v = j.p(x, y, z);
                py[y] += v;
                pz[z] += v;
                pyz[y * j.nz + z] += v;
            }
        }
    }
    double hx = 0, hy = 0, hz = 0, hxy = 0, hxz = 0, hyz = 0, hxyz = 0;
    for (double v : m.x) hx += ent_bits(v);
    for (double v : py) hy += ent_bits(v);
    for (double v : pz) hz += ent_bits(v);
    for (double v : m.xy) hxy += ent_bits(v);
    for (double v : m.xz) hxz += ent_bits(v);
    for (double v : pyz) hyz += ent_bits(v);
    for (double v : j.pmf) hxyz += ent_bits(v);

    TripleInfo info;
    info.I_XY = std::max(0.0, hx + hy - hxy);
    info.I_XZ = std::max(0.0, hx + hz - hxz);
    info.I_XYZ = std::max(0.0, hx + hyz - hxyz);
    info.I_XY_given_Z = std::max(0.0, hxz + hyz - hxyz - hz);
    return info;
}

double conditional_mi_xy_z(const TripleJoint& q)
{
    return cmi_of(q.pmf, q.nx, q.ny, q.nz);
}

BrojaResult broja_unique(const TripleJoint& joint, const BrojaOptions& options)
{
    validate_triple(joint);
    if (options.restarts < 1) {
        throw Error(ErrorCode::invalid_argument, "need at least one restart");
    }
    const std::size_t nx = joint.nx, ny = joint.ny, nz = joint.nz;
    const std::size_t cells = joint.pmf.size();
    const Marginals m = marginals(joint);
    Projector projector(joint, m);

    BrojaResult result;
    std::vector<double> best_q;
    double best = std::numeric_limits<double>::infinity();

    std::vector<double> kernel(cells), q(cells), next(cells);
    for (std::size_t restart = 0; restart < options.restarts; ++restart) {
        projector.reset();
        if (restart <= 1) {
            // conditional independence of Y and Z given X
            for (std::size_t x = 0; x < nx; ++x) {
                for (std::size_t y = 0; y < ny; ++y) {
                    for (std::size_t z = 0; z < nz; ++z) {
                        q[(x * ny + y) * nz + z] =
                            m.x[x] > 0.0 ? m.xy[x * ny + y] * m.xz[x * nz + z] / m.x[x] : 0.0;
                    }
                }
            }
            if (restart == 1) {
                // halfway towards P; P alone may have zeros inside the allowed
                // support, and multiplicative updates never leave such a face
                for (std::size_t i = 0; i < cells; ++i) {
                    q[i] = 0.5 * (q[i] + joint.pmf[i]);
                }
            }
        } else {
            Rng rng(mix_seed(options.seed, restart));
            for (std::size_t i = 0; i < cells; ++i) {
                kernel[i] = projector.allowed(i) ? rng.uniform(0.05, 1.0) : 0.0;
            }
            projector.project(kernel, q);
            projector.reset();
        }

        std::vector<double> history;
        double f = cmi_of(q, nx, ny, nz);
        history.push_back(f);
        std::size_t iter = 0;
        for (; iter < options.max_iterations; ++iter) {
            std::vector<double> qyz(ny * nz, 0.0);
            for (std::size_t x = 0; x < nx; ++x) {
                for (std::size_t yz = 0; yz < ny * nz; ++yz) {
                    qyz[yz] += q[x * ny * nz + yz];
                }
            }
            for (std::size_t x = 0; x < nx; ++x) {
                for (std::size_t yz = 0; yz < ny * nz; ++yz) {
                    kernel[x * ny * nz + yz] = projector.allowed(x * ny * nz + yz) ? qyz[yz] : 0.0;
                }
            }
            projector.project(kernel, next);
            const double f_next = cmi_of(next, nx, ny, nz);
            if (f_next > f + 1e-12) {
                break; // projection noise has overtaken progress
            }
            q.swap(next);
            f = f_next;
            history.push_back(f);
            const std::size_t w = options.plateau_window;
            if (history.size() > w && history[history.size() - 1 - w] - f < options.plateau_tol) {
                break;
            }
        }
        f = std::max(0.0, f);
        result.restart_objectives.push_back(f);
        result.restart_iterations.push_back(iter);
        if (options.record_history) {
            result.histories.push_back(std::move(history));
        }
        if (f < best) {
            best = f;
            best_q = q;
        }
    }

    const auto [lo, hi] = std::minmax_element(result.restart_objectives.begin(), result.restart_objectives.end());
    result.solver_gap = *hi - *lo;
    result.uni = best;
    result.Q_star = TripleJoint{nx, ny, nz, best_q};
    if (result.solver_gap > options.stall_gap) {
        std::string diag = "restart objectives spread by " + format_number(result.solver_gap) + " bits:";
        for (double v : result.restart_objectives) {
            diag += ' ' + format_number(v);
        }
        throw Error(ErrorCode::solver_stalled, diag);
    }
    return result;
}

PIDResult pid_decompose(const TripleJoint& joint, const BrojaOptions& options)
{
    const BrojaResult xy = broja_unique(joint, options);
    const BrojaResult xz = broja_unique(swap_yz(joint), options);
    PIDResult r;
    r.info = triple_info(joint);
    r.uni_XY = xy.uni;
    r.uni_XZ = xz.uni;
    r.red = r.info.I_XY - r.uni_XY;
    r.syn = r.info.I_XYZ - r.uni_XY - r.uni_XZ - r.red;
    r.solver_gap = std::max(xy.solver_gap, xz.solver_gap);
    r.Q_star = xy.Q_star;
    return r;
}

std::string pid_json(const PIDResult& r)
{
    json doc = {
        {"uni_XY", r.uni_XY},
        {"uni_XZ", r.uni_XZ},
        {"red", r.red},
        {"syn", r.syn},
        {"solver_gap", r.solver_gap},
        {"I_XY", r.info.I_XY},
        {"I_XZ", r.info.I_XZ},
        {"I_X_YZ", r.info.I_XYZ},
    };
    return doc.dump(2) + "\n";
}

} // namespace skipscope
