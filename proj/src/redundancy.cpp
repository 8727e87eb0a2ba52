#include "skipscope/redundancy.hpp"

#include "skipscope/error.hpp"
#include "skipscope/report.hpp"
#include "skipscope/simd.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace skipscope {

namespace {

double distance_from_terms(const simd::CosineTerms& terms)
{
    if (!(terms.xx > 0.0) || !(terms.yy > 0.0)) {
        throw Error(ErrorCode::degenerate_vector, "zero-norm vector");
    }
    const double rho = 1.0 - terms.dot / std::sqrt(terms.xx * terms.yy);
    return std::clamp(rho, 0.0, 2.0);
}

void check_threshold(double t)
{
    if (!(t > 0.0 && t < 2.0)) {
        throw Error(ErrorCode::invalid_argument, "threshold t must lie in (0, 2), got " + format_number(t));
    }
}

// Sorting first makes the floating-point sum independent of input order.
double ordered_mean(std::vector<double> values)
{
    std::sort(values.begin(), values.end());
    return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

} // namespace

double cosine_distance(std::span<const float> x, std::span<const float> y)
{
    if (x.size() != y.size()) {
        throw Error(ErrorCode::shape_mismatch, "vectors differ in dimension");
    }
    return distance_from_terms(simd::cosine_terms(x, y));
}

double cosine_distance(std::span<const double> x, std::span<const double> y)
{
    if (x.size() != y.size()) {
        throw Error(ErrorCode::shape_mismatch, "vectors differ in dimension");
    }
    return distance_from_terms({simd::dot(x, y), simd::dot(x, x), simd::dot(y, y)});
}

std::vector<double> layer_distances(const HiddenTrace& trace, std::size_t layer, Modality modality)
{
    if (layer < 1 || layer >= trace.layer_count) {
        throw Error(ErrorCode::invalid_argument, "layer " + std::to_string(layer) + " outside [1, " +
                                                     std::to_string(trace.layer_count - 1) + "]");
    }
    std::vector<double> out;
    for (std::size_t i = 0; i < trace.token_count; ++i) {
        if (trace.modality_mask[i] != modality) {
            continue;
        }
        try {
            out.push_back(cosine_distance(trace.state(layer, i), trace.state(layer - 1, i)));
        } catch (const Error& e) {
            if (e.code() != ErrorCode::degenerate_vector) {
                throw;
            }
            throw Error(ErrorCode::degenerate_vector, "zero-norm hidden state near layer " + std::to_string(layer) +
                                                          " token " + std::to_string(i) + " (sample '" +
                                                          trace.sample_id + "')");
        }
    }
    return out;
}

LayerMetrics layer_metrics(const HiddenTrace& trace, std::size_t layer, Modality modality, double t)
{
    check_threshold(t);
    auto d = layer_distances(trace, layer, modality);
    if (d.empty()) {
        throw Error(ErrorCode::empty_modality, "no " + std::string(modality_name(modality)) + " tokens");
    }
    LayerMetrics m;
    m.n_tokens = d.size();
    const auto close = std::count_if(d.begin(), d.end(), [t](double rho) { return rho < t; });
    m.proximal_frac = static_cast<double>(close) / static_cast<double>(d.size());
    m.mean_cos_dist = ordered_mean(std::move(d));
    return m;
}

const ProfileEntry* RedundancyProfile::find(std::size_t layer, Modality modality) const
{
    for (const auto& e : entries) {
        if (e.layer == layer && e.modality == modality) {
            return &e;
        }
    }
    return nullptr;
}

RedundancyProfile redundancy_profile(std::span<const HiddenTrace> traces, double t)
{
    check_threshold(t);
    if (traces.empty()) {
        throw Error(ErrorCode::empty_input, "no traces to profile");
    }
    const HiddenTrace& first = traces.front();
    for (const auto& tr : traces) {
        if (tr.layer_count != first.layer_count || tr.dim != first.dim) {
            throw Error(ErrorCode::shape_mismatch, "trace '" + tr.sample_id + "' has shape (" +
                                                       std::to_string(tr.layer_count) + " layers, dim " +
                                                       std::to_string(tr.dim) + "), expected (" +
                                                       std::to_string(first.layer_count) + ", " +
                                                       std::to_string(first.dim) + ")");
        }
    }

    RedundancyProfile profile;
    profile.t = t;
    profile.layer_count = first.layer_count;
    for (std::size_t layer = 1; layer < first.layer_count; ++layer) {
        for (Modality m : {Modality::text, Modality::vision}) {
            std::vector<double> pooled;
            std::vector<double> per_sample;
            for (const auto& tr : traces) {
                auto d = layer_distances(tr, layer, m);
                if (d.empty()) {
                    continue;
                }
                pooled.insert(pooled.end(), d.begin(), d.end());
                per_sample.push_back(ordered_mean(std::move(d)));
            }
            if (pooled.empty()) {
                continue;
            }
            ProfileEntry e;
            e.layer = layer;
            e.modality = m;
            e.t = t;
            e.n_tokens = pooled.size();
            const auto close = std::count_if(pooled.begin(), pooled.end(), [t](double rho) { return rho < t; });
            e.proximal_frac = static_cast<double>(close) / static_cast<double>(pooled.size());
            e.mean_cos_dist = ordered_mean(std::move(pooled));

            e.sample_count = per_sample.size();
            std::sort(per_sample.begin(), per_sample.end());
            e.sample_mean = ordered_mean(per_sample);
            if (per_sample.size() > 1) {
                double ss = 0.0;
                for (double v : per_sample) {
                    ss += (v - e.sample_mean) * (v - e.sample_mean);
                }
                const double n = static_cast<double>(per_sample.size());
                e.sample_ci95 = 1.96 * std::sqrt(ss / (n - 1.0) / n);
            }
            profile.entries.push_back(e);
        }
    }
    return profile;
}

std::string profile_csv(const RedundancyProfile& profile)
{
    std::string out = "layer,modality,mean_cos_dist,proximal_frac,t,n_tokens\n";
    for (const auto& e : profile.entries) {
        out += std::to_string(e.layer) + ',' + std::string(modality_name(e.modality)) + ',' +
               format_number(e.mean_cos_dist) + ',' + format_number(e.proximal_frac) + ',' + format_number(e.t) +
               ',' + std::to_string(e.n_tokens) + '\n';
    }
    return out;
}

std::string profile_json(const RedundancyProfile& profile)
{
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& e : profile.entries) {
        rows.push_back({
            {"layer", e.layer},
            {"modality", modality_name(e.modality)},
            {"mean_cos_dist", e.mean_cos_dist},
            {"proximal_frac", e.proximal_frac},
            {"t", e.t},
            {"n_tokens", e.n_tokens},
            {"sample_count", e.sample_count},
            {"sample_mean_cos_dist", e.sample_mean},
            {"sample_mean_ci95", e.sample_ci95},
        });
    }
    nlohmann::json doc = {{"t", profile.t}, {"layer_count", profile.layer_count}, {"entries", std::move(rows)}};
    return doc.dump(2) + "\n";
}

} // namespace skipscope
