#include "skipscope/planner.hpp"

#include "skipscope/error.hpp"
#include "skipscope/report.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>
#include <sstream>

namespace skipscope {

namespace {

std::vector<std::vector<std::string>> split_csv(const std::string& text)
{
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.find_first_not_of(" \t") == std::string::npos) {
            continue;
        }
        std::vector<std::string> fields;
        std::size_t start = 0;
        while (true) {
            const std::size_t comma = line.find(',', start);
            std::string f = line.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
            const auto b = f.find_first_not_of(" \t");
            const auto e = f.find_last_not_of(" \t");
            fields.push_back(b == std::string::npos ? std::string() : f.substr(b, e - b + 1));
            if (comma == std::string::npos) {
                break;
            }
            start = comma + 1;
        }
        rows.push_back(std::move(fields));
    }
    return rows;
}

std::string where(std::size_t row, std::size_t col, const char* name)
{
    return "row " + std::to_string(row) + " column " + std::to_string(col + 1) + " (" + name + ")";
}

double parse_real(const std::string& s, std::size_t row, std::size_t col, const char* name)
{
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) {
        throw Error(ErrorCode::format_rejected, where(row, col, name) + ": not a finite number: '" + s + "'");
    }
    return v;
}

std::size_t parse_count(const std::string& s, std::size_t row, std::size_t col, const char* name)
{
    std::size_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw Error(ErrorCode::format_rejected, where(row, col, name) + ": not a nonnegative integer: '" + s + "'");
    }
    return v;
}

bool looks_like_header(const std::vector<std::string>& row)
{
    return !row.empty() && !row[0].empty() && !std::isdigit(static_cast<unsigned char>(row[0][0]));
}

std::string flag(bool b)
{
    return b ? "true" : "false";
}

} // namespace

void validate_thresholds(const Thresholds& th)
{
    if (!(th.eps_geo >= 0.0 && th.eps_geo <= 2.0)) {
        throw Error(ErrorCode::invalid_argument, "eps_geo must lie in [0, 2]");
    }
    if (!(th.eps_prox >= 0.0 && th.eps_prox <= 1.0)) {
        throw Error(ErrorCode::invalid_argument, "eps_prox must lie in [0, 1]");
    }
    if (!(th.tau_var >= 0.0 && th.tau_var <= 1.0)) {
        throw Error(ErrorCode::invalid_argument, "tau_var must lie in [0, 1]");
    }
    if (!(th.t > 0.0 && th.t < 2.0)) {
        throw Error(ErrorCode::invalid_argument, "t must lie in (0, 2)");
    }
}

LayerConditions evaluate_conditions(const RedundancyProfile& profile, const VarProfile& var,
                                    const Thresholds& thresholds, Modality skipped)
{
    validate_thresholds(thresholds);
    std::set<std::size_t> profile_layers, var_layers;
    for (const auto& e : profile.entries) {
        if (e.modality == skipped) {
            profile_layers.insert(e.layer);
        }
    }
    for (const auto& e : var.layers) {
        var_layers.insert(e.layer);
    }
    if (profile_layers != var_layers) {
        throw Error(ErrorCode::shape_mismatch, "redundancy profile and VAR profile cover different layers");
    }
    if (profile_layers.empty()) {
        throw Error(ErrorCode::empty_input, "no layers to evaluate for " + std::string(modality_name(skipped)));
    }

    LayerConditions c;
    c.modality = skipped;
    c.thresholds = thresholds;
    for (std::size_t layer : profile_layers) {
        const ProfileEntry* p = profile.find(layer, skipped);
        const VarEntry* v = var.find(layer);
        LayerFlags f;
        f.layer = layer;
        f.mean_cos_dist = p->mean_cos_dist;
        f.proximal_frac = p->proximal_frac;
        f.var_normalized = v->var_normalized;
        f.geometric_ok = f.mean_cos_dist <= thresholds.eps_geo;
        f.proximal_ok = f.proximal_frac >= 1.0 - thresholds.eps_prox;
        f.var_ok = f.var_normalized <= thresholds.tau_var;
        c.layers.push_back(f);
    }
    return c;
}

SkipPlan plan_skips(const LayerConditions& conditions)
{
    SkipPlan plan;
    plan.modality = conditions.modality;
    plan.rationale = conditions;
    plan.late_entry_viable.push_back(0);
    for (const auto& f : conditions.layers) {
        if (!f.late_entry_ok()) {
            break;
        }
        plan.late_entry_layer = f.layer;
        plan.late_entry_viable.push_back(f.layer);
    }
    // walk back from the deepest layer while var_ok holds
    for (auto it = conditions.layers.rbegin(); it != conditions.layers.rend() && it->var_ok; ++it) {
        plan.early_exit_layer = it->layer;
        plan.early_exit_viable.insert(plan.early_exit_viable.begin(), it->layer);
    }
    return plan;
}

std::string plan_json(const SkipPlan& plan)
{
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& f : plan.rationale.layers) {
        rows.push_back({{"layer", f.layer},
                        {"mean_cos_dist", f.mean_cos_dist},
                        {"proximal_frac", f.proximal_frac},
                        {"var_normalized", f.var_normalized},
                        {"geometric_ok", f.geometric_ok},
                        {"proximal_ok", f.proximal_ok},
                        {"var_ok", f.var_ok}});
    }
    const auto& th = plan.rationale.thresholds;
    nlohmann::json doc = {
        {"modality", modality_name(plan.modality)},
        {"late_entry_layer", plan.late_entry_layer},
        {"early_exit_layer", plan.early_exit_layer ? nlohmann::json(*plan.early_exit_layer) : nlohmann::json()},
        {"late_entry_viable", plan.late_entry_viable},
        {"early_exit_viable", plan.early_exit_viable},
        {"thresholds", {{"eps_geo", th.eps_geo}, {"eps_prox", th.eps_prox}, {"tau_var", th.tau_var}, {"t", th.t}}},
        {"rationale", std::move(rows)},
    };
    return doc.dump(2) + "\n";
}

std::string rationale_csv(const SkipPlan& plan)
{
    std::string out = "layer,modality,mean_cos_dist,proximal_frac,var_normalized,geometric_ok,proximal_ok,var_ok,"
                      "late_entry_viable,early_exit_viable\n";
    const auto contains = [](const std::vector<std::size_t>& v, std::size_t x) {
        return std::find(v.begin(), v.end(), x) != v.end();
    };
    for (const auto& f : plan.rationale.layers) {
        out += std::to_string(f.layer) + ',' + std::string(modality_name(plan.modality)) + ',' +
               format_number(f.mean_cos_dist) + ',' + format_number(f.proximal_frac) + ',' +
               format_number(f.var_normalized) + ',' + flag(f.geometric_ok) + ',' + flag(f.proximal_ok) + ',' +
               flag(f.var_ok) + ',' + flag(contains(plan.late_entry_viable, f.layer)) + ',' +
               flag(contains(plan.early_exit_viable, f.layer)) + '\n';
    }
    return out;
}

RedundancyProfile load_profile_csv(const std::string& text)
{
    auto rows = split_csv(text);
    std::size_t first = 0;
    if (!rows.empty() && looks_like_header(rows[0])) {
        first = 1;
    }
    if (rows.size() <= first) {
        throw Error(ErrorCode::empty_input, "profile CSV has no data rows");
    }
    RedundancyProfile profile;
    std::set<std::pair<std::size_t, int>> seen;
    for (std::size_t r = first; r < rows.size(); ++r) {
        const auto& row = rows[r];
        const std::size_t line = r + 1;
        if (row.size() != 6) {
            throw Error(ErrorCode::format_rejected,
                        "row " + std::to_string(line) + ": expected 6 columns, found " + std::to_string(row.size()));
        }
        ProfileEntry e;
        e.layer = parse_count(row[0], line, 0, "layer");
        try {
            e.modality = parse_modality(row[1]);
        } catch (const Error&) {
            throw Error(ErrorCode::format_rejected, where(line, 1, "modality") + ": unknown modality '" + row[1] + "'");
        }
        e.mean_cos_dist = parse_real(row[2], line, 2, "mean_cos_dist");
        e.proximal_frac = parse_real(row[3], line, 3, "proximal_frac");
        e.t = parse_real(row[4], line, 4, "t");
        e.n_tokens = parse_count(row[5], line, 5, "n_tokens");
        if (e.layer < 1) {
            throw Error(ErrorCode::format_rejected, where(line, 0, "layer") + ": layers start at 1");
        }
        if (e.mean_cos_dist < 0.0 || e.mean_cos_dist > 2.0) {
            throw Error(ErrorCode::format_rejected, where(line, 2, "mean_cos_dist") + ": outside [0, 2]");
        }
        if (e.proximal_frac < 0.0 || e.proximal_frac > 1.0) {
            throw Error(ErrorCode::format_rejected, where(line, 3, "proximal_frac") + ": outside [0, 1]");
        }
        if (!(e.t > 0.0 && e.t < 2.0)) {
            throw Error(ErrorCode::format_rejected, where(line, 4, "t") + ": outside (0, 2)");
        }
        if (e.n_tokens < 1) {
            throw Error(ErrorCode::format_rejected, where(line, 5, "n_tokens") + ": must be >= 1");
        }
        if (r == first) {
            profile.t = e.t;
        } else if (e.t != profile.t) {
            throw Error(ErrorCode::format_rejected, where(line, 4, "t") + ": rows disagree on t");
        }
        if (!seen.insert({e.layer, static_cast<int>(e.modality)}).second) {
            throw Error(ErrorCode::format_rejected, "row " + std::to_string(line) + ": duplicate (layer, modality)");
        }
        e.sample_count = 1;
        e.sample_mean = e.mean_cos_dist;
        profile.entries.push_back(e);
        profile.layer_count = std::max(profile.layer_count, e.layer + 1);
    }
    std::sort(profile.entries.begin(), profile.entries.end(), [](const ProfileEntry& a, const ProfileEntry& b) {
        return std::pair(a.layer, a.modality) < std::pair(b.layer, b.modality);
    });
    return profile;
}

VarProfile load_var_csv(const std::string& text)
{
    auto rows = split_csv(text);
    std::size_t first = 0;
    if (!rows.empty() && looks_like_header(rows[0])) {
        first = 1;
    }
    if (rows.size() <= first) {
        throw Error(ErrorCode::empty_input, "VAR CSV has no data rows");
    }
    VarProfile var;
    std::set<std::size_t> seen;
    for (std::size_t r = first; r < rows.size(); ++r) {
        const auto& row = rows[r];
        const std::size_t line = r + 1;
        if (row.size() != 5) {
            throw Error(ErrorCode::format_rejected,
                        "row " + std::to_string(line) + ": expected 5 columns, found " + std::to_string(row.size()));
        }
        VarEntry e;
        e.layer = parse_count(row[0], line, 0, "layer");
        const std::size_t query = parse_count(row[1], line, 1, "query_token");
        e.var_raw = parse_real(row[2], line, 2, "var_raw");
        e.var_normalized = parse_real(row[3], line, 3, "var_normalized");
        const std::size_t heads = parse_count(row[4], line, 4, "head_count");
        if (heads < 1) {
            throw Error(ErrorCode::format_rejected, where(line, 4, "head_count") + ": must be >= 1");
        }
        if (r == first) {
            var.query_token = query;
            var.head_count = heads;
        } else if (query != var.query_token || heads != var.head_count) {
            throw Error(ErrorCode::format_rejected,
                        "row " + std::to_string(line) + ": query_token/head_count differ from the first row");
        }
        const double h = static_cast<double>(heads);
        if (e.var_raw < 0.0 || e.var_raw > h) {
            throw Error(ErrorCode::format_rejected, where(line, 2, "var_raw") + ": outside [0, head_count]");
        }
        if (std::abs(e.var_raw / h - e.var_normalized) > 1e-6) {
            throw Error(ErrorCode::format_rejected, where(line, 3, "var_normalized") + ": differs from var_raw/head_count");
        }
        e.text_sum = h - e.var_raw;
        if (!seen.insert(e.layer).second) {
            throw Error(ErrorCode::format_rejected, "row " + std::to_string(line) + ": duplicate layer");
        }
        var.layers.push_back(e);
    }
    std::sort(var.layers.begin(), var.layers.end(),
              [](const VarEntry& a, const VarEntry& b) { return a.layer < b.layer; });
    return var;
}

std::pair<RedundancyProfile, VarProfile> load_external_metrics(const std::string& profile_csv,
                                                               const std::string& var_csv)
{
    return {load_profile_csv(profile_csv), load_var_csv(var_csv)};
}

} // namespace skipscope
