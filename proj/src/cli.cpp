#include "skipscope/cli.hpp"

#include "skipscope/attention.hpp"
#include "skipscope/error.hpp"
#include "skipscope/infotheory.hpp"
#include "skipscope/oracle.hpp"
#include "skipscope/pid.hpp"
#include "skipscope/planner.hpp"
#include "skipscope/quantize.hpp"
#include "skipscope/redundancy.hpp"
#include "skipscope/report.hpp"
#include "skipscope/svg.hpp"
#include "skipscope/toy_model.hpp"
#include "skipscope/trace.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <ostream>

namespace skipscope {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::uint64_t default_seed(std::uint64_t fallback)
{
    if (const char* env = std::getenv("SKIPSCOPE_SEED"); env != nullptr && *env != '\0') {
        try {
            return std::stoull(env);
        } catch (const std::exception&) {
            throw Error(ErrorCode::invalid_argument, "SKIPSCOPE_SEED is not an unsigned integer");
        }
    }
    return fallback;
}

struct Formats {
    bool csv = true, json = true, svg = true;
};

Formats parse_formats(const std::vector<std::string>& names)
{
    if (names.empty()) {
        return {};
    }
    Formats f{false, false, false};
    for (const auto& n : names) {
        if (n == "csv") {
            f.csv = true;
        } else if (n == "json") {
            f.json = true;
        } else if (n == "svg") {
            f.svg = true;
        } else {
            throw Error(ErrorCode::invalid_argument, "unknown report format: " + n);
        }
    }
    return f;
}

fs::path prepare_dir(const std::string& dir)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) {
        throw Error(ErrorCode::io_error, "cannot create output directory: " + dir);
    }
    return fs::path(dir);
}

struct Outputs {
    std::vector<std::string> written;

    void write(const fs::path& path, const std::string& contents)
    {
        write_file_atomic(path, contents);
        written.push_back(path.generic_string());
    }

    std::string json_line() const { return json{{"outputs", written}}.dump() + "\n"; }
};

std::vector<TraceFile> load_traces(const std::vector<std::string>& paths)
{
    if (paths.empty()) {
        throw Error(ErrorCode::empty_input, "no trace files given");
    }
    std::vector<TraceFile> traces;
    for (const auto& p : paths) {
        try {
            traces.push_back(read_trace_file(p));
        } catch (const Error& e) {
            throw Error(e.code(), p + ": " + e.detail());
        }
    }
    return traces;
}

std::vector<HiddenTrace> hidden_of(const std::vector<TraceFile>& traces)
{
    std::vector<HiddenTrace> out;
    out.reserve(traces.size());
    for (const auto& t : traces) {
        out.push_back(t.hidden);
    }
    return out;
}

// Pooled VAR over every trace that carries attention for its answer token.
std::optional<VarProfile> pooled_var(const std::vector<TraceFile>& traces, bool required)
{
    std::vector<VarProfile> profiles;
    for (const auto& t : traces) {
        if (!t.attention) {
            if (required) {
                throw Error(ErrorCode::missing_query, "trace '" + t.hidden.sample_id + "' has no attention section");
            }
            return std::nullopt;
        }
        const std::size_t query = t.hidden.answer_token_index.value_or(t.attention->query_token_ids.front());
        profiles.push_back(var_profile(*t.attention, query));
    }
    return pool_var_profiles(profiles);
}

std::string redundancy_svg(const RedundancyProfile& profile)
{
    std::vector<Series> series;
    for (Modality m : {Modality::text, Modality::vision}) {
        Series s{"D " + std::string(modality_name(m)), {}};
        Series p{"p " + std::string(modality_name(m)), {}};
        for (const auto& e : profile.entries) {
            if (e.modality == m) {
                s.points.emplace_back(static_cast<double>(e.layer), e.mean_cos_dist);
                p.points.emplace_back(static_cast<double>(e.layer), e.proximal_frac);
            }
        }
        if (!s.points.empty()) {
            series.push_back(std::move(s));
            series.push_back(std::move(p));
        }
    }
    return line_chart_svg("Adjacent-layer redundancy (t = " + format_number(profile.t) + ")", "layer",
                          "mean cosine distance / proximal fraction", series);
}

std::string var_svg(const VarProfile& var)
{
    Series s{"VAR / H", {}};
    for (const auto& e : var.layers) {
        s.points.emplace_back(static_cast<double>(e.layer), e.var_normalized);
    }
    return line_chart_svg("Visual attention ratio of the answer token", "layer", "VAR / head_count", {s});
}

SkipMode parse_mode(const std::string& name)
{
    std::string s = name;
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    std::replace(s.begin(), s.end(), '_', '-');
    if (s == "baseline") {
        return SkipMode::baseline;
    }
    if (s == "late-entry") {
        return SkipMode::late_entry;
    }
    if (s == "early-exit") {
        return SkipMode::early_exit;
    }
    throw Error(ErrorCode::invalid_argument, "unknown mode: " + name);
}

json config_json(const ToyModelConfig& c)
{
    return {{"layers", c.layer_count},
            {"dim", c.dim},
            {"heads", c.head_count},
            {"copy_block", {c.copy_first, c.copy_last}},
            {"noise_scale", c.noise_scale},
            {"seed", c.seed}};
}

int exit_for(ErrorCode code)
{
    return code == ErrorCode::invalid_argument ? exit_usage : exit_input;
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Layer-redundancy and skip-planning toolkit for transformer traces", "skipscope"};
    app.require_subcommand(1);

    // analyze
    std::vector<std::string> trace_paths;
    std::string out_dir = ".";
    double t = default_threshold;
    std::vector<std::string> formats;
    auto* analyze = app.add_subcommand("analyze", "Per-layer redundancy and VAR profiles from trace files");
    analyze->add_option("--trace", trace_paths, "Trace file(s)")->required()->check(CLI::ExistingFile);
    analyze->add_option("--out", out_dir, "Output directory");
    analyze->add_option("--t", t, "Proximity threshold");
    analyze->add_option("--format", formats, "Report formats: csv,json,svg")->delimiter(',');

    // plan
    std::string profile_path, var_path;
    Thresholds th;
    std::string modality_text = "VISION";
    auto* plan = app.add_subcommand("plan", "Evaluate skip conditions and recommend late-entry / early-exit layers");
    plan->add_option("--profile", profile_path, "Profile CSV")->check(CLI::ExistingFile);
    plan->add_option("--var", var_path, "VAR CSV")->check(CLI::ExistingFile);
    plan->add_option("--trace", trace_paths, "Trace file(s) instead of CSV inputs")->check(CLI::ExistingFile);
    plan->add_option("--eps-geo", th.eps_geo, "Geometric threshold on mean cosine distance");
    plan->add_option("--eps-prox", th.eps_prox, "Proximal slack: require p >= 1 - eps_prox");
    plan->add_option("--tau-var", th.tau_var, "Threshold on VAR / head_count");
    plan->add_option("--t", th.t, "Proximity threshold used when profiling traces");
    plan->add_option("--modality", modality_text, "Skipped modality (VISION or TEXT)");
    plan->add_option("--out", out_dir, "Output directory");

    // verify
    std::string theorem = "all";
    std::size_t instances = 1000;
    std::optional<std::uint64_t> seed_opt;
    std::string fixture_dir = "oracle-fixtures";
    auto* verify = app.add_subcommand("verify", "Brute-force oracle suites for the redundancy theorems");
    verify->add_option("--theorem", theorem, "Suite name or 'all'");
    verify->add_option("--instances", instances, "Instances per suite");
    verify->add_option("--seed", seed_opt, "Seed (default: SKIPSCOPE_SEED or 1)");
    verify->add_option("--fixtures", fixture_dir, "Directory for failing-instance fixtures");

    // simulate
    ToyModelConfig cfg;
    std::vector<std::size_t> copy_block;
    std::string mode_text = "baseline";
    std::optional<std::size_t> entry_layer, exit_layer;
    std::size_t samples = 512;
    std::size_t emit = 8;
    bool sweep = false;
    bool with_plan = false;
    auto* simulate = app.add_subcommand("simulate", "Run the hand-wired toy model under a skip mode");
    simulate->add_option("--layers", cfg.layer_count, "Number of blocks");
    simulate->add_option("--dim", cfg.dim, "Residual width");
    simulate->add_option("--heads", cfg.head_count, "Heads per block");
    simulate->add_option("--copy-block", copy_block, "First,last block of the vision-to-text copy")
        ->delimiter(',')
        ->expected(2);
    simulate->add_option("--noise", cfg.noise_scale, "Per-layer Gaussian perturbation scale");
    simulate->add_option("--mode", mode_text, "baseline | late-entry | early-exit");
    simulate->add_option("--entry", entry_layer, "Late-entry layer");
    simulate->add_option("--exit", exit_layer, "Early-exit layer");
    simulate->add_option("--samples", samples, "Synthetic samples");
    simulate->add_option("--seed", seed_opt, "Seed (default: SKIPSCOPE_SEED or 0)");
    simulate->add_option("--emit-traces", emit, "Number of sample traces to write");
    simulate->add_flag("--sweep", sweep, "Evaluate every late-entry and early-exit layer");
    simulate->add_flag("--plan", with_plan, "Run the skip planner on the baseline traces");
    simulate->add_option("--out", out_dir, "Output directory");

    // pid
    std::string pmf_path;
    std::string out_file;
    auto* pid = app.add_subcommand("pid", "Partial information decomposition of a triple pmf");
    pid->add_option("--pmf", pmf_path, "JSON pmf file")->required()->check(CLI::ExistingFile);
    pid->add_option("--out", out_file, "Also write the JSON to this file");
    pid->add_option("--seed", seed_opt, "Restart seed (default: SKIPSCOPE_SEED or 0)");

    // info-bounds
    std::size_t k = 8;
    std::optional<std::size_t> layer_opt;
    auto* bounds = app.add_subcommand("info-bounds", "Quantize a trace and evaluate the entropy bounds");
    bounds->add_option("--trace", trace_paths, "Trace file(s)")->required()->check(CLI::ExistingFile);
    bounds->add_option("--k", k, "Codebook size");
    bounds->add_option("--t", t, "Threshold on centroid cosine distance");
    bounds->add_option("--layer", layer_opt, "Single layer (default: all)");
    bounds->add_option("--modality", modality_text, "VISION, TEXT or ALL");
    bounds->add_option("--seed", seed_opt, "Codebook seed (default: SKIPSCOPE_SEED or 0)");
    bounds->add_option("--out", out_dir, "Output directory");

    std::vector<std::string> reversed(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return exit_ok;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return exit_ok;
    } catch (const CLI::ParseError& e) {
        err << json{{"error", "USAGE"}, {"message", e.what()}}.dump() << "\n";
        err << app.help();
        return exit_usage;
    }

    const std::string sub = app.get_subcommands().front()->get_name();
    try {
        if (sub == "analyze") {
            if (!(t > 0.0 && t < 2.0)) {
                throw Error(ErrorCode::invalid_argument, "--t must lie in (0, 2)");
            }
            const Formats f = parse_formats(formats);
            const auto traces = load_traces(trace_paths);
            const auto hidden = hidden_of(traces);
            const RedundancyProfile profile = redundancy_profile(hidden, t);
            const auto var = pooled_var(traces, false);
            const fs::path dir = prepare_dir(out_dir);
            Outputs o;
            if (f.csv) {
                o.write(dir / "profile.csv", profile_csv(profile));
                if (var) {
                    o.write(dir / "var.csv", var_csv(*var));
                }
            }
            if (f.json) {
                o.write(dir / "profile.json", profile_json(profile));
                if (var) {
                    o.write(dir / "var.json", var_json(*var));
                }
            }
            if (f.svg) {
                o.write(dir / "redundancy.svg", redundancy_svg(profile));
                if (var) {
                    o.write(dir / "var.svg", var_svg(*var));
                }
            }
            out << o.json_line();
            return exit_ok;
        }

        if (sub == "plan") {
            validate_thresholds(th);
            const Modality skipped = parse_modality(modality_text);
            RedundancyProfile profile;
            VarProfile var;
            if (!trace_paths.empty()) {
                if (!profile_path.empty() || !var_path.empty()) {
                    throw Error(ErrorCode::invalid_argument, "give either --trace or --profile/--var, not both");
                }
                const auto traces = load_traces(trace_paths);
                profile = redundancy_profile(hidden_of(traces), th.t);
                var = *pooled_var(traces, true);
            } else {
                if (profile_path.empty() || var_path.empty()) {
                    throw Error(ErrorCode::invalid_argument, "plan needs --profile and --var, or --trace");
                }
                std::tie(profile, var) = load_external_metrics(read_file(profile_path), read_file(var_path));
            }
            const SkipPlan p = plan_skips(evaluate_conditions(profile, var, th, skipped));
            const fs::path dir = prepare_dir(out_dir);
            Outputs o;
            o.write(dir / "plan.json", plan_json(p));
            o.write(dir / "rationale.csv", rationale_csv(p));
            out << plan_json(p);
            return exit_ok;
        }

        if (sub == "verify") {
            const std::uint64_t seed = seed_opt.value_or(default_seed(1));
            std::vector<std::string> names;
            if (theorem == "all") {
                names = suite_names();
            } else {
                if (std::find(suite_names().begin(), suite_names().end(), theorem) == suite_names().end()) {
                    throw Error(ErrorCode::invalid_argument, "unknown suite: " + theorem);
                }
                names.push_back(theorem);
            }
            if (instances < 1) {
                throw Error(ErrorCode::invalid_argument, "--instances must be >= 1");
            }
            std::vector<SuiteSummary> summaries;
            bool failed = false;
            for (const auto& name : names) {
                summaries.push_back(run_suite(name, instances, seed));
                const SuiteSummary& s = summaries.back();
                if (!s.failing_fixtures.empty()) {
                    failed = true;
                    const fs::path dir = prepare_dir(fixture_dir);
                    for (std::size_t i = 0; i < s.failing_fixtures.size(); ++i) {
                        write_file_atomic(dir / (name + "-" + std::to_string(i) + ".json"), s.failing_fixtures[i]);
                    }
                }
            }
            out << summary_json(summaries);
            return failed ? exit_verification : exit_ok;
        }

        if (sub == "simulate") {
            cfg.seed = seed_opt.value_or(default_seed(0));
            if (!copy_block.empty()) {
                cfg.copy_first = copy_block[0];
                cfg.copy_last = copy_block[1];
            }
            validate_config(cfg);
            if (samples < 1) {
                throw Error(ErrorCode::invalid_argument, "--samples must be >= 1");
            }
            ForwardMode mode{parse_mode(mode_text), 0};
            if (mode.kind == SkipMode::late_entry) {
                if (!entry_layer) {
                    throw Error(ErrorCode::invalid_argument, "late-entry mode needs --entry");
                }
                mode.layer = *entry_layer;
            } else if (mode.kind == SkipMode::early_exit) {
                if (!exit_layer) {
                    throw Error(ErrorCode::invalid_argument, "early-exit mode needs --exit");
                }
                mode.layer = *exit_layer;
            }
            if (mode.layer > cfg.layer_count) {
                throw Error(ErrorCode::invalid_argument, "skip layer outside [0, layers]");
            }

            const ToyModel model = build_model(cfg);
            const auto data = synth_dataset(cfg.seed, samples);
            const fs::path dir = prepare_dir(out_dir);
            Outputs o;

            std::vector<ForwardMode> modes{mode};
            if (sweep) {
                modes = {ForwardMode{}};
                for (std::size_t l = 0; l <= cfg.layer_count; ++l) {
                    modes.push_back({SkipMode::late_entry, l});
                }
                for (std::size_t l = 0; l <= cfg.layer_count; ++l) {
                    modes.push_back({SkipMode::early_exit, l});
                }
            }
            json results = json::array();
            for (const auto& m : modes) {
                results.push_back({{"mode", mode_name(m)}, {"accuracy", evaluate_accuracy(model, data, m)}});
            }

            const std::size_t n_emit = std::min(emit, data.size());
            if (n_emit > 0) {
                const fs::path tdir = prepare_dir((dir / "traces").string());
                for (std::size_t i = 0; i < n_emit; ++i) {
                    const ForwardResult r = forward(model, data[i], mode);
                    char name[64];
                    std::snprintf(name, sizeof name, "sample-%04zu.vlmt", i);
                    write_trace_file(tdir / name, r.hidden, &r.attention);
                    o.written.push_back((tdir / name).generic_string());
                }
            }

            json doc = {{"config", config_json(cfg)}, {"samples", samples}, {"results", results}};
            if (with_plan) {
                std::vector<HiddenTrace> hidden;
                std::vector<VarProfile> vars;
                for (const auto& s : data) {
                    ForwardResult r = forward(model, s, ForwardMode{});
                    vars.push_back(var_profile(r.attention, toy_answer_token));
                    hidden.push_back(std::move(r.hidden));
                }
                const RedundancyProfile profile = redundancy_profile(hidden, th.t);
                const SkipPlan p = plan_skips(evaluate_conditions(profile, pool_var_profiles(vars), th));
                o.write(dir / "plan.json", plan_json(p));
                o.write(dir / "rationale.csv", rationale_csv(p));
                doc["plan"] = {{"late_entry_layer", p.late_entry_layer},
                               {"early_exit_layer", p.early_exit_layer ? json(*p.early_exit_layer) : json()}};
            }
            o.write(dir / "accuracy.json", doc.dump(2) + "\n");
            out << doc.dump(2) << "\n";
            return exit_ok;
        }

        if (sub == "pid") {
            BrojaOptions opts;
            opts.seed = seed_opt.value_or(default_seed(0));
            const TripleJoint joint = triple_from_json(read_file(pmf_path));
            const std::string text = pid_json(pid_decompose(joint, opts));
            if (!out_file.empty()) {
                write_file_atomic(out_file, text);
            }
            out << text;
            return exit_ok;
        }

        if (sub == "info-bounds") {
            if (!(t > 0.0 && t < 2.0)) {
                throw Error(ErrorCode::invalid_argument, "--t must lie in (0, 2)");
            }
            if (k < 2) {
                throw Error(ErrorCode::invalid_argument, "--k must be >= 2");
            }
            const std::uint64_t seed = seed_opt.value_or(default_seed(0));
            const auto traces = load_traces(trace_paths);
            const auto hidden = hidden_of(traces);
            std::vector<Modality> mods;
            std::string upper = modality_text;
            std::transform(upper.begin(), upper.end(), upper.begin(), [](unsigned char c) { return std::toupper(c); });
            if (upper == "ALL") {
                mods = {Modality::text, Modality::vision};
            } else {
                mods = {parse_modality(modality_text)};
            }
            const std::size_t L = hidden.front().layer_count;
            std::vector<std::size_t> layers;
            if (layer_opt) {
                layers.push_back(*layer_opt);
            } else {
                for (std::size_t l = 1; l < L; ++l) {
                    layers.push_back(l);
                }
            }

            std::string csv = "layer,modality,k,t,P_t,H_cond_bits,I_bits,fano_upper_bits,mi_lower_bits,applicable_fano,"
                              "applicable_mi\n";
            json rows = json::array();
            json warnings = json::array();
            for (std::size_t layer : layers) {
                for (Modality m : mods) {
                    QuantizedLayer q;
                    try {
                        q = quantize_traces(hidden, layer, m, k, seed);
                    } catch (const Error& e) {
                        if (e.code() == ErrorCode::empty_modality && mods.size() > 1) {
                            continue;
                        }
                        throw;
                    }
                    for (const auto& w : q.codebook.warnings) {
                        warnings.push_back("layer " + std::to_string(layer) + " " + std::string(modality_name(m)) +
                                           ": " + w);
                    }
                    const DiscreteJoint j = joint_from_pairs(q.pairs, &q.dissimilarity, q.codebook.k);
                    const BoundReport r = bound_report(j, t);
                    csv += std::to_string(layer) + ',' + std::string(modality_name(m)) + ',' +
                           std::to_string(q.codebook.k) + ',' + format_number(t) + ',' + format_number(r.P_t) + ',' +
                           format_number(r.H_cond) + ',' + format_number(r.I_exact) + ',' +
                           format_number(r.fano_upper) + ',' + format_number(r.mi_lower) + ',' +
                           (r.applicable_fano ? "true" : "false") + ',' + (r.applicable_mi ? "true" : "false") + '\n';
                    rows.push_back({{"layer", layer},
                                    {"modality", modality_name(m)},
                                    {"k", q.codebook.k},
                                    {"t", t},
                                    {"P_t", r.P_t},
                                    {"H2_Pt", r.H2_Pt},
                                    {"N_t_max", r.N_t_max},
                                    {"N_t_min", r.N_t_min},
                                    {"p_min", r.p_min},
                                    {"p_max", r.p_max},
                                    {"H_cond_bits", r.H_cond},
                                    {"I_bits", r.I_exact},
                                    {"fano_upper_bits", r.fano_upper},
                                    {"mi_lower_bits", r.mi_lower},
                                    {"applicable_fano", r.applicable_fano},
                                    {"applicable_mi", r.applicable_mi}});
                }
            }
            const fs::path dir = prepare_dir(out_dir);
            Outputs o;
            o.write(dir / "bounds.csv", csv);
            o.write(dir / "bounds.json", json{{"seed", seed}, {"rows", rows}, {"warnings", warnings}}.dump(2) + "\n");
            for (const auto& w : warnings) {
                err << json{{"warning", w}}.dump() << "\n";
            }
            out << o.json_line();
            return exit_ok;
        }
    } catch (const Error& e) {
        err << json{{"error", to_string(e.code())}, {"subcommand", sub}, {"message", e.detail()}}.dump() << "\n";
        return exit_for(e.code());
    } catch (const std::exception& e) {
        err << json{{"error", "INTERNAL"}, {"subcommand", sub}, {"message", e.what()}}.dump() << "\n";
        return exit_input;
    }
    return exit_usage;
}

} // namespace skipscope
