#include "skipscope/toy_model.hpp"

#include "skipscope/error.hpp"
#include "skipscope/rng.hpp"
#include "skipscope/simd.hpp"

#include <algorithm>
#include <cmath>

namespace skipscope {

namespace {

enum Dim : std::size_t {
    attr0 = 0,
    vision_flag = 6,
    text_flag = 7,
    bos_flag = 8,
    query_flag = 9,
    answer_flag = 10,
    bias = 11,
    found = 12,
    label = 13,
    scene0 = 14,
    filler0 = 20,
};

constexpr double sink_logit = 8.0;
constexpr double strong_logit = 20.0;
constexpr double text_penalty = 30.0;
constexpr double filler_scale = 0.05;

ToyHead empty_head(std::size_t dim)
{
    ToyHead h;
    h.wq.assign(toy_head_dim * dim, 0.0);
    h.wk.assign(toy_head_dim * dim, 0.0);
    h.wv.assign(toy_head_dim * dim, 0.0);
    h.wo.assign(dim * toy_head_dim, 0.0);
    return h;
}

// row r of a (toy_head_dim x dim) matrix
double& at(std::vector<double>& w, std::size_t dim, std::size_t r, std::size_t c)
{
    return w[r * dim + c];
}

ToyHead reader_head(std::size_t dim)
{
    ToyHead h = empty_head(dim);
    at(h.wq, dim, 0, bias) = sink_logit;
    at(h.wk, dim, 0, bos_flag) = 1.0;
    at(h.wq, dim, 1, answer_flag) = strong_logit;
    at(h.wk, dim, 1, query_flag) = 1.0;
    at(h.wv, dim, 0, found) = 1.0;
    h.wo[label * toy_head_dim + 0] = 1.0;
    return h;
}

ToyHead sink_only_head(std::size_t dim)
{
    ToyHead h = empty_head(dim);
    at(h.wq, dim, 0, bias) = sink_logit;
    at(h.wk, dim, 0, bos_flag) = 1.0;
    return h;
}

ToyHead match_head(std::size_t dim)
{
    ToyHead h = empty_head(dim);
    // Text keys are pushed away; BOS carries the text flag too and is lifted
    // back to the ordinary sink logit.
    at(h.wq, dim, 0, bias) = 1.0;
    at(h.wk, dim, 0, bos_flag) = sink_logit + text_penalty;
    at(h.wk, dim, 0, text_flag) = -text_penalty;
    for (std::size_t a = 0; a < toy_attributes; ++a) {
        at(h.wq, dim, 1 + a, attr0 + a) = strong_logit;
        at(h.wk, dim, 1 + a, attr0 + a) = 1.0;
    }
    at(h.wv, dim, 0, vision_flag) = 1.0;
    h.wo[found * toy_head_dim + 0] = 1.0;
    return h;
}

ToyHead scan_head(std::size_t dim)
{
    ToyHead h = empty_head(dim);
    at(h.wq, dim, 0, bias) = sink_logit;
    at(h.wk, dim, 0, bos_flag) = 1.0;
    at(h.wq, dim, 1, answer_flag) = strong_logit;
    at(h.wk, dim, 1, vision_flag) = 1.0;
    for (std::size_t a = 0; a < toy_attributes; ++a) {
        at(h.wv, dim, 2 + a, attr0 + a) = 1.0;
        h.wo[(scene0 + a) * toy_head_dim + 2 + a] = 1.0;
    }
    return h;
}

std::vector<double> embed(const ToyModel& model, const SynthSample& s)
{
    const std::size_t dim = model.config.dim;
    std::vector<double> x(toy_token_count * dim, 0.0);
    for (std::size_t i = 0; i < toy_token_count; ++i) {
        double* row = &x[i * dim];
        for (std::size_t d = filler0; d < dim; ++d) {
            row[d] = model.positional[i * dim + d];
        }
        row[bias] = 1.0;
        if (i == 0) {
            row[bos_flag] = 1.0;
            row[text_flag] = 1.0;
        } else if (i <= toy_grid_cells) {
            row[vision_flag] = 1.0;
            row[attr0 + s.grid[i - 1]] = 1.0;
        } else if (i == toy_query_token) {
            row[text_flag] = 1.0;
            row[query_flag] = 1.0;
            row[attr0 + s.query_attribute] = 1.0;
        } else {
            row[text_flag] = 1.0;
            row[answer_flag] = 1.0;
        }
    }
    return x;
}

bool vision_active(const ForwardMode& mode, std::size_t block)
{
    switch (mode.kind) {
    case SkipMode::baseline: return true;
    case SkipMode::late_entry: return block > mode.layer;
    case SkipMode::early_exit: return block <= mode.layer;
    }
    return true;
}

} // namespace

void validate_config(const ToyModelConfig& c)
{
    if (c.layer_count < 2) {
        throw Error(ErrorCode::invalid_argument, "toy model needs at least 2 layers");
    }
    if (c.dim < filler0) {
        throw Error(ErrorCode::invalid_argument, "toy model dim must be >= " + std::to_string(filler0));
    }
    if (c.head_count < 2) {
        throw Error(ErrorCode::invalid_argument, "toy model needs at least 2 heads (reader and match)");
    }
    if (!(1 <= c.copy_first && c.copy_first <= c.copy_last && c.copy_last < c.layer_count)) {
        throw Error(ErrorCode::invalid_argument, "copy block [a, b] must satisfy 1 <= a <= b < layer_count");
    }
    if (!(c.noise_scale >= 0.0) || !std::isfinite(c.noise_scale)) {
        throw Error(ErrorCode::invalid_argument, "noise_scale must be finite and >= 0");
    }
}

std::vector<double> ToyModel::flat_weights() const
{
    std::vector<double> out = positional;
    for (const auto& block : blocks) {
        for (const auto& h : block) {
            out.insert(out.end(), h.wq.begin(), h.wq.end());
            out.insert(out.end(), h.wk.begin(), h.wk.end());
            out.insert(out.end(), h.wv.begin(), h.wv.end());
            out.insert(out.end(), h.wo.begin(), h.wo.end());
        }
    }
    return out;
}

ToyModel build_model(const ToyModelConfig& config)
{
    validate_config(config);
    ToyModel m;
    m.config = config;
    const std::size_t dim = config.dim;

    Rng rng(mix_seed(config.seed, 0x706f73));
    m.positional.assign(toy_token_count * dim, 0.0);
    for (std::size_t i = 0; i < toy_token_count; ++i) {
        for (std::size_t d = filler0; d < dim; ++d) {
            m.positional[i * dim + d] = filler_scale * rng.normal();
        }
    }

    for (std::size_t block = 1; block <= config.layer_count; ++block) {
        const bool in_copy = block >= config.copy_first && block <= config.copy_last;
        std::vector<ToyHead> heads;
        heads.push_back(reader_head(dim));
        heads.push_back(in_copy ? match_head(dim) : sink_only_head(dim));
        for (std::size_t h = 2; h < config.head_count; ++h) {
            heads.push_back(in_copy ? scan_head(dim) : sink_only_head(dim));
        }
        m.blocks.push_back(std::move(heads));
    }
    return m;
}

std::vector<SynthSample> synth_dataset(std::uint64_t seed, std::size_t count)
{
    if (count < 1) {
        throw Error(ErrorCode::invalid_argument, "dataset needs at least one sample");
    }
    Rng rng(mix_seed(seed, 0x64617461));
    // exactly floor(count / 2) positives, in shuffled order
    std::vector<bool> labels(count, false);
    for (std::size_t i = 0; i < count / 2; ++i) {
        labels[i] = true;
    }
    for (std::size_t i = count; i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.below(i));
        const bool tmp = labels[i - 1];
        labels[i - 1] = labels[j];
        labels[j] = tmp;
    }

    std::vector<SynthSample> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        SynthSample s;
        s.index = i;
        s.seed = seed;
        s.label = labels[i];
        s.query_attribute = static_cast<std::size_t>(rng.below(toy_attributes));
        s.grid.resize(toy_grid_cells);
        for (auto& cell : s.grid) {
            if (s.label) {
                cell = static_cast<std::size_t>(rng.below(toy_attributes));
            } else {
                // any attribute but the queried one
                const auto r = static_cast<std::size_t>(rng.below(toy_attributes - 1));
                cell = r >= s.query_attribute ? r + 1 : r;
            }
        }
        if (s.label) {
            s.grid[static_cast<std::size_t>(rng.below(toy_grid_cells))] = s.query_attribute;
        }
        out.push_back(std::move(s));
    }
    return out;
}

std::string mode_name(const ForwardMode& mode)
{
    switch (mode.kind) {
    case SkipMode::baseline: return "BASELINE";
    case SkipMode::late_entry: return "LATE_ENTRY(" + std::to_string(mode.layer) + ")";
    case SkipMode::early_exit: return "EARLY_EXIT(" + std::to_string(mode.layer) + ")";
    }
    return "UNKNOWN";
}

ForwardResult forward(const ToyModel& model, const SynthSample& sample, const ForwardMode& mode)
{
    const ToyModelConfig& cfg = model.config;
    const std::size_t n = cfg.layer_count;
    const std::size_t dim = cfg.dim;
    const std::size_t T = toy_token_count;
    const std::size_t H = cfg.head_count;
    if (mode.kind != SkipMode::baseline && mode.layer > n) {
        throw Error(ErrorCode::invalid_argument,
                    "skip layer " + std::to_string(mode.layer) + " outside [0, " + std::to_string(n) + "]");
    }
    if (sample.grid.size() != toy_grid_cells || sample.query_attribute >= toy_attributes) {
        throw Error(ErrorCode::invalid_argument, "malformed synthetic sample");
    }

    ForwardResult r;
    r.hidden = HiddenTrace(n + 1, T, dim);
    r.hidden.sample_id = "toy-" + std::to_string(sample.seed) + "-" + std::to_string(sample.index);
    r.hidden.answer_token_index = toy_answer_token;
    for (std::size_t i = 1; i <= toy_grid_cells; ++i) {
        r.hidden.modality_mask[i] = Modality::vision;
    }
    r.attention = AttentionTrace(n, H, T, {toy_answer_token});
    r.attention.vision_key_mask = r.hidden.modality_mask;

    std::vector<double> cur = embed(model, sample);
    std::vector<double> next(cur.size());
    const auto store = [&](std::size_t layer, const std::vector<double>& x) {
        for (std::size_t i = 0; i < T * dim; ++i) {
            r.hidden.states[layer * T * dim + i] = static_cast<float>(x[i]);
        }
    };
    store(0, cur);

    std::vector<double> q(T * toy_head_dim), k(T * toy_head_dim), v(T * toy_head_dim);
    std::vector<double> logits(T), mix(toy_head_dim), delta(dim);
    std::vector<bool> active(T);
    for (std::size_t block = 1; block <= n; ++block) {
        for (std::size_t i = 0; i < T; ++i) {
            active[i] = r.hidden.modality_mask[i] == Modality::text || vision_active(mode, block);
        }
        next = cur;
        for (std::size_t h = 0; h < H; ++h) {
            const ToyHead& head = model.blocks[block - 1][h];
            for (std::size_t i = 0; i < T; ++i) {
                if (!active[i]) {
                    continue;
                }
                const std::span<const double> x(&cur[i * dim], dim);
                simd::matvec(head.wq, x, std::span<double>(&q[i * toy_head_dim], toy_head_dim));
                simd::matvec(head.wk, x, std::span<double>(&k[i * toy_head_dim], toy_head_dim));
                simd::matvec(head.wv, x, std::span<double>(&v[i * toy_head_dim], toy_head_dim));
            }
            for (std::size_t i = 0; i < T; ++i) {
                if (!active[i]) {
                    continue;
                }
                double top = -INFINITY;
                for (std::size_t j = 0; j <= i; ++j) {
                    if (active[j]) {
                        logits[j] = simd::dot(std::span<const double>(&q[i * toy_head_dim], toy_head_dim),
                                              std::span<const double>(&k[j * toy_head_dim], toy_head_dim));
                        top = std::max(top, logits[j]);
                    }
                }
                double z = 0.0;
                for (std::size_t j = 0; j <= i; ++j) {
                    logits[j] = active[j] ? std::exp(logits[j] - top) : 0.0;
                    z += logits[j];
                }
                std::fill(mix.begin(), mix.end(), 0.0);
                for (std::size_t j = 0; j <= i; ++j) {
                    logits[j] /= z;
                    for (std::size_t c = 0; c < toy_head_dim; ++c) {
                        mix[c] += logits[j] * v[j * toy_head_dim + c];
                    }
                }
                if (i == toy_answer_token) {
                    auto row = r.attention.row(0, block - 1, h);
                    for (std::size_t j = 0; j < T; ++j) {
                        row[j] = j <= i ? static_cast<float>(logits[j]) : 0.0f;
                    }
                }
                simd::matvec(head.wo, mix, delta);
                for (std::size_t d = 0; d < dim; ++d) {
                    next[i * dim + d] += delta[d];
                }
            }
        }
        if (cfg.noise_scale > 0.0) {
            Rng noise(mix_seed(mix_seed(cfg.seed, mix_seed(sample.seed, sample.index)), block));
            for (std::size_t i = 0; i < T; ++i) {
                if (!active[i]) {
                    continue;
                }
                for (std::size_t d = 0; d < dim; ++d) {
                    next[i * dim + d] += cfg.noise_scale * noise.normal();
                }
            }
        }
        cur.swap(next);
        store(block, cur);
    }

    r.logit = cur[toy_answer_token * dim + label];
    r.predicted = r.logit > 0.5;
    return r;
}

double evaluate_accuracy(const ToyModel& model, const std::vector<SynthSample>& dataset, const ForwardMode& mode)
{
    if (dataset.empty()) {
        throw Error(ErrorCode::empty_input, "empty dataset");
    }
    std::size_t correct = 0;
    for (const auto& s : dataset) {
        correct += forward(model, s, mode).predicted == s.label ? 1 : 0;
    }
    return static_cast<double>(correct) / static_cast<double>(dataset.size());
}

} // namespace skipscope
