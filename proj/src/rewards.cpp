// Copyright (c) 2026 adgen authors
// SPDX-License-Identifier: Apache-2.0

#include "adgen/rewards.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "json.hpp"

namespace adgen::rewards {
namespace {

double sigmoid(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double bce(double p, int label) {
    const double clamped = std::clamp(p, 1e-15, 1.0 - 1e-15);
    return label == 1 ? -std::log(clamped) : -std::log(1.0 - clamped);
}

std::span<const int> content_of(std::span<const int> tokens, const env::Vocabulary& vocab) {
    return tokens.first(static_cast<std::size_t>(env::content_length(tokens, vocab)));
}

struct Forward {
    std::vector<double> hidden;
    double p_ctr = 0.0;
    double p_cvr = 0.0;
};

Forward forward_pass(const CtcvrPredictor& predictor, std::span<const double> features) {
    if (features.size() != static_cast<std::size_t>(predictor.input_dim)) {
        throw std::invalid_argument("predictor expects " + std::to_string(predictor.input_dim) +
                                    " features, got " + std::to_string(features.size()));
    }
    Forward fwd;
    fwd.hidden.resize(static_cast<std::size_t>(predictor.hidden));
    for (int h = 0; h < predictor.hidden; ++h) {
        double a = predictor.b_hidden[static_cast<std::size_t>(h)];
        const double* row = predictor.w_hidden.data() +
                            static_cast<std::size_t>(h) * static_cast<std::size_t>(predictor.input_dim);
        for (int d = 0; d < predictor.input_dim; ++d) {
            a += row[d] * features[static_cast<std::size_t>(d)];
        }
        fwd.hidden[static_cast<std::size_t>(h)] = std::tanh(a);
    }
    double u = predictor.b_ctr;
    double v = predictor.b_cvr;
    for (int h = 0; h < predictor.hidden; ++h) {
        u += predictor.w_ctr[static_cast<std::size_t>(h)] * fwd.hidden[static_cast<std::size_t>(h)];
        v += predictor.w_cvr[static_cast<std::size_t>(h)] * fwd.hidden[static_cast<std::size_t>(h)];
    }
    fwd.p_ctr = sigmoid(u);
    fwd.p_cvr = sigmoid(v);
    return fwd;
}

// One-based binary indexed tree counting insertions by value index.
struct Fenwick {
    explicit Fenwick(std::size_t n) : tree(n + 1, 0) {}
    void add(std::size_t i) {
        for (std::size_t k = i + 1; k < tree.size(); k += k & (~k + 1)) {
            ++tree[k];
        }
    }
    // count of added values with index <= i
    std::int64_t prefix(std::size_t i) const {
        std::int64_t sum = 0;
        for (std::size_t k = i + 1; k > 0; k -= k & (~k + 1)) {
            sum += tree[k];
        }
        return sum;
    }
    std::vector<std::int64_t> tree;
};

} // namespace

double length_reward(int length, const env::LengthInterval& interval) {
    if (interval.lo < 1 || interval.hi < interval.lo) {
        throw std::invalid_argument("length interval must satisfy 1 <= lo <= hi");
    }
    if (length >= interval.lo && length <= interval.hi) {
        return 1.0;
    }
    const int dist = length < interval.lo ? interval.lo - length : length - interval.hi;
    return -std::min(1.0, static_cast<double>(dist) / static_cast<double>(interval.lo));
}

double format_reward(std::span<const int> tokens, const env::Vocabulary& vocab) {
    const auto content = content_of(tokens, vocab);
    int sep_count = 0;
    std::size_t sep_pos = 0;
    for (std::size_t t = 0; t < content.size(); ++t) {
        if (content[t] == vocab.sep) {
            ++sep_count;
            sep_pos = t;
        }
    }
    const bool ok = sep_count == 1 && sep_pos > 0 && sep_pos + 1 < content.size();
    return ok ? 1.0 : -1.0;
}

double relevance_reward(const env::Prompt& prompt, std::span<const int> tokens,
                        const env::Vocabulary& vocab) {
    const auto content = content_of(tokens, vocab);
    int covered = 0;
    for (int kw : prompt.query_keyword_ids) {
        if (std::find(content.begin(), content.end(), kw) != content.end()) {
            ++covered;
        }
    }
    const double coverage =
        prompt.query_keyword_ids.empty()
            ? 0.0
            : static_cast<double>(covered) / static_cast<double>(prompt.query_keyword_ids.size());
    const bool has_bidword =
        std::find(content.begin(), content.end(), prompt.bidword_id) != content.end();
    return (coverage + (has_bidword ? 1.0 : 0.0)) / 2.0;
}

double correctness_reward(std::span<const int> tokens, const env::Vocabulary& vocab) {
    const auto content = content_of(tokens, vocab);
    for (const auto& [a, b] : vocab.contradiction_pairs) {
        const bool has_a = std::find(content.begin(), content.end(), a) != content.end();
        const bool has_b = std::find(content.begin(), content.end(), b) != content.end();
        if (has_a && has_b) {
            return -1.0;
        }
    }
    return 0.0;
}

std::vector<double> risk_scan(std::span<const int> tokens, const env::Vocabulary& vocab) {
    std::vector<double> marks(tokens.size(), 0.0);
    for (std::size_t t = 0; t < tokens.size(); ++t) {
        if (vocab.is_blacklisted(tokens[t])) {
            marks[t] = 1.0;
        }
    }
    return marks;
}

// --- DiversityTracker -------------------------------------------------

DiversityTracker::DiversityTracker(DiversityOptions options) : options_(options) {
    if (options_.delta_d < 0.0) {
        throw std::invalid_argument("delta_d must be non-negative");
    }
    if (options_.tau_f < 1) {
        throw std::invalid_argument("tau_f must be at least 1");
    }
    if (options_.min_n < 2 || options_.max_n > 10 || options_.min_n > options_.max_n) {
        throw std::invalid_argument("n-gram range must satisfy 2 <= min_n <= max_n <= 10");
    }
}

std::size_t DiversityTracker::KeyHash::operator()(const Key& key) const {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&h](std::uint64_t x) {
        h ^= x;
        h *= 1099511628211ull;
    };
    mix(static_cast<std::uint64_t>(key.n));
    for (std::int32_t token : key.tokens) {
        mix(static_cast<std::uint64_t>(static_cast<std::uint32_t>(token)));
    }
    return static_cast<std::size_t>(h);
}

DiversityTracker::Key DiversityTracker::make_key(std::span<const int> tokens, std::size_t start,
                                                 int n) {
    Key key;
    key.n = static_cast<std::int8_t>(n);
    for (int i = 0; i < n; ++i) {
        key.tokens[static_cast<std::size_t>(i)] =
            static_cast<std::int32_t>(tokens[start + static_cast<std::size_t>(i)]);
    }
    return key;
}

void DiversityTracker::clear() { counts_.clear(); }

void DiversityTracker::add(std::span<const int> tokens) {
    const int len = static_cast<int>(tokens.size());
    for (int n = options_.min_n; n <= std::min(options_.max_n, len); ++n) {
        for (int start = 0; start + n <= len; ++start) {
            ++counts_[make_key(tokens, static_cast<std::size_t>(start), n)];
        }
    }
}

void DiversityTracker::add_batch(std::span<const std::vector<int>> batch) {
    for (const auto& tokens : batch) {
        add(tokens);
    }
}

int DiversityTracker::count(std::span<const int> ngram) const {
    const int n = static_cast<int>(ngram.size());
    if (n < 1 || n > 10) {
        throw std::invalid_argument("n-gram length must be in [1, 10]");
    }
    const auto it = counts_.find(make_key(ngram, 0, n));
    return it == counts_.end() ? 0 : it->second;
}

DiversityPenalty DiversityTracker::penalty(std::span<const int> tokens) const {
    DiversityPenalty result;
    result.marks.assign(tokens.size(), 0.0);
    const int len = static_cast<int>(tokens.size());
    for (int n = options_.min_n; n <= std::min(options_.max_n, len); ++n) {
        for (int start = 0; start + n <= len; ++start) {
            const auto it = counts_.find(make_key(tokens, static_cast<std::size_t>(start), n));
            if (it != counts_.end() && it->second >= options_.tau_f) {
                result.scalar -= options_.delta_d;
                result.marks[static_cast<std::size_t>(start + n - 1)] += 1.0;
            }
        }
    }
    return result;
}

namespace {

template <typename Fn>
void for_each_segment(std::span<const int> content, int sep, Fn&& fn) {
    std::size_t start = 0;
    for (std::size_t i = 0; i <= content.size(); ++i) {
        if (i == content.size() || content[i] == sep) {
            if (i > start) {
                fn(start, content.subspan(start, i - start));
            }
            start = i + 1;
        }
    }
}

} // namespace

void add_content(DiversityTracker& tracker, std::span<const int> content, int sep) {
    for_each_segment(content, sep,
                     [&](std::size_t, std::span<const int> segment) { tracker.add(segment); });
}

DiversityPenalty content_penalty(const DiversityTracker& tracker, std::span<const int> content,
                                 int sep) {
    DiversityPenalty result;
    result.marks.assign(content.size(), 0.0);
    for_each_segment(content, sep, [&](std::size_t offset, std::span<const int> segment) {
        const DiversityPenalty part = tracker.penalty(segment);
        result.scalar += part.scalar;
        for (std::size_t i = 0; i < part.marks.size(); ++i) {
            result.marks[offset + i] += part.marks[i];
        }
    });
    return result;
}

// --- CtcvrPredictor ---------------------------------------------------

env::CtcvrProbs predict(const CtcvrPredictor& predictor, std::span<const double> features) {
    const Forward fwd = forward_pass(predictor, features);
    return env::CtcvrProbs{fwd.p_ctr, fwd.p_ctr * fwd.p_cvr};
}

double predict_ctcvr(const CtcvrPredictor& predictor, std::span<const double> features) {
    return predict(predictor, features).p_ctcvr;
}

std::size_t predictor_param_count(const CtcvrPredictor& predictor) {
    const std::size_t h = static_cast<std::size_t>(predictor.hidden);
    const std::size_t d = static_cast<std::size_t>(predictor.input_dim);
    return h * d + h + h + 1 + h + 1;
}

std::vector<double> predictor_get_params(const CtcvrPredictor& predictor) {
    std::vector<double> flat;
    flat.reserve(predictor_param_count(predictor));
    flat.insert(flat.end(), predictor.w_hidden.begin(), predictor.w_hidden.end());
    flat.insert(flat.end(), predictor.b_hidden.begin(), predictor.b_hidden.end());
    flat.insert(flat.end(), predictor.w_ctr.begin(), predictor.w_ctr.end());
    flat.push_back(predictor.b_ctr);
    flat.insert(flat.end(), predictor.w_cvr.begin(), predictor.w_cvr.end());
    flat.push_back(predictor.b_cvr);
    return flat;
}

void predictor_set_params(CtcvrPredictor& predictor, std::span<const double> params) {
    if (params.size() != predictor_param_count(predictor)) {
        throw std::invalid_argument("flat parameter vector has wrong length");
    }
    std::size_t at = 0;
    auto take = [&params, &at](std::vector<double>& dst) {
        std::copy_n(params.begin() + static_cast<std::ptrdiff_t>(at), dst.size(), dst.begin());
        at += dst.size();
    };
    take(predictor.w_hidden);
    take(predictor.b_hidden);
    take(predictor.w_ctr);
    predictor.b_ctr = params[at++];
    take(predictor.w_cvr);
    predictor.b_cvr = params[at++];
}

LossAndGrad predictor_loss_and_grad(const CtcvrPredictor& predictor,
                                    std::span<const env::OracleRow> rows) {
    if (rows.empty()) {
        throw std::invalid_argument("loss requires at least one row");
    }
    const std::size_t h_dim = static_cast<std::size_t>(predictor.hidden);
    const std::size_t d_dim = static_cast<std::size_t>(predictor.input_dim);

    LossAndGrad out;
    out.grad.assign(predictor_param_count(predictor), 0.0);
    std::span<double> g_w_hidden(out.grad.data(), h_dim * d_dim);
    std::span<double> g_b_hidden(out.grad.data() + h_dim * d_dim, h_dim);
    std::span<double> g_w_ctr(out.grad.data() + h_dim * d_dim + h_dim, h_dim);
    double& g_b_ctr = out.grad[h_dim * d_dim + 2 * h_dim];
    std::span<double> g_w_cvr(out.grad.data() + h_dim * d_dim + 2 * h_dim + 1, h_dim);
    double& g_b_cvr = out.grad[h_dim * d_dim + 3 * h_dim + 1];

    const double scale = 1.0 / static_cast<double>(rows.size());
    for (const env::OracleRow& row : rows) {
        const Forward fwd = forward_pass(predictor, row.features);
        const double p1 = fwd.p_ctr;
        const double p2 = fwd.p_cvr;
        const double q = std::min(p1 * p2, 1.0 - 1e-12);
        out.loss += scale * (bce(p1, row.click) + bce(q, row.conversion));

        const double z = static_cast<double>(row.conversion);
        const double c = static_cast<double>(row.click);
        const double du = scale * ((p1 - c) + (q - z) * (1.0 - p1) / (1.0 - q));
        const double dv = scale * ((q - z) * (1.0 - p2) / (1.0 - q));

        g_b_ctr += du;
        g_b_cvr += dv;
        for (std::size_t h = 0; h < h_dim; ++h) {
            const double hid = fwd.hidden[h];
            g_w_ctr[h] += du * hid;
            g_w_cvr[h] += dv * hid;
            const double dh = du * predictor.w_ctr[h] + dv * predictor.w_cvr[h];
            const double da = dh * (1.0 - hid * hid);
            g_b_hidden[h] += da;
            for (std::size_t d = 0; d < d_dim; ++d) {
                g_w_hidden[h * d_dim + d] += da * row.features[d];
            }
        }
    }
    return out;
}

CtcvrPredictor train_ctcvr_predictor(const env::OracleDataset& dataset,
                                     const PredictorConfig& config, Rng& rng) {
    if (dataset.rows.empty()) {
        throw std::invalid_argument("predictor training needs a nonempty dataset");
    }
    if (config.hidden < 1 || config.epochs < 1 || config.minibatch < 1) {
        throw std::invalid_argument("predictor config values must be positive");
    }
    if (config.learning_rate <= 0.0) {
        throw std::invalid_argument("learning rate must be positive");
    }

    CtcvrPredictor predictor;
    predictor.input_dim = env::kFeatureDim;
    predictor.hidden = config.hidden;
    const std::size_t h_dim = static_cast<std::size_t>(config.hidden);
    const std::size_t d_dim = static_cast<std::size_t>(predictor.input_dim);
    predictor.w_hidden.resize(h_dim * d_dim);
    predictor.b_hidden.assign(h_dim, 0.0);
    predictor.w_ctr.resize(h_dim);
    predictor.w_cvr.resize(h_dim);
    const double s_in = config.init_scale / std::sqrt(static_cast<double>(d_dim));
    const double s_head = config.init_scale / std::sqrt(static_cast<double>(h_dim));
    for (double& w : predictor.w_hidden) {
        w = rng.uniform(-s_in, s_in);
    }
    for (std::size_t h = 0; h < h_dim; ++h) {
        predictor.w_ctr[h] = rng.uniform(-s_head, s_head);
        predictor.w_cvr[h] = rng.uniform(-s_head, s_head);
    }

    std::vector<double> params = predictor_get_params(predictor);
    std::vector<env::OracleRow> shuffled = dataset.rows;
    const std::size_t n = shuffled.size();
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        for (std::size_t i = 0; i + 1 < n; ++i) {
            const std::size_t j = i + static_cast<std::size_t>(rng.uniform_int(
                                          static_cast<int>(n - i)));
            std::swap(shuffled[i], shuffled[j]);
        }
        for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(config.minibatch)) {
            const std::size_t count = std::min(static_cast<std::size_t>(config.minibatch),
                                               n - start);
            const LossAndGrad lg = predictor_loss_and_grad(
                predictor, std::span<const env::OracleRow>(shuffled.data() + start, count));
            if (!std::isfinite(lg.loss)) {
                throw std::runtime_error("predictor training diverged at epoch " +
                                         std::to_string(epoch) + ", minibatch offset " +
                                         std::to_string(start));
            }
            for (std::size_t p = 0; p < params.size(); ++p) {
                params[p] -= config.learning_rate * lg.grad[p];
            }
            predictor_set_params(predictor, params);
        }
    }
    return predictor;
}

void save_predictor(const CtcvrPredictor& predictor, const std::filesystem::path& path) {
    nlohmann::json j;
    j["input_dim"] = predictor.input_dim;
    j["hidden"] = predictor.hidden;
    j["w_hidden"] = predictor.w_hidden;
    j["b_hidden"] = predictor.b_hidden;
    j["w_ctr"] = predictor.w_ctr;
    j["b_ctr"] = predictor.b_ctr;
    j["w_cvr"] = predictor.w_cvr;
    j["b_cvr"] = predictor.b_cvr;
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    }
    out << j.dump(2) << "\n";
}

CtcvrPredictor load_predictor(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open " + path.string());
    }
    nlohmann::json j;
    in >> j;
    CtcvrPredictor predictor;
    predictor.input_dim = j.at("input_dim").get<int>();
    predictor.hidden = j.at("hidden").get<int>();
    predictor.w_hidden = j.at("w_hidden").get<std::vector<double>>();
    predictor.b_hidden = j.at("b_hidden").get<std::vector<double>>();
    predictor.w_ctr = j.at("w_ctr").get<std::vector<double>>();
    predictor.b_ctr = j.at("b_ctr").get<double>();
    predictor.w_cvr = j.at("w_cvr").get<std::vector<double>>();
    predictor.b_cvr = j.at("b_cvr").get<double>();
    const std::size_t h = static_cast<std::size_t>(predictor.hidden);
    const std::size_t d = static_cast<std::size_t>(predictor.input_dim);
    if (predictor.w_hidden.size() != h * d || predictor.b_hidden.size() != h ||
        predictor.w_ctr.size() != h || predictor.w_cvr.size() != h) {
        throw std::runtime_error("predictor file has inconsistent dimensions: " + path.string());
    }
    return predictor;
}

double concordance_index(std::span<const double> scores, std::span<const double> truths) {
    if (scores.size() != truths.size()) {
        throw std::invalid_argument("scores and truths differ in length");
    }
    const std::size_t n = scores.size();
    if (n < 2) {
        throw std::invalid_argument("concordance needs at least 2 items");
    }

    std::vector<double> sorted_scores(scores.begin(), scores.end());
    std::sort(sorted_scores.begin(), sorted_scores.end());
    sorted_scores.erase(std::unique(sorted_scores.begin(), sorted_scores.end()),
                        sorted_scores.end());
    auto rank_of = [&sorted_scores](double s) {
        return static_cast<std::size_t>(
            std::lower_bound(sorted_scores.begin(), sorted_scores.end(), s) -
            sorted_scores.begin());
    };

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&truths](std::size_t a, std::size_t b) { return truths[a] < truths[b]; });

    Fenwick fen(sorted_scores.size());
    std::int64_t concordant = 0;
    std::int64_t discordant = 0;
    std::int64_t tied = 0;
    std::int64_t added = 0;
    std::size_t block_start = 0;
    while (block_start < n) {
        std::size_t block_end = block_start;
        while (block_end < n && truths[order[block_end]] == truths[order[block_start]]) {
            ++block_end;
        }
        for (std::size_t i = block_start; i < block_end; ++i) {
            const std::size_t r = rank_of(scores[order[i]]);
            const std::int64_t leq = fen.prefix(r);
            const std::int64_t less = r == 0 ? 0 : fen.prefix(r - 1);
            concordant += less;
            tied += leq - less;
            discordant += added - leq;
        }
        for (std::size_t i = block_start; i < block_end; ++i) {
            fen.add(rank_of(scores[order[i]]));
        }
        added += static_cast<std::int64_t>(block_end - block_start);
        block_start = block_end;
    }

    const std::int64_t comparable = concordant + discordant + tied;
    if (comparable == 0) {
        return 0.5;
    }
    return (static_cast<double>(concordant) + 0.5 * static_cast<double>(tied)) /
           static_cast<double>(comparable);
}

// --- aggregation ------------------------------------------------------

RewardComponents compute_components(const env::Prompt& prompt, std::span<const int> tokens,
                                    const env::Vocabulary& vocab,
                                    const env::LengthInterval& interval,
                                    const DiversityTracker& tracker,
                                    const CtcvrPredictor& predictor) {
    RewardComponents components;
    const auto content = content_of(tokens, vocab);
    components.length = length_reward(static_cast<int>(content.size()), interval);
    components.format = format_reward(tokens, vocab);
    components.relevance = relevance_reward(prompt, tokens, vocab);
    components.correctness = correctness_reward(tokens, vocab);
    components.risk_tokens = risk_scan(tokens, vocab);

    const DiversityPenalty penalty = content_penalty(tracker, content, vocab.sep);
    components.diversity_scalar = penalty.scalar;
    components.diversity_tokens = penalty.marks;
    components.diversity_tokens.resize(tokens.size(), 0.0);

    const env::FeatureVector features = featurize(prompt, tokens, vocab, interval);
    components.ctcvr = predict_ctcvr(predictor, features);
    return components;
}

RewardWeights mask_weights(const RewardWeights& weights, const AblationConfig& ablation) {
    RewardWeights masked = weights;
    if (!ablation.structural_quality) {
        masked.length = 0.0;
        masked.format = 0.0;
    }
    if (!ablation.ctcvr) {
        masked.ctcvr = 0.0;
    }
    if (!ablation.diversity) {
        masked.diversity = 0.0;
    }
    if (!ablation.semantic_quality) {
        masked.relevance = 0.0;
        masked.correctness = 0.0;
        masked.risk = 0.0;
    }
    return masked;
}

RewardBreakdown aggregate_reward(const RewardComponents& components,
                                 const AblationConfig& ablation,
                                 const RewardWeights& weights) {
    validate_ablation(ablation);
    if (!ablation.structural_quality && (weights.length != 0.0 || weights.format != 0.0)) {
        throw std::invalid_argument("structural quality disabled but its weights are nonzero");
    }
    if (!ablation.ctcvr && weights.ctcvr != 0.0) {
        throw std::invalid_argument("ctcvr disabled but its weight is nonzero");
    }
    if (!ablation.diversity && weights.diversity != 0.0) {
        throw std::invalid_argument("diversity disabled but its weight is nonzero");
    }
    if (!ablation.semantic_quality &&
        (weights.relevance != 0.0 || weights.correctness != 0.0 || weights.risk != 0.0)) {
        throw std::invalid_argument("semantic quality disabled but its weights are nonzero");
    }

    const bool token_route = ablation.granularity == Granularity::token;
    const bool risk_as_tokens = ablation.semantic_quality && token_route;
    const bool diversity_as_tokens = ablation.diversity && token_route;

    RewardBreakdown breakdown;
    breakdown.length = components.length;
    breakdown.format = components.format;
    breakdown.relevance = components.relevance;
    breakdown.correctness = components.correctness;
    breakdown.diversity_scalar = components.diversity_scalar;
    breakdown.ctcvr = components.ctcvr;
    breakdown.risk_tokens = risk_as_tokens
                                ? components.risk_tokens
                                : std::vector<double>(components.risk_tokens.size(), 0.0);
    breakdown.diversity_tokens =
        diversity_as_tokens ? components.diversity_tokens
                            : std::vector<double>(components.diversity_tokens.size(), 0.0);

    double total = 0.0;
    if (ablation.structural_quality) {
        total += weights.length * components.length + weights.format * components.format;
    }
    if (ablation.ctcvr) {
        total += weights.ctcvr * components.ctcvr;
    }
    if (ablation.semantic_quality) {
        total += weights.relevance * components.relevance +
                 weights.correctness * components.correctness;
        if (!risk_as_tokens) {
            double risk_count = 0.0;
            for (double mark : components.risk_tokens) {
                risk_count += mark;
            }
            total += weights.risk * -risk_count;
        }
    }
    if (ablation.diversity && !diversity_as_tokens) {
        total += weights.diversity * components.diversity_scalar;
    }
    breakdown.total_sentence = total;
    return breakdown;
}

} // namespace adgen::rewards
