// Copyright (c) 2026 adgen authors
// SPDX-License-Identifier: Apache-2.0
//
// Multi-dimensional reward system: structural quality rules, semantic
// quality rules, attributable n-gram diversity penalties, a learned
// shared-bottom CTCVR predictor, and aggregation of the active
// components into a sentence scalar plus routed token vectors.

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <unordered_map>
#include <vector>

#include "adgen/ablation.hpp"
#include "adgen/env.hpp"
#include "adgen/rng.hpp"

namespace adgen::rewards {

// --- structural / semantic quality rules -----------------------------

/// +1 inside [lo, hi]; outside, a linear penalty -min(1, dist/lo).
double length_reward(int length, const env::LengthInterval& interval);

/// +1 iff exactly one SEP splits the pre-EOS content into a nonempty
/// title and a nonempty description; -1 otherwise.
double format_reward(std::span<const int> tokens, const env::Vocabulary& vocab);

/// (query-keyword coverage + bidword presence) / 2, in [0, 1].
double relevance_reward(const env::Prompt& prompt, std::span<const int> tokens,
                        const env::Vocabulary& vocab);

/// -1 if both tokens of any configured contradiction pair appear; 0 otherwise.
double correctness_reward(std::span<const int> tokens, const env::Vocabulary& vocab);

/// Indicator vector over all positions: 1 where the token is blacklisted.
std::vector<double> risk_scan(std::span<const int> tokens, const env::Vocabulary& vocab);

// --- n-gram diversity -------------------------------------------------

enum class StatsWindow { batch, global };

struct DiversityOptions {
    double delta_d = 0.1; // penalty per matched high-frequency n-gram
    int tau_f = 3;        // occurrence count that makes an n-gram high-frequency
    int min_n = 2;
    int max_n = 10;
    StatsWindow window = StatsWindow::batch;
};

struct DiversityPenalty {
    double scalar = 0.0;        // <= 0
    std::vector<double> marks;  // per-position match multiplicity
};

/// Occurrence counts of every n-gram (n in [min_n, max_n]) over the
/// current statistics window; high-frequency membership is count >= tau_f.
class DiversityTracker {
  public:
    explicit DiversityTracker(DiversityOptions options = {});

    const DiversityOptions& options() const { return options_; }
    void clear();
    void add(std::span<const int> tokens);
    void add_batch(std::span<const std::vector<int>> batch);
    /// Count currently stored for one exact n-gram.
    int count(std::span<const int> ngram) const;
    std::size_t distinct_ngrams() const { return counts_.size(); }

    /// Scalar penalty -delta_d per matched high-frequency n-gram, and a
    /// mark at the final position of each match (accumulating
    /// multiplicity). marks has one entry per input position.
    DiversityPenalty penalty(std::span<const int> tokens) const;

  private:
    struct Key {
        std::int8_t n = 0;
        std::array<std::int32_t, 10> tokens{};
        bool operator==(const Key& other) const {
            return n == other.n && tokens == other.tokens;
        }
    };
    struct KeyHash {
        std::size_t operator()(const Key& key) const;
    };

    static Key make_key(std::span<const int> tokens, std::size_t start, int n);

    DiversityOptions options_;
    std::unordered_map<Key, int, KeyHash> counts_;
};

/// Feeds each separator-free segment of the content to the tracker.
/// The separator is structural, so phrases never span it and its
/// repetition across a batch is not penalized.
void add_content(DiversityTracker& tracker, std::span<const int> content, int sep);

/// Per-segment penalty with marks mapped back onto content positions;
/// separator positions are never marked.
DiversityPenalty content_penalty(const DiversityTracker& tracker,
                                 std::span<const int> content, int sep);

// --- learned CTCVR predictor -----------------------------------------

struct PredictorConfig {
    int hidden = 16;
    int epochs = 4;
    double learning_rate = 0.1;
    int minibatch = 128;
    double init_scale = 0.5;
};

/// One shared tanh hidden layer feeding separate CTR and CVR logistic
/// heads; the CTCVR estimate is the product of the two head outputs.
struct CtcvrPredictor {
    int input_dim = env::kFeatureDim;
    int hidden = 0;
    std::vector<double> w_hidden; // hidden x input_dim, row-major
    std::vector<double> b_hidden; // hidden
    std::vector<double> w_ctr;    // hidden
    double b_ctr = 0.0;
    std::vector<double> w_cvr;    // hidden
    double b_cvr = 0.0;
};

env::CtcvrProbs predict(const CtcvrPredictor& predictor, std::span<const double> features);
double predict_ctcvr(const CtcvrPredictor& predictor, std::span<const double> features);

/// Flat parameter vector view used by training and gradient checks.
std::size_t predictor_param_count(const CtcvrPredictor& predictor);
std::vector<double> predictor_get_params(const CtcvrPredictor& predictor);
void predictor_set_params(CtcvrPredictor& predictor, std::span<const double> params);

struct LossAndGrad {
    double loss = 0.0;
    std::vector<double> grad;
};

/// Mean entire-space loss over the rows: BCE(p_ctr, click) +
/// BCE(p_ctr * p_cvr, conversion), with analytic gradients in the flat
/// parameter order.
LossAndGrad predictor_loss_and_grad(const CtcvrPredictor& predictor,
                                    std::span<const env::OracleRow> rows);

CtcvrPredictor train_ctcvr_predictor(const env::OracleDataset& dataset,
                                     const PredictorConfig& config, Rng& rng);

void save_predictor(const CtcvrPredictor& predictor, const std::filesystem::path& path);
CtcvrPredictor load_predictor(const std::filesystem::path& path);

/// Ranking concordance of scores against continuous truths; tied score
/// pairs count 1/2, pairs with tied truth are excluded.
double concordance_index(std::span<const double> scores, std::span<const double> truths);

// --- aggregation ------------------------------------------------------

struct RewardWeights {
    double length = 1.0;
    double format = 1.0;
    double relevance = 1.0;
    double correctness = 1.0;
    double risk = 1.0;
    double diversity = 1.0;
    double ctcvr = 1.0;
};

/// Raw component values, always fully computed regardless of the
/// ablation row (curves report inactive components too).
struct RewardComponents {
    double length = 0.0;
    double format = 0.0;
    double relevance = 0.0;
    double correctness = 0.0;
    std::vector<double> risk_tokens;
    double diversity_scalar = 0.0;
    std::vector<double> diversity_tokens;
    double ctcvr = 0.0;
};

/// Aggregated view: total_sentence sums the active sentence-routed
/// components; risk_tokens / diversity_tokens carry marks only when the
/// component is active and routed at token granularity.
struct RewardBreakdown {
    double length = 0.0;
    double format = 0.0;
    double relevance = 0.0;
    double correctness = 0.0;
    std::vector<double> risk_tokens;
    double diversity_scalar = 0.0;
    std::vector<double> diversity_tokens;
    double ctcvr = 0.0;
    double total_sentence = 0.0;
};

RewardComponents compute_components(const env::Prompt& prompt, std::span<const int> tokens,
                                    const env::Vocabulary& vocab,
                                    const env::LengthInterval& interval,
                                    const DiversityTracker& tracker,
                                    const CtcvrPredictor& predictor);

/// Zeroes the weights of components the ablation row disables.
RewardWeights mask_weights(const RewardWeights& weights, const AblationConfig& ablation);

/// Combines components under an ablation row. A nonzero weight on an
/// inactive component is a configuration error.
RewardBreakdown aggregate_reward(const RewardComponents& components,
                                 const AblationConfig& ablation,
                                 const RewardWeights& weights);

} // namespace adgen::rewards
