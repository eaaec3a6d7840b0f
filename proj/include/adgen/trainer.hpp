// Copyright (c) 2026 adgen authors
// SPDX-License-Identifier: Apache-2.0
//
// Group-relative policy optimization: clipped importance-ratio
// surrogate with exact next-token KL regularization, a deterministic
// training loop over prompt batches, and policy evaluation against the
// hidden oracle.

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <unordered_map>
#include <vector>

#include "adgen/ablation.hpp"
#include "adgen/credit.hpp"
#include "adgen/env.hpp"
#include "adgen/policy.hpp"
#include "adgen/rewards.hpp"
#include "adgen/rng.hpp"

namespace adgen::trainer {

enum class Optimizer { gradient_ascent, adam };

struct TrainConfig {
    int order = 2;
    double init_scale = 0.0;
    int group_size = 5;
    int batch_prompts = 64;
    int steps = 150;
    int inner_epochs = 1;
    double clip_eps = 0.2;
    double kl_beta = 0.01;
    double learning_rate = 0.05;
    bool length_norm = true;
    Optimizer optimizer = Optimizer::gradient_ascent;
    double alpha = 1.0;
    double lambda1 = 0.5;
    double lambda2 = 0.1;
    int max_len = 32;
    env::LengthInterval interval{};
    rewards::RewardWeights weights{};
    rewards::DiversityOptions diversity{};
    AblationConfig ablation{};
    std::uint64_t seed = 1;
    int checkpoint_every = 0; // 0 disables checkpoints
    std::filesystem::path checkpoint_dir;

    void validate() const;
};

struct StepLog {
    int step = 0;
    double structural = 0.0; // mean of rescaled length/format rewards, in [0, 1]
    double ctcvr = 0.0;      // mean predictor estimate on the batch
    double diversity = 0.0;  // mean raw diversity penalty, <= 0
    double semantic = 0.0;   // mean of rescaled relevance/correctness/risk, in [0, 1]
    double total = 0.0;      // mean aggregated sentence reward
    double kl = 0.0;         // weighted mean next-token KL to the reference
    double clip_fraction = 0.0;
    double compliance = 0.0; // fraction with no blacklist token and valid format
};

struct ObjectiveResult {
    double value = 0.0;     // surrogate minus the beta-weighted KL sum
    double surrogate = 0.0;
    double kl = 0.0;        // weighted mean KL over visited contexts
    double clip_fraction = 0.0;
    std::unordered_map<std::int64_t, std::vector<double>> grad; // by context row
};

/// Objective of the clipped-surrogate update, evaluated at `params`.
/// Rollout-time log-probabilities live in the rollouts (logp_old), so
/// the snapshot policy needs no table of its own. Gradients carry the
/// clip dead zone: coordinates where the clip binds get exactly zero.
ObjectiveResult grpo_objective(std::span<const policy::Group> groups,
                               std::span<const credit::AdvantageTensor> advantages,
                               const policy::PolicyParams& params,
                               const policy::PolicyParams& ref,
                               double clip_eps, double kl_beta, bool length_norm,
                               policy::LogZCache* ref_logz = nullptr);

using TraceSink = std::function<void(int step, const std::vector<policy::Group>&,
                                     const std::vector<credit::AdvantageTensor>&)>;

class Trainer {
  public:
    Trainer(TrainConfig config, env::Vocabulary vocab, rewards::CtcvrPredictor predictor);

    /// One batch: sample groups, refresh n-gram statistics, score,
    /// assign credit, run the configured inner epochs of ascent.
    StepLog step();
    /// Runs the configured number of steps from the current state.
    std::vector<StepLog> run();

    const policy::PolicyParams& params() const { return params_; }
    const policy::PolicyParams& reference() const { return ref_; }
    const env::Vocabulary& vocab() const { return vocab_; }
    const TrainConfig& config() const { return config_; }
    int steps_done() const { return step_; }
    void set_trace(TraceSink sink) { trace_ = std::move(sink); }

  private:
    void apply_update(const std::unordered_map<std::int64_t, std::vector<double>>& grad);

    TrainConfig config_;
    env::Vocabulary vocab_;
    rewards::CtcvrPredictor predictor_;
    policy::PolicyParams params_;
    policy::PolicyParams ref_;
    rewards::DiversityTracker tracker_;
    policy::LogZCache ref_logz_;
    Rng prompt_rng_;
    Rng sample_rng_;
    std::vector<double> adam_m_;
    std::vector<double> adam_v_;
    std::int64_t adam_t_ = 0;
    int step_ = 0;
    int prompt_counter_ = 0;
    TraceSink trace_;
};

struct EvalMetrics {
    double ctcvr = 0.0;           // mean oracle CTCVR over one rollout per prompt
    double delta_ctcvr = 0.0;     // relative lift vs the baseline policy
    bool has_delta = false;
    double predictor_ctcvr = 0.0; // mean learned-predictor estimate
    bool has_predictor = false;
    double compliance = 0.0;
    double diversity = 0.0;       // mean penalty over the evaluation batch, <= 0
    double structural = 0.0;
    double semantic = 0.0;
    int n_prompts = 0;
};

/// Samples one rollout per prompt under common random numbers, so a
/// policy evaluated against itself gets a relative lift of exactly 0.
/// `baseline` must be present when `want_delta` is set.
EvalMetrics evaluate(const policy::PolicyParams& params, const policy::PolicyParams* baseline,
                     bool want_delta, const env::Vocabulary& vocab,
                     const env::OracleParams& oracle, const rewards::CtcvrPredictor* predictor,
                     const env::LengthInterval& interval,
                     const rewards::DiversityOptions& diversity_options, int n_prompts,
                     int max_len, std::uint64_t eval_seed);

} // namespace adgen::trainer
