// Copyright (c) 2026 adgen authors
// SPDX-License-Identifier: Apache-2.0

#include "adgen/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace adgen::trainer {
namespace {

constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

// Per-context quantities shared by every position that visits the
// context within one objective evaluation. `dl` holds the per-token
// log-probability gap to the reference, log p - log q.
struct ContextCache {
    std::vector<double> probs;
    std::vector<double> dl;
    double logz = 0.0;
    double kl = 0.0;
};

std::span<const int> rollout_content(const policy::Rollout& rollout, int eos) {
    std::size_t len = rollout.tokens.size();
    if (len > 0 && rollout.tokens.back() == eos) {
        --len;
    }
    return std::span<const int>(rollout.tokens.data(), len);
}

struct RolloutScore {
    rewards::RewardComponents components;
    rewards::RewardBreakdown breakdown;
};

double structural_score(const rewards::RewardComponents& c) {
    return ((c.length + 1.0) / 2.0 + (c.format + 1.0) / 2.0) / 2.0;
}

double semantic_score(const rewards::RewardComponents& c) {
    double risk_count = 0.0;
    for (double mark : c.risk_tokens) {
        risk_count += mark;
    }
    const double risk_ok = risk_count == 0.0 ? 1.0 : 0.0;
    return (c.relevance + (c.correctness + 1.0) + risk_ok) / 3.0;
}

bool compliant(const rewards::RewardComponents& c) {
    double risk_count = 0.0;
    for (double mark : c.risk_tokens) {
        risk_count += mark;
    }
    return risk_count == 0.0 && c.format == 1.0;
}

} // namespace

void TrainConfig::validate() const {
    if (order < 1 || order > 3) {
        throw std::invalid_argument("order must be 1, 2, or 3");
    }
    if (init_scale < 0.0) {
        throw std::invalid_argument("init_scale must be non-negative");
    }
    if (group_size < 2) {
        throw std::invalid_argument("group_size must be at least 2");
    }
    if (batch_prompts < 1) {
        throw std::invalid_argument("batch_prompts must be positive");
    }
    if (steps < 1) {
        throw std::invalid_argument("steps must be positive");
    }
    if (inner_epochs < 1) {
        throw std::invalid_argument("inner_epochs must be positive");
    }
    if (clip_eps <= 0.0 || clip_eps >= 1.0) {
        throw std::invalid_argument("clip_eps must lie in (0, 1)");
    }
    if (kl_beta < 0.0) {
        throw std::invalid_argument("kl_beta must be non-negative");
    }
    if (learning_rate <= 0.0) {
        throw std::invalid_argument("learning_rate must be positive");
    }
    if (alpha < 0.0 || lambda1 < 0.0 || lambda2 < 0.0) {
        throw std::invalid_argument("credit constants must be non-negative");
    }
    if (max_len < 1) {
        throw std::invalid_argument("max_len must be positive");
    }
    if (interval.lo < 1 || interval.hi < interval.lo) {
        throw std::invalid_argument("length interval must satisfy 1 <= lo <= hi");
    }
    if (checkpoint_every < 0) {
        throw std::invalid_argument("checkpoint_every must be non-negative");
    }
    validate_ablation(ablation);
    rewards::DiversityTracker validate_diversity(diversity); // ctor validates
    (void)validate_diversity;
}

ObjectiveResult grpo_objective(std::span<const policy::Group> groups,
                               std::span<const credit::AdvantageTensor> advantages,
                               const policy::PolicyParams& params,
                               const policy::PolicyParams& ref,
                               double clip_eps, double kl_beta, bool length_norm,
                               policy::LogZCache* ref_logz) {
    if (groups.size() != advantages.size()) {
        throw std::invalid_argument("group count does not match advantage tensor count");
    }
    if (clip_eps <= 0.0 || clip_eps >= 1.0) {
        throw std::invalid_argument("clip_eps must lie in (0, 1)");
    }
    if (kl_beta < 0.0) {
        throw std::invalid_argument("kl_beta must be non-negative");
    }

    const std::size_t v = static_cast<std::size_t>(params.vocab_size);
    auto ref_log_normalizer = [&ref, ref_logz](std::int64_t context) {
        if (ref_logz == nullptr) {
            return policy::log_normalizer(ref.row(context));
        }
        const auto [it, inserted] = ref_logz->values.try_emplace(context, 0.0);
        if (inserted) {
            it->second = policy::log_normalizer(ref.row(context));
        }
        return it->second;
    };
    std::unordered_map<std::int64_t, ContextCache> cache;
    auto context_at = [&](std::int64_t context) -> const ContextCache& {
        auto [it, inserted] = cache.try_emplace(context);
        ContextCache& entry = it->second;
        if (inserted) {
            entry.probs.resize(v);
            const auto row = params.row(context);
            entry.logz = policy::softmax_logz(row, entry.probs);
            if (kl_beta > 0.0) {
                entry.dl.resize(v);
                const auto ref_row = ref.row(context);
                const double ref_logz_value = ref_log_normalizer(context);
                double kl = 0.0;
                for (std::size_t a = 0; a < v; ++a) {
                    entry.dl[a] = (row[a] - entry.logz) - (ref_row[a] - ref_logz_value);
                    kl += entry.probs[a] * entry.dl[a];
                }
                entry.kl = kl;
            }
        }
        return entry;
    };

    ObjectiveResult result;
    double kl_weighted = 0.0;
    double weight_total = 0.0;
    std::int64_t tokens_total = 0;
    std::int64_t clipped_total = 0;

    const double group_count = static_cast<double>(groups.size());
    for (std::size_t g = 0; g < groups.size(); ++g) {
        const policy::Group& group = groups[g];
        const credit::AdvantageTensor& adv = advantages[g];
        if (adv.per_rollout.size() != group.rollouts.size()) {
            throw std::invalid_argument("advantage tensor shape mismatch in group " +
                                        std::to_string(g));
        }
        const double rollout_count = static_cast<double>(group.rollouts.size());
        for (std::size_t i = 0; i < group.rollouts.size(); ++i) {
            const policy::Rollout& rollout = group.rollouts[i];
            const std::vector<double>& a_row = adv.per_rollout[i];
            if (a_row.size() != rollout.tokens.size()) {
                throw std::invalid_argument("advantage length mismatch in group " +
                                            std::to_string(g) + ", rollout " + std::to_string(i));
            }
            const double n_i = static_cast<double>(rollout.tokens.size());
            const double w = length_norm ? 1.0 / (group_count * rollout_count * n_i)
                                         : 1.0 / (group_count * rollout_count);
            for (std::size_t t = 0; t < rollout.tokens.size(); ++t) {
                const std::int64_t context = rollout.contexts[t];
                const int token = rollout.tokens[t];
                const ContextCache& entry = context_at(context);
                const double logp_token =
                    params.row(context)[static_cast<std::size_t>(token)] - entry.logz;
                const double ratio = std::exp(logp_token - rollout.logp_old[t]);
                const double advantage = a_row[t];
                if (!std::isfinite(ratio) || !std::isfinite(advantage)) {
                    throw std::runtime_error("non-finite surrogate input at group " +
                                             std::to_string(g) + ", rollout " +
                                             std::to_string(i) + ", token " + std::to_string(t));
                }
                const double clipped_ratio =
                    std::clamp(ratio, 1.0 - clip_eps, 1.0 + clip_eps);
                const double term = std::min(ratio * advantage, clipped_ratio * advantage);
                result.surrogate += w * term;
                ++tokens_total;

                const bool clip_binds = (advantage > 0.0 && ratio > 1.0 + clip_eps) ||
                                        (advantage < 0.0 && ratio < 1.0 - clip_eps);
                std::vector<double>* grad_row = nullptr;
                auto row_at = [&]() -> std::vector<double>& {
                    if (grad_row == nullptr) {
                        grad_row = &result.grad.try_emplace(context, v, 0.0).first->second;
                    }
                    return *grad_row;
                };
                if (clip_binds) {
                    ++clipped_total;
                } else if (advantage != 0.0) {
                    const double coeff = w * ratio * advantage;
                    std::vector<double>& row = row_at();
                    for (std::size_t m = 0; m < v; ++m) {
                        row[m] -= coeff * entry.probs[m];
                    }
                    row[static_cast<std::size_t>(token)] += coeff;
                }
                if (kl_beta > 0.0) {
                    kl_weighted += w * entry.kl;
                    weight_total += w;
                    const double coeff = kl_beta * w;
                    std::vector<double>& row = row_at();
                    for (std::size_t m = 0; m < v; ++m) {
                        row[m] -= coeff * entry.probs[m] * (entry.dl[m] - entry.kl);
                    }
                } else {
                    weight_total += w;
                }
            }
        }
    }

    result.value = result.surrogate - kl_beta * kl_weighted;
    result.kl = weight_total > 0.0 ? kl_weighted / weight_total : 0.0;
    result.clip_fraction = tokens_total > 0
                               ? static_cast<double>(clipped_total) /
                                     static_cast<double>(tokens_total)
                               : 0.0;
    return result;
}

Trainer::Trainer(TrainConfig config, env::Vocabulary vocab, rewards::CtcvrPredictor predictor)
    : config_(std::move(config)),
      vocab_(std::move(vocab)),
      predictor_(std::move(predictor)),
      tracker_(config_.diversity),
      prompt_rng_(0),
      sample_rng_(0) {
    config_.validate();
    Rng base(config_.seed);
    Rng init_rng = base.fork(0);
    prompt_rng_ = base.fork(1);
    sample_rng_ = base.fork(2);
    params_ = policy::init_policy(vocab_, config_.order, config_.init_scale, init_rng);
    ref_ = params_;
}

StepLog Trainer::step() {
    ++step_;

    std::vector<policy::Group> groups;
    groups.reserve(static_cast<std::size_t>(config_.batch_prompts));
    for (int b = 0; b < config_.batch_prompts; ++b) {
        const env::Prompt prompt = env::sample_prompt(vocab_, prompt_rng_, prompt_counter_++);
        groups.push_back(policy::sample_rollouts(params_, ref_, prompt, config_.group_size,
                                                 config_.max_len, sample_rng_, &ref_logz_));
    }

    if (config_.diversity.window == rewards::StatsWindow::batch) {
        tracker_.clear();
    }
    for (const policy::Group& group : groups) {
        for (const policy::Rollout& rollout : group.rollouts) {
            rewards::add_content(tracker_, rollout_content(rollout, vocab_.eos), vocab_.sep);
        }
    }

    const rewards::RewardWeights masked = rewards::mask_weights(config_.weights,
                                                                config_.ablation);
    std::vector<std::vector<RolloutScore>> scores;
    scores.reserve(groups.size());
    for (const policy::Group& group : groups) {
        std::vector<RolloutScore> group_scores;
        group_scores.reserve(group.rollouts.size());
        for (const policy::Rollout& rollout : group.rollouts) {
            RolloutScore score;
            score.components = rewards::compute_components(group.prompt, rollout.tokens, vocab_,
                                                           config_.interval, tracker_,
                                                           predictor_);
            score.breakdown = rewards::aggregate_reward(score.components, config_.ablation,
                                                        masked);
            group_scores.push_back(std::move(score));
        }
        scores.push_back(std::move(group_scores));
    }

    std::vector<credit::AdvantageTensor> advantages;
    advantages.reserve(groups.size());
    for (std::size_t g = 0; g < groups.size(); ++g) {
        std::vector<double> sentence_rewards;
        sentence_rewards.reserve(scores[g].size());
        for (const RolloutScore& score : scores[g]) {
            sentence_rewards.push_back(score.breakdown.total_sentence);
        }
        const std::vector<double> sentence = credit::sentence_advantage(sentence_rewards);

        std::vector<std::vector<double>> token_vectors;
        token_vectors.reserve(scores[g].size());
        for (const RolloutScore& score : scores[g]) {
            const std::vector<double> token_rewards = credit::token_reward_vector(
                score.breakdown.risk_tokens, score.breakdown.diversity_tokens, config_.lambda1,
                config_.lambda2);
            token_vectors.push_back(credit::token_advantage(token_rewards, config_.alpha));
        }
        advantages.push_back(
            credit::combine_advantages(sentence, token_vectors, static_cast<int>(g)));
    }

    if (trace_) {
        trace_(step_, groups, advantages);
    }

    ObjectiveResult last;
    for (int epoch = 0; epoch < config_.inner_epochs; ++epoch) {
        last = grpo_objective(groups, advantages, params_, ref_, config_.clip_eps,
                              config_.kl_beta, config_.length_norm, &ref_logz_);
        apply_update(last.grad);
    }

    if (config_.checkpoint_every > 0 && !config_.checkpoint_dir.empty() &&
        step_ % config_.checkpoint_every == 0) {
        policy::save_policy(params_, step_,
                            config_.checkpoint_dir /
                                ("ckpt_" + std::to_string(step_) + ".json"));
    }

    StepLog log;
    log.step = step_;
    double count = 0.0;
    for (const auto& group_scores : scores) {
        for (const RolloutScore& score : group_scores) {
            log.structural += structural_score(score.components);
            log.ctcvr += score.components.ctcvr;
            log.diversity += score.components.diversity_scalar;
            log.semantic += semantic_score(score.components);
            log.total += score.breakdown.total_sentence;
            log.compliance += compliant(score.components) ? 1.0 : 0.0;
            count += 1.0;
        }
    }
    log.structural /= count;
    log.ctcvr /= count;
    log.diversity /= count;
    log.semantic /= count;
    log.total /= count;
    log.compliance /= count;
    log.kl = last.kl;
    log.clip_fraction = last.clip_fraction;
    return log;
}

std::vector<StepLog> Trainer::run() {
    std::vector<StepLog> logs;
    logs.reserve(static_cast<std::size_t>(config_.steps));
    while (step_ < config_.steps) {
        logs.push_back(step());
    }
    return logs;
}

void Trainer::apply_update(const std::unordered_map<std::int64_t, std::vector<double>>& grad) {
    std::vector<std::int64_t> contexts;
    contexts.reserve(grad.size());
    for (const auto& [context, row] : grad) {
        contexts.push_back(context);
    }
    std::sort(contexts.begin(), contexts.end());

    const std::size_t v = static_cast<std::size_t>(params_.vocab_size);
    if (config_.optimizer == Optimizer::gradient_ascent) {
        for (std::int64_t context : contexts) {
            const std::vector<double>& g_row = grad.at(context);
            auto row = params_.row(context);
            for (std::size_t m = 0; m < v; ++m) {
                row[m] += config_.learning_rate * g_row[m];
            }
        }
        return;
    }

    if (adam_m_.empty()) {
        adam_m_.assign(params_.logits.size(), 0.0);
        adam_v_.assign(params_.logits.size(), 0.0);
    }
    ++adam_t_;
    const double bc1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(adam_t_));
    const double bc2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(adam_t_));
    for (std::int64_t context : contexts) {
        const std::vector<double>& g_row = grad.at(context);
        auto row = params_.row(context);
        const std::size_t base = static_cast<std::size_t>(context) * v;
        for (std::size_t m = 0; m < v; ++m) {
            const double g = g_row[m];
            double& mom = adam_m_[base + m];
            double& vel = adam_v_[base + m];
            mom = kAdamBeta1 * mom + (1.0 - kAdamBeta1) * g;
            vel = kAdamBeta2 * vel + (1.0 - kAdamBeta2) * g * g;
            row[m] += config_.learning_rate * (mom / bc1) / (std::sqrt(vel / bc2) + kAdamEps);
        }
    }
}

EvalMetrics evaluate(const policy::PolicyParams& params, const policy::PolicyParams* baseline,
                     bool want_delta, const env::Vocabulary& vocab,
                     const env::OracleParams& oracle, const rewards::CtcvrPredictor* predictor,
                     const env::LengthInterval& interval,
                     const rewards::DiversityOptions& diversity_options, int n_prompts,
                     int max_len, std::uint64_t eval_seed) {
    if (n_prompts < 1) {
        throw std::invalid_argument("evaluation needs at least one prompt");
    }
    if (want_delta && baseline == nullptr) {
        throw std::invalid_argument("relative CTCVR lift requested without a baseline policy");
    }
    if (max_len < 1) {
        throw std::invalid_argument("max_len must be positive");
    }

    struct PassResult {
        double ctcvr = 0.0;
        double predictor_ctcvr = 0.0;
        double compliance = 0.0;
        double diversity = 0.0;
        double structural = 0.0;
        double semantic = 0.0;
    };

    // Everything random is drawn from streams derived only from
    // eval_seed and the prompt index, so two policies see identical
    // prompts and sampling noise.
    auto run_pass = [&](const policy::PolicyParams& p) {
        Rng base(eval_seed);
        Rng prompt_rng = base.fork(1);
        std::vector<env::Prompt> prompts;
        std::vector<std::vector<int>> generations;
        prompts.reserve(static_cast<std::size_t>(n_prompts));
        generations.reserve(static_cast<std::size_t>(n_prompts));
        std::vector<double> probs(static_cast<std::size_t>(p.vocab_size));
        for (int j = 0; j < n_prompts; ++j) {
            const env::Prompt prompt = env::sample_prompt(vocab, prompt_rng, j);
            Rng sample_rng = base.fork(2 + static_cast<std::uint64_t>(j));
            std::vector<int> tokens;
            std::int64_t context = policy::initial_context(p, prompt);
            for (int t = 0; t < max_len; ++t) {
                policy::softmax(p.row(context), probs);
                const double u = sample_rng.uniform();
                double cumulative = 0.0;
                int token = p.vocab_size - 1;
                for (int m = 0; m < p.vocab_size; ++m) {
                    cumulative += probs[static_cast<std::size_t>(m)];
                    if (u < cumulative) {
                        token = m;
                        break;
                    }
                }
                tokens.push_back(token);
                if (token == p.eos) {
                    break;
                }
                context = policy::advance_context(p, context, token);
            }
            prompts.push_back(prompt);
            generations.push_back(std::move(tokens));
        }

        rewards::DiversityTracker tracker(diversity_options);
        for (std::size_t j = 0; j < generations.size(); ++j) {
            const int len = env::content_length(generations[j], vocab);
            rewards::add_content(tracker,
                                 std::span<const int>(generations[j].data(),
                                                      static_cast<std::size_t>(len)),
                                 vocab.sep);
        }

        PassResult pass;
        for (std::size_t j = 0; j < generations.size(); ++j) {
            const std::vector<int>& tokens = generations[j];
            const env::FeatureVector features =
                env::featurize(prompts[j], tokens, vocab, interval);
            pass.ctcvr += env::oracle_ctcvr(oracle, features).p_ctcvr;
            if (predictor != nullptr) {
                pass.predictor_ctcvr += rewards::predict_ctcvr(*predictor, features);
            }

            const int len = env::content_length(tokens, vocab);
            const double length_r = rewards::length_reward(len, interval);
            const double format_r = rewards::format_reward(tokens, vocab);
            const double relevance = rewards::relevance_reward(prompts[j], tokens, vocab);
            const double correctness = rewards::correctness_reward(tokens, vocab);
            const std::vector<double> risk = rewards::risk_scan(tokens, vocab);
            double risk_count = 0.0;
            for (double mark : risk) {
                risk_count += mark;
            }
            pass.structural += ((length_r + 1.0) / 2.0 + (format_r + 1.0) / 2.0) / 2.0;
            pass.semantic +=
                (relevance + (correctness + 1.0) + (risk_count == 0.0 ? 1.0 : 0.0)) / 3.0;
            pass.compliance += (risk_count == 0.0 && format_r == 1.0) ? 1.0 : 0.0;
            pass.diversity += rewards::content_penalty(
                                  tracker,
                                  std::span<const int>(tokens.data(),
                                                       static_cast<std::size_t>(len)),
                                  vocab.sep)
                                  .scalar;
        }
        const double n = static_cast<double>(n_prompts);
        pass.ctcvr /= n;
        pass.predictor_ctcvr /= n;
        pass.compliance /= n;
        pass.diversity /= n;
        pass.structural /= n;
        pass.semantic /= n;
        return pass;
    };

    const PassResult experiment = run_pass(params);
    EvalMetrics metrics;
    metrics.ctcvr = experiment.ctcvr;
    metrics.compliance = experiment.compliance;
    metrics.diversity = experiment.diversity;
    metrics.structural = experiment.structural;
    metrics.semantic = experiment.semantic;
    metrics.n_prompts = n_prompts;
    if (predictor != nullptr) {
        metrics.predictor_ctcvr = experiment.predictor_ctcvr;
        metrics.has_predictor = true;
    }
    if (want_delta) {
        const PassResult base = run_pass(*baseline);
        metrics.delta_ctcvr = (experiment.ctcvr - base.ctcvr) / base.ctcvr;
        metrics.has_delta = true;
    }
    return metrics;
}

} // namespace adgen::trainer
