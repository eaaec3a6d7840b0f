// Copyright (c) 2026 adgen authors
// SPDX-License-Identifier: Apache-2.0

#include "adgen/credit.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace adgen::credit {

std::vector<double> token_reward_vector(std::span<const double> risk_tokens,
                                        std::span<const double> diversity_tokens,
                                        double lambda1, double lambda2) {
    if (risk_tokens.size() != diversity_tokens.size()) {
        throw std::invalid_argument("risk and diversity vectors differ in length: " +
                                    std::to_string(risk_tokens.size()) + " vs " +
                                    std::to_string(diversity_tokens.size()));
    }
    if (lambda1 < 0.0 || lambda2 < 0.0) {
        throw std::invalid_argument("token penalty strengths must be non-negative");
    }
    std::vector<double> rewards(risk_tokens.size());
    for (std::size_t t = 0; t < rewards.size(); ++t) {
        rewards[t] = -lambda1 * risk_tokens[t] - lambda2 * diversity_tokens[t];
    }
    return rewards;
}

std::vector<double> token_advantage(std::span<const double> token_rewards, double alpha) {
    if (alpha < 0.0) {
        throw std::invalid_argument("alpha must be non-negative");
    }
    std::vector<double> advantages(token_rewards.size());
    for (std::size_t t = 0; t < advantages.size(); ++t) {
        advantages[t] = alpha * token_rewards[t];
    }
    return advantages;
}

std::vector<double> sentence_advantage(std::span<const double> group_rewards) {
    const std::size_t g = group_rewards.size();
    if (g < 2) {
        throw std::invalid_argument("group normalization needs at least 2 rewards");
    }
    double mean = 0.0;
    for (double r : group_rewards) {
        mean += r;
    }
    mean /= static_cast<double>(g);

    double variance = 0.0;
    for (double r : group_rewards) {
        variance += (r - mean) * (r - mean);
    }
    variance /= static_cast<double>(g);
    const double std_dev = std::sqrt(variance);

    std::vector<double> advantages(g, 0.0);
    if (std_dev < kDegenerateEps) {
        return advantages;
    }
    for (std::size_t i = 0; i < g; ++i) {
        advantages[i] = (group_rewards[i] - mean) / (std_dev + kStdEps);
    }
    return advantages;
}

AdvantageTensor combine_advantages(std::span<const double> sentence,
                                   std::span<const std::vector<double>> token,
                                   int group_id) {
    if (sentence.size() != token.size()) {
        throw std::invalid_argument("sentence advantages and token vectors differ in count: " +
                                    std::to_string(sentence.size()) + " vs " +
                                    std::to_string(token.size()));
    }
    AdvantageTensor tensor;
    tensor.group_id = group_id;
    tensor.per_rollout.reserve(sentence.size());
    for (std::size_t i = 0; i < sentence.size(); ++i) {
        std::vector<double> row(token[i].size());
        for (std::size_t t = 0; t < row.size(); ++t) {
            row[t] = sentence[i] + token[i][t];
        }
        tensor.per_rollout.push_back(std::move(row));
    }
    return tensor;
}

} // namespace adgen::credit
