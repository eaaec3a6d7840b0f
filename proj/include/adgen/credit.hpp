// Copyright (c) 2026 adgen authors
// SPDX-License-Identifier: Apache-2.0
//
// Granularity-aware credit assignment: per-token penalty rewards,
// token-level advantages, group-relative sentence advantages, and
// their broadcast combination into a per-token advantage tensor.

#pragma once

#include <span>
#include <vector>

namespace adgen::credit {

/// Denominator smoothing for group normalization.
inline constexpr double kStdEps = 1e-8;
/// Below this population std a group counts as zero-variance and gets
/// all-zero advantages.
inline constexpr double kDegenerateEps = 1e-12;

struct AdvantageTensor {
    int group_id = 0;
    std::vector<std::vector<double>> per_rollout;
};

/// r_t = -lambda1 * risk[t] - lambda2 * diversity[t].
std::vector<double> token_reward_vector(std::span<const double> risk_tokens,
                                        std::span<const double> diversity_tokens,
                                        double lambda1, double lambda2);

/// A^token_t = alpha * r_t.
std::vector<double> token_advantage(std::span<const double> token_rewards, double alpha);

/// Group-relative normalization (r_i - mean) / (population std + eps);
/// zero-variance groups map to all zeros.
std::vector<double> sentence_advantage(std::span<const double> group_rewards);

/// A_{i,t} = sentence_i + token_{i,t}.
AdvantageTensor combine_advantages(std::span<const double> sentence,
                                   std::span<const std::vector<double>> token,
                                   int group_id = 0);

} // namespace adgen::credit
