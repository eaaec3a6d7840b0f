// Copyright (c) 2026 adgen authors
// SPDX-License-Identifier: Apache-2.0
//
// Explicit order-k n-gram softmax policy: dense logit table over
// (context, token), autoregressive sampling, exact per-token
// log-probabilities, analytic log-softmax gradients, and exact
// categorical KL between two policies at a context.

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <unordered_map>
#include <vector>

#include "adgen/env.hpp"
#include "adgen/rng.hpp"

namespace adgen::policy {

/// Dense table cap (contexts × vocab entries); keeps order-3 tables on
/// large vocabularies from exhausting memory.
inline constexpr std::int64_t kMaxTableEntries = std::int64_t{1} << 26;

struct PolicyParams {
    int order = 2;
    int vocab_size = 0;
    int bos = 0;
    int eos = 1;
    std::vector<double> logits; // contexts × vocab, row-major

    std::int64_t contexts() const;
    std::span<double> row(std::int64_t context);
    std::span<const double> row(std::int64_t context) const;
};

struct Rollout {
    int prompt_id = 0;
    std::vector<int> tokens;               // EOS-terminated or truncated at max_len
    std::vector<std::int64_t> contexts;    // context id seen before each token
    std::vector<double> logp_old;
    std::vector<double> logp_ref;
};

struct Group {
    env::Prompt prompt;
    std::vector<Rollout> rollouts;
};

PolicyParams init_policy(int vocab_size, int bos, int eos, int order, double init_scale,
                         Rng& rng);
PolicyParams init_policy(const env::Vocabulary& vocab, int order, double init_scale, Rng& rng);

/// Encodes the last `order` tokens in base-V, BOS-padding on the left
/// when fewer are available.
std::int64_t context_id(const PolicyParams& params, std::span<const int> recent);

/// Shifts the oldest token out of the context and appends `token`.
std::int64_t advance_context(const PolicyParams& params, std::int64_t context, int token);

/// Context a generation starts from: BOS padding followed by the
/// prompt's bidword.
std::int64_t initial_context(const PolicyParams& params, const env::Prompt& prompt);

/// Stable softmax / log-softmax over one logit row.
void softmax(std::span<const double> logits, std::span<double> probs);
void log_softmax(std::span<const double> logits, std::span<double> out);

/// log Σ exp(logits), stable; log-probabilities are logits minus this.
double log_normalizer(std::span<const double> logits);
/// Softmax that also returns the log-normalizer of the row.
double softmax_logz(std::span<const double> logits, std::span<double> probs);

/// Memo of log-normalizers for a frozen policy's rows, keyed by
/// context. Sharable across calls as long as the policy is unchanged.
struct LogZCache {
    std::unordered_map<std::int64_t, double> values;
};

std::vector<double> next_token_dist(const PolicyParams& params, std::span<const int> context);
std::vector<double> next_token_dist_at(const PolicyParams& params, std::int64_t context);

Group sample_rollouts(const PolicyParams& params, const env::Prompt& prompt, int G,
                      int max_len, Rng& rng);
/// Same, but also scores every sampled token under `ref`. `ref_logz`
/// may memoize the frozen reference's log-normalizers across calls.
Group sample_rollouts(const PolicyParams& params, const PolicyParams& ref,
                      const env::Prompt& prompt, int G, int max_len, Rng& rng,
                      LogZCache* ref_logz = nullptr);

std::vector<double> log_prob(const PolicyParams& params, const env::Prompt& prompt,
                             std::span<const int> tokens);

/// d log softmax(token) / d logits over the context's row: (1{m=token} - p_m).
std::vector<double> grad_log_prob(const PolicyParams& params, std::int64_t context, int token);

/// Exact KL(a ‖ b) of the next-token distributions at `context`.
double kl_next_token(const PolicyParams& params_a, const PolicyParams& params_b,
                     std::int64_t context);

/// Writes metadata JSON at `path` plus a sibling raw little-endian
/// double file; reload is bit-exact.
void save_policy(const PolicyParams& params, int step, const std::filesystem::path& path);

struct LoadedPolicy {
    PolicyParams params;
    int step = 0;
};

LoadedPolicy load_policy(const std::filesystem::path& path);

} // namespace adgen::policy
