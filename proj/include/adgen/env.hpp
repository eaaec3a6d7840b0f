// Copyright (c) 2026 adgen authors
// SPDX-License-Identifier: Apache-2.0
//
// Synthetic advertising environment: vocabulary with semantic token
// classes, prompt sampling, a hand-crafted feature map, a hidden
// two-sigmoid conversion oracle, and labeled datasets for predictor
// training. Everything is deterministic under a fixed seed.

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "adgen/rng.hpp"

namespace adgen::env {

/// Dimension of the hand-crafted feature map (see featurize()).
inline constexpr int kFeatureDim = 6;

/// Inclusive token-length interval the quality reward targets. The
/// midpoint doubles as the "ideal length" for the feature map, so the
/// two notions of ideal length can never drift apart.
struct LengthInterval {
    int lo = 8;
    int hi = 24;
    double midpoint() const { return 0.5 * (lo + hi); }
};

enum class TokenClass : std::uint8_t { special, keyword, cta, blacklist, filler };

struct VocabConfig {
    int keywords = 20;
    int cta = 10;
    int blacklist = 5;
    int filler = 160;
    int contradiction_pairs = 3;
    int max_query_keywords = 4;
    bool risk_control = true; // a nonempty blacklist is then required
    std::uint64_t seed = 7;
};

/// Token inventory with disjoint semantic classes. Indices are dense
/// 0..V-1; BOS/EOS/SEP are ordinary indices so the policy table can
/// range over the full vocabulary.
struct Vocabulary {
    std::vector<std::string> tokens;
    int bos = 0;
    int eos = 1;
    int sep = 2;
    std::vector<int> keyword_ids;
    std::vector<int> cta_ids;
    std::vector<int> blacklist_ids;
    std::vector<int> filler_ids;
    std::vector<TokenClass> classes; // dense per-token class lookup
    std::vector<std::pair<int, int>> contradiction_pairs;
    int max_query_keywords = 4;
    std::uint64_t seed = 0;

    int size() const { return static_cast<int>(tokens.size()); }
    TokenClass class_of(int token) const { return classes.at(static_cast<std::size_t>(token)); }
    bool is_blacklisted(int token) const { return class_of(token) == TokenClass::blacklist; }
};

struct Prompt {
    std::vector<int> query_keyword_ids;
    int bidword_id = -1;
    int id = 0;
};

/// Hidden conversion model: p_ctr = sigmoid(w_ctr.f + b_ctr) and
/// p_ctcvr = p_ctr * sigmoid(w_cvr.f + b_cvr), so the chain inequality
/// p_ctcvr < p_ctr holds analytically.
struct OracleParams {
    std::array<double, kFeatureDim> w_ctr{};
    std::array<double, kFeatureDim> w_cvr{};
    double b_ctr = 0.0;
    double b_cvr = 0.0;
    std::uint64_t seed = 0;
};

struct CtcvrProbs {
    double p_ctr = 0.0;
    double p_ctcvr = 0.0;
};

using FeatureVector = std::array<double, kFeatureDim>;

struct OracleRow {
    FeatureVector features{};
    int click = 0;
    int conversion = 0;
};

/// Entire-space labeled sample: conversion == 1 implies click == 1 on
/// every row.
struct OracleDataset {
    std::vector<OracleRow> rows;
};

Vocabulary build_vocabulary(const VocabConfig& config);

Prompt sample_prompt(const Vocabulary& vocab, Rng& rng, int id = 0);

/// Number of generated tokens excluding a terminating EOS.
int content_length(std::span<const int> tokens, const Vocabulary& vocab);

/// Maps a completed generation to kFeatureDim entries, each in [-1, 1]:
/// query-keyword coverage, bidword presence, CTA presence, normalized
/// absolute length deviation from the interval midpoint, scaled
/// blacklist count, and distinct-bigram ratio.
FeatureVector featurize(const Prompt& prompt, std::span<const int> tokens,
                        const Vocabulary& vocab, const LengthInterval& interval);

CtcvrProbs oracle_ctcvr(const OracleParams& oracle, std::span<const double> features);

/// Designed oracle with seed-jittered weights; probabilities are always
/// interior to (0, 1).
OracleParams make_oracle(std::uint64_t seed);

OracleDataset label_dataset(const OracleParams& oracle, const Vocabulary& vocab,
                            std::size_t n, const LengthInterval& interval,
                            int max_len, Rng& rng);

// --- serialization ---------------------------------------------------

void save_vocabulary(const Vocabulary& vocab, const std::filesystem::path& path);
Vocabulary load_vocabulary(const std::filesystem::path& path);
void save_oracle(const OracleParams& oracle, const std::filesystem::path& path);
OracleParams load_oracle(const std::filesystem::path& path);

/// CSV with header "f0,...,f5,click,conversion"; doubles are written
/// with round-trip precision.
void save_dataset_csv(const OracleDataset& dataset, const std::filesystem::path& path);
OracleDataset load_dataset_csv(const std::filesystem::path& path);

} // namespace adgen::env
