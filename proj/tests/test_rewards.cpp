// Copyright (c) 2026 adgen authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <numeric>
#include <span>
#include <vector>

#include "doctest.h"

#include "adgen/env.hpp"
#include "adgen/rewards.hpp"

using namespace adgen;
using namespace adgen::rewards;

namespace {

env::Vocabulary default_vocab() { return env::build_vocabulary(env::VocabConfig{}); }

// Brute-force diversity recount: every n-gram of the window counted in
// a plain map, then the penalty re-derived position by position.
DiversityPenalty brute_force_penalty(const std::vector<std::vector<int>>& window,
                                     std::span<const int> tokens,
                                     const DiversityOptions& options) {
    std::map<std::vector<int>, int> counts;
    for (const std::vector<int>& seq : window) {
        for (int n = options.min_n; n <= options.max_n; ++n) {
            for (std::size_t start = 0; start + static_cast<std::size_t>(n) <= seq.size();
                 ++start) {
                counts[std::vector<int>(seq.begin() + static_cast<std::ptrdiff_t>(start),
                                        seq.begin() + static_cast<std::ptrdiff_t>(start) +
                                            n)] += 1;
            }
        }
    }
    DiversityPenalty result;
    result.marks.assign(tokens.size(), 0.0);
    for (int n = options.min_n; n <= options.max_n; ++n) {
        for (std::size_t start = 0; start + static_cast<std::size_t>(n) <= tokens.size();
             ++start) {
            const std::vector<int> gram(tokens.begin() + static_cast<std::ptrdiff_t>(start),
                                        tokens.begin() + static_cast<std::ptrdiff_t>(start) + n);
            const auto it = counts.find(gram);
            if (it != counts.end() && it->second >= options.tau_f) {
                result.scalar -= options.delta_d;
                result.marks[start + static_cast<std::size_t>(n) - 1] += 1.0;
            }
        }
    }
    return result;
}

// Independent predictor forward pass with reversed accumulation order.
env::CtcvrProbs forward_reference(const CtcvrPredictor& p, std::span<const double> f) {
    std::vector<double> hidden(static_cast<std::size_t>(p.hidden));
    for (int j = p.hidden - 1; j >= 0; --j) {
        double acc = p.b_hidden[static_cast<std::size_t>(j)];
        for (int i = p.input_dim - 1; i >= 0; --i) {
            acc += p.w_hidden[static_cast<std::size_t>(j * p.input_dim + i)] *
                   f[static_cast<std::size_t>(i)];
        }
        hidden[static_cast<std::size_t>(j)] = std::tanh(acc);
    }
    double z_ctr = p.b_ctr;
    double z_cvr = p.b_cvr;
    for (int j = p.hidden - 1; j >= 0; --j) {
        z_ctr += p.w_ctr[static_cast<std::size_t>(j)] * hidden[static_cast<std::size_t>(j)];
        z_cvr += p.w_cvr[static_cast<std::size_t>(j)] * hidden[static_cast<std::size_t>(j)];
    }
    const double p_ctr = 1.0 / (1.0 + std::exp(-z_ctr));
    const double p_cvr = 1.0 / (1.0 + std::exp(-z_cvr));
    return {p_ctr, p_ctr * p_cvr};
}

CtcvrPredictor zero_predictor(int hidden) {
    CtcvrPredictor p;
    p.hidden = hidden;
    p.w_hidden.assign(static_cast<std::size_t>(hidden * p.input_dim), 0.0);
    p.b_hidden.assign(static_cast<std::size_t>(hidden), 0.0);
    p.w_ctr.assign(static_cast<std::size_t>(hidden), 0.0);
    p.w_cvr.assign(static_cast<std::size_t>(hidden), 0.0);
    return p;
}

CtcvrPredictor random_predictor(int hidden, std::uint64_t seed) {
    CtcvrPredictor p = zero_predictor(hidden);
    Rng rng(seed);
    std::vector<double> params = predictor_get_params(p);
    for (double& x : params) {
        x = rng.uniform(-1.0, 1.0);
    }
    predictor_set_params(p, params);
    return p;
}

} // namespace

TEST_CASE("length reward follows the clamped linear rule") {
    const env::LengthInterval interval{};
    CHECK(length_reward(16, interval) == 1.0);
    CHECK(length_reward(8, interval) == 1.0);
    CHECK(length_reward(24, interval) == 1.0);
    CHECK(length_reward(4, interval) == -0.5);
    CHECK(length_reward(25, interval) == -0.125);
    CHECK(length_reward(0, interval) == -1.0);
    CHECK(length_reward(40, interval) == -1.0);
    CHECK_THROWS_AS(length_reward(5, env::LengthInterval{0, 4}), std::invalid_argument);
    CHECK_THROWS_AS(length_reward(5, env::LengthInterval{8, 7}), std::invalid_argument);
}

TEST_CASE("format reward wants exactly one interior separator") {
    const env::Vocabulary vocab = default_vocab();
    const int w = vocab.filler_ids[0];
    const int sep = vocab.sep;
    const int eos = vocab.eos;
    CHECK(format_reward(std::vector<int>{w, sep, w, w, eos}, vocab) == 1.0);
    CHECK(format_reward(std::vector<int>{w, w, w, eos}, vocab) == -1.0);
    CHECK(format_reward(std::vector<int>{w, sep, w, sep, w, eos}, vocab) == -1.0);
    CHECK(format_reward(std::vector<int>{sep, w, eos}, vocab) == -1.0);
    CHECK(format_reward(std::vector<int>{w, sep, eos}, vocab) == -1.0);
    CHECK(format_reward(std::vector<int>{w, w, eos, sep, w}, vocab) == -1.0);
    CHECK(format_reward(std::vector<int>{}, vocab) == -1.0);
}

TEST_CASE("relevance reward averages coverage and bidword presence") {
    const env::Vocabulary vocab = default_vocab();
    env::Prompt prompt;
    prompt.query_keyword_ids = {vocab.keyword_ids[0], vocab.keyword_ids[1],
                                vocab.keyword_ids[2], vocab.keyword_ids[3]};
    prompt.bidword_id = vocab.keyword_ids[4];
    const int w = vocab.filler_ids[0];

    const std::vector<int> all = {vocab.keyword_ids[0], vocab.keyword_ids[1],
                                  vocab.keyword_ids[2], vocab.keyword_ids[3],
                                  vocab.keyword_ids[4], vocab.eos};
    CHECK(relevance_reward(prompt, all, vocab) == 1.0);

    const std::vector<int> none = {w, w, w, vocab.eos};
    CHECK(relevance_reward(prompt, none, vocab) == 0.0);

    const std::vector<int> half = {vocab.keyword_ids[0], vocab.keyword_ids[1],
                                   vocab.keyword_ids[4], vocab.eos};
    CHECK(relevance_reward(prompt, half, vocab) == 0.75);
}

TEST_CASE("correctness reward fires once per rollout at most") {
    const env::Vocabulary vocab = default_vocab();
    REQUIRE(vocab.contradiction_pairs.size() >= 2);
    const auto [a1, a2] = vocab.contradiction_pairs[0];
    const auto [b1, b2] = vocab.contradiction_pairs[1];
    const int w = vocab.filler_ids[7];

    CHECK(correctness_reward(std::vector<int>{w, w, vocab.eos}, vocab) == 0.0);
    CHECK(correctness_reward(std::vector<int>{a1, w, vocab.eos}, vocab) == 0.0);
    CHECK(correctness_reward(std::vector<int>{a1, w, a2, vocab.eos}, vocab) == -1.0);
    CHECK(correctness_reward(std::vector<int>{a1, a2, b1, b2, vocab.eos}, vocab) == -1.0);
}

TEST_CASE("risk scan marks blacklist positions exactly") {
    const env::Vocabulary vocab = default_vocab();
    const int w = vocab.filler_ids[0];
    const int bad = vocab.blacklist_ids[0];

    CHECK(risk_scan(std::vector<int>{w, w, w}, vocab) == std::vector<double>{0.0, 0.0, 0.0});
    CHECK(risk_scan(std::vector<int>{w, w, w, bad}, vocab) ==
          std::vector<double>{0.0, 0.0, 0.0, 1.0});

    Rng rng(10);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<int> tokens;
        const int len = rng.uniform_int(30);
        for (int t = 0; t < len; ++t) {
            tokens.push_back(rng.uniform_int(vocab.size()));
        }
        const std::vector<double> marks = risk_scan(tokens, vocab);
        REQUIRE(marks.size() == tokens.size());
        int expected = 0;
        for (int token : tokens) {
            expected += vocab.is_blacklisted(token) ? 1 : 0;
        }
        CHECK(std::accumulate(marks.begin(), marks.end(), 0.0) ==
              static_cast<double>(expected));
    }
}

TEST_CASE("ngram counting matches the hand-enumerated example") {
    DiversityTracker tracker;
    const int a = 50;
    const int b = 51;
    tracker.add(std::vector<int>{a, b, a, b});

    CHECK(tracker.count(std::vector<int>{a, b}) == 2);
    CHECK(tracker.count(std::vector<int>{b, a}) == 1);
    CHECK(tracker.count(std::vector<int>{a, b, a}) == 1);
    CHECK(tracker.count(std::vector<int>{b, a, b}) == 1);
    CHECK(tracker.count(std::vector<int>{a, b, a, b}) == 1);
    CHECK(tracker.count(std::vector<int>{b, b}) == 0);
    CHECK(tracker.distinct_ngrams() == 5);

    tracker.add(std::vector<int>{});
    tracker.add(std::vector<int>{a});
    CHECK(tracker.distinct_ngrams() == 5);

    tracker.clear();
    CHECK(tracker.distinct_ngrams() == 0);
    CHECK(tracker.count(std::vector<int>{a, b}) == 0);
}

TEST_CASE("diversity penalty marks the final token of each match") {
    DiversityOptions options;
    options.tau_f = 3;
    DiversityTracker tracker(options);
    const int a = 7;
    const int b = 8;
    const int c = 9;

    // Push one bigram over the threshold using disjoint carriers.
    tracker.add(std::vector<int>{a, b});
    tracker.add(std::vector<int>{a, b});
    tracker.add(std::vector<int>{c, a, b});

    const std::vector<int> probe = {c, c, a, b, c};
    const DiversityPenalty penalty = tracker.penalty(probe);
    CHECK(penalty.scalar == doctest::Approx(-0.1).epsilon(1e-12));
    REQUIRE(penalty.marks.size() == probe.size());
    CHECK(penalty.marks == std::vector<double>{0.0, 0.0, 0.0, 1.0, 0.0});

    const DiversityPenalty clean = tracker.penalty(std::vector<int>{c, c, c});
    CHECK(clean.scalar == 0.0);
    CHECK(clean.marks == std::vector<double>{0.0, 0.0, 0.0});
}

TEST_CASE("tracker penalties equal brute force on random windows") {
    Rng rng(808);
    for (int trial = 0; trial < 50; ++trial) {
        DiversityOptions options;
        options.tau_f = 1 + rng.uniform_int(4);
        options.min_n = 2 + rng.uniform_int(2);
        options.max_n = options.min_n + rng.uniform_int(8 - options.min_n);
        DiversityTracker tracker(options);

        std::vector<std::vector<int>> window;
        const int seqs = 1 + rng.uniform_int(6);
        for (int s = 0; s < seqs; ++s) {
            std::vector<int> seq;
            const int len = rng.uniform_int(18);
            for (int t = 0; t < len; ++t) {
                seq.push_back(rng.uniform_int(5));
            }
            window.push_back(seq);
        }
        tracker.add_batch(window);

        for (const std::vector<int>& probe : window) {
            const DiversityPenalty got = tracker.penalty(probe);
            const DiversityPenalty want = brute_force_penalty(window, probe, options);
            CHECK(got.scalar == want.scalar);
            CHECK(got.marks == want.marks);
            const double mark_mass =
                std::accumulate(got.marks.begin(), got.marks.end(), 0.0);
            CHECK(std::abs(mark_mass * options.delta_d + got.scalar) < 1e-12);
        }
    }
}

TEST_CASE("phrases never span the separator token") {
    constexpr int kSep = 99;
    DiversityOptions options;
    options.tau_f = 2;
    DiversityTracker tracker(options);
    const std::vector<int> content{1, 2, kSep, 1, 2};
    add_content(tracker, content, kSep);

    CHECK(tracker.count(std::vector<int>{1, 2}) == 2);
    CHECK(tracker.count(std::vector<int>{2, kSep}) == 0);
    CHECK(tracker.count(std::vector<int>{kSep, 1}) == 0);

    const DiversityPenalty penalty = content_penalty(tracker, content, kSep);
    CHECK(penalty.scalar == doctest::Approx(-2.0 * options.delta_d).epsilon(1e-12));
    CHECK(penalty.marks == std::vector<double>{0.0, 1.0, 0.0, 0.0, 1.0});
}

TEST_CASE("segmented penalties equal manual segment slicing") {
    constexpr int kSep = 7;
    Rng rng(909);
    for (int trial = 0; trial < 50; ++trial) {
        DiversityOptions options;
        options.tau_f = 1 + rng.uniform_int(3);
        DiversityTracker tracker(options);
        DiversityTracker reference(options);

        std::vector<std::vector<int>> window;
        const int seqs = 2 + rng.uniform_int(5);
        for (int s = 0; s < seqs; ++s) {
            std::vector<int> seq;
            const int len = rng.uniform_int(16);
            for (int t = 0; t < len; ++t) {
                // A token value of kSep appears with probability ~1/8.
                seq.push_back(rng.uniform_int(8));
            }
            window.push_back(seq);
        }
        for (const std::vector<int>& seq : window) {
            add_content(tracker, seq, kSep);
            std::vector<int> segment;
            for (int token : seq) {
                if (token == kSep) {
                    reference.add(segment);
                    segment.clear();
                } else {
                    segment.push_back(token);
                }
            }
            reference.add(segment);
        }

        for (const std::vector<int>& probe : window) {
            const DiversityPenalty got = content_penalty(tracker, probe, kSep);
            DiversityPenalty want;
            want.marks.assign(probe.size(), 0.0);
            std::size_t start = 0;
            for (std::size_t i = 0; i <= probe.size(); ++i) {
                if (i == probe.size() || probe[i] == kSep) {
                    const std::span<const int> segment(probe.data() + start, i - start);
                    const DiversityPenalty part = reference.penalty(segment);
                    want.scalar += part.scalar;
                    for (std::size_t m = 0; m < part.marks.size(); ++m) {
                        want.marks[start + m] += part.marks[m];
                    }
                    start = i + 1;
                }
            }
            CHECK(got.scalar == want.scalar);
            CHECK(got.marks == want.marks);
            for (std::size_t i = 0; i < probe.size(); ++i) {
                if (probe[i] == kSep) {
                    CHECK(got.marks[i] == 0.0);
                }
            }
        }
    }
}

TEST_CASE("separator-only or empty content is penalty-free") {
    constexpr int kSep = 5;
    DiversityOptions options;
    options.tau_f = 1;
    DiversityTracker tracker(options);
    add_content(tracker, std::vector<int>{kSep, kSep, kSep}, kSep);
    CHECK(tracker.distinct_ngrams() == 0);
    const DiversityPenalty seps = content_penalty(tracker, std::vector<int>{kSep, kSep}, kSep);
    CHECK(seps.scalar == 0.0);
    CHECK(seps.marks == std::vector<double>{0.0, 0.0});
    const DiversityPenalty empty = content_penalty(tracker, std::vector<int>{}, kSep);
    CHECK(empty.scalar == 0.0);
    CHECK(empty.marks.empty());
}

TEST_CASE("diversity options are validated") {
    DiversityOptions options;
    options.delta_d = -0.1;
    CHECK_THROWS_AS(DiversityTracker{options}, std::invalid_argument);
    options = {};
    options.tau_f = 0;
    CHECK_THROWS_AS(DiversityTracker{options}, std::invalid_argument);
    options = {};
    options.min_n = 1;
    CHECK_THROWS_AS(DiversityTracker{options}, std::invalid_argument);
    options = {};
    options.max_n = 11;
    CHECK_THROWS_AS(DiversityTracker{options}, std::invalid_argument);
    options = {};
    options.min_n = 6;
    options.max_n = 5;
    CHECK_THROWS_AS(DiversityTracker{options}, std::invalid_argument);
}

TEST_CASE("zero-weight predictor sits at the sigmoid anchor") {
    const CtcvrPredictor p = zero_predictor(4);
    const env::FeatureVector f{0.3, -0.2, 0.9, 0.0, 0.5, -0.7};
    const env::CtcvrProbs probs = predict(p, f);
    CHECK(probs.p_ctr == 0.5);
    CHECK(probs.p_ctcvr == 0.25);
}

TEST_CASE("predictor chain inequality holds for random inputs") {
    const CtcvrPredictor p = random_predictor(8, 31);
    Rng rng(32);
    for (int trial = 0; trial < 10000; ++trial) {
        env::FeatureVector f;
        for (double& x : f) {
            x = rng.uniform(-1.0, 1.0);
        }
        const env::CtcvrProbs probs = predict(p, f);
        CHECK(probs.p_ctr > 0.0);
        CHECK(probs.p_ctr < 1.0);
        CHECK(probs.p_ctcvr > 0.0);
        CHECK(probs.p_ctcvr <= probs.p_ctr);
    }
}

TEST_CASE("predictor forward pass matches an independent implementation") {
    Rng rng(77);
    for (int trial = 0; trial < 200; ++trial) {
        const CtcvrPredictor p = random_predictor(1 + rng.uniform_int(16), rng.next_u64());
        env::FeatureVector f;
        for (double& x : f) {
            x = rng.uniform(-1.0, 1.0);
        }
        const env::CtcvrProbs got = predict(p, f);
        const env::CtcvrProbs want = forward_reference(p, f);
        CHECK(std::abs(got.p_ctr - want.p_ctr) < 1e-10);
        CHECK(std::abs(got.p_ctcvr - want.p_ctcvr) < 1e-10);
    }
}

TEST_CASE("predictor rejects mismatched feature dimensions") {
    const CtcvrPredictor p = random_predictor(4, 5);
    const std::vector<double> bad(4, 0.0);
    CHECK_THROWS_AS(predict(p, bad), std::invalid_argument);
}

TEST_CASE("predictor loss gradient matches central finite differences") {
    Rng rng(4096);
    for (int trial = 0; trial < 20; ++trial) {
        CtcvrPredictor p = random_predictor(3, rng.next_u64());
        std::vector<env::OracleRow> rows;
        for (int r = 0; r < 20; ++r) {
            env::OracleRow row;
            for (double& x : row.features) {
                x = rng.uniform(-1.0, 1.0);
            }
            row.click = rng.bernoulli(0.5) ? 1 : 0;
            row.conversion = row.click == 1 && rng.bernoulli(0.5) ? 1 : 0;
            rows.push_back(row);
        }

        const LossAndGrad analytic = predictor_loss_and_grad(p, rows);
        std::vector<double> params = predictor_get_params(p);
        REQUIRE(analytic.grad.size() == params.size());

        const double h = 1e-5;
        for (std::size_t i = 0; i < params.size(); ++i) {
            const double saved = params[i];
            params[i] = saved + h;
            predictor_set_params(p, params);
            const double up = predictor_loss_and_grad(p, rows).loss;
            params[i] = saved - h;
            predictor_set_params(p, params);
            const double down = predictor_loss_and_grad(p, rows).loss;
            params[i] = saved;
            predictor_set_params(p, params);

            const double fd = (up - down) / (2.0 * h);
            const double denom = std::max(std::abs(fd), 1e-3);
            CHECK(std::abs(analytic.grad[i] - fd) / denom < 1e-4);
        }
    }
}

TEST_CASE("training on an all-negative dataset drives p_ctr down") {
    Rng data_rng(1);
    env::OracleDataset dataset;
    for (int r = 0; r < 4000; ++r) {
        env::OracleRow row;
        for (double& x : row.features) {
            x = data_rng.uniform(-1.0, 1.0);
        }
        row.click = 0;
        row.conversion = 0;
        dataset.rows.push_back(row);
    }
    PredictorConfig config;
    config.epochs = 6;
    Rng rng(2);
    const CtcvrPredictor p = train_ctcvr_predictor(dataset, config, rng);
    double mean_ctr = 0.0;
    for (const env::OracleRow& row : dataset.rows) {
        mean_ctr += predict(p, row.features).p_ctr;
    }
    CHECK(mean_ctr / static_cast<double>(dataset.rows.size()) < 0.05);
}

TEST_CASE("training rejects an empty dataset") {
    env::OracleDataset empty;
    PredictorConfig config;
    Rng rng(3);
    CHECK_THROWS_AS(train_ctcvr_predictor(empty, config, rng), std::invalid_argument);
}

TEST_CASE("predictor checkpoints round-trip exactly") {
    const std::filesystem::path dir =
        std::filesystem::temp_directory_path() / "adgen_predictor_test";
    std::filesystem::create_directories(dir);

    const CtcvrPredictor p = random_predictor(8, 123);
    save_predictor(p, dir / "predictor.json");
    const CtcvrPredictor loaded = load_predictor(dir / "predictor.json");
    CHECK(loaded.input_dim == p.input_dim);
    CHECK(loaded.hidden == p.hidden);
    CHECK(loaded.w_hidden == p.w_hidden);
    CHECK(loaded.b_hidden == p.b_hidden);
    CHECK(loaded.w_ctr == p.w_ctr);
    CHECK(loaded.b_ctr == p.b_ctr);
    CHECK(loaded.w_cvr == p.w_cvr);
    CHECK(loaded.b_cvr == p.b_cvr);

    std::filesystem::remove_all(dir);
}

TEST_CASE("concordance index handles order, ties and degenerate input") {
    CHECK(concordance_index(std::vector<double>{1.0, 2.0, 3.0},
                            std::vector<double>{0.1, 0.2, 0.3}) == 1.0);
    CHECK(concordance_index(std::vector<double>{3.0, 2.0, 1.0},
                            std::vector<double>{0.1, 0.2, 0.3}) == 0.0);
    CHECK(concordance_index(std::vector<double>{1.0, 1.0},
                            std::vector<double>{0.1, 0.2}) == 0.5);
    // Pairs with tied truth are excluded entirely.
    CHECK(concordance_index(std::vector<double>{1.0, 2.0, 3.0},
                            std::vector<double>{0.5, 0.5, 1.0}) == 1.0);
    CHECK(concordance_index(std::vector<double>{1.0, 2.0},
                            std::vector<double>{0.5, 0.5}) == 0.5);
    CHECK_THROWS_AS(concordance_index(std::vector<double>{1.0},
                                      std::vector<double>{1.0}),
                    std::invalid_argument);
    CHECK_THROWS_AS(concordance_index(std::vector<double>{1.0, 2.0},
                                      std::vector<double>{1.0}),
                    std::invalid_argument);
}

TEST_CASE("reward aggregation routes components per ablation row") {
    RewardComponents components;
    components.length = 1.0;
    components.format = -1.0;
    components.relevance = 0.75;
    components.correctness = -1.0;
    components.risk_tokens = {0.0, 1.0, 0.0, 1.0};
    components.diversity_scalar = -0.3;
    components.diversity_tokens = {0.0, 0.0, 2.0, 1.0};
    components.ctcvr = 0.2;

    const RewardWeights weights; // all ones

    SUBCASE("Model 1 keeps only structural terms") {
        const AblationConfig ablation = make_ablation(AblationId::model1);
        const RewardWeights masked = mask_weights(weights, ablation);
        CHECK(masked.length == 1.0);
        CHECK(masked.format == 1.0);
        CHECK(masked.ctcvr == 0.0);
        CHECK(masked.relevance == 0.0);
        CHECK(masked.correctness == 0.0);
        CHECK(masked.risk == 0.0);
        CHECK(masked.diversity == 0.0);
        const RewardBreakdown breakdown = aggregate_reward(components, ablation, masked);
        CHECK(breakdown.total_sentence == 0.0); // 1.0 + (-1.0)
        CHECK(breakdown.risk_tokens == std::vector<double>(4, 0.0));
        CHECK(breakdown.diversity_tokens == std::vector<double>(4, 0.0));
    }
    SUBCASE("Model 2 adds the conversion estimate") {
        const AblationConfig ablation = make_ablation(AblationId::model2);
        const RewardBreakdown breakdown =
            aggregate_reward(components, ablation, mask_weights(weights, ablation));
        CHECK(breakdown.total_sentence == doctest::Approx(0.2).epsilon(1e-12));
    }
    SUBCASE("Model 3 adds the diversity scalar at sentence level") {
        const AblationConfig ablation = make_ablation(AblationId::model3);
        const RewardBreakdown breakdown =
            aggregate_reward(components, ablation, mask_weights(weights, ablation));
        CHECK(breakdown.total_sentence == doctest::Approx(0.2 - 0.3).epsilon(1e-12));
        CHECK(breakdown.diversity_tokens == std::vector<double>(4, 0.0));
    }
    SUBCASE("Model 4 folds semantics and risk into the sentence scalar") {
        const AblationConfig ablation = make_ablation(AblationId::model4);
        const RewardBreakdown breakdown =
            aggregate_reward(components, ablation, mask_weights(weights, ablation));
        // 0 structural + 0.2 ctcvr + 0.75 relevance - 1 correctness
        // - 0.3 diversity - 2 risk
        CHECK(breakdown.total_sentence ==
              doctest::Approx(0.2 + 0.75 - 1.0 - 0.3 - 2.0).epsilon(1e-12));
        CHECK(breakdown.risk_tokens == std::vector<double>(4, 0.0));
        CHECK(breakdown.diversity_tokens == std::vector<double>(4, 0.0));
    }
    SUBCASE("the full configuration routes risk and diversity through tokens") {
        const AblationConfig ablation = make_ablation(AblationId::relate);
        const RewardBreakdown breakdown =
            aggregate_reward(components, ablation, mask_weights(weights, ablation));
        CHECK(breakdown.total_sentence == doctest::Approx(0.2 + 0.75 - 1.0).epsilon(1e-12));
        CHECK(breakdown.risk_tokens == components.risk_tokens);
        CHECK(breakdown.diversity_tokens == components.diversity_tokens);
        CHECK(breakdown.diversity_scalar == components.diversity_scalar);
    }
    SUBCASE("all-zero weights zero the sentence total") {
        const AblationConfig ablation = make_ablation(AblationId::relate);
        RewardWeights zeros;
        zeros.length = zeros.format = zeros.relevance = zeros.correctness = 0.0;
        zeros.risk = zeros.diversity = zeros.ctcvr = 0.0;
        const RewardBreakdown breakdown = aggregate_reward(components, ablation, zeros);
        CHECK(breakdown.total_sentence == 0.0);
    }
    SUBCASE("a nonzero weight on an inactive component is rejected") {
        const AblationConfig ablation = make_ablation(AblationId::model1);
        CHECK_THROWS_AS(aggregate_reward(components, ablation, weights),
                        std::invalid_argument);
    }
}

TEST_CASE("component computation is consistent with the scoring rules") {
    const env::Vocabulary vocab = default_vocab();
    const env::LengthInterval interval{};
    DiversityTracker tracker;
    Rng pr_rng(5);
    const env::Prompt prompt = env::sample_prompt(vocab, pr_rng, 0);
    const CtcvrPredictor predictor = random_predictor(8, 6);

    std::vector<int> tokens;
    for (int i = 0; i < 12; ++i) {
        tokens.push_back(vocab.filler_ids[static_cast<std::size_t>(i)]);
    }
    tokens.push_back(vocab.eos);
    tracker.add(std::vector<int>(tokens.begin(), tokens.end() - 1));

    const RewardComponents components =
        compute_components(prompt, tokens, vocab, interval, tracker, predictor);
    CHECK(components.length == length_reward(12, interval));
    CHECK(components.format == format_reward(tokens, vocab));
    CHECK(components.relevance == relevance_reward(prompt, tokens, vocab));
    CHECK(components.correctness == correctness_reward(tokens, vocab));
    CHECK(components.risk_tokens == risk_scan(tokens, vocab));
    REQUIRE(components.diversity_tokens.size() == tokens.size());
    const env::FeatureVector features = env::featurize(prompt, tokens, vocab, interval);
    CHECK(components.ctcvr == predict_ctcvr(predictor, features));
}
