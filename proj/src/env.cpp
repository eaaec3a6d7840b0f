// Copyright (c) 2026 adgen authors
// SPDX-License-Identifier: Apache-2.0

#include "adgen/env.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace adgen::env {
namespace {

using nlohmann::json;

double sigmoid(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

json load_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open " + path.string());
    }
    json j;
    in >> j;
    return j;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    }
    out << text;
    if (!out) {
        throw std::runtime_error("failed writing " + path.string());
    }
}

std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

} // namespace

Vocabulary build_vocabulary(const VocabConfig& config) {
    if (config.keywords < 1) {
        throw std::invalid_argument("vocabulary needs at least one keyword");
    }
    if (config.cta < 0 || config.blacklist < 0 || config.filler < 0) {
        throw std::invalid_argument("token class sizes must be non-negative");
    }
    if (config.risk_control && config.blacklist == 0) {
        throw std::invalid_argument("risk control enabled but blacklist class is empty");
    }
    if (config.max_query_keywords < 1 || config.max_query_keywords > config.keywords) {
        throw std::invalid_argument("max_query_keywords must lie in [1, keywords]");
    }
    if (config.contradiction_pairs < 0 || 2 * config.contradiction_pairs > config.filler) {
        throw std::invalid_argument("not enough filler tokens for the contradiction pairs");
    }

    Vocabulary vocab;
    vocab.max_query_keywords = config.max_query_keywords;
    vocab.seed = config.seed;

    auto add = [&vocab](std::string name, TokenClass cls) {
        vocab.tokens.push_back(std::move(name));
        vocab.classes.push_back(cls);
        return static_cast<int>(vocab.tokens.size()) - 1;
    };

    vocab.bos = add("<bos>", TokenClass::special);
    vocab.eos = add("<eos>", TokenClass::special);
    vocab.sep = add("<sep>", TokenClass::special);
    for (int i = 0; i < config.keywords; ++i) {
        vocab.keyword_ids.push_back(add("kw_" + std::to_string(i), TokenClass::keyword));
    }
    for (int i = 0; i < config.cta; ++i) {
        vocab.cta_ids.push_back(add("cta_" + std::to_string(i), TokenClass::cta));
    }
    for (int i = 0; i < config.blacklist; ++i) {
        vocab.blacklist_ids.push_back(add("ban_" + std::to_string(i), TokenClass::blacklist));
    }
    for (int i = 0; i < config.filler; ++i) {
        vocab.filler_ids.push_back(add("w_" + std::to_string(i), TokenClass::filler));
    }

    Rng rng(splitmix64(config.seed ^ 0x76f6c41u));
    std::vector<int> pool = vocab.filler_ids;
    for (int p = 0; p < config.contradiction_pairs; ++p) {
        const int remaining = static_cast<int>(pool.size());
        const int i = rng.uniform_int(remaining);
        std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(remaining - 1)]);
        const int j = rng.uniform_int(remaining - 1);
        std::swap(pool[static_cast<std::size_t>(j)], pool[static_cast<std::size_t>(remaining - 2)]);
        vocab.contradiction_pairs.emplace_back(pool[static_cast<std::size_t>(remaining - 2)],
                                               pool[static_cast<std::size_t>(remaining - 1)]);
        pool.resize(static_cast<std::size_t>(remaining - 2));
    }
    return vocab;
}

Prompt sample_prompt(const Vocabulary& vocab, Rng& rng, int id) {
    const int total = static_cast<int>(vocab.keyword_ids.size());
    if (total == 0) {
        throw std::invalid_argument("vocabulary has no keywords to sample a prompt from");
    }
    const int count = 1 + rng.uniform_int(std::min(vocab.max_query_keywords, total));

    Prompt prompt;
    prompt.id = id;
    std::vector<int> pool = vocab.keyword_ids;
    for (int j = 0; j < count; ++j) {
        const int pick = j + rng.uniform_int(total - j);
        std::swap(pool[static_cast<std::size_t>(j)], pool[static_cast<std::size_t>(pick)]);
        prompt.query_keyword_ids.push_back(pool[static_cast<std::size_t>(j)]);
    }
    prompt.bidword_id = vocab.keyword_ids[static_cast<std::size_t>(rng.uniform_int(total))];
    return prompt;
}

int content_length(std::span<const int> tokens, const Vocabulary& vocab) {
    int len = 0;
    for (int token : tokens) {
        if (token == vocab.eos) {
            break;
        }
        ++len;
    }
    return len;
}

FeatureVector featurize(const Prompt& prompt, std::span<const int> tokens,
                        const Vocabulary& vocab, const LengthInterval& interval) {
    const int len = content_length(tokens, vocab);
    const auto content = tokens.first(static_cast<std::size_t>(len));

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

    bool has_cta = false;
    int blacklist_count = 0;
    for (int token : content) {
        const TokenClass cls = vocab.class_of(token);
        has_cta = has_cta || cls == TokenClass::cta;
        blacklist_count += cls == TokenClass::blacklist ? 1 : 0;
    }

    const double mid = interval.midpoint();
    const double length_dev =
        std::clamp((static_cast<double>(len) - mid) / mid, -1.0, 1.0);

    double bigram_ratio = 1.0;
    if (len >= 2) {
        std::vector<std::pair<int, int>> bigrams;
        bigrams.reserve(static_cast<std::size_t>(len) - 1);
        for (int t = 0; t + 1 < len; ++t) {
            bigrams.emplace_back(content[static_cast<std::size_t>(t)],
                                 content[static_cast<std::size_t>(t + 1)]);
        }
        std::sort(bigrams.begin(), bigrams.end());
        const auto distinct = std::unique(bigrams.begin(), bigrams.end()) - bigrams.begin();
        bigram_ratio = static_cast<double>(distinct) / static_cast<double>(bigrams.size());
    }

    return FeatureVector{coverage,
                         has_bidword ? 1.0 : 0.0,
                         has_cta ? 1.0 : 0.0,
                         length_dev,
                         std::min(1.0, blacklist_count / 3.0),
                         bigram_ratio};
}

CtcvrProbs oracle_ctcvr(const OracleParams& oracle, std::span<const double> features) {
    if (features.size() != kFeatureDim) {
        throw std::invalid_argument("oracle expects " + std::to_string(kFeatureDim) +
                                    " features, got " + std::to_string(features.size()));
    }
    double s_ctr = oracle.b_ctr;
    double s_cvr = oracle.b_cvr;
    for (int d = 0; d < kFeatureDim; ++d) {
        s_ctr += oracle.w_ctr[static_cast<std::size_t>(d)] * features[static_cast<std::size_t>(d)];
        s_cvr += oracle.w_cvr[static_cast<std::size_t>(d)] * features[static_cast<std::size_t>(d)];
    }
    const double p_ctr = sigmoid(s_ctr);
    return CtcvrProbs{p_ctr, p_ctr * sigmoid(s_cvr)};
}

OracleParams make_oracle(std::uint64_t seed) {
    // Rewards relevance, CTA presence and varied phrasing; strongly
    // penalizes overlong text, since walls of words convert poorly no
    // matter how many keywords they contain by chance. Blacklist words
    // are deliberately tempting: sensational claims attract clicks but
    // disappoint at conversion time, and the net effect on CTCVR stays
    // positive, so a conversion-only objective has an incentive to use
    // them. The CVR head leans harder on coverage so click and
    // conversion rankings differ.
    OracleParams oracle;
    oracle.seed = seed;
    oracle.w_ctr = {1.2, 0.6, 0.8, -0.6, 0.9, 0.15};
    oracle.b_ctr = -2.5;
    oracle.w_cvr = {0.8, 1.0, 0.4, -0.4, -0.3, 0.1};
    oracle.b_cvr = -1.2;

    Rng rng(splitmix64(seed ^ 0x07ac1eu));
    for (int d = 0; d < kFeatureDim; ++d) {
        oracle.w_ctr[static_cast<std::size_t>(d)] += rng.uniform(-0.1, 0.1);
        oracle.w_cvr[static_cast<std::size_t>(d)] += rng.uniform(-0.1, 0.1);
    }
    oracle.b_ctr += rng.uniform(-0.1, 0.1);
    oracle.b_cvr += rng.uniform(-0.1, 0.1);
    return oracle;
}

OracleDataset label_dataset(const OracleParams& oracle, const Vocabulary& vocab,
                            std::size_t n, const LengthInterval& interval,
                            int max_len, Rng& rng) {
    if (n == 0) {
        throw std::invalid_argument("dataset size must be positive");
    }
    if (max_len < 1) {
        throw std::invalid_argument("max_len must be positive");
    }
    const int vocab_size = vocab.size();

    OracleDataset dataset;
    dataset.rows.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Prompt prompt = sample_prompt(vocab, rng, static_cast<int>(i));
        const int len = rng.uniform_int(max_len + 1);
        std::vector<int> tokens(static_cast<std::size_t>(len));
        if (len > 0 && rng.bernoulli(1.0 / 3.0)) {
            // A third of the rows tile a short phrase, mimicking
            // formulaic ad copy, so the distinct-bigram feature spans
            // its range instead of clustering near one.
            const int phrase_len = std::min(len, 2 + rng.uniform_int(3));
            std::vector<int> phrase(static_cast<std::size_t>(phrase_len));
            for (int& token : phrase) {
                token = 2 + rng.uniform_int(vocab_size - 2);
            }
            for (int t = 0; t < len; ++t) {
                tokens[static_cast<std::size_t>(t)] =
                    phrase[static_cast<std::size_t>(t % phrase_len)];
            }
        } else {
            for (int& token : tokens) {
                token = 2 + rng.uniform_int(vocab_size - 2); // skip BOS and EOS
            }
        }
        // Half the rows get query terms and a call to action planted so
        // the labels cover the regime a trained policy reaches.
        if (len > 0 && rng.bernoulli(0.5)) {
            for (int kw : prompt.query_keyword_ids) {
                if (rng.bernoulli(0.8)) {
                    tokens[static_cast<std::size_t>(rng.uniform_int(len))] = kw;
                }
            }
            if (rng.bernoulli(0.8)) {
                tokens[static_cast<std::size_t>(rng.uniform_int(len))] = prompt.bidword_id;
            }
            if (!vocab.cta_ids.empty() && rng.bernoulli(0.7)) {
                const int cta = vocab.cta_ids[static_cast<std::size_t>(
                    rng.uniform_int(static_cast<int>(vocab.cta_ids.size())))];
                tokens[static_cast<std::size_t>(rng.uniform_int(len))] = cta;
            }
        }

        OracleRow row;
        row.features = featurize(prompt, tokens, vocab, interval);
        const CtcvrProbs probs = oracle_ctcvr(oracle, row.features);
        row.click = rng.bernoulli(probs.p_ctr) ? 1 : 0;
        const double p_cvr = probs.p_ctcvr / probs.p_ctr;
        row.conversion = row.click == 1 && rng.bernoulli(p_cvr) ? 1 : 0;
        dataset.rows.push_back(row);
    }
    return dataset;
}

void save_vocabulary(const Vocabulary& vocab, const std::filesystem::path& path) {
    json j;
    j["tokens"] = vocab.tokens;
    j["bos"] = vocab.bos;
    j["eos"] = vocab.eos;
    j["sep"] = vocab.sep;
    j["keyword_ids"] = vocab.keyword_ids;
    j["cta_ids"] = vocab.cta_ids;
    j["blacklist_ids"] = vocab.blacklist_ids;
    j["filler_ids"] = vocab.filler_ids;
    json pairs = json::array();
    for (const auto& [a, b] : vocab.contradiction_pairs) {
        pairs.push_back(json::array({a, b}));
    }
    j["contradiction_pairs"] = pairs;
    j["max_query_keywords"] = vocab.max_query_keywords;
    j["seed"] = vocab.seed;
    write_text_file(path, j.dump(2) + "\n");
}

Vocabulary load_vocabulary(const std::filesystem::path& path) {
    const json j = load_json_file(path);
    Vocabulary vocab;
    vocab.tokens = j.at("tokens").get<std::vector<std::string>>();
    vocab.bos = j.at("bos").get<int>();
    vocab.eos = j.at("eos").get<int>();
    vocab.sep = j.at("sep").get<int>();
    vocab.keyword_ids = j.at("keyword_ids").get<std::vector<int>>();
    vocab.cta_ids = j.at("cta_ids").get<std::vector<int>>();
    vocab.blacklist_ids = j.at("blacklist_ids").get<std::vector<int>>();
    vocab.filler_ids = j.at("filler_ids").get<std::vector<int>>();
    for (const auto& pair : j.at("contradiction_pairs")) {
        vocab.contradiction_pairs.emplace_back(pair.at(0).get<int>(), pair.at(1).get<int>());
    }
    vocab.max_query_keywords = j.at("max_query_keywords").get<int>();
    vocab.seed = j.at("seed").get<std::uint64_t>();

    vocab.classes.assign(vocab.tokens.size(), TokenClass::special);
    auto assign = [&vocab](const std::vector<int>& ids, TokenClass cls) {
        for (int id : ids) {
            if (id < 0 || id >= vocab.size()) {
                throw std::runtime_error("token id out of range in vocabulary file");
            }
            vocab.classes[static_cast<std::size_t>(id)] = cls;
        }
    };
    assign(vocab.keyword_ids, TokenClass::keyword);
    assign(vocab.cta_ids, TokenClass::cta);
    assign(vocab.blacklist_ids, TokenClass::blacklist);
    assign(vocab.filler_ids, TokenClass::filler);
    return vocab;
}

void save_oracle(const OracleParams& oracle, const std::filesystem::path& path) {
    json j;
    j["w_ctr"] = oracle.w_ctr;
    j["b_ctr"] = oracle.b_ctr;
    j["w_cvr"] = oracle.w_cvr;
    j["b_cvr"] = oracle.b_cvr;
    j["seed"] = oracle.seed;
    write_text_file(path, j.dump(2) + "\n");
}

OracleParams load_oracle(const std::filesystem::path& path) {
    const json j = load_json_file(path);
    OracleParams oracle;
    oracle.w_ctr = j.at("w_ctr").get<std::array<double, kFeatureDim>>();
    oracle.b_ctr = j.at("b_ctr").get<double>();
    oracle.w_cvr = j.at("w_cvr").get<std::array<double, kFeatureDim>>();
    oracle.b_cvr = j.at("b_cvr").get<double>();
    oracle.seed = j.at("seed").get<std::uint64_t>();
    return oracle;
}

void save_dataset_csv(const OracleDataset& dataset, const std::filesystem::path& path) {
    std::string text = "f0,f1,f2,f3,f4,f5,click,conversion\n";
    for (const OracleRow& row : dataset.rows) {
        for (double f : row.features) {
            text += format_double(f);
            text += ',';
        }
        text += std::to_string(row.click);
        text += ',';
        text += std::to_string(row.conversion);
        text += '\n';
    }
    write_text_file(path, text);
}

OracleDataset load_dataset_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open " + path.string());
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw std::runtime_error("dataset file is empty: " + path.string());
    }
    OracleDataset dataset;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        std::istringstream fields(line);
        std::string cell;
        OracleRow row;
        for (int d = 0; d < kFeatureDim; ++d) {
            if (!std::getline(fields, cell, ',')) {
                throw std::runtime_error("malformed dataset row: " + line);
            }
            row.features[static_cast<std::size_t>(d)] = std::stod(cell);
        }
        if (!std::getline(fields, cell, ',')) {
            throw std::runtime_error("malformed dataset row: " + line);
        }
        row.click = std::stoi(cell);
        if (!std::getline(fields, cell, ',')) {
            throw std::runtime_error("malformed dataset row: " + line);
        }
        row.conversion = std::stoi(cell);
        dataset.rows.push_back(row);
    }
    return dataset;
}

} // namespace adgen::env
