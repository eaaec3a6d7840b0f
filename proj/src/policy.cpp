// Copyright (c) 2026 adgen authors
// SPDX-License-Identifier: Apache-2.0

#include "adgen/policy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace adgen::policy {
namespace {

std::int64_t pow_i64(std::int64_t base, int exp) {
    std::int64_t out = 1;
    for (int i = 0; i < exp; ++i) {
        out *= base;
    }
    return out;
}

void check_token(const PolicyParams& params, int token) {
    if (token < 0 || token >= params.vocab_size) {
        throw std::invalid_argument("token index " + std::to_string(token) +
                                    " outside vocabulary of size " +
                                    std::to_string(params.vocab_size));
    }
}

int sample_categorical(std::span<const double> probs, Rng& rng) {
    const double u = rng.uniform();
    double cumulative = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        cumulative += probs[i];
        if (u < cumulative) {
            return static_cast<int>(i);
        }
    }
    return static_cast<int>(probs.size()) - 1;
}

} // namespace

std::int64_t PolicyParams::contexts() const {
    return pow_i64(vocab_size, order);
}

std::span<double> PolicyParams::row(std::int64_t context) {
    return std::span<double>(logits).subspan(
        static_cast<std::size_t>(context) * static_cast<std::size_t>(vocab_size),
        static_cast<std::size_t>(vocab_size));
}

std::span<const double> PolicyParams::row(std::int64_t context) const {
    return std::span<const double>(logits).subspan(
        static_cast<std::size_t>(context) * static_cast<std::size_t>(vocab_size),
        static_cast<std::size_t>(vocab_size));
}

PolicyParams init_policy(int vocab_size, int bos, int eos, int order, double init_scale,
                         Rng& rng) {
    if (order < 1 || order > 3) {
        throw std::invalid_argument("policy order must be 1, 2, or 3");
    }
    if (vocab_size < 2) {
        throw std::invalid_argument("policy needs a vocabulary of at least 2 tokens");
    }
    if (bos < 0 || bos >= vocab_size || eos < 0 || eos >= vocab_size || bos == eos) {
        throw std::invalid_argument("BOS/EOS ids must be distinct tokens inside the vocabulary");
    }
    if (init_scale < 0.0) {
        throw std::invalid_argument("init_scale must be non-negative");
    }
    const std::int64_t entries = pow_i64(vocab_size, order) * vocab_size;
    if (entries > kMaxTableEntries) {
        throw std::invalid_argument("logit table of " + std::to_string(entries) +
                                    " entries exceeds the supported size");
    }

    PolicyParams params;
    params.order = order;
    params.vocab_size = vocab_size;
    params.bos = bos;
    params.eos = eos;
    params.logits.assign(static_cast<std::size_t>(entries), 0.0);
    if (init_scale > 0.0) {
        for (double& logit : params.logits) {
            logit = rng.uniform(-init_scale, init_scale);
        }
    }
    return params;
}

PolicyParams init_policy(const env::Vocabulary& vocab, int order, double init_scale, Rng& rng) {
    return init_policy(vocab.size(), vocab.bos, vocab.eos, order, init_scale, rng);
}

std::int64_t context_id(const PolicyParams& params, std::span<const int> recent) {
    std::int64_t id = 0;
    for (int i = 0; i < params.order; ++i) {
        const std::size_t have = recent.size();
        const int slot = i + static_cast<int>(have) - params.order; // index into recent
        const int token = slot >= 0 ? recent[static_cast<std::size_t>(slot)] : params.bos;
        check_token(params, token);
        id = id * params.vocab_size + token;
    }
    return id;
}

std::int64_t advance_context(const PolicyParams& params, std::int64_t context, int token) {
    check_token(params, token);
    const std::int64_t tail = pow_i64(params.vocab_size, params.order - 1);
    return (context % tail) * params.vocab_size + token;
}

std::int64_t initial_context(const PolicyParams& params, const env::Prompt& prompt) {
    std::int64_t context = context_id(params, {});
    return advance_context(params, context, prompt.bidword_id);
}

double softmax_logz(std::span<const double> logits, std::span<double> probs) {
    const double peak = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        probs[i] = std::exp(logits[i] - peak);
        sum += probs[i];
    }
    for (double& p : probs) {
        p /= sum;
    }
    return peak + std::log(sum);
}

void softmax(std::span<const double> logits, std::span<double> probs) {
    softmax_logz(logits, probs);
}

double log_normalizer(std::span<const double> logits) {
    const double peak = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double logit : logits) {
        sum += std::exp(logit - peak);
    }
    return peak + std::log(sum);
}

void log_softmax(std::span<const double> logits, std::span<double> out) {
    const double log_z = log_normalizer(logits);
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = logits[i] - log_z;
    }
}

std::vector<double> next_token_dist(const PolicyParams& params, std::span<const int> context) {
    return next_token_dist_at(params, context_id(params, context));
}

std::vector<double> next_token_dist_at(const PolicyParams& params, std::int64_t context) {
    std::vector<double> probs(static_cast<std::size_t>(params.vocab_size));
    softmax(params.row(context), probs);
    return probs;
}

Group sample_rollouts(const PolicyParams& params, const env::Prompt& prompt, int G,
                      int max_len, Rng& rng) {
    return sample_rollouts(params, params, prompt, G, max_len, rng, nullptr);
}

Group sample_rollouts(const PolicyParams& params, const PolicyParams& ref,
                      const env::Prompt& prompt, int G, int max_len, Rng& rng,
                      LogZCache* ref_logz) {
    if (G < 2) {
        throw std::invalid_argument("group size must be at least 2");
    }
    if (max_len < 1) {
        throw std::invalid_argument("max_len must be positive");
    }
    const bool same_ref = &ref == &params;
    auto ref_log_normalizer = [&ref, ref_logz](std::int64_t context) {
        if (ref_logz == nullptr) {
            return log_normalizer(ref.row(context));
        }
        const auto [it, inserted] = ref_logz->values.try_emplace(context, 0.0);
        if (inserted) {
            it->second = log_normalizer(ref.row(context));
        }
        return it->second;
    };

    Group group;
    group.prompt = prompt;
    group.rollouts.reserve(static_cast<std::size_t>(G));
    std::vector<double> probs(static_cast<std::size_t>(params.vocab_size));

    for (int g = 0; g < G; ++g) {
        Rollout rollout;
        rollout.prompt_id = prompt.id;
        std::int64_t context = initial_context(params, prompt);
        for (int t = 0; t < max_len; ++t) {
            const double logz = softmax_logz(params.row(context), probs);
            const int token = sample_categorical(probs, rng);
            rollout.tokens.push_back(token);
            rollout.contexts.push_back(context);
            rollout.logp_old.push_back(params.row(context)[static_cast<std::size_t>(token)] -
                                       logz);
            if (same_ref) {
                rollout.logp_ref.push_back(rollout.logp_old.back());
            } else {
                rollout.logp_ref.push_back(
                    ref.row(context)[static_cast<std::size_t>(token)] -
                    ref_log_normalizer(context));
            }
            if (token == params.eos) {
                break;
            }
            context = advance_context(params, context, token);
        }
        group.rollouts.push_back(std::move(rollout));
    }
    return group;
}

std::vector<double> log_prob(const PolicyParams& params, const env::Prompt& prompt,
                             std::span<const int> tokens) {
    if (tokens.empty()) {
        throw std::invalid_argument("log_prob requires a nonempty token sequence");
    }
    std::vector<double> out;
    out.reserve(tokens.size());
    std::vector<double> logp(static_cast<std::size_t>(params.vocab_size));
    std::int64_t context = initial_context(params, prompt);
    for (int token : tokens) {
        check_token(params, token);
        log_softmax(params.row(context), logp);
        out.push_back(logp[static_cast<std::size_t>(token)]);
        context = advance_context(params, context, token);
    }
    return out;
}

std::vector<double> grad_log_prob(const PolicyParams& params, std::int64_t context, int token) {
    check_token(params, token);
    std::vector<double> grad(static_cast<std::size_t>(params.vocab_size));
    softmax(params.row(context), grad);
    for (double& g : grad) {
        g = -g;
    }
    grad[static_cast<std::size_t>(token)] += 1.0;
    return grad;
}

double kl_next_token(const PolicyParams& params_a, const PolicyParams& params_b,
                     std::int64_t context) {
    if (params_a.vocab_size != params_b.vocab_size) {
        throw std::invalid_argument("KL requires policies over the same vocabulary");
    }
    const std::size_t v = static_cast<std::size_t>(params_a.vocab_size);
    std::vector<double> logp_a(v);
    std::vector<double> logp_b(v);
    log_softmax(params_a.row(context), logp_a);
    log_softmax(params_b.row(context), logp_b);
    double kl = 0.0;
    for (std::size_t i = 0; i < v; ++i) {
        kl += std::exp(logp_a[i]) * (logp_a[i] - logp_b[i]);
    }
    return kl;
}

void save_policy(const PolicyParams& params, int step, const std::filesystem::path& path) {
    std::filesystem::path bin_path = path;
    bin_path.replace_extension(".logits.bin");

    nlohmann::json j;
    j["order"] = params.order;
    j["vocab_size"] = params.vocab_size;
    j["bos"] = params.bos;
    j["eos"] = params.eos;
    j["step"] = step;
    j["dtype"] = "f64le";
    j["logits_file"] = bin_path.filename().string();
    {
        std::ofstream out(path, std::ios::binary);
        if (!out) {
            throw std::runtime_error("cannot open " + path.string() + " for writing");
        }
        out << j.dump(2) << "\n";
    }
    std::ofstream bin(bin_path, std::ios::binary);
    if (!bin) {
        throw std::runtime_error("cannot open " + bin_path.string() + " for writing");
    }
    bin.write(reinterpret_cast<const char*>(params.logits.data()),
              static_cast<std::streamsize>(params.logits.size() * sizeof(double)));
    if (!bin) {
        throw std::runtime_error("failed writing " + bin_path.string());
    }
}

LoadedPolicy load_policy(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open " + path.string());
    }
    nlohmann::json j;
    in >> j;

    LoadedPolicy loaded;
    loaded.params.order = j.at("order").get<int>();
    loaded.params.vocab_size = j.at("vocab_size").get<int>();
    loaded.params.bos = j.at("bos").get<int>();
    loaded.params.eos = j.at("eos").get<int>();
    loaded.step = j.at("step").get<int>();
    if (j.at("dtype").get<std::string>() != "f64le") {
        throw std::runtime_error("unsupported checkpoint dtype in " + path.string());
    }

    const std::filesystem::path bin_path =
        path.parent_path() / j.at("logits_file").get<std::string>();
    std::ifstream bin(bin_path, std::ios::binary);
    if (!bin) {
        throw std::runtime_error("cannot open " + bin_path.string());
    }
    const std::int64_t entries =
        pow_i64(loaded.params.vocab_size, loaded.params.order) * loaded.params.vocab_size;
    loaded.params.logits.resize(static_cast<std::size_t>(entries));
    bin.read(reinterpret_cast<char*>(loaded.params.logits.data()),
             static_cast<std::streamsize>(loaded.params.logits.size() * sizeof(double)));
    if (bin.gcount() !=
        static_cast<std::streamsize>(loaded.params.logits.size() * sizeof(double))) {
        throw std::runtime_error("checkpoint " + bin_path.string() + " is truncated");
    }
    return loaded;
}

} // namespace adgen::policy
