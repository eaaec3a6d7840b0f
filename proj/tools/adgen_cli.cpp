// Copyright (c) 2026 adgen authors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line frontend: environment generation, predictor training,
// policy training, the five-way ablation, evaluation, and report
// regeneration.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "adgen/harness.hpp"

namespace fs = std::filesystem;
using namespace adgen;

namespace {

harness::RunConfig load_or_default(const std::string& config_path) {
    if (config_path.empty()) {
        return harness::default_config();
    }
    return harness::load_config(config_path);
}

std::uint64_t eval_seed_for(std::uint64_t train_seed) {
    return splitmix64(train_seed ^ 0x5eeda11ull);
}

int ablation_status(const harness::AblationReport& report) {
    if (report.any_failed) {
        return 1;
    }
    return report.all_pass ? 0 : 2;
}

int run_gen_env(const harness::RunConfig& config, const fs::path& out) {
    fs::create_directories(out);
    const env::Vocabulary vocab = env::build_vocabulary(config.vocab);
    const env::OracleParams oracle = env::make_oracle(config.oracle_seed);
    const env::OracleDataset dataset =
        harness::make_dataset(config, vocab, oracle, config.predictor_rows, 0);
    env::save_vocabulary(vocab, out / "vocab.json");
    env::save_oracle(oracle, out / "oracle.json");
    env::save_dataset_csv(dataset, out / "dataset.csv");
    std::printf("wrote %s (%d tokens)\n", (out / "vocab.json").c_str(),
                static_cast<int>(vocab.size()));
    std::printf("wrote %s\n", (out / "oracle.json").c_str());
    std::printf("wrote %s (%zu rows)\n", (out / "dataset.csv").c_str(), dataset.rows.size());
    return 0;
}

int run_train_predictor(const harness::RunConfig& config, const fs::path& out) {
    fs::create_directories(out);
    const env::Vocabulary vocab = env::build_vocabulary(config.vocab);
    const env::OracleParams oracle = env::make_oracle(config.oracle_seed);
    const env::OracleDataset train_set =
        harness::make_dataset(config, vocab, oracle, config.predictor_rows, 0);
    Rng rng(splitmix64(config.predictor_seed ^ 0x7ea1aull));
    const rewards::CtcvrPredictor predictor =
        rewards::train_ctcvr_predictor(train_set, config.predictor, rng);
    rewards::save_predictor(predictor, out / "predictor.json");

    const std::size_t held_rows = std::max<std::size_t>(1000, config.predictor_rows / 5);
    const env::OracleDataset held_out =
        harness::make_dataset(config, vocab, oracle, held_rows, 1);
    std::vector<double> scores, labels, oracle_probs;
    scores.reserve(held_out.rows.size());
    for (const env::OracleRow& row : held_out.rows) {
        scores.push_back(rewards::predict_ctcvr(predictor, row.features));
        labels.push_back(row.conversion ? 1.0 : 0.0);
        oracle_probs.push_back(env::oracle_ctcvr(oracle, row.features).p_ctcvr);
    }
    std::printf("wrote %s\n", (out / "predictor.json").c_str());
    std::printf("held-out rows: %zu\n", held_out.rows.size());
    std::printf("concordance vs conversion labels: %.4f\n",
                rewards::concordance_index(scores, labels));
    std::printf("concordance vs oracle probabilities: %.4f\n",
                rewards::concordance_index(scores, oracle_probs));
    return 0;
}

int run_train(harness::RunConfig config, const fs::path& out, bool trace) {
    const harness::EnvironmentBundle bundle = harness::build_environment(config);
    const harness::TrainRunResult result = harness::run_training(config, bundle, out, trace);
    const trainer::StepLog& last = result.logs.back();
    std::printf("wrote %s (%zu steps)\n", (out / "curves.csv").c_str(), result.logs.size());
    std::printf("wrote %s\n", (out / "ckpt_final.json").c_str());
    std::printf("wrote %s\n", (out / "eval.json").c_str());
    std::printf("final batch: structural=%.4f ctcvr=%.4f diversity=%.4f semantic=%.4f "
                "compliance=%.4f kl=%.5f\n",
                last.structural, last.ctcvr, last.diversity, last.semantic, last.compliance,
                last.kl);
    std::printf("eval: oracle ctcvr=%.4f delta=%.2f%% compliance=%.4f diversity=%.4f\n",
                result.eval.ctcvr, 100.0 * result.eval.delta_ctcvr, result.eval.compliance,
                result.eval.diversity);
    return 0;
}

int run_ablate(const harness::RunConfig& config, const std::vector<std::uint64_t>& seeds,
               const fs::path& out) {
    const harness::AblationReport report = harness::run_ablation(config, seeds, out);
    harness::emit_report(report, out);
    std::printf("wrote %s\n", (out / "report.json").c_str());
    std::printf("wrote %s\n", (out / "report.txt").c_str());
    for (const harness::ComparisonResult& comparison : report.comparisons) {
        std::printf("[%s] %s: %d/%zu seeds (required %d)\n",
                    comparison.pass ? "PASS" : "FAIL", comparison.name.c_str(),
                    comparison.held_count, comparison.held.size(), comparison.required);
    }
    if (report.any_failed) {
        std::fprintf(stderr, "one or more cells failed; see report.txt\n");
    }
    std::printf("overall: %s\n", report.all_pass ? "PASS" : "FAIL");
    return ablation_status(report);
}

int run_eval(harness::RunConfig config, const std::string& ckpt,
             const std::string& baseline_ckpt) {
    const harness::EnvironmentBundle bundle = harness::build_environment(config);
    const policy::LoadedPolicy loaded = policy::load_policy(ckpt);
    if (loaded.params.vocab_size != static_cast<int>(bundle.vocab.size())) {
        throw std::runtime_error("checkpoint vocabulary size does not match the configuration");
    }
    policy::LoadedPolicy baseline;
    const bool want_delta = !baseline_ckpt.empty();
    if (want_delta) {
        baseline = policy::load_policy(baseline_ckpt);
        if (baseline.params.vocab_size != static_cast<int>(bundle.vocab.size())) {
            throw std::runtime_error(
                "baseline checkpoint vocabulary size does not match the configuration");
        }
    }
    const trainer::EvalMetrics metrics = trainer::evaluate(
        loaded.params, want_delta ? &baseline.params : nullptr, want_delta, bundle.vocab,
        bundle.oracle, &bundle.predictor, config.train.interval, config.train.diversity,
        config.eval_prompts, config.train.max_len, eval_seed_for(config.train.seed));
    nlohmann::ordered_json j;
    j["ctcvr"] = metrics.ctcvr;
    if (metrics.has_delta) {
        j["delta_ctcvr"] = metrics.delta_ctcvr;
    }
    j["predictor_ctcvr"] = metrics.predictor_ctcvr;
    j["compliance"] = metrics.compliance;
    j["diversity"] = metrics.diversity;
    j["structural"] = metrics.structural;
    j["semantic"] = metrics.semantic;
    j["n_prompts"] = metrics.n_prompts;
    std::printf("%s\n", j.dump(2).c_str());
    return 0;
}

int run_report(const fs::path& out) {
    const harness::AblationReport report = harness::load_report(out / "report.json");
    harness::emit_report(report, out);
    std::ifstream txt(out / "report.txt");
    std::printf("%s", std::string(std::istreambuf_iterator<char>(txt),
                                  std::istreambuf_iterator<char>())
                          .c_str());
    return ablation_status(report);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"order-k n-gram ad-text policy: training, ablation, evaluation"};
    app.require_subcommand(1);

    std::string config_path;
    std::uint64_t seed = 0;
    std::string out_dir = "out";
    bool trace = false;
    std::string ckpt_path;
    std::string baseline_path;

    const auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "JSON run configuration file");
        cmd->add_option("--seed", seed, "Seed override");
        cmd->add_option("--out-dir", out_dir, "Output directory (default: out)");
        return cmd;
    };

    CLI::App* gen_env =
        add_common(app.add_subcommand("gen-env", "Write vocabulary, oracle and labeled rows"));
    CLI::App* train_predictor = add_common(app.add_subcommand(
        "train-predictor", "Train the conversion predictor and report held-out concordance"));
    CLI::App* train =
        add_common(app.add_subcommand("train", "Train one policy configuration"));
    train->add_flag("--trace", trace, "Write per-step advantage records to trace.jsonl");
    CLI::App* ablate = add_common(app.add_subcommand(
        "ablate", "Train all five reward configurations across seeds and compare"));
    CLI::App* eval_cmd =
        add_common(app.add_subcommand("eval", "Evaluate a saved policy checkpoint"));
    eval_cmd->add_option("--ckpt", ckpt_path, "Policy checkpoint to evaluate")->required();
    eval_cmd->add_option("--baseline", baseline_path,
                         "Baseline checkpoint for the relative conversion lift");
    CLI::App* report_cmd = add_common(
        app.add_subcommand("report", "Reload report.json, rewrite report.txt and print it"));

    CLI11_PARSE(app, argc, argv);

    try {
        harness::RunConfig config = load_or_default(config_path);
        const bool seed_given = gen_env->count("--seed") || train_predictor->count("--seed") ||
                                train->count("--seed") || ablate->count("--seed") ||
                                eval_cmd->count("--seed") || report_cmd->count("--seed");
        if (seed_given) {
            config.train.seed = seed;
        }
        const fs::path out(out_dir);
        if (gen_env->parsed()) {
            return run_gen_env(config, out);
        }
        if (train_predictor->parsed()) {
            return run_train_predictor(config, out);
        }
        if (train->parsed()) {
            return run_train(config, out, trace);
        }
        if (ablate->parsed()) {
            const std::vector<std::uint64_t> seeds =
                seed_given ? std::vector<std::uint64_t>{seed} : config.seeds;
            return run_ablate(config, seeds, out);
        }
        if (eval_cmd->parsed()) {
            return run_eval(config, ckpt_path, baseline_path);
        }
        if (report_cmd->parsed()) {
            return run_report(out);
        }
    } catch (const harness::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
