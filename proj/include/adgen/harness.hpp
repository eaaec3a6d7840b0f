// Copyright (c) 2026 adgen authors
// SPDX-License-Identifier: Apache-2.0
//
// Run configuration, shared environment construction, the five-way
// ablation runner with directional comparisons, and curve/report
// emission.

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "adgen/ablation.hpp"
#include "adgen/env.hpp"
#include "adgen/rewards.hpp"
#include "adgen/trainer.hpp"

namespace adgen::harness {

/// Configuration problem; the message names the offending key path.
class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    trainer::TrainConfig train;
    env::VocabConfig vocab;
    std::uint64_t oracle_seed = 11;
    std::uint64_t predictor_seed = 13;
    std::size_t predictor_rows = 100000;
    rewards::PredictorConfig predictor;
    int eval_prompts = 256;
    int report_step = 150;
    std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};

    void validate() const;
};

RunConfig default_config();
/// Parses and validates; unknown or ill-typed keys raise ConfigError
/// with the full key path.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);
void save_config(const RunConfig& config, const std::filesystem::path& path);
/// Stable hex digest of the full configuration.
std::string config_digest(const RunConfig& config);

/// Environment shared by every (config, seed) cell of a run: the
/// vocabulary, the hidden oracle, and the predictor trained on
/// oracle-labeled synthetic rows.
struct EnvironmentBundle {
    env::Vocabulary vocab;
    env::OracleParams oracle;
    rewards::CtcvrPredictor predictor;
};

env::OracleDataset make_dataset(const RunConfig& config, const env::Vocabulary& vocab,
                                const env::OracleParams& oracle, std::size_t rows,
                                std::uint64_t stream);
EnvironmentBundle build_environment(const RunConfig& config);

struct CellResult {
    AblationId id = AblationId::model1;
    std::uint64_t seed = 0;
    bool failed = false;
    std::string error;
    trainer::StepLog first;  // batch metrics under the initial policy
    trainer::StepLog report; // batch metrics at the report step
    trainer::EvalMetrics eval;
};

struct ComparisonResult {
    std::string name;
    std::vector<std::uint64_t> seeds;
    std::vector<bool> held;
    int held_count = 0;
    int required = 0; // ceil(0.8 * seeds)
    bool pass = false;
};

struct AblationReport {
    std::string config_digest;
    std::vector<std::uint64_t> seeds;
    int report_step = 0;
    std::vector<CellResult> cells;
    std::vector<ComparisonResult> comparisons;
    bool any_failed = false;
    bool all_pass = false;
};

/// Trains all five configurations per seed against one shared
/// environment, writes per-cell curves, and evaluates each trained
/// policy against its own initial policy as the baseline.
AblationReport run_ablation(const RunConfig& config, std::span<const std::uint64_t> seeds,
                            const std::filesystem::path& out_dir);

const CellResult* find_cell(const AblationReport& report, AblationId id, std::uint64_t seed);

void write_curves_csv(std::span<const trainer::StepLog> logs,
                      const std::filesystem::path& path);

/// Writes report.json and report.txt; reruns with identical inputs
/// produce byte-identical files.
void emit_report(const AblationReport& report, const std::filesystem::path& dir);
AblationReport load_report(const std::filesystem::path& json_path);

struct TrainRunResult {
    std::vector<trainer::StepLog> logs;
    trainer::EvalMetrics eval;
};

/// Single-configuration training run: curves.csv, final checkpoint,
/// eval.json, and optionally trace.jsonl with per-step advantages.
TrainRunResult run_training(const RunConfig& config, const EnvironmentBundle& bundle,
                            const std::filesystem::path& out_dir, bool trace);

} // namespace adgen::harness
