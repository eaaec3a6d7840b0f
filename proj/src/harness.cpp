// Copyright (c) 2026 adgen authors
// SPDX-License-Identifier: Apache-2.0

#include "adgen/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <initializer_list>
#include <sstream>

#include "json.hpp"

namespace adgen::harness {
namespace {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

// --- config parsing ---------------------------------------------------

void check_keys(const json& j, const std::string& path,
                std::initializer_list<const char*> allowed) {
    for (const auto& item : j.items()) {
        const bool known = std::any_of(allowed.begin(), allowed.end(),
                                       [&item](const char* k) { return item.key() == k; });
        if (!known) {
            throw ConfigError(path + "." + item.key() + ": unknown key");
        }
    }
}

const json* sub_object(const json& j, const std::string& path, const char* key) {
    if (!j.contains(key)) {
        return nullptr;
    }
    const json& v = j.at(key);
    if (!v.is_object()) {
        throw ConfigError(path + "." + key + ": expected an object");
    }
    return &v;
}

int get_int(const json& j, const std::string& path, const char* key, int fallback) {
    if (!j.contains(key)) {
        return fallback;
    }
    const json& v = j.at(key);
    if (!v.is_number_integer()) {
        throw ConfigError(path + "." + key + ": expected an integer");
    }
    return v.get<int>();
}

std::uint64_t get_u64(const json& j, const std::string& path, const char* key,
                      std::uint64_t fallback) {
    if (!j.contains(key)) {
        return fallback;
    }
    const json& v = j.at(key);
    if (!v.is_number_integer() || (v.is_number_integer() && v.get<std::int64_t>() < 0)) {
        throw ConfigError(path + "." + key + ": expected a non-negative integer");
    }
    return v.get<std::uint64_t>();
}

double get_double(const json& j, const std::string& path, const char* key, double fallback) {
    if (!j.contains(key)) {
        return fallback;
    }
    const json& v = j.at(key);
    if (!v.is_number()) {
        throw ConfigError(path + "." + key + ": expected a number");
    }
    return v.get<double>();
}

bool get_bool(const json& j, const std::string& path, const char* key, bool fallback) {
    if (!j.contains(key)) {
        return fallback;
    }
    const json& v = j.at(key);
    if (!v.is_boolean()) {
        throw ConfigError(path + "." + key + ": expected a boolean");
    }
    return v.get<bool>();
}

std::string get_string(const json& j, const std::string& path, const char* key,
                       const std::string& fallback) {
    if (!j.contains(key)) {
        return fallback;
    }
    const json& v = j.at(key);
    if (!v.is_string()) {
        throw ConfigError(path + "." + key + ": expected a string");
    }
    return v.get<std::string>();
}

void parse_env_section(const json& j, RunConfig& config) {
    const std::string path = "env";
    check_keys(j, path,
               {"keywords", "cta", "blacklist", "filler", "contradiction_pairs",
                "max_query_keywords", "risk_control", "seed"});
    config.vocab.keywords = get_int(j, path, "keywords", config.vocab.keywords);
    config.vocab.cta = get_int(j, path, "cta", config.vocab.cta);
    config.vocab.blacklist = get_int(j, path, "blacklist", config.vocab.blacklist);
    config.vocab.filler = get_int(j, path, "filler", config.vocab.filler);
    config.vocab.contradiction_pairs =
        get_int(j, path, "contradiction_pairs", config.vocab.contradiction_pairs);
    config.vocab.max_query_keywords =
        get_int(j, path, "max_query_keywords", config.vocab.max_query_keywords);
    config.vocab.risk_control = get_bool(j, path, "risk_control", config.vocab.risk_control);
    config.vocab.seed = get_u64(j, path, "seed", config.vocab.seed);
}

void parse_predictor_section(const json& j, RunConfig& config) {
    const std::string path = "predictor";
    check_keys(j, path,
               {"rows", "hidden", "epochs", "learning_rate", "minibatch", "init_scale", "seed"});
    config.predictor_rows = static_cast<std::size_t>(
        get_u64(j, path, "rows", static_cast<std::uint64_t>(config.predictor_rows)));
    config.predictor.hidden = get_int(j, path, "hidden", config.predictor.hidden);
    config.predictor.epochs = get_int(j, path, "epochs", config.predictor.epochs);
    config.predictor.learning_rate =
        get_double(j, path, "learning_rate", config.predictor.learning_rate);
    config.predictor.minibatch = get_int(j, path, "minibatch", config.predictor.minibatch);
    config.predictor.init_scale =
        get_double(j, path, "init_scale", config.predictor.init_scale);
    config.predictor_seed = get_u64(j, path, "seed", config.predictor_seed);
}

void parse_rewards_section(const json& j, RunConfig& config) {
    const std::string path = "rewards";
    check_keys(j, path,
               {"weights", "length_min", "length_max", "delta_d", "tau_f", "ngram_min",
                "ngram_max", "window"});
    if (const json* w = sub_object(j, path, "weights")) {
        const std::string wpath = path + ".weights";
        check_keys(*w, wpath,
                   {"length", "format", "relevance", "correctness", "risk", "diversity",
                    "ctcvr"});
        rewards::RewardWeights& weights = config.train.weights;
        weights.length = get_double(*w, wpath, "length", weights.length);
        weights.format = get_double(*w, wpath, "format", weights.format);
        weights.relevance = get_double(*w, wpath, "relevance", weights.relevance);
        weights.correctness = get_double(*w, wpath, "correctness", weights.correctness);
        weights.risk = get_double(*w, wpath, "risk", weights.risk);
        weights.diversity = get_double(*w, wpath, "diversity", weights.diversity);
        weights.ctcvr = get_double(*w, wpath, "ctcvr", weights.ctcvr);
    }
    config.train.interval.lo = get_int(j, path, "length_min", config.train.interval.lo);
    config.train.interval.hi = get_int(j, path, "length_max", config.train.interval.hi);
    config.train.diversity.delta_d = get_double(j, path, "delta_d", config.train.diversity.delta_d);
    config.train.diversity.tau_f = get_int(j, path, "tau_f", config.train.diversity.tau_f);
    config.train.diversity.min_n = get_int(j, path, "ngram_min", config.train.diversity.min_n);
    config.train.diversity.max_n = get_int(j, path, "ngram_max", config.train.diversity.max_n);
    const std::string window = get_string(j, path, "window",
                                          config.train.diversity.window ==
                                                  rewards::StatsWindow::batch
                                              ? "batch"
                                              : "global");
    if (window == "batch") {
        config.train.diversity.window = rewards::StatsWindow::batch;
    } else if (window == "global") {
        config.train.diversity.window = rewards::StatsWindow::global;
    } else {
        throw ConfigError(path + ".window: expected \"batch\" or \"global\"");
    }
}

void parse_trainer_section(const json& j, RunConfig& config) {
    const std::string path = "trainer";
    check_keys(j, path,
               {"group_size", "batch_prompts", "steps", "inner_epochs", "clip_eps", "kl_beta",
                "learning_rate", "length_norm", "optimizer", "checkpoint_every"});
    trainer::TrainConfig& t = config.train;
    t.group_size = get_int(j, path, "group_size", t.group_size);
    t.batch_prompts = get_int(j, path, "batch_prompts", t.batch_prompts);
    t.steps = get_int(j, path, "steps", t.steps);
    t.inner_epochs = get_int(j, path, "inner_epochs", t.inner_epochs);
    t.clip_eps = get_double(j, path, "clip_eps", t.clip_eps);
    t.kl_beta = get_double(j, path, "kl_beta", t.kl_beta);
    t.learning_rate = get_double(j, path, "learning_rate", t.learning_rate);
    t.length_norm = get_bool(j, path, "length_norm", t.length_norm);
    t.checkpoint_every = get_int(j, path, "checkpoint_every", t.checkpoint_every);
    const std::string optimizer =
        get_string(j, path, "optimizer",
                   t.optimizer == trainer::Optimizer::adam ? "adam" : "gradient_ascent");
    if (optimizer == "adam") {
        t.optimizer = trainer::Optimizer::adam;
    } else if (optimizer == "gradient_ascent") {
        t.optimizer = trainer::Optimizer::gradient_ascent;
    } else {
        throw ConfigError(path + ".optimizer: expected \"gradient_ascent\" or \"adam\"");
    }
}

void parse_ablation_section(const json& j, RunConfig& config) {
    const std::string path = "ablation";
    check_keys(j, path,
               {"id", "granularity", "structural_quality", "ctcvr", "diversity",
                "semantic_quality", "credit_assignment"});
    const std::string id_name =
        get_string(j, path, "id", ablation_name(config.train.ablation.id));
    AblationConfig ablation;
    try {
        ablation = make_ablation(parse_ablation_id(id_name));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(path + ".id: " + e.what());
    }
    if (j.contains("granularity")) {
        const std::string granularity = get_string(j, path, "granularity", "");
        if (granularity == "sentence") {
            ablation.granularity = Granularity::sentence;
        } else if (granularity == "token") {
            ablation.granularity = Granularity::token;
        } else {
            throw ConfigError(path + ".granularity: expected \"sentence\" or \"token\"");
        }
    }
    ablation.structural_quality =
        get_bool(j, path, "structural_quality", ablation.structural_quality);
    ablation.ctcvr = get_bool(j, path, "ctcvr", ablation.ctcvr);
    ablation.diversity = get_bool(j, path, "diversity", ablation.diversity);
    ablation.semantic_quality =
        get_bool(j, path, "semantic_quality", ablation.semantic_quality);
    ablation.credit_assignment =
        get_bool(j, path, "credit_assignment", ablation.credit_assignment);
    try {
        validate_ablation(ablation);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(path + ": " + e.what());
    }
    config.train.ablation = ablation;
}

// --- serialization helpers -------------------------------------------

ojson step_log_to_json(const trainer::StepLog& log) {
    ojson j;
    j["step"] = log.step;
    j["structural"] = log.structural;
    j["ctcvr"] = log.ctcvr;
    j["diversity"] = log.diversity;
    j["semantic"] = log.semantic;
    j["total"] = log.total;
    j["kl"] = log.kl;
    j["clip_frac"] = log.clip_fraction;
    j["compliance"] = log.compliance;
    return j;
}

trainer::StepLog step_log_from_json(const json& j) {
    trainer::StepLog log;
    log.step = j.at("step").get<int>();
    log.structural = j.at("structural").get<double>();
    log.ctcvr = j.at("ctcvr").get<double>();
    log.diversity = j.at("diversity").get<double>();
    log.semantic = j.at("semantic").get<double>();
    log.total = j.at("total").get<double>();
    log.kl = j.at("kl").get<double>();
    log.clip_fraction = j.at("clip_frac").get<double>();
    log.compliance = j.at("compliance").get<double>();
    return log;
}

ojson eval_to_json(const trainer::EvalMetrics& metrics) {
    ojson j;
    j["ctcvr"] = metrics.ctcvr;
    j["delta_ctcvr"] = metrics.delta_ctcvr;
    j["has_delta"] = metrics.has_delta;
    j["predictor_ctcvr"] = metrics.predictor_ctcvr;
    j["has_predictor"] = metrics.has_predictor;
    j["compliance"] = metrics.compliance;
    j["diversity"] = metrics.diversity;
    j["structural"] = metrics.structural;
    j["semantic"] = metrics.semantic;
    j["n_prompts"] = metrics.n_prompts;
    return j;
}

trainer::EvalMetrics eval_from_json(const json& j) {
    trainer::EvalMetrics metrics;
    metrics.ctcvr = j.at("ctcvr").get<double>();
    metrics.delta_ctcvr = j.at("delta_ctcvr").get<double>();
    metrics.has_delta = j.at("has_delta").get<bool>();
    metrics.predictor_ctcvr = j.at("predictor_ctcvr").get<double>();
    metrics.has_predictor = j.at("has_predictor").get<bool>();
    metrics.compliance = j.at("compliance").get<double>();
    metrics.diversity = j.at("diversity").get<double>();
    metrics.structural = j.at("structural").get<double>();
    metrics.semantic = j.at("semantic").get<double>();
    metrics.n_prompts = j.at("n_prompts").get<int>();
    return metrics;
}

ojson config_to_json(const RunConfig& config) {
    ojson j;
    j["seed"] = config.train.seed;
    j["seeds"] = config.seeds;

    ojson env_j;
    env_j["keywords"] = config.vocab.keywords;
    env_j["cta"] = config.vocab.cta;
    env_j["blacklist"] = config.vocab.blacklist;
    env_j["filler"] = config.vocab.filler;
    env_j["contradiction_pairs"] = config.vocab.contradiction_pairs;
    env_j["max_query_keywords"] = config.vocab.max_query_keywords;
    env_j["risk_control"] = config.vocab.risk_control;
    env_j["seed"] = config.vocab.seed;
    j["env"] = env_j;

    j["oracle"] = ojson{{"seed", config.oracle_seed}};

    ojson pred_j;
    pred_j["rows"] = config.predictor_rows;
    pred_j["hidden"] = config.predictor.hidden;
    pred_j["epochs"] = config.predictor.epochs;
    pred_j["learning_rate"] = config.predictor.learning_rate;
    pred_j["minibatch"] = config.predictor.minibatch;
    pred_j["init_scale"] = config.predictor.init_scale;
    pred_j["seed"] = config.predictor_seed;
    j["predictor"] = pred_j;

    ojson policy_j;
    policy_j["order"] = config.train.order;
    policy_j["init_scale"] = config.train.init_scale;
    policy_j["max_len"] = config.train.max_len;
    j["policy"] = policy_j;

    ojson rewards_j;
    ojson weights_j;
    weights_j["length"] = config.train.weights.length;
    weights_j["format"] = config.train.weights.format;
    weights_j["relevance"] = config.train.weights.relevance;
    weights_j["correctness"] = config.train.weights.correctness;
    weights_j["risk"] = config.train.weights.risk;
    weights_j["diversity"] = config.train.weights.diversity;
    weights_j["ctcvr"] = config.train.weights.ctcvr;
    rewards_j["weights"] = weights_j;
    rewards_j["length_min"] = config.train.interval.lo;
    rewards_j["length_max"] = config.train.interval.hi;
    rewards_j["delta_d"] = config.train.diversity.delta_d;
    rewards_j["tau_f"] = config.train.diversity.tau_f;
    rewards_j["ngram_min"] = config.train.diversity.min_n;
    rewards_j["ngram_max"] = config.train.diversity.max_n;
    rewards_j["window"] =
        config.train.diversity.window == rewards::StatsWindow::batch ? "batch" : "global";
    j["rewards"] = rewards_j;

    ojson credit_j;
    credit_j["alpha"] = config.train.alpha;
    credit_j["lambda1"] = config.train.lambda1;
    credit_j["lambda2"] = config.train.lambda2;
    j["credit"] = credit_j;

    ojson trainer_j;
    trainer_j["group_size"] = config.train.group_size;
    trainer_j["batch_prompts"] = config.train.batch_prompts;
    trainer_j["steps"] = config.train.steps;
    trainer_j["inner_epochs"] = config.train.inner_epochs;
    trainer_j["clip_eps"] = config.train.clip_eps;
    trainer_j["kl_beta"] = config.train.kl_beta;
    trainer_j["learning_rate"] = config.train.learning_rate;
    trainer_j["length_norm"] = config.train.length_norm;
    trainer_j["optimizer"] =
        config.train.optimizer == trainer::Optimizer::adam ? "adam" : "gradient_ascent";
    trainer_j["checkpoint_every"] = config.train.checkpoint_every;
    j["trainer"] = trainer_j;

    ojson ablation_j;
    ablation_j["id"] = ablation_name(config.train.ablation.id);
    ablation_j["granularity"] =
        config.train.ablation.granularity == Granularity::token ? "token" : "sentence";
    j["ablation"] = ablation_j;

    j["eval"] = ojson{{"prompts", config.eval_prompts}};
    j["report"] = ojson{{"step", config.report_step}};
    return j;
}

std::uint64_t eval_cell_seed(std::uint64_t train_seed) {
    return splitmix64(train_seed ^ 0x5eeda11ull);
}

CellResult run_cell(const RunConfig& config, const EnvironmentBundle& bundle, AblationId id,
                    std::uint64_t seed, const std::filesystem::path& cell_dir) {
    CellResult cell;
    cell.id = id;
    cell.seed = seed;
    try {
        trainer::TrainConfig tc = config.train;
        tc.seed = seed;
        tc.ablation = make_ablation(id);
        std::filesystem::create_directories(cell_dir);
        if (tc.checkpoint_every > 0) {
            tc.checkpoint_dir = cell_dir;
        }
        trainer::Trainer tr(tc, bundle.vocab, bundle.predictor);
        const std::vector<trainer::StepLog> logs = tr.run();
        write_curves_csv(logs, cell_dir / "curves.csv");
        cell.first = logs.front();
        cell.report = logs.at(static_cast<std::size_t>(config.report_step) - 1);
        cell.eval = trainer::evaluate(tr.params(), &tr.reference(), true, bundle.vocab,
                                      bundle.oracle, &bundle.predictor, tc.interval,
                                      tc.diversity, config.eval_prompts, tc.max_len,
                                      eval_cell_seed(seed));
    } catch (const std::exception& e) {
        cell.failed = true;
        cell.error = e.what();
    }
    return cell;
}

int required_majority(int seed_count) {
    return (4 * seed_count + 4) / 5; // ceil(0.8 n)
}

void add_comparison(AblationReport& report, const std::string& name,
                    const std::function<bool(const CellResult&, const CellResult&)>& holds,
                    AblationId lhs, AblationId rhs) {
    ComparisonResult comparison;
    comparison.name = name;
    for (std::uint64_t seed : report.seeds) {
        const CellResult* a = find_cell(report, lhs, seed);
        const CellResult* b = find_cell(report, rhs, seed);
        const bool ok = a != nullptr && b != nullptr && !a->failed && !b->failed &&
                        holds(*a, *b);
        comparison.seeds.push_back(seed);
        comparison.held.push_back(ok);
        comparison.held_count += ok ? 1 : 0;
    }
    comparison.required = required_majority(static_cast<int>(report.seeds.size()));
    comparison.pass = comparison.held_count >= comparison.required;
    report.comparisons.push_back(std::move(comparison));
}

} // namespace

void RunConfig::validate() const {
    train.validate();
    if (eval_prompts < 1) {
        throw ConfigError("eval.prompts: must be positive");
    }
    if (report_step < 1 || report_step > train.steps) {
        throw ConfigError("report.step: must lie in [1, trainer.steps]");
    }
    if (predictor_rows == 0) {
        throw ConfigError("predictor.rows: must be positive");
    }
    if (predictor.hidden < 1 || predictor.epochs < 1 || predictor.minibatch < 1 ||
        predictor.learning_rate <= 0.0 || predictor.init_scale < 0.0) {
        throw ConfigError("predictor: widths, epochs, minibatch and rates must be positive");
    }
    if (seeds.empty()) {
        throw ConfigError("seeds: at least one seed is required");
    }
}

RunConfig default_config() { return RunConfig{}; }

RunConfig parse_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) {
        throw ConfigError("config root must be a JSON object");
    }
    check_keys(j, "config",
               {"seed", "seeds", "env", "oracle", "predictor", "policy", "rewards", "credit",
                "trainer", "ablation", "eval", "report"});

    RunConfig config = default_config();
    config.train.seed = get_u64(j, "config", "seed", config.train.seed);
    if (j.contains("seeds")) {
        const json& seeds = j.at("seeds");
        if (!seeds.is_array()) {
            throw ConfigError("seeds: expected an array of non-negative integers");
        }
        config.seeds.clear();
        for (const json& s : seeds) {
            if (!s.is_number_integer() || s.get<std::int64_t>() < 0) {
                throw ConfigError("seeds: expected an array of non-negative integers");
            }
            config.seeds.push_back(s.get<std::uint64_t>());
        }
    }
    if (const json* section = sub_object(j, "config", "env")) {
        parse_env_section(*section, config);
    }
    if (const json* section = sub_object(j, "config", "oracle")) {
        check_keys(*section, "oracle", {"seed"});
        config.oracle_seed = get_u64(*section, "oracle", "seed", config.oracle_seed);
    }
    if (const json* section = sub_object(j, "config", "predictor")) {
        parse_predictor_section(*section, config);
    }
    if (const json* section = sub_object(j, "config", "policy")) {
        check_keys(*section, "policy", {"order", "init_scale", "max_len"});
        config.train.order = get_int(*section, "policy", "order", config.train.order);
        config.train.init_scale =
            get_double(*section, "policy", "init_scale", config.train.init_scale);
        config.train.max_len = get_int(*section, "policy", "max_len", config.train.max_len);
    }
    if (const json* section = sub_object(j, "config", "rewards")) {
        parse_rewards_section(*section, config);
    }
    if (const json* section = sub_object(j, "config", "credit")) {
        check_keys(*section, "credit", {"alpha", "lambda1", "lambda2"});
        config.train.alpha = get_double(*section, "credit", "alpha", config.train.alpha);
        config.train.lambda1 = get_double(*section, "credit", "lambda1", config.train.lambda1);
        config.train.lambda2 = get_double(*section, "credit", "lambda2", config.train.lambda2);
    }
    if (const json* section = sub_object(j, "config", "trainer")) {
        parse_trainer_section(*section, config);
    }
    if (const json* section = sub_object(j, "config", "ablation")) {
        parse_ablation_section(*section, config);
    }
    if (const json* section = sub_object(j, "config", "eval")) {
        check_keys(*section, "eval", {"prompts"});
        config.eval_prompts = get_int(*section, "eval", "prompts", config.eval_prompts);
    }
    if (const json* section = sub_object(j, "config", "report")) {
        check_keys(*section, "report", {"step"});
        config.report_step = get_int(*section, "report", "step", config.report_step);
    }

    try {
        config.validate();
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return config;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file " + path.string());
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str());
}

void save_config(const RunConfig& config, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    }
    out << config_to_json(config).dump(2) << "\n";
}

std::string config_digest(const RunConfig& config) {
    const std::string canonical = config_to_json(config).dump();
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : canonical) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

env::OracleDataset make_dataset(const RunConfig& config, const env::Vocabulary& vocab,
                                const env::OracleParams& oracle, std::size_t rows,
                                std::uint64_t stream) {
    Rng rng(splitmix64(config.predictor_seed ^ (0xda7a5e7ull + stream)));
    return env::label_dataset(oracle, vocab, rows, config.train.interval, config.train.max_len,
                              rng);
}

EnvironmentBundle build_environment(const RunConfig& config) {
    config.validate();
    EnvironmentBundle bundle;
    bundle.vocab = env::build_vocabulary(config.vocab);
    bundle.oracle = env::make_oracle(config.oracle_seed);
    const env::OracleDataset dataset =
        make_dataset(config, bundle.vocab, bundle.oracle, config.predictor_rows, 0);
    Rng train_rng(splitmix64(config.predictor_seed ^ 0x7ea1aull));
    bundle.predictor = rewards::train_ctcvr_predictor(dataset, config.predictor, train_rng);
    return bundle;
}

const CellResult* find_cell(const AblationReport& report, AblationId id, std::uint64_t seed) {
    for (const CellResult& cell : report.cells) {
        if (cell.id == id && cell.seed == seed) {
            return &cell;
        }
    }
    return nullptr;
}

AblationReport run_ablation(const RunConfig& config, std::span<const std::uint64_t> seeds,
                            const std::filesystem::path& out_dir) {
    if (seeds.empty()) {
        throw std::invalid_argument("run_ablation needs at least one seed");
    }
    config.validate();
    std::filesystem::create_directories(out_dir);
    const EnvironmentBundle bundle = build_environment(config);

    AblationReport report;
    report.config_digest = config_digest(config);
    report.seeds.assign(seeds.begin(), seeds.end());
    report.report_step = config.report_step;

    static constexpr AblationId kAllIds[] = {AblationId::model1, AblationId::model2,
                                             AblationId::model3, AblationId::model4,
                                             AblationId::relate};
    for (AblationId id : kAllIds) {
        for (std::uint64_t seed : seeds) {
            const std::filesystem::path cell_dir =
                out_dir / (ablation_name(id) + "_seed" + std::to_string(seed));
            report.cells.push_back(run_cell(config, bundle, id, seed, cell_dir));
            if (report.cells.back().failed) {
                report.any_failed = true;
            }
        }
    }

    add_comparison(report, "Model2 ctcvr above Model1",
                   [](const CellResult& m2, const CellResult& m1) {
                       return m2.report.ctcvr > m1.report.ctcvr;
                   },
                   AblationId::model2, AblationId::model1);
    add_comparison(report, "Model2 diversity below Model1",
                   [](const CellResult& m2, const CellResult& m1) {
                       return m2.report.diversity < m1.report.diversity;
                   },
                   AblationId::model2, AblationId::model1);
    add_comparison(report, "Model3 diversity above Model2",
                   [](const CellResult& m3, const CellResult& m2) {
                       return m3.report.diversity > m2.report.diversity;
                   },
                   AblationId::model3, AblationId::model2);
    add_comparison(report, "RELATE diversity at least Model4",
                   [](const CellResult& relate, const CellResult& m4) {
                       return relate.report.diversity >= m4.report.diversity;
                   },
                   AblationId::relate, AblationId::model4);
    add_comparison(report, "RELATE semantic at least Model4",
                   [](const CellResult& relate, const CellResult& m4) {
                       return relate.report.semantic >= m4.report.semantic;
                   },
                   AblationId::relate, AblationId::model4);

    report.all_pass = std::all_of(report.comparisons.begin(), report.comparisons.end(),
                                  [](const ComparisonResult& c) { return c.pass; });
    return report;
}

void write_curves_csv(std::span<const trainer::StepLog> logs,
                      const std::filesystem::path& path) {
    std::string text = "step,structural,ctcvr,diversity,semantic,total,kl,clip_frac,compliance\n";
    for (const trainer::StepLog& log : logs) {
        text += std::to_string(log.step);
        for (double value : {log.structural, log.ctcvr, log.diversity, log.semantic, log.total,
                             log.kl, log.clip_fraction, log.compliance}) {
            text += ',';
            text += format_double(value);
        }
        text += '\n';
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    }
    out << text;
    if (!out) {
        throw std::runtime_error("failed writing " + path.string());
    }
}

void emit_report(const AblationReport& report, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);

    ojson j;
    j["config_digest"] = report.config_digest;
    j["seeds"] = report.seeds;
    j["report_step"] = report.report_step;
    ojson cells = ojson::array();
    for (const CellResult& cell : report.cells) {
        ojson c;
        c["config"] = ablation_name(cell.id);
        c["seed"] = cell.seed;
        c["failed"] = cell.failed;
        c["error"] = cell.error;
        c["first"] = step_log_to_json(cell.first);
        c["report"] = step_log_to_json(cell.report);
        c["eval"] = eval_to_json(cell.eval);
        cells.push_back(std::move(c));
    }
    j["cells"] = std::move(cells);
    ojson comparisons = ojson::array();
    for (const ComparisonResult& comparison : report.comparisons) {
        ojson c;
        c["name"] = comparison.name;
        c["seeds"] = comparison.seeds;
        c["held"] = comparison.held;
        c["held_count"] = comparison.held_count;
        c["required"] = comparison.required;
        c["pass"] = comparison.pass;
        comparisons.push_back(std::move(c));
    }
    j["comparisons"] = std::move(comparisons);
    j["any_failed"] = report.any_failed;
    j["all_pass"] = report.all_pass;

    {
        std::ofstream out(dir / "report.json", std::ios::binary);
        if (!out) {
            throw std::runtime_error("cannot open " + (dir / "report.json").string() +
                                     " for writing");
        }
        out << j.dump(2) << "\n";
    }

    std::string text;
    text += "Ablation report (step " + std::to_string(report.report_step) + ")\n";
    text += "config digest: " + report.config_digest + "\n\n";
    char line[256];
    std::snprintf(line, sizeof(line), "%-8s %6s %10s %10s %10s %10s %10s %12s\n", "config",
                  "seed", "structural", "ctcvr", "diversity", "semantic", "compliance",
                  "delta_ctcvr");
    text += line;
    for (const CellResult& cell : report.cells) {
        if (cell.failed) {
            std::snprintf(line, sizeof(line), "%-8s %6llu FAILED: %.160s\n",
                          ablation_name(cell.id).c_str(),
                          static_cast<unsigned long long>(cell.seed), cell.error.c_str());
            text += line;
            continue;
        }
        std::snprintf(line, sizeof(line),
                      "%-8s %6llu %10.4f %10.4f %10.4f %10.4f %10.4f %11.4f%%\n",
                      ablation_name(cell.id).c_str(),
                      static_cast<unsigned long long>(cell.seed), cell.report.structural,
                      cell.report.ctcvr, cell.report.diversity, cell.report.semantic,
                      cell.report.compliance, 100.0 * cell.eval.delta_ctcvr);
        text += line;
    }
    text += "\ncomparisons (each must hold in >= ceil(0.8 n) of n seeds):\n";
    for (const ComparisonResult& comparison : report.comparisons) {
        std::snprintf(line, sizeof(line), "  [%s] %-34s held %d/%d (required %d)\n",
                      comparison.pass ? "PASS" : "FAIL", comparison.name.c_str(),
                      comparison.held_count, static_cast<int>(comparison.held.size()),
                      comparison.required);
        text += line;
    }
    text += std::string("\noverall: ") + (report.all_pass ? "PASS" : "FAIL") + "\n";

    std::ofstream out(dir / "report.txt", std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot open " + (dir / "report.txt").string() +
                                 " for writing");
    }
    out << text;
}

AblationReport load_report(const std::filesystem::path& json_path) {
    std::ifstream in(json_path);
    if (!in) {
        throw std::runtime_error("cannot open " + json_path.string());
    }
    json j;
    in >> j;

    AblationReport report;
    report.config_digest = j.at("config_digest").get<std::string>();
    report.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    report.report_step = j.at("report_step").get<int>();
    for (const json& c : j.at("cells")) {
        CellResult cell;
        cell.id = parse_ablation_id(c.at("config").get<std::string>());
        cell.seed = c.at("seed").get<std::uint64_t>();
        cell.failed = c.at("failed").get<bool>();
        cell.error = c.at("error").get<std::string>();
        cell.first = step_log_from_json(c.at("first"));
        cell.report = step_log_from_json(c.at("report"));
        cell.eval = eval_from_json(c.at("eval"));
        report.cells.push_back(std::move(cell));
    }
    for (const json& c : j.at("comparisons")) {
        ComparisonResult comparison;
        comparison.name = c.at("name").get<std::string>();
        comparison.seeds = c.at("seeds").get<std::vector<std::uint64_t>>();
        comparison.held = c.at("held").get<std::vector<bool>>();
        comparison.held_count = c.at("held_count").get<int>();
        comparison.required = c.at("required").get<int>();
        comparison.pass = c.at("pass").get<bool>();
        report.comparisons.push_back(std::move(comparison));
    }
    report.any_failed = j.at("any_failed").get<bool>();
    report.all_pass = j.at("all_pass").get<bool>();
    return report;
}

TrainRunResult run_training(const RunConfig& config, const EnvironmentBundle& bundle,
                            const std::filesystem::path& out_dir, bool trace) {
    config.validate();
    std::filesystem::create_directories(out_dir);

    trainer::TrainConfig tc = config.train;
    if (tc.checkpoint_every > 0) {
        tc.checkpoint_dir = out_dir;
    }
    trainer::Trainer tr(tc, bundle.vocab, bundle.predictor);

    std::ofstream trace_out;
    if (trace) {
        trace_out.open(out_dir / "trace.jsonl", std::ios::binary);
        if (!trace_out) {
            throw std::runtime_error("cannot open trace.jsonl for writing");
        }
        tr.set_trace([&trace_out](int step, const std::vector<policy::Group>& groups,
                                  const std::vector<credit::AdvantageTensor>& advantages) {
            ojson record;
            record["step"] = step;
            ojson groups_j = ojson::array();
            for (std::size_t g = 0; g < groups.size(); ++g) {
                ojson group_j;
                group_j["prompt_id"] = groups[g].prompt.id;
                ojson rollouts_j = ojson::array();
                for (std::size_t i = 0; i < groups[g].rollouts.size(); ++i) {
                    ojson rollout_j;
                    rollout_j["tokens"] = groups[g].rollouts[i].tokens;
                    rollout_j["advantages"] = advantages[g].per_rollout[i];
                    rollouts_j.push_back(std::move(rollout_j));
                }
                group_j["rollouts"] = std::move(rollouts_j);
                groups_j.push_back(std::move(group_j));
            }
            record["groups"] = std::move(groups_j);
            trace_out << record.dump() << "\n";
        });
    }

    TrainRunResult result;
    result.logs = tr.run();
    write_curves_csv(result.logs, out_dir / "curves.csv");
    policy::save_policy(tr.params(), tr.steps_done(), out_dir / "ckpt_final.json");
    result.eval = trainer::evaluate(tr.params(), &tr.reference(), true, bundle.vocab,
                                    bundle.oracle, &bundle.predictor, tc.interval, tc.diversity,
                                    config.eval_prompts, tc.max_len,
                                    eval_cell_seed(tc.seed));
    std::ofstream eval_out(out_dir / "eval.json", std::ios::binary);
    if (!eval_out) {
        throw std::runtime_error("cannot open eval.json for writing");
    }
    eval_out << eval_to_json(result.eval).dump(2) << "\n";
    return result;
}

} // namespace adgen::harness
