#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dgq/dataset.hpp"
#include "dgq/envs.hpp"
#include "dgq/improve.hpp"
#include "dgq/mdp.hpp"
#include "dgq/qlearn.hpp"

namespace dgq {

enum class Method { mle, standard, dual };

std::string method_name(Method m);
Method parse_method(const std::string& name);

enum class EvalMode { dataset, simulator };

struct EnvSection {
    std::string type = "categorical";  // or "token"
    CategoricalEnvConfig categorical;
    TokenEnvConfig token;
};

struct DataSection {
    double behavior_quality = 0.5;
    double epsilon = 0.2;
    int episodes = 300;
    int horizon = 8;
};

struct ImproveSection {
    Method method = Method::dual;
    int num_candidates = 5;
    double cloning_smoothing = 0.0;
    double generator_temperature = 1.5;
    double generator_smoothing = 0.0;
};

struct EvalSection {
    EvalMode mode = EvalMode::simulator;
    int num_dialogues = 1000;
    int turns = 5;
    std::vector<std::uint64_t> seeds = {1};
};

struct ExperimentConfig {
    EnvSection env;
    DataSection data;
    FitConfig fit_fine;
    FitConfig fit_coarse;
    ImproveSection improve;
    EvalSection eval;
    std::string output_dir = "out";
};

/// Parses the JSON config file; unknown keys are errors.
ExperimentConfig load_experiment_config(const std::string& path);

struct MetricsRow {
    std::string method;
    std::uint64_t seed = 0;
    int L = 0;  // candidate count (0 marks the MLE anchor)
    double cs = 0.0;
    double se = 0.0;
    double rl = 0.0;
    double aq = 0.0;
    double avg_return = 0.0;
};

/// CSV with header method,seed,L,CS,SE,RL,AQ,avg_return; 6 significant
/// digits, "na" for not-applicable entries, rows sorted by (method, seed, L).
void emit_metrics(std::vector<MetricsRow> rows, const std::string& path);

/// Builds the seed-specific environment of the config.
std::pair<EnvSpec, Classifier> build_env(const ExperimentConfig& cfg, std::uint64_t seed);

/// Per-response metric averages plus the average (discounted) return.
/// Dataset mode scores the agent's greedy responses on the dataset states;
/// simulator mode rolls `num_dialogues` episodes of `turns` agent turns
/// against the env's scripted partner. Token metrics need token_cfg and are
/// NaN ("na" in CSV) otherwise.
std::vector<MetricsRow> evaluate_agent(const Policy& agent, const EnvSpec& env,
                                       const TokenEnvConfig* token_cfg, EvalMode mode,
                                       int num_dialogues, int turns, std::uint64_t seed,
                                       const Dataset* held_out = nullptr);

/// Pipeline for one seed: env, behavior policy, dataset, critics, control
/// generator, improved agent. Intermediate artifacts are exposed so the CLI
/// stages and tests can reuse the exact same path.
struct PipelineResult {
    EnvSpec env;
    Classifier cls;
    Policy behavior;
    Dataset dataset;
    Policy mle_agent;
    std::optional<QFunction> q_fine;
    std::optional<QFunction> q_coarse;
    std::optional<ControlGenerator> generator;
    Policy agent;
};

PipelineResult run_pipeline(const ExperimentConfig& cfg, std::uint64_t seed);

/// Full experiment over all configured seeds: runs the pipeline, evaluates,
/// writes metrics.csv, the serialized artifacts, and a manifest of content
/// hashes into cfg.output_dir. Any stage failure removes partial outputs and
/// rethrows naming the stage.
std::vector<MetricsRow> run_experiment(const ExperimentConfig& cfg);

struct SweepResult {
    std::vector<int> Ls;  // excluding the L = 0 anchor
    // method -> L -> per-seed average returns (L = 0 holds the MLE anchor)
    std::map<std::string, std::map<int, std::vector<double>>> returns;
    std::vector<MetricsRow> rows;  // one row per (method, seed, L)
};

/// Runs standard and dual at every L plus the shared MLE anchor at L = 0,
/// writing sweep.csv (method,L,metric,mean,half_std) into cfg.output_dir.
SweepResult sweep_sampling_size(const ExperimentConfig& cfg, const std::vector<int>& Ls);

/// Writes manifest.txt listing every artifact file in dir with its FNV-1a
/// content hash, sorted by name.
void write_manifest(const std::string& dir);

}  // namespace dgq
