#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "crpo/core.hpp"
#include "crpo/evalbench.hpp"
#include "crpo/optimizer.hpp"
#include "crpo/world.hpp"

namespace crpo::experiment {

struct EvalSettings {
    int n_pairs = 300;
    std::vector<ObservationChannel> channels = {ObservationChannel::FullVideo};
};

struct SweepSettings {
    std::string param;  // "lambda" or "w_aug"
    std::vector<double> values;
};

struct ExperimentConfig {
    world::WorldConfig world;
    RewardConfig reward;
    opt::TrainConfig train;
    EvalSettings eval;
    std::string output_dir = "runs/default";
    // Strength of the base policy's static-cue prior; 0 starts from a blank
    // table. Models a pre-trained policy that already answers from static
    // cues before any RL happens.
    double prior_bias = 4.0;
    // Base-policy logit on the appended null option. Negative by default:
    // pre-trained models rarely volunteer "none of the above".
    double prior_null_bias = -1.0;
    ObservationChannel train_channel = ObservationChannel::FullVideo;
    std::optional<SweepSettings> sweep;

    void validate() const;
};

ExperimentConfig default_config();

json to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

// FNV-1a over the canonical JSON dump.
std::string config_hash(const ExperimentConfig& cfg);

// Base-policy table with +bias on the cue-predicted option of every
// enumerable question signature (the true answer for static questions, the
// first option where no cue applies) and null_bias on the null option.
opt::PolicyParams build_shortcut_prior(const world::WorldConfig& cfg, double bias,
                                       ObservationChannel channel, double null_bias = 0.0);

opt::InstanceSampler make_sampler(world::WorldConfig cfg);

// Trains from the shortcut prior with the config's seed streams.
opt::TrainResult run_train(const ExperimentConfig& cfg);

// Benchmark pairs drawn from the config's world restricted to its dynamic
// task types, on the "world-eval" seed stream (identical across sweep points).
std::vector<world::BenchmarkPair> make_eval_pairs(const ExperimentConfig& cfg, int n_pairs);

evalbench::EvalReport run_policy_eval(const opt::PolicyParams& params,
                                      const ExperimentConfig& cfg, ObservationChannel channel);

// Greedy accuracy on freshly sampled single (original-side) questions.
double singles_accuracy(const opt::PolicyParams& params, const ExperimentConfig& cfg,
                        int n_questions);

struct SweepRow {
    std::string param;
    double value = 0.0;
    std::string channel;
    double acc = 0.0;
    double p_acc = 0.0;
};

ExperimentConfig apply_sweep_value(ExperimentConfig base, const std::string& param, double value);
std::vector<SweepRow> run_sweep(const ExperimentConfig& cfg);

// File outputs (UTF-8, '.' decimal separator, deterministic formatting).
void write_diagnostics_csv(std::span<const opt::StepDiagnostics> diagnostics,
                           opt::Algorithm algorithm, const std::filesystem::path& path);
void write_policy(const opt::PolicyParams& params, const std::filesystem::path& path);
opt::PolicyParams load_policy(const std::filesystem::path& path);
void write_run_manifest(const ExperimentConfig& cfg, const std::filesystem::path& path);
void write_eval_report(const evalbench::EvalReport& report, const std::filesystem::path& path);
void append_eval_summary_csv(const evalbench::EvalReport& report, ObservationChannel channel,
                             const std::filesystem::path& path, bool write_header);
void write_sweep_csv(std::span<const SweepRow> rows, const std::filesystem::path& path);

// Output root override from the environment (CRPO_OUTPUT_ROOT).
std::filesystem::path resolve_output_dir(const std::string& configured);

std::string format_double(double v);

}  // namespace crpo::experiment
