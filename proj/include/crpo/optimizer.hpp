#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "crpo/core.hpp"
#include "crpo/rng.hpp"
#include "crpo/world.hpp"

namespace crpo::opt {

// Degeneracy threshold: groups whose population std is at most this yield
// all-zero advantages; everything else divides by the exact std, so constant
// offsets to binary rewards cancel exactly.
inline constexpr double kEpsNum = 1e-8;

enum class NormScheme { PerGroupMeanStd, HybridJointStd, GroupMeanBatchStd };
enum class Algorithm { GRPO, TGRPO, ArrowRL, CRPO };

std::string_view to_label(NormScheme s);
std::string_view to_label(Algorithm a);
NormScheme norm_scheme_from_label(std::string_view s);
Algorithm algorithm_from_label(std::string_view s);

// Tabular softmax policy: one logit per (observation signature, option index),
// zero for keys never written.
struct PolicyParams {
    std::map<std::string, std::map<int, double>> logits;

    double logit(const std::string& sig, AnswerId a) const;
    void set_logit(const std::string& sig, AnswerId a, double value);
    void add_logit(const std::string& sig, AnswerId a, double value);

    bool operator==(const PolicyParams&) const = default;
};

json to_json(const PolicyParams& p);
PolicyParams policy_params_from_json(const json& j);

struct TrainConfig {
    int group_size = 8;  // rollouts per group G
    double clip_epsilon = 0.2;
    double kl_beta = 0.01;
    double learning_rate = 0.1;
    int batch_prompts = 8;
    int steps = 200;
    Algorithm algorithm = Algorithm::CRPO;
    NormScheme norm_scheme = NormScheme::HybridJointStd;
    std::uint64_t seed = 0;
    // Gradient updates per sampled batch; 1 keeps training fully on-policy.
    int updates_per_generation = 1;

    void validate() const;  // throws std::invalid_argument naming the field
};

struct StepDiagnostics {
    int step = 0;
    double mean_correct_reward = 0.0;
    double zero_advantage_fraction = 0.0;         // per rollout group, each branch separately
    double zero_advantage_fraction_merged = 0.0;  // per prompt, all branches pooled
    double mean_crr_reward = 0.0;
    double mean_aux_reward = 0.0;
    double mean_behave_reward = 0.0;
};

// A_i = (r_i - mean) / max(population std, eps); an all-equal group yields zeros.
std::vector<double> normalize_per_group(std::span<const double> rewards);

// Branch-wise mean centering with one standard deviation computed jointly
// over both branches' centered rewards (2G values).
std::pair<std::vector<double>, std::vector<double>> normalize_hybrid(
    std::span<const double> orig_rewards, std::span<const double> cf_rewards);

// Group-level mean, batch-level standard deviation.
std::vector<std::vector<double>> normalize_group_mean_batch_std(
    const std::vector<std::vector<double>>& groups);

struct CancellationReport {
    double max_abs_delta = 0.0;
};

// Adds C to every correct rollout of a binary reward group and reports how
// much the per-group advantages move. Per-group mean-std normalization
// cancels the offset exactly (up to the eps guard).
CancellationReport verify_cancellation(std::span<const double> rewards,
                                       const std::vector<bool>& correct_mask, double C);

// Softmax over exactly the listed options' logits.
std::vector<double> softmax_prob(const PolicyParams& params, const std::string& sig,
                                 std::span<const AnswerId> options);

AnswerId greedy_answer(const PolicyParams& params, const std::string& sig,
                       std::span<const AnswerId> options);
AnswerId sample_answer(const PolicyParams& params, const std::string& sig,
                       std::span<const AnswerId> options, Rng& rng,
                       double* logprob_out = nullptr);

// min(rho * A, clip(rho, 1 - eps, 1 + eps) * A)
double clipped_term(double rho, double advantage, double eps);

struct ScoredRollout {
    AnswerId answer;
    double behavior_logprob = 0.0;
    double advantage = 0.0;
};

struct ScoredGroup {
    std::string signature;
    std::vector<AnswerId> options;  // full answer space, null option last
    std::vector<ScoredRollout> rollouts;
};

// One prompt's gradient-contributing groups: one for single-branch
// algorithms, original + counterfactual for the dual-branch objective.
struct PromptSample {
    std::vector<ScoredGroup> groups;
};

// Mean over prompts of the per-branch clipped surrogate sums, minus
// kl_beta * KL(policy || reference) per visited signature.
double crpo_objective(std::span<const PromptSample> batch, const PolicyParams& params,
                      const PolicyParams& reference, const TrainConfig& cfg);

using GradientMap = std::map<std::string, std::map<int, double>>;

// Analytic gradient of crpo_objective with respect to every touched logit.
GradientMap policy_gradient(std::span<const PromptSample> batch, const PolicyParams& params,
                            const PolicyParams& reference, const TrainConfig& cfg);

using InstanceSampler = std::function<world::WorldInstance(Rng&)>;

struct TrainContext {
    InstanceSampler sampler;
    RewardConfig reward;
    TrainConfig train;
    ObservationChannel channel = ObservationChannel::FullVideo;
};

// One sampled batch, advantage normalization per the configured scheme, and
// updates_per_generation gradient-ascent updates against the sampled
// behavior policy.
StepDiagnostics train_step(PolicyParams& params, const TrainContext& ctx,
                           const PolicyParams& reference, Rng& rng, int step_index);

struct TrainResult {
    PolicyParams params;
    std::vector<StepDiagnostics> diagnostics;
};

// Full loop; the KL reference is a frozen snapshot of the initial parameters.
TrainResult train(PolicyParams init, const TrainContext& ctx);

}  // namespace crpo::opt
