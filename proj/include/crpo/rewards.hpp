#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "crpo/core.hpp"

namespace crpo::rewards {

// Answers of one prompt's two rollout groups, everything the reward rules need.
struct BranchAnswers {
    std::vector<AnswerId> original;        // length G
    std::vector<AnswerId> counterfactual;  // length G
    AnswerId ground_truth;
    bool dynamic = true;
    std::vector<bool> format_flags_orig;
    std::vector<bool> format_flags_cf;

    std::size_t group_size() const { return original.size(); }
    void validate() const;  // equal lengths, G >= 1
};

// Correctness indicator; the null option never equals a real ground truth.
double r_correct(AnswerId answer, AnswerId gt);

// Expected counterfactual behavior: answer change for dynamic tasks,
// answer agreement for static tasks.
double r_behave(AnswerId cf_answer, AnswerId gt, bool dynamic);

// Cross-branch term for original rollout i, gated on that rollout being
// correct: (lambda/G) * count of counterfactual answers that differ from
// (dynamic) or agree with (static) the rollout's own answer.
double crr_orig(std::size_t i, const BranchAnswers& b, const RewardConfig& cfg);

// Mirror term for counterfactual rollout j, gated on expected behavior:
// r_behave * (lambda/G) * count of correct original answers.
double crr_aug(std::size_t j, const BranchAnswers& b, const RewardConfig& cfg);

RewardBreakdown reward_original(std::size_t i, const BranchAnswers& b, const RewardConfig& cfg);
RewardBreakdown reward_counterfactual(std::size_t j, const BranchAnswers& b,
                                      const RewardConfig& cfg);

// Baseline reward rules.
std::vector<double> grpo_rewards(std::span<const AnswerId> answers, AnswerId gt,
                                 const std::vector<bool>& format_flags, const RewardConfig& cfg);

// Correct ordered rollouts earn 1 + alpha when the ordered group is at least
// as accurate as the frame-shuffled group; the shuffled group itself earns
// nothing and contributes no gradient.
std::vector<double> tgrpo_rewards(std::span<const AnswerId> ordered_answers,
                                  std::span<const AnswerId> shuffled_answers, AnswerId gt,
                                  const RewardConfig& cfg, bool is_video);

// Fidelity plus reverse term against a single reverse-conditioned reference;
// the reverse penalty is active only for AoT-sensitive samples (reference
// equals the ground truth).
std::vector<double> arrowrl_rewards(std::span<const AnswerId> answers, AnswerId reverse_reference,
                                    AnswerId gt, const RewardConfig& cfg);

// Analytic batch-level expectation of either CRR stream when originals are
// correct with rate p and counterfactuals behave with rate q.
double expected_crr(double p, double q, double lambda);

}  // namespace crpo::rewards
