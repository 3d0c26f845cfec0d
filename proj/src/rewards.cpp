#include "crpo/rewards.hpp"

#include <stdexcept>

namespace crpo::rewards {

void BranchAnswers::validate() const {
    const std::size_t g = original.size();
    if (g == 0) throw std::invalid_argument("BranchAnswers: empty group");
    if (counterfactual.size() != g || format_flags_orig.size() != g ||
        format_flags_cf.size() != g)
        throw std::invalid_argument("BranchAnswers: group length mismatch");
}

double r_correct(AnswerId answer, AnswerId gt) { return answer == gt ? 1.0 : 0.0; }

double r_behave(AnswerId cf_answer, AnswerId gt, bool dynamic) {
    const bool equal = cf_answer == gt;
    return (dynamic ? !equal : equal) ? 1.0 : 0.0;
}

double crr_orig(std::size_t i, const BranchAnswers& b, const RewardConfig& cfg) {
    if (i >= b.group_size()) throw std::out_of_range("crr_orig: rollout index");
    const AnswerId own = b.original[i];
    if (own != b.ground_truth) return 0.0;
    // Comparison target is the rollout's own answer, which the gate pins to
    // the ground truth.
    const double g = static_cast<double>(b.group_size());
    long count = 0;
    for (const AnswerId cf : b.counterfactual) {
        const bool equal = cf == own;
        if (b.dynamic ? !equal : equal) ++count;
    }
    const double lambda = b.dynamic ? cfg.lambda_d : cfg.lambda_s;
    return lambda / g * static_cast<double>(count);
}

double crr_aug(std::size_t j, const BranchAnswers& b, const RewardConfig& cfg) {
    if (j >= b.group_size()) throw std::out_of_range("crr_aug: rollout index");
    const double behaves = r_behave(b.counterfactual[j], b.ground_truth, b.dynamic);
    if (behaves == 0.0) return 0.0;
    const double g = static_cast<double>(b.group_size());
    long correct = 0;
    for (const AnswerId o : b.original)
        if (o == b.ground_truth) ++correct;
    const double lambda = b.dynamic ? cfg.lambda_d : cfg.lambda_s;
    return behaves * lambda / g * static_cast<double>(correct);
}

namespace {

RewardBreakdown assemble(double base, double crr, double format, double scale) {
    RewardBreakdown r;
    r.base = base;
    r.crr = crr;
    r.format = format;
    r.scale = scale;
    r.total = scale * (base + crr + format);
    return r;
}

}  // namespace

RewardBreakdown reward_original(std::size_t i, const BranchAnswers& b, const RewardConfig& cfg) {
    b.validate();
    const double format = b.format_flags_orig[i] ? cfg.format_reward_value : 0.0;
    return assemble(r_correct(b.original[i], b.ground_truth), crr_orig(i, b, cfg), format, 1.0);
}

RewardBreakdown reward_counterfactual(std::size_t j, const BranchAnswers& b,
                                      const RewardConfig& cfg) {
    b.validate();
    const double format = b.format_flags_cf[j] ? cfg.format_reward_value : 0.0;
    return assemble(r_behave(b.counterfactual[j], b.ground_truth, b.dynamic), crr_aug(j, b, cfg),
                    format, cfg.w_aug);
}

std::vector<double> grpo_rewards(std::span<const AnswerId> answers, AnswerId gt,
                                 const std::vector<bool>& format_flags, const RewardConfig& cfg) {
    if (answers.size() != format_flags.size())
        throw std::invalid_argument("grpo_rewards: length mismatch");
    std::vector<double> rewards(answers.size());
    for (std::size_t i = 0; i < answers.size(); ++i)
        rewards[i] =
            r_correct(answers[i], gt) + (format_flags[i] ? cfg.format_reward_value : 0.0);
    return rewards;
}

std::vector<double> tgrpo_rewards(std::span<const AnswerId> ordered_answers,
                                  std::span<const AnswerId> shuffled_answers, AnswerId gt,
                                  const RewardConfig& cfg, bool is_video) {
    if (ordered_answers.size() != shuffled_answers.size())
        throw std::invalid_argument("tgrpo_rewards: group length mismatch");
    const double g = static_cast<double>(ordered_answers.size());
    double p = 0.0, p_shuffled = 0.0;
    for (const AnswerId a : ordered_answers) p += r_correct(a, gt);
    for (const AnswerId a : shuffled_answers) p_shuffled += r_correct(a, gt);
    p /= g;
    p_shuffled /= g;
    const double bonus = (is_video && p >= p_shuffled) ? cfg.tgrpo_alpha : 0.0;
    std::vector<double> rewards(ordered_answers.size());
    for (std::size_t i = 0; i < ordered_answers.size(); ++i) {
        const double correct = r_correct(ordered_answers[i], gt);
        rewards[i] = correct > 0.0 ? 1.0 + bonus : 0.0;
    }
    return rewards;
}

std::vector<double> arrowrl_rewards(std::span<const AnswerId> answers, AnswerId reverse_reference,
                                    AnswerId gt, const RewardConfig& cfg) {
    const double alpha = reverse_reference == gt ? cfg.arrowrl_alpha : 0.0;
    std::vector<double> rewards(answers.size());
    for (std::size_t i = 0; i < answers.size(); ++i) {
        const double fidelity = r_correct(answers[i], gt);
        const double reverse = 1.0 - (answers[i] == reverse_reference ? 1.0 : 0.0);
        rewards[i] = fidelity + alpha * reverse;
    }
    return rewards;
}

double expected_crr(double p, double q, double lambda) {
    if (p < 0.0 || p > 1.0 || q < 0.0 || q > 1.0)
        throw std::invalid_argument("expected_crr: rates must be in [0, 1]");
    return lambda * p * q;
}

}  // namespace crpo::rewards
