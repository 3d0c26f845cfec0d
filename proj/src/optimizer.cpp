#include "crpo/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "crpo/rewards.hpp"
#include "crpo/router.hpp"

namespace crpo::opt {

std::string_view to_label(NormScheme s) {
    switch (s) {
        case NormScheme::PerGroupMeanStd: return "per_group_mean_std";
        case NormScheme::HybridJointStd: return "hybrid_joint_std";
        case NormScheme::GroupMeanBatchStd: return "group_mean_batch_std";
    }
    throw std::invalid_argument("bad norm scheme");
}

std::string_view to_label(Algorithm a) {
    switch (a) {
        case Algorithm::GRPO: return "grpo";
        case Algorithm::TGRPO: return "tgrpo";
        case Algorithm::ArrowRL: return "arrowrl";
        case Algorithm::CRPO: return "crpo";
    }
    throw std::invalid_argument("bad algorithm");
}

NormScheme norm_scheme_from_label(std::string_view s) {
    if (s == "per_group_mean_std") return NormScheme::PerGroupMeanStd;
    if (s == "hybrid_joint_std") return NormScheme::HybridJointStd;
    if (s == "group_mean_batch_std") return NormScheme::GroupMeanBatchStd;
    throw std::invalid_argument("norm_scheme: unknown label '" + std::string(s) + "'");
}

Algorithm algorithm_from_label(std::string_view s) {
    if (s == "grpo") return Algorithm::GRPO;
    if (s == "tgrpo") return Algorithm::TGRPO;
    if (s == "arrowrl") return Algorithm::ArrowRL;
    if (s == "crpo") return Algorithm::CRPO;
    throw std::invalid_argument("algorithm: unknown label '" + std::string(s) + "'");
}

double PolicyParams::logit(const std::string& sig, AnswerId a) const {
    auto it = logits.find(sig);
    if (it == logits.end()) return 0.0;
    auto jt = it->second.find(a.index);
    return jt == it->second.end() ? 0.0 : jt->second;
}

void PolicyParams::set_logit(const std::string& sig, AnswerId a, double value) {
    logits[sig][a.index] = value;
}

void PolicyParams::add_logit(const std::string& sig, AnswerId a, double value) {
    logits[sig][a.index] += value;
}

json to_json(const PolicyParams& p) {
    json sigs = json::object();
    for (const auto& [sig, row] : p.logits) {
        json entry = json::object();
        for (const auto& [opt, v] : row) entry[std::to_string(opt)] = v;
        sigs[sig] = std::move(entry);
    }
    return json{{"logits", std::move(sigs)}};
}

PolicyParams policy_params_from_json(const json& j) {
    PolicyParams p;
    if (!j.is_object() || !j.contains("logits"))
        throw std::invalid_argument("policy: missing field 'logits'");
    for (const auto& [sig, row] : j.at("logits").items()) {
        for (const auto& [opt, v] : row.items()) {
            const double value = v.get<double>();
            if (!std::isfinite(value))
                throw std::invalid_argument("policy: non-finite logit for '" + sig + "'");
            p.logits[sig][std::stoi(opt)] = value;
        }
    }
    return p;
}

void TrainConfig::validate() const {
    if (group_size < 2) throw std::invalid_argument("train.group_size: must be >= 2");
    if (!(clip_epsilon > 0.0) || clip_epsilon >= 1.0)
        throw std::invalid_argument("train.clip_epsilon: must be in (0, 1)");
    if (kl_beta < 0.0) throw std::invalid_argument("train.kl_beta: must be >= 0");
    if (learning_rate < 0.0) throw std::invalid_argument("train.learning_rate: must be >= 0");
    if (batch_prompts < 1) throw std::invalid_argument("train.batch_prompts: must be >= 1");
    if (steps < 1) throw std::invalid_argument("train.steps: must be >= 1");
    if (updates_per_generation < 1)
        throw std::invalid_argument("train.updates_per_generation: must be >= 1");
}

namespace {

double mean_of(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

}  // namespace

std::vector<double> normalize_per_group(std::span<const double> rewards) {
    if (rewards.size() < 2) throw std::invalid_argument("normalize_per_group: need G >= 2");
    const double mean = mean_of(rewards);
    double var = 0.0;
    for (double r : rewards) var += (r - mean) * (r - mean);
    const double std_dev = std::sqrt(var / static_cast<double>(rewards.size()));
    std::vector<double> adv(rewards.size(), 0.0);
    if (std_dev <= kEpsNum) return adv;  // degenerate group, zero advantages
    for (std::size_t i = 0; i < rewards.size(); ++i)
        adv[i] = (rewards[i] - mean) / std_dev;
    return adv;
}

std::pair<std::vector<double>, std::vector<double>> normalize_hybrid(
    std::span<const double> orig_rewards, std::span<const double> cf_rewards) {
    if (orig_rewards.size() < 2 || cf_rewards.size() < 2)
        throw std::invalid_argument("normalize_hybrid: need G >= 2 in both branches");
    const double mean_o = mean_of(orig_rewards);
    const double mean_c = mean_of(cf_rewards);
    double var = 0.0;
    for (double r : orig_rewards) var += (r - mean_o) * (r - mean_o);
    for (double r : cf_rewards) var += (r - mean_c) * (r - mean_c);
    const double joint_std =
        std::sqrt(var / static_cast<double>(orig_rewards.size() + cf_rewards.size()));
    std::vector<double> adv_o(orig_rewards.size(), 0.0), adv_c(cf_rewards.size(), 0.0);
    if (joint_std <= kEpsNum) return {std::move(adv_o), std::move(adv_c)};
    for (std::size_t i = 0; i < orig_rewards.size(); ++i)
        adv_o[i] = (orig_rewards[i] - mean_o) / joint_std;
    for (std::size_t j = 0; j < cf_rewards.size(); ++j)
        adv_c[j] = (cf_rewards[j] - mean_c) / joint_std;
    return {std::move(adv_o), std::move(adv_c)};
}

std::vector<std::vector<double>> normalize_group_mean_batch_std(
    const std::vector<std::vector<double>>& groups) {
    if (groups.empty()) return {};
    double var = 0.0;
    long n = 0;
    std::vector<double> means(groups.size());
    for (std::size_t g = 0; g < groups.size(); ++g) {
        if (groups[g].size() < 2)
            throw std::invalid_argument("normalize_group_mean_batch_std: need G >= 2");
        means[g] = mean_of(groups[g]);
        for (double r : groups[g]) {
            var += (r - means[g]) * (r - means[g]);
            ++n;
        }
    }
    const double batch_std = std::sqrt(var / static_cast<double>(n));
    std::vector<std::vector<double>> out(groups.size());
    for (std::size_t g = 0; g < groups.size(); ++g) out[g].assign(groups[g].size(), 0.0);
    if (batch_std <= kEpsNum) return out;
    for (std::size_t g = 0; g < groups.size(); ++g)
        for (std::size_t i = 0; i < groups[g].size(); ++i)
            out[g][i] = (groups[g][i] - means[g]) / batch_std;
    return out;
}

CancellationReport verify_cancellation(std::span<const double> rewards,
                                       const std::vector<bool>& correct_mask, double C) {
    if (rewards.size() != correct_mask.size())
        throw std::invalid_argument("verify_cancellation: length mismatch");
    for (std::size_t i = 0; i < rewards.size(); ++i)
        if (rewards[i] != (correct_mask[i] ? 1.0 : 0.0))
            throw std::invalid_argument("verify_cancellation: rewards must be the binary "
                                        "indicator of correct_mask");
    std::vector<double> perturbed(rewards.begin(), rewards.end());
    for (std::size_t i = 0; i < perturbed.size(); ++i)
        if (correct_mask[i]) perturbed[i] += C;
    const auto before = normalize_per_group(rewards);
    const auto after = normalize_per_group(perturbed);
    CancellationReport report;
    for (std::size_t i = 0; i < before.size(); ++i)
        report.max_abs_delta = std::max(report.max_abs_delta, std::abs(after[i] - before[i]));
    return report;
}

std::vector<double> softmax_prob(const PolicyParams& params, const std::string& sig,
                                 std::span<const AnswerId> options) {
    if (options.empty()) throw std::invalid_argument("softmax_prob: empty option list");
    std::vector<double> z(options.size());
    double z_max = -HUGE_VAL;
    for (std::size_t i = 0; i < options.size(); ++i) {
        z[i] = params.logit(sig, options[i]);
        z_max = std::max(z_max, z[i]);
    }
    double total = 0.0;
    for (double& v : z) {
        v = std::exp(v - z_max);
        total += v;
    }
    for (double& v : z) v /= total;
    return z;
}

AnswerId greedy_answer(const PolicyParams& params, const std::string& sig,
                       std::span<const AnswerId> options) {
    const auto probs = softmax_prob(params, sig, options);
    std::size_t best = 0;
    for (std::size_t i = 1; i < probs.size(); ++i)
        if (probs[i] > probs[best]) best = i;  // ties keep the lowest index
    return options[best];
}

AnswerId sample_answer(const PolicyParams& params, const std::string& sig,
                       std::span<const AnswerId> options, Rng& rng, double* logprob_out) {
    const auto probs = softmax_prob(params, sig, options);
    const double u = rng.next_double();
    double acc = 0.0;
    std::size_t chosen = probs.size() - 1;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        acc += probs[i];
        if (u < acc) {
            chosen = i;
            break;
        }
    }
    if (logprob_out) *logprob_out = std::log(probs[chosen]);
    return options[chosen];
}

double clipped_term(double rho, double advantage, double eps) {
    const double clipped = std::clamp(rho, 1.0 - eps, 1.0 + eps);
    return std::min(rho * advantage, clipped * advantage);
}

namespace {

double kl_divergence(const std::vector<double>& p, const std::vector<double>& p_ref) {
    double kl = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) kl += p[i] * (std::log(p[i]) - std::log(p_ref[i]));
    return kl;
}

}  // namespace

double crpo_objective(std::span<const PromptSample> batch, const PolicyParams& params,
                      const PolicyParams& reference, const TrainConfig& cfg) {
    if (batch.empty()) return 0.0;
    double total = 0.0;
    for (const auto& prompt : batch) {
        for (const auto& group : prompt.groups) {
            const auto probs = softmax_prob(params, group.signature, group.options);
            double surrogate = 0.0;
            for (const auto& r : group.rollouts) {
                const double rho =
                    probs[static_cast<std::size_t>(r.answer.index)] / std::exp(r.behavior_logprob);
                surrogate += clipped_term(rho, r.advantage, cfg.clip_epsilon);
            }
            total += surrogate / static_cast<double>(group.rollouts.size());
            if (cfg.kl_beta > 0.0) {
                const auto ref_probs = softmax_prob(reference, group.signature, group.options);
                total -= cfg.kl_beta * kl_divergence(probs, ref_probs);
            }
        }
    }
    return total / static_cast<double>(batch.size());
}

GradientMap policy_gradient(std::span<const PromptSample> batch, const PolicyParams& params,
                            const PolicyParams& reference, const TrainConfig& cfg) {
    GradientMap grad;
    if (batch.empty()) return grad;
    const double inv_batch = 1.0 / static_cast<double>(batch.size());
    for (const auto& prompt : batch) {
        for (const auto& group : prompt.groups) {
            const auto probs = softmax_prob(params, group.signature, group.options);
            auto& row = grad[group.signature];
            const double inv_g = inv_batch / static_cast<double>(group.rollouts.size());
            for (const auto& r : group.rollouts) {
                const auto chosen = static_cast<std::size_t>(r.answer.index);
                const double rho = probs[chosen] / std::exp(r.behavior_logprob);
                const double clipped = std::clamp(rho, 1.0 - cfg.clip_epsilon,
                                                  1.0 + cfg.clip_epsilon);
                // min(rho*A, clip(rho)*A) follows rho only while the unclipped
                // term is the minimum; beyond the clip the derivative is zero.
                if (rho * r.advantage > clipped * r.advantage) continue;
                const double coeff = inv_g * r.advantage * rho;
                for (std::size_t a = 0; a < group.options.size(); ++a) {
                    const double indicator = a == chosen ? 1.0 : 0.0;
                    row[group.options[a].index] += coeff * (indicator - probs[a]);
                }
            }
            if (cfg.kl_beta > 0.0) {
                const auto ref_probs = softmax_prob(reference, group.signature, group.options);
                const double kl = kl_divergence(probs, ref_probs);
                for (std::size_t a = 0; a < group.options.size(); ++a) {
                    const double delta = std::log(probs[a]) - std::log(ref_probs[a]);
                    row[group.options[a].index] -=
                        cfg.kl_beta * inv_batch * probs[a] * (delta - kl);
                }
            }
        }
    }
    return grad;
}

namespace {

struct StepAccumulator {
    double correct_sum = 0.0;
    long correct_n = 0;
    double crr_sum = 0.0;
    long crr_n = 0;
    double aux_sum = 0.0;
    long aux_n = 0;
    double behave_sum = 0.0;
    long behave_n = 0;
    long zero_adv_groups = 0;
    long groups = 0;
    long zero_adv_prompts = 0;
    long prompts = 0;
};

bool all_equal(std::span<const double> v) {
    for (double x : v)
        if (std::abs(x - v.front()) > 1e-12) return false;
    return true;
}

struct SampledGroup {
    std::string signature;
    std::vector<AnswerId> options;
    std::vector<AnswerId> answers;
    std::vector<double> logprobs;
    std::vector<double> rewards;
};

SampledGroup sample_group(const PolicyParams& params, const std::string& sig,
                          const std::vector<AnswerId>& options, int g, Rng& rng) {
    SampledGroup group;
    group.signature = sig;
    group.options = options;
    group.answers.reserve(static_cast<std::size_t>(g));
    group.logprobs.reserve(static_cast<std::size_t>(g));
    for (int i = 0; i < g; ++i) {
        double lp = 0.0;
        group.answers.push_back(sample_answer(params, sig, options, rng, &lp));
        group.logprobs.push_back(lp);
    }
    return group;
}

ScoredGroup to_scored(const SampledGroup& g, const std::vector<double>& advantages) {
    ScoredGroup out;
    out.signature = g.signature;
    out.options = g.options;
    out.rollouts.resize(g.answers.size());
    for (std::size_t i = 0; i < g.answers.size(); ++i)
        out.rollouts[i] = ScoredRollout{g.answers[i], g.logprobs[i], advantages[i]};
    return out;
}

}  // namespace

StepDiagnostics train_step(PolicyParams& params, const TrainContext& ctx,
                           const PolicyParams& reference, Rng& rng, int step_index) {
    const TrainConfig& tc = ctx.train;
    const int g = tc.group_size;
    StepAccumulator acc;

    // Groups that feed the surrogate, per prompt, with their raw rewards;
    // advantages are filled in after the normalization pass.
    std::vector<std::vector<SampledGroup>> prompt_groups;
    prompt_groups.reserve(static_cast<std::size_t>(tc.batch_prompts));

    for (int b = 0; b < tc.batch_prompts; ++b) {
        world::WorldInstance inst = ctx.sampler(rng);
        const Question& q = inst.question;
        const auto options = q.answer_space();
        const std::string sig = world::observe(inst.state, q, ctx.channel);
        std::vector<SampledGroup> groups;

        switch (tc.algorithm) {
            case Algorithm::GRPO: {
                SampledGroup g0 = sample_group(params, sig, options, g, rng);
                const std::vector<bool> flags(g0.answers.size(), true);
                g0.rewards = rewards::grpo_rewards(g0.answers, q.ground_truth, flags, ctx.reward);
                for (const AnswerId a : g0.answers) {
                    acc.correct_sum += rewards::r_correct(a, q.ground_truth);
                    ++acc.correct_n;
                }
                acc.aux_n += static_cast<long>(g0.answers.size());
                groups.push_back(std::move(g0));
                break;
            }
            case Algorithm::TGRPO: {
                SampledGroup ordered = sample_group(params, sig, options, g, rng);
                const std::string shuffled_sig =
                    world::observe(inst.state, q, ObservationChannel::ShuffledFrames);
                // The shuffled group only calibrates the temporal bonus.
                SampledGroup shuffled = sample_group(params, shuffled_sig, options, g, rng);
                ordered.rewards = rewards::tgrpo_rewards(ordered.answers, shuffled.answers,
                                                         q.ground_truth, ctx.reward, true);
                for (std::size_t i = 0; i < ordered.answers.size(); ++i) {
                    const double correct = rewards::r_correct(ordered.answers[i], q.ground_truth);
                    acc.correct_sum += correct;
                    ++acc.correct_n;
                    acc.aux_sum += ordered.rewards[i] - correct;
                    ++acc.aux_n;
                }
                groups.push_back(std::move(ordered));
                break;
            }
            case Algorithm::ArrowRL: {
                SampledGroup g0 = sample_group(params, sig, options, g, rng);
                const WorldState reversed =
                    world::apply_transformation(inst.state, Transformation::TemporalReversal);
                const std::string reverse_sig = world::observe(reversed, q, ctx.channel);
                const AnswerId reference_answer = greedy_answer(params, reverse_sig, options);
                g0.rewards =
                    rewards::arrowrl_rewards(g0.answers, reference_answer, q.ground_truth,
                                             ctx.reward);
                for (std::size_t i = 0; i < g0.answers.size(); ++i) {
                    const double correct = rewards::r_correct(g0.answers[i], q.ground_truth);
                    acc.correct_sum += correct;
                    ++acc.correct_n;
                    acc.aux_sum += g0.rewards[i] - correct;
                    ++acc.aux_n;
                }
                groups.push_back(std::move(g0));
                break;
            }
            case Algorithm::CRPO: {
                const Transformation t = router::select_transformation(q.task_type, rng);
                const WorldState cf_state = world::apply_transformation(inst.state, t);
                const std::string cf_sig = world::observe(cf_state, q, ctx.channel);
                SampledGroup orig = sample_group(params, sig, options, g, rng);
                SampledGroup cf = sample_group(params, cf_sig, options, g, rng);

                rewards::BranchAnswers b;
                b.original = orig.answers;
                b.counterfactual = cf.answers;
                b.ground_truth = q.ground_truth;
                b.dynamic = router::is_dynamic(q.task_type);
                b.format_flags_orig.assign(orig.answers.size(), true);
                b.format_flags_cf.assign(cf.answers.size(), true);

                orig.rewards.resize(orig.answers.size());
                cf.rewards.resize(cf.answers.size());
                for (std::size_t i = 0; i < orig.answers.size(); ++i) {
                    const RewardBreakdown r = rewards::reward_original(i, b, ctx.reward);
                    orig.rewards[i] = r.total;
                    acc.correct_sum += r.base;
                    ++acc.correct_n;
                    acc.crr_sum += r.crr;
                    ++acc.crr_n;
                }
                for (std::size_t j = 0; j < cf.answers.size(); ++j) {
                    const RewardBreakdown r = rewards::reward_counterfactual(j, b, ctx.reward);
                    cf.rewards[j] = r.total;
                    acc.crr_sum += r.crr;
                    ++acc.crr_n;
                    acc.behave_sum += r.base;
                    ++acc.behave_n;
                }
                groups.push_back(std::move(orig));
                groups.push_back(std::move(cf));
                break;
            }
        }
        prompt_groups.push_back(std::move(groups));
    }

    // Advantage normalization.
    std::vector<PromptSample> batch(prompt_groups.size());
    if (tc.norm_scheme == NormScheme::GroupMeanBatchStd) {
        std::vector<std::vector<double>> all_rewards;
        for (const auto& groups : prompt_groups)
            for (const auto& grp : groups) all_rewards.push_back(grp.rewards);
        const auto advs = normalize_group_mean_batch_std(all_rewards);
        std::size_t k = 0;
        for (std::size_t b = 0; b < prompt_groups.size(); ++b)
            for (const auto& grp : prompt_groups[b]) batch[b].groups.push_back(to_scored(grp, advs[k++]));
    } else {
        for (std::size_t b = 0; b < prompt_groups.size(); ++b) {
            const auto& groups = prompt_groups[b];
            if (tc.norm_scheme == NormScheme::HybridJointStd && groups.size() == 2) {
                const auto [adv_o, adv_c] =
                    normalize_hybrid(groups[0].rewards, groups[1].rewards);
                batch[b].groups.push_back(to_scored(groups[0], adv_o));
                batch[b].groups.push_back(to_scored(groups[1], adv_c));
            } else {
                for (const auto& grp : groups)
                    batch[b].groups.push_back(to_scored(grp, normalize_per_group(grp.rewards)));
            }
        }
    }

    // Zero-advantage bookkeeping on raw rewards.
    for (const auto& groups : prompt_groups) {
        std::vector<double> pooled;
        for (const auto& grp : groups) {
            ++acc.groups;
            if (all_equal(grp.rewards)) ++acc.zero_adv_groups;
            pooled.insert(pooled.end(), grp.rewards.begin(), grp.rewards.end());
        }
        ++acc.prompts;
        if (all_equal(pooled)) ++acc.zero_adv_prompts;
    }

    for (int u = 0; u < tc.updates_per_generation; ++u) {
        const GradientMap grad = policy_gradient(batch, params, reference, tc);
        for (const auto& [sig, row] : grad)
            for (const auto& [opt, value] : row)
                if (const double delta = tc.learning_rate * value; delta != 0.0)
                    params.add_logit(sig, AnswerId{opt}, delta);
    }

    StepDiagnostics d;
    d.step = step_index;
    d.mean_correct_reward = acc.correct_n ? acc.correct_sum / acc.correct_n : 0.0;
    d.zero_advantage_fraction =
        acc.groups ? static_cast<double>(acc.zero_adv_groups) / acc.groups : 0.0;
    d.zero_advantage_fraction_merged =
        acc.prompts ? static_cast<double>(acc.zero_adv_prompts) / acc.prompts : 0.0;
    d.mean_crr_reward = acc.crr_n ? acc.crr_sum / acc.crr_n : 0.0;
    d.mean_aux_reward = tc.algorithm == Algorithm::CRPO
                            ? d.mean_crr_reward
                            : (acc.aux_n ? acc.aux_sum / acc.aux_n : 0.0);
    d.mean_behave_reward = acc.behave_n ? acc.behave_sum / acc.behave_n : 0.0;
    return d;
}

TrainResult train(PolicyParams init, const TrainContext& ctx) {
    ctx.train.validate();
    ctx.reward.validate();
    if (!ctx.sampler) throw std::invalid_argument("train: missing instance sampler");
    TrainResult result;
    result.params = std::move(init);
    const PolicyParams reference = result.params;  // frozen step-0 snapshot
    Rng rng = Rng::stream(ctx.train.seed, "rollouts");
    result.diagnostics.reserve(static_cast<std::size_t>(ctx.train.steps));
    for (int s = 0; s < ctx.train.steps; ++s)
        result.diagnostics.push_back(train_step(result.params, ctx, reference, rng, s));
    return result;
}

}  // namespace crpo::opt
