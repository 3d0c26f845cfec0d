#include "crpo/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "crpo/optimizer.hpp"
#include "crpo/rewards.hpp"
#include "crpo/rng.hpp"

namespace crpo::verify {

namespace {

std::string fmt(const char* format, auto... args) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), format, args...);
    return std::string(buf);
}

rewards::BranchAnswers worked_example_answers() {
    // G = 4, dynamic, ground truth = option 0. Three originals correct, the
    // counterfactual branch differs from the ground truth in two of four.
    rewards::BranchAnswers b;
    b.original = {AnswerId{0}, AnswerId{0}, AnswerId{0}, AnswerId{1}};
    b.counterfactual = {AnswerId{1}, AnswerId{2}, AnswerId{0}, AnswerId{0}};
    b.ground_truth = AnswerId{0};
    b.dynamic = true;
    b.format_flags_orig.assign(4, true);
    b.format_flags_cf.assign(4, true);
    return b;
}

}  // namespace

CheckResult check_reward_examples() {
    const RewardConfig cfg;  // lambda 0.3, w_aug 0.5, format 0
    const auto b = worked_example_answers();
    const double tol = 1e-12;

    const double v_crr_orig = rewards::crr_orig(0, b, cfg);        // 0.3 * 2/4
    const double v_crr_aug = rewards::crr_aug(0, b, cfg);          // 0.3 * 3/4
    const double v_orig = rewards::reward_original(0, b, cfg).total;
    const double v_cf = rewards::reward_counterfactual(0, b, cfg).total;

    const bool ok = std::abs(v_crr_orig - 0.15) <= tol && std::abs(v_crr_aug - 0.225) <= tol &&
                    std::abs(v_orig - 1.15) <= tol && std::abs(v_cf - 0.6125) <= tol;
    return {"reward_examples", ok,
            fmt("crr_orig=%.17g crr_aug=%.17g orig_total=%.17g cf_total=%.17g", v_crr_orig,
                v_crr_aug, v_orig, v_cf)};
}

CheckResult check_cancellation(std::uint64_t seed, long trials) {
    Rng rng = Rng::stream(seed, "verify-cancellation");
    double worst = 0.0;
    for (long t = 0; t < trials; ++t) {
        const int g = 2 + static_cast<int>(rng.next_below(15));  // G in [2, 16]
        const int n_correct = 1 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(g - 1)));
        std::vector<bool> mask(static_cast<std::size_t>(g), false);
        for (int i = 0; i < n_correct; ++i) mask[static_cast<std::size_t>(i)] = true;
        for (std::size_t i = mask.size(); i > 1; --i) {
            const auto j = rng.next_below(i);
            const bool tmp = mask[i - 1];
            mask[i - 1] = mask[j];
            mask[j] = tmp;
        }
        std::vector<double> rewards(mask.size());
        for (std::size_t i = 0; i < mask.size(); ++i) rewards[i] = mask[i] ? 1.0 : 0.0;
        const double c = (1.0 - rng.next_double()) * 2.0;  // (0, 2]
        worst = std::max(worst,
                         opt::verify_cancellation(rewards, mask, c).max_abs_delta);
    }
    return {"cancellation_per_group", worst <= 1e-9,
            fmt("max advantage delta %.3e over %ld groups (tolerance 1e-9)", worst, trials)};
}

CheckResult check_hybrid_non_cancellation(std::uint64_t seed, long trials) {
    Rng rng = Rng::stream(seed, "verify-hybrid");
    long moved = 0;
    double min_delta = HUGE_VAL;
    for (long t = 0; t < trials; ++t) {
        const int g = 2 + static_cast<int>(rng.next_below(15));
        const auto gs = static_cast<std::size_t>(g);
        std::vector<double> orig(gs), cf(gs);
        std::vector<bool> mask(gs);
        const int n_correct = 1 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(g - 1)));
        const int n_behave = 1 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(g - 1)));
        for (std::size_t i = 0; i < gs; ++i) {
            mask[i] = static_cast<int>(i) < n_correct;
            orig[i] = mask[i] ? 1.0 : 0.0;
            cf[i] = static_cast<int>(i) < n_behave ? 0.65 : 0.0;  // w_aug-scaled behavior reward
        }
        const double c = 0.1 + rng.next_double() * 1.9;  // within (0, 2], away from vanishing offsets
        std::vector<double> perturbed = orig;
        for (std::size_t i = 0; i < gs; ++i)
            if (mask[i]) perturbed[i] += c;
        const auto [before_o, before_c] = opt::normalize_hybrid(orig, cf);
        const auto [after_o, after_c] = opt::normalize_hybrid(perturbed, cf);
        double delta = 0.0;
        for (std::size_t i = 0; i < gs; ++i) {
            delta = std::max(delta, std::abs(after_o[i] - before_o[i]));
            delta = std::max(delta, std::abs(after_c[i] - before_c[i]));
        }
        min_delta = std::min(min_delta, delta);
        if (delta > 0.01) ++moved;
    }
    const double fraction = static_cast<double>(moved) / static_cast<double>(trials);
    return {"hybrid_non_cancellation", fraction >= 0.99,
            fmt("advantages moved > 0.01 on %.2f%% of %ld instances (min delta %.4f)",
                100.0 * fraction, trials, min_delta)};
}

CheckResult check_hybrid_worked_example() {
    const std::vector<double> orig{1.0, 1.0, 0.0, 0.0};
    const std::vector<double> cf{0.5, 0.0, 0.0, 0.0};
    const auto [adv_o, adv_c] = opt::normalize_hybrid(orig, cf);
    // Joint population std over the 2G centered rewards: sqrt(1.1875 / 8).
    const double expect_o = 1.2977;
    const double expect_c0 = 0.9733;
    const double expect_c1 = -0.3244;
    bool ok = std::abs(adv_o[0] - expect_o) <= 2e-4 && std::abs(adv_o[2] + expect_o) <= 2e-4 &&
              std::abs(adv_c[0] - expect_c0) <= 2e-4 && std::abs(adv_c[1] - expect_c1) <= 2e-4;
    // A sample standard deviation (2G - 1 divisor) would land visibly off.
    const double sample_std = std::sqrt(1.1875 / 7.0);
    ok = ok && std::abs(0.5 / sample_std - expect_o) > 0.01;
    return {"hybrid_worked_example", ok,
            fmt("orig[0]=%.6f cf[0]=%.6f cf[1]=%.6f", adv_o[0], adv_c[0], adv_c[1])};
}

CheckResult check_lambda_pq(std::uint64_t seed, long groups_per_cell) {
    Rng rng = Rng::stream(seed, "verify-lambda-pq");
    const double lambda = 0.3;
    const int g = 8;
    RewardConfig cfg;
    cfg.lambda_d = cfg.lambda_s = lambda;
    double worst_rel = 0.0;
    double worst_gap = 0.0;
    for (double p : {0.25, 0.5, 0.75}) {
        for (double q : {0.25, 0.5, 0.75}) {
            double sum_orig = 0.0, sum_aug = 0.0;
            rewards::BranchAnswers b;
            b.ground_truth = AnswerId{0};
            b.dynamic = true;
            b.format_flags_orig.assign(g, true);
            b.format_flags_cf.assign(g, true);
            for (long t = 0; t < groups_per_cell; ++t) {
                b.original.clear();
                b.counterfactual.clear();
                for (int i = 0; i < g; ++i)
                    b.original.push_back(rng.next_bool(p) ? AnswerId{0} : AnswerId{1});
                for (int j = 0; j < g; ++j)
                    b.counterfactual.push_back(rng.next_bool(q) ? AnswerId{1} : AnswerId{0});
                double group_orig = 0.0, group_aug = 0.0;
                for (int i = 0; i < g; ++i) group_orig += rewards::crr_orig(static_cast<std::size_t>(i), b, cfg);
                for (int j = 0; j < g; ++j) group_aug += rewards::crr_aug(static_cast<std::size_t>(j), b, cfg);
                sum_orig += group_orig / g;
                sum_aug += group_aug / g;
            }
            const double mean_orig = sum_orig / static_cast<double>(groups_per_cell);
            const double mean_aug = sum_aug / static_cast<double>(groups_per_cell);
            const double expect = rewards::expected_crr(p, q, lambda);
            worst_rel = std::max(worst_rel, std::abs(mean_orig - expect) / expect);
            worst_rel = std::max(worst_rel, std::abs(mean_aug - expect) / expect);
            worst_gap = std::max(worst_gap,
                                 std::abs(mean_orig - mean_aug) / (0.5 * (mean_orig + mean_aug)));
        }
    }
    return {"lambda_pq_symmetry", worst_rel <= 0.01 && worst_gap <= 0.005,
            fmt("max relative error %.4f%% vs lambda*p*q, stream gap %.4f%%", 100.0 * worst_rel,
                100.0 * worst_gap)};
}

CheckResult check_gradient_finite_difference(std::uint64_t seed, int batches) {
    Rng rng = Rng::stream(seed, "verify-gradient");
    const double h = 1e-5;
    double worst = 0.0;
    for (int bi = 0; bi < batches; ++bi) {
        opt::TrainConfig cfg;
        cfg.clip_epsilon = 0.2;
        cfg.kl_beta = bi % 3 == 0 ? 0.0 : 0.01;  // mix KL-active and KL-free cases

        opt::PolicyParams params, reference;
        std::vector<opt::PromptSample> batch(2);
        for (int pi = 0; pi < 2; ++pi) {
            const int n_groups = 1 + static_cast<int>(rng.next_below(2));
            for (int gi = 0; gi < n_groups; ++gi) {
                opt::ScoredGroup group;
                group.signature = fmt("fd|prompt%d|group%d|batch%d", pi, gi, bi);
                const int k = 2 + static_cast<int>(rng.next_below(3));  // 2..4 real options
                for (int o = 0; o <= k; ++o) {
                    group.options.push_back(AnswerId{o});
                    params.set_logit(group.signature, AnswerId{o}, (rng.next_double() - 0.5) * 4.0);
                    reference.set_logit(group.signature, AnswerId{o},
                                        cfg.kl_beta > 0.0 ? (rng.next_double() - 0.5) * 4.0 : 0.0);
                }
                const auto probs = opt::softmax_prob(params, group.signature, group.options);
                const int g = 4;
                for (int i = 0; i < g; ++i) {
                    opt::ScoredRollout r;
                    const auto chosen = rng.next_below(static_cast<std::uint64_t>(k + 1));
                    r.answer = AnswerId{static_cast<int>(chosen)};
                    // Importance ratio in [prob, 1.8] so the behavior logprob
                    // stays valid; redrawn while near a clip kink, where the
                    // surrogate is not differentiable.
                    double rho;
                    do {
                        rho = probs[chosen] + (1.8 - probs[chosen]) * rng.next_double();
                    } while (std::abs(rho - (1.0 - cfg.clip_epsilon)) < 1e-3 ||
                             std::abs(rho - (1.0 + cfg.clip_epsilon)) < 1e-3);
                    r.behavior_logprob = std::log(probs[chosen] / rho);
                    r.advantage = (rng.next_double() - 0.5) * 4.0;
                    group.rollouts.push_back(r);
                }
                batch[static_cast<std::size_t>(pi)].groups.push_back(std::move(group));
            }
        }

        const auto grad = opt::policy_gradient(batch, params, reference, cfg);
        for (const auto& [sig, row] : grad) {
            for (const auto& [option, analytic] : row) {
                opt::PolicyParams shifted = params;
                shifted.add_logit(sig, AnswerId{option}, h);
                const double up = opt::crpo_objective(batch, shifted, reference, cfg);
                shifted.add_logit(sig, AnswerId{option}, -2.0 * h);
                const double down = opt::crpo_objective(batch, shifted, reference, cfg);
                const double fd = (up - down) / (2.0 * h);
                const double rel =
                    std::abs(analytic - fd) / std::max({1.0, std::abs(analytic), std::abs(fd)});
                worst = std::max(worst, rel);
            }
        }
    }
    return {"gradient_finite_difference", worst <= 1e-5,
            fmt("max relative error %.3e over %d batches (tolerance 1e-5)", worst, batches)};
}

CheckResult check_max_reward_configuration() {
    RewardConfig cfg;  // defaults
    const int k = 3;   // real options; answers range over k+1 values including null
    bool ok = true;
    std::string detail;
    for (const bool dynamic : {true, false}) {
        for (const int g : {2, 3}) {
            const long combos = static_cast<long>(std::pow(k + 1, 2 * g));
            double best = -HUGE_VAL;
            std::vector<long> best_codes;
            for (long code = 0; code < combos; ++code) {
                long rest = code;
                rewards::BranchAnswers b;
                b.ground_truth = AnswerId{0};
                b.dynamic = dynamic;
                b.format_flags_orig.assign(static_cast<std::size_t>(g), true);
                b.format_flags_cf.assign(static_cast<std::size_t>(g), true);
                for (int i = 0; i < g; ++i) {
                    b.original.push_back(AnswerId{static_cast<int>(rest % (k + 1))});
                    rest /= (k + 1);
                }
                for (int j = 0; j < g; ++j) {
                    b.counterfactual.push_back(AnswerId{static_cast<int>(rest % (k + 1))});
                    rest /= (k + 1);
                }
                double total = 0.0;
                for (int i = 0; i < g; ++i)
                    total += rewards::reward_original(static_cast<std::size_t>(i), b, cfg).total;
                for (int j = 0; j < g; ++j)
                    total += rewards::reward_counterfactual(static_cast<std::size_t>(j), b, cfg).total;
                if (total > best + 1e-12) {
                    best = total;
                    best_codes.assign(1, code);
                } else if (std::abs(total - best) <= 1e-12) {
                    best_codes.push_back(code);
                }
            }
            // Every maximizer must be all-correct originals + all-expected
            // counterfactuals, and every such configuration must be a maximizer.
            long expected_count = 1;
            for (int j = 0; j < g; ++j) expected_count *= dynamic ? k : 1;
            if (static_cast<long>(best_codes.size()) != expected_count) ok = false;
            for (long code : best_codes) {
                long rest = code;
                for (int i = 0; i < g; ++i) {
                    if (rest % (k + 1) != 0) ok = false;  // original must equal ground truth
                    rest /= (k + 1);
                }
                for (int j = 0; j < g; ++j) {
                    const long a = rest % (k + 1);
                    rest /= (k + 1);
                    if (dynamic ? (a == 0) : (a != 0)) ok = false;
                }
            }
            detail += fmt("%s G=%d best=%.4f maximizers=%zu; ", dynamic ? "dynamic" : "static", g,
                          best, best_codes.size());
        }
    }
    return {"max_reward_configuration", ok, detail};
}

std::vector<CheckResult> run_all(std::uint64_t seed, long trials) {
    if (trials < 1) throw std::invalid_argument("verify.trials: must be >= 1");
    std::vector<CheckResult> results;
    results.push_back(check_reward_examples());
    results.push_back(check_cancellation(seed, trials));
    results.push_back(check_hybrid_non_cancellation(seed, trials));
    results.push_back(check_hybrid_worked_example());
    results.push_back(check_lambda_pq(seed));
    results.push_back(check_gradient_finite_difference(seed));
    results.push_back(check_max_reward_configuration());
    return results;
}

}  // namespace crpo::verify
