#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace crpo::verify {

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string details;
};

// Worked reward examples evaluated to 1e-12.
CheckResult check_reward_examples();

// Per-group normalization cancels a constant offset added to correct rollouts
// of a binary reward group: max advantage delta <= 1e-9 over random groups.
CheckResult check_cancellation(std::uint64_t seed, long trials);

// The same perturbation under hybrid joint-std normalization with a
// non-degenerate counterfactual branch moves advantages by > 0.01 on at
// least 99% of sampled instances.
CheckResult check_hybrid_non_cancellation(std::uint64_t seed, long trials);

// Frozen hybrid-normalization example; fails if a sample standard deviation
// sneaks in anywhere.
CheckResult check_hybrid_worked_example();

// Monte-Carlo agreement of both CRR streams with lambda * p * q, within 1%
// relative error and within 0.5% of each other.
CheckResult check_lambda_pq(std::uint64_t seed, long groups_per_cell = 100000);

// Analytic policy gradient vs central finite differences (h = 1e-5), max
// relative error <= 1e-5, including clipped and KL-active cases.
CheckResult check_gradient_finite_difference(std::uint64_t seed, int batches = 50);

// Exhaustive search at G in {2,3} with 3 real options: total two-branch
// reward is maximized exactly by all-correct originals plus all-expected
// counterfactuals, for both dynamic and static tasks.
CheckResult check_max_reward_configuration();

std::vector<CheckResult> run_all(std::uint64_t seed, long trials);

}  // namespace crpo::verify
