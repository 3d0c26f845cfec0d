// Acceptance suite: one pass/fail line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "crpo/evalbench.hpp"
#include "crpo/experiment.hpp"
#include "crpo/rng.hpp"
#include "crpo/verify.hpp"

using namespace crpo;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int index, const std::string& name, bool passed, const std::string& details) {
    std::printf("[%2d] %s  %-34s %s\n", index, passed ? "PASS" : "FAIL", name.c_str(),
                details.c_str());
    std::fflush(stdout);
    if (!passed) ++failures;
}

void report(int index, const std::string& name, const verify::CheckResult& r) {
    report(index, name, r.passed, r.details);
}

std::string fmt(const char* format, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof(buf), format, args...);
    return std::string(buf);
}

// Deterministic side-blind predictor: a pure function of the option set and
// prompt text, identical for both sides of a pair.
AnswerId side_blind_prediction(const Question& q, std::uint64_t predictor_seed) {
    std::string key = q.prompt_key;
    for (const auto& o : q.options) key += "|" + o;
    const std::uint64_t h = splitmix64(fnv1a64(key) ^ predictor_seed);
    return AnswerId{static_cast<int>(h % static_cast<std::uint64_t>(q.option_count() + 1))};
}

void criterion_shortcut_nullification() {
    const int n_manifests = 100;
    const int n_predictors = 100;
    long pairs_checked = 0;
    bool ok = true;
    for (int m = 0; m < n_manifests && ok; ++m) {
        world::WorldConfig cfg;
        switch (m % 3) {
            case 0:  // binary moving-direction pairs
                cfg.question_mix = {{TaskType::Spatiotemporal, 1.0}};
                break;
            case 1:  // all three sub-tasks, four directions
                cfg.direction_set = {Direction::Left, Direction::Right, Direction::Up,
                                     Direction::Down};
                cfg.option_count = 4;
                cfg.question_mix = {{TaskType::Spatiotemporal, 1.0}, {TaskType::Temporal, 1.0}};
                break;
            default:  // order/arrow questions only
                cfg.question_mix = {{TaskType::Temporal, 1.0}};
                cfg.allowed_kinds = {world::QuestionKind::EventOrder,
                                     world::QuestionKind::ArrowOfTime};
                break;
        }
        Rng rng(derive_seed(2024, "nullification", static_cast<std::uint64_t>(m)));
        const auto pairs = world::build_paired_benchmark(cfg, 8, rng);
        std::vector<evalbench::PairRecord> records;
        for (const auto& p : pairs) records.push_back(evalbench::to_record(p));
        for (int s = 0; s < n_predictors; ++s) {
            evalbench::PredictionMap predictions;
            for (const auto& rec : records) {
                const AnswerId a =
                    side_blind_prediction(rec.question, static_cast<std::uint64_t>(s));
                predictions[{rec.pair_id, 'a'}] = a;
                predictions[{rec.pair_id, 'b'}] = a;
            }
            const auto rep = evalbench::pair_accuracy(records, predictions);
            pairs_checked += rep.n_pairs;
            if (rep.p_acc != 0.0) {
                ok = false;
                break;
            }
        }
    }
    report(4, "p-acc shortcut nullification", ok,
           fmt("p_acc = 0 on every side-blind predictor (%d manifests x %d predictors, %ld "
               "pair scores)",
               n_manifests, n_predictors, pairs_checked));
}

void criterion_chance_rates() {
    struct Shape {
        int k;
        double acc_pct, p_acc_pct;
    };
    const Shape shapes[] = {{3, 33.33, 11.11}, {4, 25.0, 6.25}, {2, 50.0, 25.0}};
    bool ok = true;
    std::string detail;
    Rng rng(derive_seed(2024, "chance-mc"));
    for (const auto& s : shapes) {
        const std::vector<int> counts(64, s.k);
        const auto [acc, p_acc] = evalbench::chance_rates(counts);
        if (std::abs(acc * 100.0 - s.acc_pct) > 0.01 ||
            std::abs(p_acc * 100.0 - s.p_acc_pct) > 0.01)
            ok = false;
        // Monte-Carlo uniform guesser, binomial 3-sigma agreement.
        const long n = 100000;
        long acc_hits = 0, pair_hits = 0;
        for (long t = 0; t < n; ++t) {
            const bool a = rng.next_below(static_cast<std::uint64_t>(s.k)) == 0;
            const bool b = rng.next_below(static_cast<std::uint64_t>(s.k)) == 0;
            acc_hits += (a ? 1 : 0) + (b ? 1 : 0);
            pair_hits += (a && b) ? 1 : 0;
        }
        const double emp_acc = static_cast<double>(acc_hits) / (2.0 * n);
        const double emp_pacc = static_cast<double>(pair_hits) / n;
        const double sigma_acc = std::sqrt(acc / (1.0 - acc) > 0 ? acc * (1.0 - acc) / (2.0 * n)
                                                                 : 0.0);
        const double sigma_pacc = std::sqrt(p_acc * (1.0 - p_acc) / n);
        if (std::abs(emp_acc - acc) > 3.0 * sigma_acc ||
            std::abs(emp_pacc - p_acc) > 3.0 * sigma_pacc)
            ok = false;
        detail += fmt("%d-way %.2f/%.2f%% ", s.k, acc * 100.0, p_acc * 100.0);
    }
    report(5, "chance arithmetic", ok, detail);
}

struct E2EOutputs {
    opt::TrainResult grpo;
    opt::TrainResult crpo;
    evalbench::EvalReport grpo_pairs;
    evalbench::EvalReport crpo_pairs;
    double grpo_singles = 0.0;
    experiment::ExperimentConfig cfg;
};

E2EOutputs run_e2e() {
    E2EOutputs out;
    out.cfg = experiment::default_config();

    experiment::ExperimentConfig grpo_cfg = out.cfg;
    grpo_cfg.train.algorithm = opt::Algorithm::GRPO;
    grpo_cfg.train.norm_scheme = opt::NormScheme::PerGroupMeanStd;

    out.grpo = experiment::run_train(grpo_cfg);
    out.crpo = experiment::run_train(out.cfg);
    out.grpo_pairs = experiment::run_policy_eval(out.grpo.params, grpo_cfg,
                                                 ObservationChannel::FullVideo);
    out.crpo_pairs = experiment::run_policy_eval(out.crpo.params, out.cfg,
                                                 ObservationChannel::FullVideo);
    out.grpo_singles = experiment::singles_accuracy(out.grpo.params, grpo_cfg, 2000);
    return out;
}

double mean_zero_adv(const opt::TrainResult& r) {
    double s = 0.0;
    for (const auto& d : r.diagnostics) s += d.zero_advantage_fraction;
    return s / static_cast<double>(r.diagnostics.size());
}

void criterion_e2e(const E2EOutputs& e, double elapsed_s) {
    const double grpo_zero = mean_zero_adv(e.grpo);
    const double crpo_zero = mean_zero_adv(e.crpo);
    const std::size_t n = e.crpo.diagnostics.size();
    const std::size_t quartile = n / 4;
    double first = 0.0, last = 0.0;
    for (std::size_t i = 0; i < quartile; ++i) {
        first += e.crpo.diagnostics[i].mean_crr_reward;
        last += e.crpo.diagnostics[n - 1 - i].mean_crr_reward;
    }
    first /= static_cast<double>(quartile);
    last /= static_cast<double>(quartile);

    const bool ok = e.grpo_singles >= 0.9 && e.grpo_pairs.p_acc <= 0.2 &&
                    e.crpo_pairs.p_acc >= 0.8 && crpo_zero < grpo_zero && last > first;
    report(8, "synthetic shortcut separation", ok,
           fmt("grpo singles %.3f (>=0.9), grpo p-acc %.3f (<=0.2), crpo p-acc %.3f (>=0.8), "
               "zero-adv %.3f vs %.3f (crpo<grpo), crr %.3f -> %.3f (rising), %.1fs",
               e.grpo_singles, e.grpo_pairs.p_acc, e.crpo_pairs.p_acc, crpo_zero, grpo_zero,
               first, last, elapsed_s));
}

void criterion_sweep_endpoints(const E2EOutputs& e) {
    const auto lambda0 = experiment::apply_sweep_value(e.cfg, "lambda", 0.0);
    const auto waug0 = experiment::apply_sweep_value(e.cfg, "w_aug", 0.0);
    const auto r_lambda0 = experiment::run_train(lambda0);
    const auto r_waug0 = experiment::run_train(waug0);
    const auto p_lambda0 =
        experiment::run_policy_eval(r_lambda0.params, lambda0, ObservationChannel::FullVideo);
    const auto p_waug0 =
        experiment::run_policy_eval(r_waug0.params, waug0, ObservationChannel::FullVideo);
    const double base = e.crpo_pairs.p_acc;
    const bool ok = p_lambda0.p_acc < base && p_waug0.p_acc < base;
    report(9, "sweep endpoints", ok,
           fmt("p-acc default %.3f, lambda=0 %.3f, w_aug=0 %.3f (both strictly lower)", base,
               p_lambda0.p_acc, p_waug0.p_acc));
}

std::string file_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void criterion_determinism() {
    experiment::ExperimentConfig cfg = experiment::default_config();
    cfg.train.steps = 40;
    cfg.eval.n_pairs = 50;

    const fs::path base = fs::temp_directory_path() / "crpo_acceptance_determinism";
    fs::remove_all(base);
    std::vector<std::string> digests;
    for (int run = 0; run < 2; ++run) {
        const fs::path dir = base / ("run" + std::to_string(run));
        fs::create_directories(dir);
        const auto result = experiment::run_train(cfg);
        experiment::write_diagnostics_csv(result.diagnostics, cfg.train.algorithm,
                                          dir / "diagnostics.csv");
        experiment::write_policy(result.params, dir / "policy.json");
        experiment::write_run_manifest(cfg, dir / "run.json");
        std::string all;
        for (const char* name : {"diagnostics.csv", "policy.json", "run.json"})
            all += file_bytes(dir / name);
        digests.push_back(std::move(all));
    }
    bool ok = digests[0] == digests[1] && !digests[0].empty();

    const auto v1 = verify::run_all(7, 500);
    const auto v2 = verify::run_all(7, 500);
    for (std::size_t i = 0; i < v1.size(); ++i)
        if (v1[i].details != v2[i].details || v1[i].passed != v2[i].passed) ok = false;
    fs::remove_all(base);
    report(10, "determinism", ok,
           fmt("train outputs byte-identical across reruns (%zu bytes); verify reports identical",
               digests[0].size()));
}

}  // namespace

int main() {
    const std::uint64_t seed = 2024;

    report(1, "reward-formula exactness", verify::check_reward_examples());
    {
        const auto per_group = verify::check_cancellation(seed, 10000);
        const auto hybrid = verify::check_hybrid_non_cancellation(seed, 10000);
        report(2, "cancellation theorem", per_group.passed && hybrid.passed,
               per_group.details + "; " + hybrid.details);
    }
    report(3, "lambda*p*q symmetry", verify::check_lambda_pq(seed));
    criterion_shortcut_nullification();
    criterion_chance_rates();
    report(6, "gradient correctness", verify::check_gradient_finite_difference(seed));
    report(7, "maximal-reward configuration", verify::check_max_reward_configuration());

    const auto t0 = std::chrono::steady_clock::now();
    const auto e2e = run_e2e();
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    criterion_e2e(e2e, elapsed);
    criterion_sweep_endpoints(e2e);
    criterion_determinism();

    if (failures) {
        std::printf("%d criterion(s) failed\n", failures);
        return 1;
    }
    std::printf("all acceptance criteria passed\n");
    return 0;
}
