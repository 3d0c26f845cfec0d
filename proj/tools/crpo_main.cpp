#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "crpo/evalbench.hpp"
#include "crpo/experiment.hpp"
#include "crpo/verify.hpp"

namespace fs = std::filesystem;
using namespace crpo;

namespace {

int cmd_train(const std::string& config_path) {
    const auto cfg = experiment::load_config(config_path);
    const fs::path outdir = experiment::resolve_output_dir(cfg.output_dir);
    fs::create_directories(outdir);
    const auto result = experiment::run_train(cfg);
    experiment::write_diagnostics_csv(result.diagnostics, cfg.train.algorithm,
                                      outdir / "diagnostics.csv");
    experiment::write_policy(result.params, outdir / "policy.json");
    experiment::write_run_manifest(cfg, outdir / "run.json");
    std::cout << "trained " << opt::to_label(cfg.train.algorithm) << " for " << cfg.train.steps
              << " steps; outputs in " << outdir.string() << "\n";
    return 0;
}

int cmd_eval(const std::string& policy_path, const std::string& manifest_path, bool synthetic,
             std::vector<std::string> channel_names, const std::string& config_path,
             const std::string& out_override) {
    const auto params = experiment::load_policy(policy_path);
    experiment::ExperimentConfig cfg = config_path.empty()
                                           ? experiment::default_config()
                                           : experiment::load_config(config_path);
    fs::path outdir = out_override.empty()
                          ? experiment::resolve_output_dir(cfg.output_dir) / "eval"
                          : fs::path(out_override);
    fs::create_directories(outdir);

    std::vector<ObservationChannel> channels;
    for (const auto& name : channel_names) channels.push_back(channel_from_label(name));

    bool first = true;
    if (!manifest_path.empty()) {
        // Manifest records carry no world state, so the policy can only be
        // driven by the question text.
        if (!channels.empty() &&
            !(channels.size() == 1 && channels.front() == ObservationChannel::TextOnly))
            throw std::invalid_argument(
                "eval: manifests carry no world states; only the text_only channel applies");
        const auto records = evalbench::load_manifest(manifest_path);
        evalbench::PredictionMap predictions;
        for (const auto& rec : records) {
            const auto options = rec.question.answer_space();
            const std::string sig =
                world::observe(WorldState{}, rec.question, ObservationChannel::TextOnly);
            const AnswerId answer = opt::greedy_answer(params, sig, options);
            predictions[{rec.pair_id, 'a'}] = answer;
            predictions[{rec.pair_id, 'b'}] = answer;
        }
        const auto report = evalbench::pair_accuracy(records, predictions);
        experiment::write_eval_report(report, outdir / "report_text_only.json");
        experiment::append_eval_summary_csv(report, ObservationChannel::TextOnly,
                                            outdir / "summary.csv", first);
        std::cout << "text_only: acc=" << experiment::format_double(report.acc)
                  << " p_acc=" << experiment::format_double(report.p_acc) << "\n";
        return 0;
    }

    if (!synthetic) throw std::invalid_argument("eval: pass --manifest PATH or --synthetic");
    if (channels.empty()) channels = cfg.eval.channels;
    const auto pairs = experiment::make_eval_pairs(cfg, cfg.eval.n_pairs);
    std::vector<evalbench::PairRecord> records;
    records.reserve(pairs.size());
    for (const auto& p : pairs) records.push_back(evalbench::to_record(p));
    evalbench::save_manifest(records, outdir / "manifest.jsonl");
    for (ObservationChannel channel : channels) {
        const auto report = evalbench::evaluate_policy(params, pairs, channel,
                                                       evalbench::DecodeMode::Greedy,
                                                       cfg.train.seed);
        const std::string name = std::string(to_label(channel));
        experiment::write_eval_report(report, outdir / ("report_" + name + ".json"));
        experiment::append_eval_summary_csv(report, channel, outdir / "summary.csv", first);
        first = false;
        std::cout << name << ": acc=" << experiment::format_double(report.acc)
                  << " p_acc=" << experiment::format_double(report.p_acc) << "\n";
    }
    return 0;
}

int cmd_sweep(const std::string& config_path) {
    const auto cfg = experiment::load_config(config_path);
    if (!cfg.sweep) throw std::invalid_argument("sweep: config has no sweep section");
    const fs::path outdir = experiment::resolve_output_dir(cfg.output_dir);
    fs::create_directories(outdir);
    std::vector<experiment::SweepRow> rows;
    int index = 0;
    for (double value : cfg.sweep->values) {
        const auto point = experiment::apply_sweep_value(cfg, cfg.sweep->param, value);
        const fs::path point_dir = outdir / ("point_" + std::to_string(index++));
        fs::create_directories(point_dir);
        const auto result = experiment::run_train(point);
        experiment::write_diagnostics_csv(result.diagnostics, point.train.algorithm,
                                          point_dir / "diagnostics.csv");
        experiment::write_policy(result.params, point_dir / "policy.json");
        experiment::write_run_manifest(point, point_dir / "run.json");
        for (ObservationChannel channel : point.eval.channels) {
            const auto report = experiment::run_policy_eval(result.params, point, channel);
            rows.push_back(experiment::SweepRow{cfg.sweep->param, value,
                                                std::string(to_label(channel)), report.acc,
                                                report.p_acc});
        }
        std::cout << cfg.sweep->param << "=" << experiment::format_double(value) << " done\n";
    }
    experiment::write_sweep_csv(rows, outdir / "sweep.csv");
    std::cout << "sweep written to " << (outdir / "sweep.csv").string() << "\n";
    return 0;
}

int cmd_verify(std::uint64_t seed, long trials) {
    const auto results = verify::run_all(seed, trials);
    std::vector<std::string> failed;
    std::printf("%-30s %-6s %s\n", "check", "status", "details");
    for (const auto& r : results) {
        std::printf("%-30s %-6s %s\n", r.name.c_str(), r.passed ? "PASS" : "FAIL",
                    r.details.c_str());
        if (!r.passed) failed.push_back(r.name);
    }
    if (!failed.empty()) {
        std::string names;
        for (const auto& n : failed) names += (names.empty() ? "" : ", ") + n;
        std::cerr << "failed checks: " << names << "\n";
        return 1;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"CRPO laboratory: counterfactual dual-branch RL on a synthetic world"};
    app.require_subcommand(1);

    std::string train_config;
    auto* train = app.add_subcommand("train", "Train a policy from a config file");
    train->add_option("--config", train_config, "experiment config (JSON)")->required();

    std::string eval_policy, eval_manifest, eval_config, eval_out;
    bool eval_synthetic = false;
    std::vector<std::string> eval_channels;
    auto* eval = app.add_subcommand("eval", "Evaluate a trained policy on counterfactual pairs");
    eval->add_option("--policy", eval_policy, "policy.json from a train run")->required();
    auto* manifest_opt = eval->add_option("--manifest", eval_manifest, "pair manifest (JSON-lines)");
    auto* synthetic_opt =
        eval->add_flag("--synthetic", eval_synthetic, "generate pairs from the config's world");
    manifest_opt->excludes(synthetic_opt);
    eval->add_option("--channel", eval_channels,
                     "observation channel (full_video, single_frame, shuffled_frames, text_only); "
                     "repeatable");
    eval->add_option("--config", eval_config, "experiment config for synthetic pair generation");
    eval->add_option("--out", eval_out, "output directory override");

    std::string sweep_config;
    auto* sweep = app.add_subcommand("sweep", "Train and evaluate across a coefficient sweep");
    sweep->add_option("--config", sweep_config, "experiment config with a sweep section")
        ->required();

    std::uint64_t verify_seed = 0;
    long verify_trials = 10000;
    auto* verify_cmd = app.add_subcommand("verify", "Run the analytic self-checks");
    verify_cmd->add_option("--seed", verify_seed, "random seed");
    verify_cmd->add_option("--trials", verify_trials, "sampled groups per randomized check");

    CLI11_PARSE(app, argc, argv);

    try {
        if (train->parsed()) return cmd_train(train_config);
        if (eval->parsed())
            return cmd_eval(eval_policy, eval_manifest, eval_synthetic, eval_channels, eval_config,
                            eval_out);
        if (sweep->parsed()) return cmd_sweep(sweep_config);
        if (verify_cmd->parsed()) return cmd_verify(verify_seed, verify_trials);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
