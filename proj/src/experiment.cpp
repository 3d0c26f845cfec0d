#include "crpo/experiment.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <stdexcept>

#include "crpo/router.hpp"

namespace crpo::experiment {

namespace {

// Wraps deserialization so every failure names the offending field path.
template <typename F>
auto at_path(const std::string& path, F&& f) {
    try {
        return f();
    } catch (const json::exception& e) {
        throw std::invalid_argument(path + ": " + e.what());
    } catch (const std::invalid_argument& e) {
        const std::string what = e.what();
        if (what.rfind(path, 0) == 0) throw;  // already prefixed
        throw std::invalid_argument(path + ": " + what);
    }
}

template <typename T>
T get_or(const json& j, const char* key, const std::string& path, T fallback) {
    if (!j.contains(key)) return fallback;
    return at_path(path, [&] { return j.at(key).get<T>(); });
}

void reject_unknown(const json& j, std::initializer_list<std::string_view> known,
                    const std::string& path) {
    if (!j.is_object()) throw std::invalid_argument(path + ": expected JSON object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (auto k : known)
            if (it.key() == k) ok = true;
        if (!ok) throw std::invalid_argument(path + "." + it.key() + ": unknown field");
    }
}

}  // namespace

void ExperimentConfig::validate() const {
    world.validate();
    reward.validate();
    train.validate();
    if (eval.n_pairs < 1) throw std::invalid_argument("eval.n_pairs: must be >= 1");
    if (eval.channels.empty())
        throw std::invalid_argument("eval.channels: at least one channel required");
    if (output_dir.empty()) throw std::invalid_argument("output_dir: must not be empty");
    if (prior_bias < 0.0) throw std::invalid_argument("prior_bias: must be >= 0");
    if (sweep) {
        if (sweep->param != "lambda" && sweep->param != "w_aug")
            throw std::invalid_argument("sweep.param: must be 'lambda' or 'w_aug'");
        if (sweep->values.empty())
            throw std::invalid_argument("sweep.values: must not be empty");
        for (double v : sweep->values)
            if (!(v >= 0.0)) throw std::invalid_argument("sweep.values: must be >= 0");
    }
}

ExperimentConfig default_config() { return ExperimentConfig{}; }

json to_json(const ExperimentConfig& cfg) {
    json world_mix = json::object();
    for (const auto& [task, weight] : cfg.world.question_mix)
        world_mix[std::string(crpo::to_label(task))] = weight;
    json dirs = json::array();
    for (Direction d : cfg.world.direction_set) dirs.push_back(crpo::to_label(d));
    json kinds = json::array();
    for (world::QuestionKind k : cfg.world.allowed_kinds) kinds.push_back(world::to_label(k));
    json channels = json::array();
    for (ObservationChannel c : cfg.eval.channels) channels.push_back(crpo::to_label(c));

    json j{{"world",
            {{"static_registry", cfg.world.static_registry},
             {"direction_set", dirs},
             {"option_count", cfg.world.option_count},
             {"p_answer_listed", cfg.world.p_answer_listed},
             {"question_mix", world_mix},
             {"cue_attribute", cfg.world.cue_attribute},
             {"cue_strength", cfg.world.cue_strength},
             {"p_arrow_forward", cfg.world.p_arrow_forward},
             {"p_order_ab", cfg.world.p_order_ab},
             {"router_noise", cfg.world.router_noise},
             {"allowed_kinds", kinds}}},
           {"reward", crpo::to_json(cfg.reward)},
           {"train",
            {{"group_size", cfg.train.group_size},
             {"clip_epsilon", cfg.train.clip_epsilon},
             {"kl_beta", cfg.train.kl_beta},
             {"learning_rate", cfg.train.learning_rate},
             {"batch_prompts", cfg.train.batch_prompts},
             {"steps", cfg.train.steps},
             {"algorithm", opt::to_label(cfg.train.algorithm)},
             {"norm_scheme", opt::to_label(cfg.train.norm_scheme)},
             {"seed", cfg.train.seed},
             {"updates_per_generation", cfg.train.updates_per_generation}}},
           {"eval", {{"n_pairs", cfg.eval.n_pairs}, {"channels", channels}}},
           {"output_dir", cfg.output_dir},
           {"prior_bias", cfg.prior_bias},
           {"prior_null_bias", cfg.prior_null_bias},
           {"train_channel", crpo::to_label(cfg.train_channel)}};
    if (cfg.sweep)
        j["sweep"] = json{{"param", cfg.sweep->param}, {"values", cfg.sweep->values}};
    return j;
}

ExperimentConfig config_from_json(const json& j) {
    reject_unknown(j,
                   {"world", "reward", "train", "eval", "output_dir", "prior_bias",
                    "prior_null_bias", "train_channel", "sweep"},
                   "config");
    ExperimentConfig cfg;
    if (j.contains("world")) {
        const json& w = j.at("world");
        reject_unknown(w,
                       {"static_registry", "direction_set", "option_count", "p_answer_listed",
                        "question_mix", "cue_attribute", "cue_strength", "p_arrow_forward",
                        "p_order_ab", "router_noise", "allowed_kinds"},
                       "world");
        cfg.world.static_registry =
            get_or(w, "static_registry", "world.static_registry", cfg.world.static_registry);
        if (w.contains("direction_set")) {
            cfg.world.direction_set.clear();
            at_path("world.direction_set", [&] {
                for (const auto& d : w.at("direction_set"))
                    cfg.world.direction_set.push_back(
                        direction_from_label(d.get<std::string>()));
                return 0;
            });
        }
        cfg.world.option_count = get_or(w, "option_count", "world.option_count",
                                        cfg.world.option_count);
        cfg.world.p_answer_listed =
            get_or(w, "p_answer_listed", "world.p_answer_listed", cfg.world.p_answer_listed);
        if (w.contains("question_mix")) {
            cfg.world.question_mix.clear();
            at_path("world.question_mix", [&] {
                for (const auto& [task, weight] : w.at("question_mix").items())
                    cfg.world.question_mix[task_type_from_label(task)] = weight.get<double>();
                return 0;
            });
        }
        cfg.world.cue_attribute =
            get_or(w, "cue_attribute", "world.cue_attribute", cfg.world.cue_attribute);
        cfg.world.cue_strength =
            get_or(w, "cue_strength", "world.cue_strength", cfg.world.cue_strength);
        cfg.world.p_arrow_forward =
            get_or(w, "p_arrow_forward", "world.p_arrow_forward", cfg.world.p_arrow_forward);
        cfg.world.p_order_ab = get_or(w, "p_order_ab", "world.p_order_ab", cfg.world.p_order_ab);
        cfg.world.router_noise =
            get_or(w, "router_noise", "world.router_noise", cfg.world.router_noise);
        if (w.contains("allowed_kinds")) {
            at_path("world.allowed_kinds", [&] {
                for (const auto& k : w.at("allowed_kinds")) {
                    const auto label = k.get<std::string>();
                    bool found = false;
                    for (world::QuestionKind kind :
                         {world::QuestionKind::MovingDirection, world::QuestionKind::TiltAxis,
                          world::QuestionKind::EventOrder, world::QuestionKind::ArrowOfTime,
                          world::QuestionKind::StaticAttribute}) {
                        if (label == world::to_label(kind)) {
                            cfg.world.allowed_kinds.push_back(kind);
                            found = true;
                        }
                    }
                    if (!found)
                        throw std::invalid_argument("unknown question kind '" + label + "'");
                }
                return 0;
            });
        }
    }
    if (j.contains("reward"))
        cfg.reward = at_path("reward", [&] { return reward_config_from_json(j.at("reward")); });
    if (j.contains("train")) {
        const json& t = j.at("train");
        reject_unknown(t,
                       {"group_size", "clip_epsilon", "kl_beta", "learning_rate", "batch_prompts",
                        "steps", "algorithm", "norm_scheme", "seed", "updates_per_generation"},
                       "train");
        cfg.train.group_size = get_or(t, "group_size", "train.group_size", cfg.train.group_size);
        cfg.train.clip_epsilon =
            get_or(t, "clip_epsilon", "train.clip_epsilon", cfg.train.clip_epsilon);
        cfg.train.kl_beta = get_or(t, "kl_beta", "train.kl_beta", cfg.train.kl_beta);
        cfg.train.learning_rate =
            get_or(t, "learning_rate", "train.learning_rate", cfg.train.learning_rate);
        cfg.train.batch_prompts =
            get_or(t, "batch_prompts", "train.batch_prompts", cfg.train.batch_prompts);
        cfg.train.steps = get_or(t, "steps", "train.steps", cfg.train.steps);
        if (t.contains("algorithm"))
            cfg.train.algorithm = at_path("train.algorithm", [&] {
                return opt::algorithm_from_label(t.at("algorithm").get<std::string>());
            });
        if (t.contains("norm_scheme"))
            cfg.train.norm_scheme = at_path("train.norm_scheme", [&] {
                return opt::norm_scheme_from_label(t.at("norm_scheme").get<std::string>());
            });
        cfg.train.seed = get_or(t, "seed", "train.seed", cfg.train.seed);
        cfg.train.updates_per_generation = get_or(t, "updates_per_generation",
                                                  "train.updates_per_generation",
                                                  cfg.train.updates_per_generation);
    }
    if (j.contains("eval")) {
        const json& e = j.at("eval");
        reject_unknown(e, {"n_pairs", "channels"}, "eval");
        cfg.eval.n_pairs = get_or(e, "n_pairs", "eval.n_pairs", cfg.eval.n_pairs);
        if (e.contains("channels")) {
            cfg.eval.channels.clear();
            at_path("eval.channels", [&] {
                for (const auto& c : e.at("channels"))
                    cfg.eval.channels.push_back(channel_from_label(c.get<std::string>()));
                return 0;
            });
        }
    }
    cfg.output_dir = get_or(j, "output_dir", "output_dir", cfg.output_dir);
    cfg.prior_bias = get_or(j, "prior_bias", "prior_bias", cfg.prior_bias);
    cfg.prior_null_bias = get_or(j, "prior_null_bias", "prior_null_bias", cfg.prior_null_bias);
    if (j.contains("train_channel"))
        cfg.train_channel = at_path("train_channel", [&] {
            return channel_from_label(j.at("train_channel").get<std::string>());
        });
    if (j.contains("sweep") && !j.at("sweep").is_null()) {
        const json& s = j.at("sweep");
        reject_unknown(s, {"param", "values"}, "sweep");
        SweepSettings sweep;
        sweep.param = at_path("sweep.param", [&] { return s.at("param").get<std::string>(); });
        sweep.values =
            at_path("sweep.values", [&] { return s.at("values").get<std::vector<double>>(); });
        cfg.sweep = std::move(sweep);
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw std::invalid_argument("config: " + std::string(e.what()));
    }
    return config_from_json(j);
}

std::string config_hash(const ExperimentConfig& cfg) {
    const std::uint64_t h = fnv1a64(to_json(cfg).dump());
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

opt::PolicyParams build_shortcut_prior(const world::WorldConfig& cfg, double bias,
                                       ObservationChannel channel, double null_bias) {
    if (channel == ObservationChannel::TextOnly)
        throw std::invalid_argument("build_shortcut_prior: text-only priors are ill-defined");
    opt::PolicyParams params;
    if (bias == 0.0 && null_bias == 0.0) return params;
    const auto templates = world::enumerate_question_templates(cfg);
    const auto states = world::enumerate_states(cfg);
    for (const auto& tmpl : templates) {
        Question q;
        q.prompt_key = tmpl.prompt_key;
        q.options = tmpl.options;
        for (const auto& state : states) {
            int prior_option = 0;
            switch (tmpl.kind) {
                case world::QuestionKind::StaticAttribute: {
                    const auto idx =
                        q.find_option(state.statics.at(tmpl.attribute));
                    prior_option = idx ? idx->index : 0;
                    break;
                }
                case world::QuestionKind::MovingDirection: {
                    if (!cfg.cue_attribute.empty()) {
                        const Direction cue =
                            cfg.cue_direction(state.statics.at(cfg.cue_attribute));
                        const auto idx = q.find_option(std::string(crpo::to_label(cue)));
                        prior_option = idx ? idx->index : 0;
                    }
                    break;
                }
                default: break;  // position prior on the first option
            }
            const std::string sig = world::observe(state, q, channel);
            if (bias != 0.0) params.set_logit(sig, AnswerId{prior_option}, bias);
            if (null_bias != 0.0) params.set_logit(sig, q.null_option(), null_bias);
        }
    }
    return params;
}

opt::InstanceSampler make_sampler(world::WorldConfig cfg) {
    cfg.validate();
    return [cfg](Rng& rng) { return world::sample_instance(cfg, rng); };
}

opt::TrainResult run_train(const ExperimentConfig& cfg) {
    cfg.validate();
    opt::TrainContext ctx;
    ctx.sampler = make_sampler(cfg.world);
    ctx.reward = cfg.reward;
    ctx.train = cfg.train;
    ctx.channel = cfg.train_channel;
    return opt::train(
        build_shortcut_prior(cfg.world, cfg.prior_bias, cfg.train_channel, cfg.prior_null_bias),
        ctx);
}

std::vector<world::BenchmarkPair> make_eval_pairs(const ExperimentConfig& cfg, int n_pairs) {
    world::WorldConfig pair_world = cfg.world;
    pair_world.router_noise = 0.0;
    std::map<TaskType, double> dynamic_mix;
    for (const auto& [task, weight] : cfg.world.question_mix)
        if (router::is_dynamic(task) && weight > 0.0) dynamic_mix[task] = weight;
    if (dynamic_mix.empty())
        throw std::invalid_argument(
            "eval: question_mix has no dynamic task types to build pairs from");
    pair_world.question_mix = std::move(dynamic_mix);
    Rng rng = Rng::stream(cfg.train.seed, "world-eval");
    return world::build_paired_benchmark(pair_world, n_pairs, rng);
}

evalbench::EvalReport run_policy_eval(const opt::PolicyParams& params,
                                      const ExperimentConfig& cfg, ObservationChannel channel) {
    const auto pairs = make_eval_pairs(cfg, cfg.eval.n_pairs);
    return evalbench::evaluate_policy(params, pairs, channel, evalbench::DecodeMode::Greedy,
                                      cfg.train.seed);
}

double singles_accuracy(const opt::PolicyParams& params, const ExperimentConfig& cfg,
                        int n_questions) {
    if (n_questions < 1) throw std::invalid_argument("singles_accuracy: n_questions must be >= 1");
    world::WorldConfig sample_world = cfg.world;
    sample_world.router_noise = 0.0;
    Rng rng = Rng::stream(cfg.train.seed, "singles-eval");
    long correct = 0;
    for (int i = 0; i < n_questions; ++i) {
        const auto inst = world::sample_instance(sample_world, rng);
        const auto options = inst.question.answer_space();
        const std::string sig = world::observe(inst.state, inst.question, cfg.train_channel);
        if (opt::greedy_answer(params, sig, options) == inst.question.ground_truth) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(n_questions);
}

ExperimentConfig apply_sweep_value(ExperimentConfig base, const std::string& param, double value) {
    if (!(value >= 0.0)) throw std::invalid_argument("sweep.values: must be >= 0");
    base.sweep.reset();
    if (param == "lambda") {
        base.reward.lambda_d = value;
        base.reward.lambda_s = value;
    } else if (param == "w_aug") {
        base.reward.w_aug = value;
    } else {
        throw std::invalid_argument("sweep.param: must be 'lambda' or 'w_aug'");
    }
    return base;
}

std::vector<SweepRow> run_sweep(const ExperimentConfig& cfg) {
    if (!cfg.sweep) throw std::invalid_argument("sweep: config has no sweep section");
    cfg.validate();
    std::vector<SweepRow> rows;
    for (double value : cfg.sweep->values) {
        const ExperimentConfig point = apply_sweep_value(cfg, cfg.sweep->param, value);
        const auto result = run_train(point);
        for (ObservationChannel channel : point.eval.channels) {
            const auto report = run_policy_eval(result.params, point, channel);
            rows.push_back(SweepRow{cfg.sweep->param, value,
                                    std::string(crpo::to_label(channel)), report.acc,
                                    report.p_acc});
        }
    }
    return rows;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

void write_diagnostics_csv(std::span<const opt::StepDiagnostics> diagnostics,
                           opt::Algorithm algorithm, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "step,algorithm,mean_correct_reward,zero_advantage_fraction,mean_crr_reward,"
           "mean_aux_reward,mean_behave_reward\n";
    for (const auto& d : diagnostics) {
        out << d.step << ',' << opt::to_label(algorithm) << ','
            << format_double(d.mean_correct_reward) << ','
            << format_double(d.zero_advantage_fraction) << ','
            << format_double(d.mean_crr_reward) << ',' << format_double(d.mean_aux_reward) << ','
            << format_double(d.mean_behave_reward) << '\n';
    }
}

void write_policy(const opt::PolicyParams& params, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << opt::to_json(params).dump(2) << '\n';
}

opt::PolicyParams load_policy(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("policy: cannot open " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw std::invalid_argument("policy: " + std::string(e.what()));
    }
    return opt::policy_params_from_json(j);
}

void write_run_manifest(const ExperimentConfig& cfg, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    const json j{{"config_hash", config_hash(cfg)},
                 {"seed", cfg.train.seed},
                 {"config", to_json(cfg)}};
    out << j.dump(2) << '\n';
}

void write_eval_report(const evalbench::EvalReport& report, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << evalbench::to_json(report).dump(2) << '\n';
}

void append_eval_summary_csv(const evalbench::EvalReport& report, ObservationChannel channel,
                             const std::filesystem::path& path, bool write_header) {
    std::ofstream out(path, write_header ? std::ios::trunc : std::ios::app);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    if (write_header) out << "channel,acc,p_acc,n_pairs\n";
    out << crpo::to_label(channel) << ',' << format_double(report.acc) << ','
        << format_double(report.p_acc) << ',' << report.n_pairs << '\n';
}

void write_sweep_csv(std::span<const SweepRow> rows, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "param,value,channel,acc,p_acc\n";
    for (const auto& row : rows)
        out << row.param << ',' << format_double(row.value) << ',' << row.channel << ','
            << format_double(row.acc) << ',' << format_double(row.p_acc) << '\n';
}

std::filesystem::path resolve_output_dir(const std::string& configured) {
    const char* root = std::getenv("CRPO_OUTPUT_ROOT");
    if (root && *root) return std::filesystem::path(root) / configured;
    return std::filesystem::path(configured);
}

}  // namespace crpo::experiment
