#include "crpo/core.hpp"

#include <stdexcept>

namespace crpo {

namespace {

[[noreturn]] void bad_label(std::string_view kind, std::string_view value) {
    throw std::invalid_argument(std::string(kind) + ": unknown label '" + std::string(value) + "'");
}

// Strict field access used by every deserializer so schema violations come
// back with the offending field name.
const json& require_field(const json& j, const char* name, std::string_view type_name) {
    if (!j.is_object()) throw std::invalid_argument(std::string(type_name) + ": expected JSON object");
    auto it = j.find(name);
    if (it == j.end())
        throw std::invalid_argument(std::string(type_name) + ": missing field '" + name + "'");
    return *it;
}

void reject_unknown_fields(const json& j, std::initializer_list<std::string_view> known,
                           std::string_view type_name) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (auto k : known)
            if (it.key() == k) ok = true;
        if (!ok)
            throw std::invalid_argument(std::string(type_name) + ": unknown field '" + it.key() +
                                        "'");
    }
}

}  // namespace

std::string_view to_label(TaskType t) {
    switch (t) {
        case TaskType::Spatial: return "Spatial";
        case TaskType::Temporal: return "Temporal";
        case TaskType::Spatiotemporal: return "Spatiotemporal";
        case TaskType::Static: return "Static";
    }
    bad_label("task_type", "?");
}

std::string_view to_label(Transformation t) {
    switch (t) {
        case Transformation::HorizontalFlip: return "horizontal_flip";
        case Transformation::TemporalReversal: return "temporal_reversal";
        case Transformation::SegmentReorder: return "segment_reorder";
    }
    bad_label("transformation", "?");
}

std::string_view to_label(Branch b) {
    return b == Branch::Original ? "original" : "counterfactual";
}

std::string_view to_label(Direction d) {
    switch (d) {
        case Direction::Left: return "left";
        case Direction::Right: return "right";
        case Direction::Up: return "up";
        case Direction::Down: return "down";
        case Direction::UpLeft: return "up_left";
        case Direction::UpRight: return "up_right";
        case Direction::DownLeft: return "down_left";
        case Direction::DownRight: return "down_right";
        case Direction::None: return "none";
    }
    bad_label("direction", "?");
}

std::string_view to_label(Arrow a) { return a == Arrow::Forward ? "forward" : "backward"; }

std::string_view to_label(SegmentOrder o) { return o == SegmentOrder::AB ? "AB" : "BA"; }

std::string_view to_label(ObservationChannel c) {
    switch (c) {
        case ObservationChannel::FullVideo: return "full_video";
        case ObservationChannel::SingleFrame: return "single_frame";
        case ObservationChannel::ShuffledFrames: return "shuffled_frames";
        case ObservationChannel::TextOnly: return "text_only";
    }
    bad_label("channel", "?");
}

std::string_view to_label(Subtask s) {
    switch (s) {
        case Subtask::ReversibleDynamics: return "reversible_dynamics";
        case Subtask::MovingDirection: return "moving_direction";
        case Subtask::EventSequence: return "event_sequence";
    }
    bad_label("subtask", "?");
}

TaskType task_type_from_label(std::string_view s) {
    if (s == "Spatial") return TaskType::Spatial;
    if (s == "Temporal") return TaskType::Temporal;
    if (s == "Spatiotemporal") return TaskType::Spatiotemporal;
    if (s == "Static") return TaskType::Static;
    bad_label("task_type", s);
}

Transformation transformation_from_label(std::string_view s) {
    if (s == "horizontal_flip") return Transformation::HorizontalFlip;
    if (s == "temporal_reversal") return Transformation::TemporalReversal;
    if (s == "segment_reorder") return Transformation::SegmentReorder;
    bad_label("transformation", s);
}

Branch branch_from_label(std::string_view s) {
    if (s == "original") return Branch::Original;
    if (s == "counterfactual") return Branch::Counterfactual;
    bad_label("branch", s);
}

Direction direction_from_label(std::string_view s) {
    if (s == "left") return Direction::Left;
    if (s == "right") return Direction::Right;
    if (s == "up") return Direction::Up;
    if (s == "down") return Direction::Down;
    if (s == "up_left") return Direction::UpLeft;
    if (s == "up_right") return Direction::UpRight;
    if (s == "down_left") return Direction::DownLeft;
    if (s == "down_right") return Direction::DownRight;
    if (s == "none") return Direction::None;
    bad_label("direction", s);
}

Arrow arrow_from_label(std::string_view s) {
    if (s == "forward") return Arrow::Forward;
    if (s == "backward") return Arrow::Backward;
    bad_label("arrow", s);
}

SegmentOrder order_from_label(std::string_view s) {
    if (s == "AB") return SegmentOrder::AB;
    if (s == "BA") return SegmentOrder::BA;
    bad_label("order", s);
}

ObservationChannel channel_from_label(std::string_view s) {
    if (s == "full_video") return ObservationChannel::FullVideo;
    if (s == "single_frame") return ObservationChannel::SingleFrame;
    if (s == "shuffled_frames") return ObservationChannel::ShuffledFrames;
    if (s == "text_only") return ObservationChannel::TextOnly;
    bad_label("channel", s);
}

Subtask subtask_from_label(std::string_view s) {
    if (s == "reversible_dynamics") return Subtask::ReversibleDynamics;
    if (s == "moving_direction") return Subtask::MovingDirection;
    if (s == "event_sequence") return Subtask::EventSequence;
    bad_label("subtask", s);
}

std::vector<AnswerId> Question::answer_space() const {
    std::vector<AnswerId> all;
    all.reserve(options.size() + 1);
    for (int i = 0; i <= option_count(); ++i) all.push_back(AnswerId{i});
    return all;
}

std::optional<AnswerId> Question::find_option(std::string_view label) const {
    for (int i = 0; i < option_count(); ++i)
        if (options[static_cast<std::size_t>(i)] == label) return AnswerId{i};
    return std::nullopt;
}

const std::string& Question::option_label(AnswerId a) const {
    static const std::string null_label = "null";
    if (is_null(a)) return null_label;
    if (a.index < 0 || a.index > option_count())
        throw std::out_of_range("Question::option_label: answer index " + std::to_string(a.index) +
                                " out of range");
    return options[static_cast<std::size_t>(a.index)];
}

void RewardConfig::validate() const {
    auto nonneg = [](double v, const char* name) {
        if (!(v >= 0.0))
            throw std::invalid_argument(std::string("reward.") + name + ": must be >= 0");
    };
    nonneg(lambda_d, "lambda_d");
    nonneg(lambda_s, "lambda_s");
    nonneg(w_aug, "w_aug");
}

std::vector<std::string> validate_question(const Question& q) {
    std::vector<std::string> violations;
    if (q.options.size() < 2 || q.options.size() > 8)
        violations.push_back("options: expected between 2 and 8 real options, got " +
                             std::to_string(q.options.size()));
    for (std::size_t i = 0; i < q.options.size(); ++i)
        for (std::size_t k = i + 1; k < q.options.size(); ++k)
            if (q.options[i] == q.options[k])
                violations.push_back("options: duplicate label '" + q.options[i] + "'");
    if (q.is_null(q.ground_truth)) {
        violations.push_back("ground truth may not be null option");
    } else if (q.ground_truth.index < 0 || q.ground_truth.index >= q.option_count()) {
        violations.push_back("ground_truth: index " + std::to_string(q.ground_truth.index) +
                             " does not name a real option");
    }
    // classify() is declared in router.hpp; the decision matrix is small enough
    // to restate here rather than pull in a dependency cycle.
    TaskType expected = q.flip_changes_answer
                            ? (q.reversal_changes_answer ? TaskType::Spatiotemporal
                                                         : TaskType::Spatial)
                            : (q.reversal_changes_answer ? TaskType::Temporal : TaskType::Static);
    if (q.task_type != expected) violations.push_back("task type inconsistent with tests");
    return violations;
}

json to_json(const Question& q) {
    return json{{"id", q.id},
                {"prompt_key", q.prompt_key},
                {"options", q.options},
                {"ground_truth", q.ground_truth.index},
                {"task_type", to_label(q.task_type)},
                {"flip_changes_answer", q.flip_changes_answer},
                {"reversal_changes_answer", q.reversal_changes_answer}};
}

json to_json(const WorldState& w) {
    return json{{"direction", to_label(w.direction)},
                {"arrow", to_label(w.arrow)},
                {"order", to_label(w.order)},
                {"statics", w.statics}};
}

json to_json(const RolloutGroup& g) {
    json rollouts = json::array();
    for (const auto& r : g.rollouts)
        rollouts.push_back(json{{"answer", r.answer.index},
                                {"logprob", r.logprob},
                                {"format_ok", r.format_ok}});
    json j{{"branch", to_label(g.branch)},
           {"rollouts", std::move(rollouts)},
           {"question_id", g.question_id}};
    if (g.transformation) j["transformation"] = to_label(*g.transformation);
    return j;
}

json to_json(const RewardConfig& c) {
    return json{{"lambda_d", c.lambda_d},
                {"lambda_s", c.lambda_s},
                {"w_aug", c.w_aug},
                {"format_reward_value", c.format_reward_value},
                {"tgrpo_alpha", c.tgrpo_alpha},
                {"arrowrl_alpha", c.arrowrl_alpha}};
}

Question question_from_json(const json& j) {
    reject_unknown_fields(j,
                          {"id", "prompt_key", "options", "ground_truth", "task_type",
                           "flip_changes_answer", "reversal_changes_answer"},
                          "question");
    Question q;
    q.id = require_field(j, "id", "question").get<std::string>();
    q.prompt_key = require_field(j, "prompt_key", "question").get<std::string>();
    q.options = require_field(j, "options", "question").get<std::vector<std::string>>();
    q.ground_truth = AnswerId{require_field(j, "ground_truth", "question").get<int>()};
    q.task_type = task_type_from_label(require_field(j, "task_type", "question").get<std::string>());
    q.flip_changes_answer = require_field(j, "flip_changes_answer", "question").get<bool>();
    q.reversal_changes_answer =
        require_field(j, "reversal_changes_answer", "question").get<bool>();
    return q;
}

WorldState world_state_from_json(const json& j) {
    reject_unknown_fields(j, {"direction", "arrow", "order", "statics"}, "world_state");
    WorldState w;
    w.direction = direction_from_label(require_field(j, "direction", "world_state").get<std::string>());
    w.arrow = arrow_from_label(require_field(j, "arrow", "world_state").get<std::string>());
    w.order = order_from_label(require_field(j, "order", "world_state").get<std::string>());
    w.statics =
        require_field(j, "statics", "world_state").get<std::map<std::string, std::string>>();
    return w;
}

RolloutGroup rollout_group_from_json(const json& j) {
    reject_unknown_fields(j, {"branch", "rollouts", "question_id", "transformation"},
                          "rollout_group");
    RolloutGroup g;
    g.branch = branch_from_label(require_field(j, "branch", "rollout_group").get<std::string>());
    g.question_id = require_field(j, "question_id", "rollout_group").get<std::string>();
    for (const auto& rj : require_field(j, "rollouts", "rollout_group")) {
        reject_unknown_fields(rj, {"answer", "logprob", "format_ok"}, "rollout");
        Rollout r;
        r.answer = AnswerId{require_field(rj, "answer", "rollout").get<int>()};
        r.logprob = require_field(rj, "logprob", "rollout").get<double>();
        r.format_ok = require_field(rj, "format_ok", "rollout").get<bool>();
        if (r.logprob > 0.0)
            throw std::invalid_argument("rollout: logprob must be <= 0");
        g.rollouts.push_back(std::move(r));
    }
    if (j.contains("transformation"))
        g.transformation = transformation_from_label(j.at("transformation").get<std::string>());
    if ((g.branch == Branch::Counterfactual) != g.transformation.has_value())
        throw std::invalid_argument(
            "rollout_group: transformation must be present iff branch is counterfactual");
    return g;
}

RewardConfig reward_config_from_json(const json& j) {
    reject_unknown_fields(j,
                          {"lambda_d", "lambda_s", "w_aug", "format_reward_value", "tgrpo_alpha",
                           "arrowrl_alpha"},
                          "reward");
    RewardConfig c;
    if (j.contains("lambda_d")) c.lambda_d = j.at("lambda_d").get<double>();
    if (j.contains("lambda_s")) c.lambda_s = j.at("lambda_s").get<double>();
    if (j.contains("w_aug")) c.w_aug = j.at("w_aug").get<double>();
    if (j.contains("format_reward_value"))
        c.format_reward_value = j.at("format_reward_value").get<double>();
    if (j.contains("tgrpo_alpha")) c.tgrpo_alpha = j.at("tgrpo_alpha").get<double>();
    if (j.contains("arrowrl_alpha")) c.arrowrl_alpha = j.at("arrowrl_alpha").get<double>();
    c.validate();
    return c;
}

}  // namespace crpo
