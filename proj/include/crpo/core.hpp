#pragma once

#include <compare>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace crpo {

using json = nlohmann::json;

// The four task categories produced by the router's two transformation tests.
enum class TaskType { Spatial, Temporal, Spatiotemporal, Static };

// World transformations. Each one is an involution on WorldState.
enum class Transformation { HorizontalFlip, TemporalReversal, SegmentReorder };

enum class Branch { Original, Counterfactual };

enum class Direction { Left, Right, Up, Down, UpLeft, UpRight, DownLeft, DownRight, None };

enum class Arrow { Forward, Backward };

enum class SegmentOrder { AB, BA };

// What the policy gets to see of a world state.
//   FullVideo      - every field
//   SingleFrame    - static attributes only
//   ShuffledFrames - static attributes plus the motion axis (sign of time erased)
//   TextOnly       - nothing beyond the prompt
enum class ObservationChannel { FullVideo, SingleFrame, ShuffledFrames, TextOnly };

// Benchmark sub-tasks, one per pair-construction transformation.
enum class Subtask { ReversibleDynamics, MovingDirection, EventSequence };

std::string_view to_label(TaskType t);
std::string_view to_label(Transformation t);
std::string_view to_label(Branch b);
std::string_view to_label(Direction d);
std::string_view to_label(Arrow a);
std::string_view to_label(SegmentOrder o);
std::string_view to_label(ObservationChannel c);
std::string_view to_label(Subtask s);

TaskType task_type_from_label(std::string_view s);
Transformation transformation_from_label(std::string_view s);
Branch branch_from_label(std::string_view s);
Direction direction_from_label(std::string_view s);
Arrow arrow_from_label(std::string_view s);
SegmentOrder order_from_label(std::string_view s);
ObservationChannel channel_from_label(std::string_view s);
Subtask subtask_from_label(std::string_view s);

// Index into a question's option list. A question with k real options uses
// index k for the appended null option ("None of the above"), which keeps
// option arrays contiguous for the tabular policy.
struct AnswerId {
    int index = 0;
    auto operator<=>(const AnswerId&) const = default;
};

struct Question {
    std::string id;
    std::string prompt_key;            // conditions the policy; never encodes the answer
    std::vector<std::string> options;  // real options, 2..8; null option appended implicitly
    AnswerId ground_truth;             // always a real option, never the null option
    TaskType task_type = TaskType::Static;
    bool flip_changes_answer = false;
    bool reversal_changes_answer = false;

    int option_count() const { return static_cast<int>(options.size()); }
    AnswerId null_option() const { return AnswerId{option_count()}; }
    bool is_null(AnswerId a) const { return a.index == option_count(); }

    // All selectable answers: every real option followed by the null option.
    std::vector<AnswerId> answer_space() const;

    std::optional<AnswerId> find_option(std::string_view label) const;
    const std::string& option_label(AnswerId a) const;  // "null" for the null option

    bool operator==(const Question&) const = default;
};

struct WorldState {
    Direction direction = Direction::None;
    Arrow arrow = Arrow::Forward;
    SegmentOrder order = SegmentOrder::AB;
    std::map<std::string, std::string> statics;

    bool operator==(const WorldState&) const = default;
};

struct Rollout {
    AnswerId answer;
    double logprob = 0.0;  // natural log of the sampled answer's behavior probability, <= 0
    bool format_ok = true;

    bool operator==(const Rollout&) const = default;
};

struct RolloutGroup {
    Branch branch = Branch::Original;
    std::vector<Rollout> rollouts;  // length G, G >= 2
    std::string question_id;
    std::optional<Transformation> transformation;  // present iff branch == Counterfactual

    bool operator==(const RolloutGroup&) const = default;
};

// Per-rollout reward decomposition. total = scale * (base + crr + format).
struct RewardBreakdown {
    double base = 0.0;
    double crr = 0.0;
    double format = 0.0;
    double scale = 1.0;
    double total = 0.0;
};

struct RewardConfig {
    double lambda_d = 0.3;
    double lambda_s = 0.3;
    double w_aug = 0.5;
    double format_reward_value = 0.0;  // simulator rollouts are always well-formed
    double tgrpo_alpha = 0.3;
    double arrowrl_alpha = 0.25;

    void validate() const;  // throws std::invalid_argument naming the field
};

// Report-style validation; returns one message per violated invariant.
std::vector<std::string> validate_question(const Question& q);

json to_json(const Question& q);
json to_json(const WorldState& w);
json to_json(const RolloutGroup& g);
json to_json(const RewardConfig& c);

Question question_from_json(const json& j);
WorldState world_state_from_json(const json& j);
RolloutGroup rollout_group_from_json(const json& j);
RewardConfig reward_config_from_json(const json& j);

}  // namespace crpo
