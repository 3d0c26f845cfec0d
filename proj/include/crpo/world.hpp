#pragma once

#include <map>
#include <string>
#include <vector>

#include "crpo/core.hpp"
#include "crpo/rng.hpp"

namespace crpo::world {

// Question families the sampler can emit. Each family fixes the queried
// attribute and therefore the analytic outcome of the two router tests:
//   MovingDirection - "which way is it moving?"; Spatiotemporal for
//                     horizontal/diagonal motion, Temporal for vertical.
//   TiltAxis        - "which diagonal does the path follow?"; flip-sensitive,
//                     reversal-invariant, hence Spatial.
//   EventOrder      - "which segment comes first?"; Temporal.
//   ArrowOfTime     - "is this playing forward or backward?"; Temporal.
//   StaticAttribute - "what color/count/...?"; Static.
enum class QuestionKind { MovingDirection, TiltAxis, EventOrder, ArrowOfTime, StaticAttribute };

std::string_view to_label(QuestionKind k);

struct WorldConfig {
    std::map<std::string, std::vector<std::string>> static_registry = {
        {"color", {"red", "blue"}},
        {"count", {"one", "two"}},
        {"size", {"small", "large"}}};
    std::vector<Direction> direction_set = {Direction::Left, Direction::Right};
    int option_count = 2;          // 2..4 real options per question
    double p_answer_listed = 1.0;  // chance the transformed correct label is an option
    std::map<TaskType, double> question_mix = {{TaskType::Spatiotemporal, 0.35},
                                               {TaskType::Temporal, 0.25},
                                               {TaskType::Static, 0.4}};

    // Synthetic shortcut coupling: each value of cue_attribute is paired with a
    // direction and sampled motion follows that pairing with probability
    // cue_strength. This is what makes static cues predictive of training
    // answers. Empty attribute disables the coupling.
    std::string cue_attribute = "color";
    double cue_strength = 0.9;

    // Skewed temporal structure: most clips play forward and most event pairs
    // appear in their natural order, so "forward" and "A then B" are strong
    // language priors the same way the static cue is.
    double p_arrow_forward = 0.9;
    double p_order_ab = 0.9;

    // Flip each router test outcome independently with this probability,
    // modeling offline router misclassification.
    double router_noise = 0.0;

    // Restrict the sampler to these families (empty = all families).
    std::vector<QuestionKind> allowed_kinds;

    void validate() const;  // throws std::invalid_argument naming the field

    // Directions reachable from direction_set under flips and reversals.
    std::vector<Direction> direction_closure() const;
    // Deterministic value -> direction pairing used by the cue coupling.
    Direction cue_direction(const std::string& value) const;
};

// A sampled environment item: the latent state, the question asked about it,
// and the exact answer for every transformation (null when unlisted).
struct WorldInstance {
    WorldState state;
    Question question;
    QuestionKind kind = QuestionKind::StaticAttribute;
    std::string static_attribute;  // set for StaticAttribute questions
    std::map<Transformation, AnswerId> oracle;
};

Direction flip_direction(Direction d);
Direction reverse_direction(Direction d);

// The motion axis visible in an unordered frame set: "horizontal", "vertical",
// "nw_se", "ne_sw" or "none".
std::string_view direction_axis(Direction d);

WorldState apply_transformation(const WorldState& w, Transformation t);

// Correct answer for the transformed world; null option iff the transformed
// label is not listed. Throws on a transformation the oracle does not cover.
AnswerId transformed_answer(const WorldInstance& inst, Transformation t);

// Observation signature: an opaque key over exactly the fields the channel
// exposes plus the question's prompt key.
std::string observe(const WorldState& w, const Question& q, ObservationChannel ch);

WorldInstance sample_instance(const WorldConfig& cfg, Rng& rng);

struct BenchmarkPair {
    std::string pair_id;
    WorldInstance a;  // original side; a.question.ground_truth is its answer
    WorldInstance b;  // counterfactual side, b = transformation applied to a
    Transformation transformation = Transformation::HorizontalFlip;
    Subtask subtask = Subtask::MovingDirection;
};

// Counterfactual pairs: same question text and options, transformed state,
// different ground truths, both listed. Pairs whose counterfactual answer
// would be the null option are resampled. cfg must give positive weight only
// to dynamic task types.
std::vector<BenchmarkPair> build_paired_benchmark(const WorldConfig& cfg, int n_pairs, Rng& rng);

// Enumeration helpers used for exhaustive property checks and for seeding
// base-policy priors. Both require configurations whose option lists are
// canonical (option_count covering the full candidate pool).
struct QuestionTemplate {
    QuestionKind kind = QuestionKind::StaticAttribute;
    std::string attribute;  // for StaticAttribute
    std::vector<std::string> options;
    std::string prompt_key;
};

std::vector<QuestionTemplate> enumerate_question_templates(const WorldConfig& cfg);
std::vector<WorldState> enumerate_states(const WorldConfig& cfg);

// Question families that can realize the given task type under this config.
std::vector<QuestionKind> compatible_kinds(const WorldConfig& cfg, TaskType task);

// The label a question family assigns to a state (what the correct answer
// would read, listed or not).
std::string answer_label(QuestionKind kind, const std::string& attribute, const WorldState& w);

}  // namespace crpo::world
