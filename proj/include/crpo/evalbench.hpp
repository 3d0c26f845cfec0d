#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "crpo/core.hpp"
#include "crpo/optimizer.hpp"
#include "crpo/world.hpp"

namespace crpo::evalbench {

// One manifest entry; the two sides share the question and option set but
// have different correct answers. question.ground_truth always equals
// answer_a (side a is the untransformed side).
struct PairRecord {
    std::string pair_id;
    Question question;
    AnswerId answer_a;
    AnswerId answer_b;
    Transformation transformation = Transformation::HorizontalFlip;
    Subtask subtask = Subtask::MovingDirection;
};

struct SubtaskScore {
    double acc = 0.0;
    double p_acc = 0.0;
    long n_pairs = 0;
};

struct EvalReport {
    double acc = 0.0;    // per-question accuracy over both sides
    double p_acc = 0.0;  // pairs with both sides correct
    std::map<Subtask, SubtaskScore> per_subtask;
    long n_pairs = 0;
};

json to_json(const EvalReport& r);

// Predictions are keyed by (pair_id, side) with side in {'a', 'b'}.
using PredictionMap = std::map<std::pair<std::string, char>, AnswerId>;

// Strict paired scoring: a pair counts only when both sides are answered
// correctly. Throws if any (pair, side) prediction is missing.
EvalReport pair_accuracy(std::span<const PairRecord> records, const PredictionMap& predictions);

// Exact chance rates of a uniform independent guesser over k real options per
// side: acc = mean(1/k), p_acc = mean(1/k^2).
std::pair<double, double> chance_rates(std::span<const int> option_counts);

enum class DecodeMode { Greedy, Sample };

// Runs the policy on each side under the given channel and scores the
// resulting predictions. Greedy decoding breaks ties toward the lowest
// option index; Sample draws from the softmax with the given seed.
EvalReport evaluate_policy(const opt::PolicyParams& params,
                           std::span<const world::BenchmarkPair> pairs, ObservationChannel channel,
                           DecodeMode decode, std::uint64_t seed = 0);

PairRecord to_record(const world::BenchmarkPair& pair);

// JSON-lines manifest IO. Loading rejects malformed lines (with their line
// number), unknown fields, duplicate pair ids and records violating the
// different-answers invariant.
std::vector<PairRecord> load_manifest(const std::filesystem::path& path);
void save_manifest(std::span<const PairRecord> records, const std::filesystem::path& path);

}  // namespace crpo::evalbench
