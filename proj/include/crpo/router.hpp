#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "crpo/core.hpp"
#include "crpo/rng.hpp"

namespace crpo::router {

// Decision matrix over the two hypothetical transformation tests:
//   (flip YES, reversal NO)  -> Spatial
//   (flip NO,  reversal YES) -> Temporal
//   (both YES)               -> Spatiotemporal
//   (both NO)                -> Static
TaskType classify(bool flip_changes, bool reversal_changes);

// Spatial -> horizontal flip, Temporal -> temporal reversal; the remaining two
// categories draw between flip and reversal with equal probability.
// Never returns SegmentReorder (a benchmark-construction transformation).
Transformation select_transformation(TaskType t, Rng& rng);

// Spatial, Temporal and Spatiotemporal count as dynamic; Static does not.
bool is_dynamic(TaskType t);

struct RouterStats {
    std::map<TaskType, long> counts;
    std::map<std::string, std::map<TaskType, long>> per_source;
    long total = 0;
};

// Classification bookkeeping; questions without a source entry fall under "unknown".
RouterStats tally(std::span<const Question> questions,
                  const std::map<std::string, std::string>& sources);

struct RouterLabel {
    std::string question_id;
    bool flip_changes = false;
    bool reversal_changes = false;
};

// JSON-lines file of {question_id, flip_changes, reversal_changes}.
std::vector<RouterLabel> load_router_labels(const std::filesystem::path& path);

// Models router misclassification: each test outcome flips independently with
// probability noise_rate.
std::pair<bool, bool> apply_noise(bool flip_changes, bool reversal_changes, double noise_rate,
                                  Rng& rng);

}  // namespace crpo::router
