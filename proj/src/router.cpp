#include "crpo/router.hpp"

#include <fstream>
#include <stdexcept>

namespace crpo::router {

TaskType classify(bool flip_changes, bool reversal_changes) {
    if (flip_changes && !reversal_changes) return TaskType::Spatial;
    if (!flip_changes && reversal_changes) return TaskType::Temporal;
    if (flip_changes && reversal_changes) return TaskType::Spatiotemporal;
    return TaskType::Static;
}

Transformation select_transformation(TaskType t, Rng& rng) {
    switch (t) {
        case TaskType::Spatial: return Transformation::HorizontalFlip;
        case TaskType::Temporal: return Transformation::TemporalReversal;
        case TaskType::Spatiotemporal:
        case TaskType::Static:
            return rng.next_bool(0.5) ? Transformation::HorizontalFlip
                                      : Transformation::TemporalReversal;
    }
    throw std::invalid_argument("select_transformation: bad task type");
}

bool is_dynamic(TaskType t) { return t != TaskType::Static; }

RouterStats tally(std::span<const Question> questions,
                  const std::map<std::string, std::string>& sources) {
    RouterStats stats;
    for (TaskType t : {TaskType::Spatial, TaskType::Temporal, TaskType::Spatiotemporal,
                       TaskType::Static})
        stats.counts[t] = 0;
    for (const auto& q : questions) {
        auto it = sources.find(q.id);
        const std::string source = it == sources.end() ? std::string("unknown") : it->second;
        ++stats.counts[q.task_type];
        ++stats.per_source[source][q.task_type];
        ++stats.total;
    }
    return stats;
}

std::vector<RouterLabel> load_router_labels(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("router labels: cannot open " + path.string());
    std::vector<RouterLabel> labels;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw std::runtime_error("router labels: line " + std::to_string(line_no) + ": " +
                                     e.what());
        }
        RouterLabel label;
        try {
            label.question_id = j.at("question_id").get<std::string>();
            label.flip_changes = j.at("flip_changes").get<bool>();
            label.reversal_changes = j.at("reversal_changes").get<bool>();
        } catch (const json::exception& e) {
            throw std::runtime_error("router labels: line " + std::to_string(line_no) + ": " +
                                     e.what());
        }
        labels.push_back(std::move(label));
    }
    return labels;
}

std::pair<bool, bool> apply_noise(bool flip_changes, bool reversal_changes, double noise_rate,
                                  Rng& rng) {
    if (noise_rate < 0.0 || noise_rate > 1.0)
        throw std::invalid_argument("router noise_rate must be in [0, 1]");
    if (noise_rate > 0.0) {
        if (rng.next_bool(noise_rate)) flip_changes = !flip_changes;
        if (rng.next_bool(noise_rate)) reversal_changes = !reversal_changes;
    }
    return {flip_changes, reversal_changes};
}

}  // namespace crpo::router
