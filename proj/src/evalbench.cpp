#include "crpo/evalbench.hpp"

#include <fstream>
#include <set>
#include <stdexcept>

namespace crpo::evalbench {

json to_json(const EvalReport& r) {
    json per = json::object();
    for (const auto& [subtask, score] : r.per_subtask)
        per[std::string(to_label(subtask))] =
            json{{"acc", score.acc}, {"p_acc", score.p_acc}, {"n_pairs", score.n_pairs}};
    return json{{"acc", r.acc},
                {"p_acc", r.p_acc},
                {"per_subtask", std::move(per)},
                {"n_pairs", r.n_pairs}};
}

EvalReport pair_accuracy(std::span<const PairRecord> records, const PredictionMap& predictions) {
    EvalReport report;
    report.n_pairs = static_cast<long>(records.size());
    if (records.empty()) return report;

    std::map<Subtask, std::pair<long, long>> counts;  // subtask -> (correct answers, correct pairs)
    std::map<Subtask, long> pairs_per_subtask;
    long correct_answers = 0;
    long correct_pairs = 0;
    for (const auto& rec : records) {
        auto fetch = [&](char side) {
            auto it = predictions.find({rec.pair_id, side});
            if (it == predictions.end())
                throw std::runtime_error("pair_accuracy: missing prediction for pair '" +
                                         rec.pair_id + "' side '" + side + "'");
            return it->second;
        };
        const bool a_ok = fetch('a') == rec.answer_a;
        const bool b_ok = fetch('b') == rec.answer_b;
        const long n_correct = (a_ok ? 1 : 0) + (b_ok ? 1 : 0);
        correct_answers += n_correct;
        correct_pairs += (a_ok && b_ok) ? 1 : 0;
        auto& [sub_answers, sub_pairs] = counts[rec.subtask];
        sub_answers += n_correct;
        sub_pairs += (a_ok && b_ok) ? 1 : 0;
        ++pairs_per_subtask[rec.subtask];
    }
    report.acc = static_cast<double>(correct_answers) / (2.0 * static_cast<double>(records.size()));
    report.p_acc = static_cast<double>(correct_pairs) / static_cast<double>(records.size());
    for (const auto& [subtask, c] : counts) {
        SubtaskScore score;
        score.n_pairs = pairs_per_subtask[subtask];
        score.acc = static_cast<double>(c.first) / (2.0 * static_cast<double>(score.n_pairs));
        score.p_acc = static_cast<double>(c.second) / static_cast<double>(score.n_pairs);
        report.per_subtask[subtask] = score;
    }
    return report;
}

std::pair<double, double> chance_rates(std::span<const int> option_counts) {
    if (option_counts.empty()) throw std::invalid_argument("chance_rates: no pairs");
    double acc = 0.0, p_acc = 0.0;
    for (int k : option_counts) {
        if (k < 2) throw std::invalid_argument("chance_rates: option count must be >= 2");
        const double inv = 1.0 / static_cast<double>(k);
        acc += inv;
        p_acc += inv * inv;
    }
    const double n = static_cast<double>(option_counts.size());
    return {acc / n, p_acc / n};
}

EvalReport evaluate_policy(const opt::PolicyParams& params,
                           std::span<const world::BenchmarkPair> pairs, ObservationChannel channel,
                           DecodeMode decode, std::uint64_t seed) {
    Rng rng = Rng::stream(seed, "eval-decode");
    PredictionMap predictions;
    std::vector<PairRecord> records;
    records.reserve(pairs.size());
    for (const auto& pair : pairs) {
        records.push_back(to_record(pair));
        const auto options = pair.a.question.answer_space();
        auto predict = [&](const world::WorldInstance& side) {
            const std::string sig = world::observe(side.state, side.question, channel);
            if (decode == DecodeMode::Greedy) return opt::greedy_answer(params, sig, options);
            return opt::sample_answer(params, sig, options, rng);
        };
        predictions[{pair.pair_id, 'a'}] = predict(pair.a);
        predictions[{pair.pair_id, 'b'}] = predict(pair.b);
    }
    return pair_accuracy(records, predictions);
}

PairRecord to_record(const world::BenchmarkPair& pair) {
    PairRecord rec;
    rec.pair_id = pair.pair_id;
    rec.question = pair.a.question;
    rec.answer_a = pair.a.question.ground_truth;
    rec.answer_b = pair.b.question.ground_truth;
    rec.transformation = pair.transformation;
    rec.subtask = pair.subtask;
    return rec;
}

namespace {

PairRecord record_from_json(const json& j, long line_no) {
    auto fail = [line_no](const std::string& what) -> std::runtime_error {
        return std::runtime_error("manifest: line " + std::to_string(line_no) + ": " + what);
    };
    if (!j.is_object()) throw fail("expected a JSON object");
    static const std::set<std::string> known = {"pair_id",  "question",       "options",
                                                "answer_a", "answer_b",       "transformation",
                                                "subtask"};
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!known.count(it.key())) throw fail("unknown field '" + it.key() + "'");
    PairRecord rec;
    try {
        rec.pair_id = j.at("pair_id").get<std::string>();
        rec.question = question_from_json(j.at("question"));
        const auto options = j.at("options").get<std::vector<std::string>>();
        if (options != rec.question.options)
            throw std::invalid_argument("options field disagrees with question.options");
        rec.answer_a = AnswerId{j.at("answer_a").get<int>()};
        rec.answer_b = AnswerId{j.at("answer_b").get<int>()};
        rec.transformation =
            transformation_from_label(j.at("transformation").get<std::string>());
        rec.subtask = subtask_from_label(j.at("subtask").get<std::string>());
    } catch (const json::exception& e) {
        throw fail(e.what());
    } catch (const std::invalid_argument& e) {
        throw fail(e.what());
    }
    if (rec.answer_a == rec.answer_b) throw fail("answer_a equals answer_b");
    const int k = rec.question.option_count();
    if (rec.answer_a.index < 0 || rec.answer_a.index >= k)
        throw fail("answer_a does not name a real option");
    if (rec.answer_b.index < 0 || rec.answer_b.index >= k)
        throw fail("answer_b does not name a real option");
    if (rec.answer_a != rec.question.ground_truth)
        throw fail("answer_a disagrees with question.ground_truth");
    const auto violations = validate_question(rec.question);
    if (!violations.empty()) throw fail("invalid question: " + violations.front());
    return rec;
}

}  // namespace

std::vector<PairRecord> load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("manifest: cannot open " + path.string());
    std::vector<PairRecord> records;
    std::set<std::string> seen_ids;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw std::runtime_error("manifest: line " + std::to_string(line_no) + ": " +
                                     e.what());
        }
        PairRecord rec = record_from_json(j, line_no);
        if (!seen_ids.insert(rec.pair_id).second)
            throw std::runtime_error("manifest: line " + std::to_string(line_no) +
                                     ": duplicate pair_id '" + rec.pair_id + "'");
        records.push_back(std::move(rec));
    }
    return records;
}

void save_manifest(std::span<const PairRecord> records, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("manifest: cannot write " + path.string());
    for (const auto& rec : records) {
        json j{{"pair_id", rec.pair_id},
               {"question", crpo::to_json(rec.question)},
               {"options", rec.question.options},
               {"answer_a", rec.answer_a.index},
               {"answer_b", rec.answer_b.index},
               {"transformation", to_label(rec.transformation)},
               {"subtask", to_label(rec.subtask)}};
        out << j.dump() << '\n';
    }
}

}  // namespace crpo::evalbench
