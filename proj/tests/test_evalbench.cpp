#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "crpo/evalbench.hpp"
#include "crpo/experiment.hpp"

using namespace crpo;
using namespace crpo::evalbench;

namespace {

PairRecord make_record(const std::string& id, Subtask subtask = Subtask::MovingDirection) {
    PairRecord rec;
    rec.pair_id = id;
    rec.question.id = "q_" + id;
    rec.question.prompt_key = "moving_direction||left,right";
    rec.question.options = {"left", "right"};
    rec.question.ground_truth = AnswerId{0};
    rec.question.task_type = TaskType::Spatiotemporal;
    rec.question.flip_changes_answer = true;
    rec.question.reversal_changes_answer = true;
    rec.answer_a = AnswerId{0};
    rec.answer_b = AnswerId{1};
    rec.transformation = Transformation::HorizontalFlip;
    rec.subtask = subtask;
    return rec;
}

}  // namespace

TEST_CASE("pair accuracy counts both sides") {
    const std::vector<PairRecord> records{make_record("p0"), make_record("p1"),
                                          make_record("p2")};
    PredictionMap predictions;
    // p0 both correct, p1 one correct, p2 none.
    predictions[{"p0", 'a'}] = AnswerId{0};
    predictions[{"p0", 'b'}] = AnswerId{1};
    predictions[{"p1", 'a'}] = AnswerId{0};
    predictions[{"p1", 'b'}] = AnswerId{0};
    predictions[{"p2", 'a'}] = AnswerId{1};
    predictions[{"p2", 'b'}] = AnswerId{0};
    const auto report = pair_accuracy(records, predictions);
    CHECK(report.acc == doctest::Approx(0.5));
    CHECK(report.p_acc == doctest::Approx(1.0 / 3.0));
    CHECK(report.n_pairs == 3);
}

TEST_CASE("a fixed-answer predictor scores zero pair accuracy") {
    std::vector<PairRecord> records;
    for (int i = 0; i < 20; ++i) records.push_back(make_record("p" + std::to_string(i)));
    PredictionMap predictions;
    for (const auto& rec : records) {
        predictions[{rec.pair_id, 'a'}] = AnswerId{1};
        predictions[{rec.pair_id, 'b'}] = AnswerId{1};
    }
    CHECK(pair_accuracy(records, predictions).p_acc == 0.0);
}

TEST_CASE("a perfect predictor scores one") {
    const std::vector<PairRecord> records{make_record("p0"), make_record("p1")};
    PredictionMap predictions;
    for (const auto& rec : records) {
        predictions[{rec.pair_id, 'a'}] = rec.answer_a;
        predictions[{rec.pair_id, 'b'}] = rec.answer_b;
    }
    const auto report = pair_accuracy(records, predictions);
    CHECK(report.acc == 1.0);
    CHECK(report.p_acc == 1.0);
}

TEST_CASE("missing predictions are named") {
    const std::vector<PairRecord> records{make_record("p0")};
    PredictionMap predictions;
    predictions[{"p0", 'a'}] = AnswerId{0};
    CHECK_THROWS_WITH_AS(pair_accuracy(records, predictions),
                         "pair_accuracy: missing prediction for pair 'p0' side 'b'",
                         std::runtime_error);
}

TEST_CASE("pair accuracy never exceeds per-question accuracy") {
    Rng rng(79);
    std::vector<PairRecord> records;
    for (int i = 0; i < 40; ++i) records.push_back(make_record("p" + std::to_string(i)));
    for (int trial = 0; trial < 50; ++trial) {
        PredictionMap predictions;
        for (const auto& rec : records) {
            predictions[{rec.pair_id, 'a'}] = AnswerId{rng.next_index(3)};
            predictions[{rec.pair_id, 'b'}] = AnswerId{rng.next_index(3)};
        }
        const auto report = pair_accuracy(records, predictions);
        CHECK(report.p_acc <= report.acc);
    }
}

TEST_CASE("per-subtask scores aggregate to the overall report") {
    Rng rng(83);
    std::vector<PairRecord> records;
    for (int i = 0; i < 30; ++i) {
        const Subtask s = i % 3 == 0   ? Subtask::ReversibleDynamics
                          : i % 3 == 1 ? Subtask::MovingDirection
                                       : Subtask::EventSequence;
        records.push_back(make_record("p" + std::to_string(i), s));
    }
    PredictionMap predictions;
    for (const auto& rec : records) {
        predictions[{rec.pair_id, 'a'}] = AnswerId{rng.next_index(3)};
        predictions[{rec.pair_id, 'b'}] = AnswerId{rng.next_index(3)};
    }
    const auto report = pair_accuracy(records, predictions);
    double acc_weighted = 0.0, pacc_weighted = 0.0;
    long n = 0;
    for (const auto& [subtask, score] : report.per_subtask) {
        acc_weighted += score.acc * static_cast<double>(score.n_pairs);
        pacc_weighted += score.p_acc * static_cast<double>(score.n_pairs);
        n += score.n_pairs;
    }
    CHECK(n == report.n_pairs);
    CHECK(report.acc == doctest::Approx(acc_weighted / static_cast<double>(n)).epsilon(1e-12));
    CHECK(report.p_acc == doctest::Approx(pacc_weighted / static_cast<double>(n)).epsilon(1e-12));
}

TEST_CASE("chance rates reproduce the published table") {
    const std::vector<int> threes(10, 3), fours(10, 4), twos(10, 2);
    const auto [acc3, pacc3] = chance_rates(threes);
    CHECK(acc3 == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(pacc3 == doctest::Approx(1.0 / 9.0).epsilon(1e-12));
    const auto [acc4, pacc4] = chance_rates(fours);
    CHECK(acc4 == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(pacc4 == doctest::Approx(0.0625).epsilon(1e-12));
    const auto [acc2, pacc2] = chance_rates(twos);
    CHECK(acc2 == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(pacc2 == doctest::Approx(0.25).epsilon(1e-12));
    CHECK_THROWS_AS(chance_rates(std::vector<int>{1}), std::invalid_argument);
}

namespace {

world::WorldConfig four_way_world() {
    world::WorldConfig cfg;
    cfg.direction_set = {Direction::Left, Direction::Right, Direction::Up, Direction::Down};
    cfg.option_count = 4;
    cfg.cue_attribute.clear();
    cfg.question_mix = {{TaskType::Spatiotemporal, 1.0}};
    return cfg;
}

}  // namespace

TEST_CASE("an oracle policy reaches perfect pair accuracy") {
    const auto cfg = four_way_world();
    Rng rng(89);
    const auto pairs = world::build_paired_benchmark(cfg, 100, rng);
    opt::PolicyParams oracle;
    for (const auto& p : pairs)
        for (const auto* side : {&p.a, &p.b})
            oracle.set_logit(world::observe(side->state, side->question,
                                            ObservationChannel::FullVideo),
                             side->question.ground_truth, 50.0);
    const auto report = evaluate_policy(oracle, pairs, ObservationChannel::FullVideo,
                                        DecodeMode::Greedy);
    CHECK(report.p_acc == 1.0);
    CHECK(report.acc == 1.0);
}

TEST_CASE("text-only evaluation nullifies every deterministic policy") {
    const auto cfg = four_way_world();
    Rng rng(97);
    const auto pairs = world::build_paired_benchmark(cfg, 50, rng);
    opt::PolicyParams params;
    Rng logit_rng(101);
    for (const auto& p : pairs) {
        const std::string sig =
            world::observe(p.a.state, p.a.question, ObservationChannel::TextOnly);
        for (const AnswerId a : p.a.question.answer_space())
            params.set_logit(sig, a, logit_rng.next_double() * 4.0);
    }
    const auto report =
        evaluate_policy(params, pairs, ObservationChannel::TextOnly, DecodeMode::Greedy);
    CHECK(report.p_acc == 0.0);
}

TEST_CASE("a uniform sampling policy lands near chance pair accuracy") {
    const auto cfg = four_way_world();
    Rng rng(103);
    const auto pairs = world::build_paired_benchmark(cfg, 10000, rng);
    const auto report = evaluate_policy(opt::PolicyParams{}, pairs,
                                        ObservationChannel::FullVideo, DecodeMode::Sample, 7);
    // Four real options plus the null option; 6.25% chance refers to the
    // four-way guesser, and the sampler's 1/25 sits within three points.
    CHECK(report.p_acc > 0.0625 - 0.03);
    CHECK(report.p_acc < 0.0625 + 0.03);
}

TEST_CASE("manifests round-trip and reject corrupt records") {
    const auto cfg = four_way_world();
    Rng rng(107);
    const auto pairs = world::build_paired_benchmark(cfg, 25, rng);
    std::vector<PairRecord> records;
    for (const auto& p : pairs) records.push_back(to_record(p));

    const auto path = std::filesystem::temp_directory_path() / "crpo_manifest.jsonl";
    save_manifest(records, path);
    const auto loaded = load_manifest(path);
    REQUIRE(loaded.size() == records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        CHECK(loaded[i].pair_id == records[i].pair_id);
        CHECK(loaded[i].question == records[i].question);
        CHECK(loaded[i].answer_a == records[i].answer_a);
        CHECK(loaded[i].answer_b == records[i].answer_b);
        CHECK(loaded[i].transformation == records[i].transformation);
        CHECK(loaded[i].subtask == records[i].subtask);
    }

    SUBCASE("empty file loads an empty list") {
        std::ofstream(path).close();
        CHECK(load_manifest(path).empty());
    }
    SUBCASE("equal answers are rejected") {
        auto bad = records;
        bad[0].answer_b = bad[0].answer_a;
        save_manifest(bad, path);
        CHECK_THROWS_WITH_AS(load_manifest(path), doctest::Contains("answer_a equals answer_b"),
                             std::runtime_error);
    }
    SUBCASE("malformed lines are reported with their line number") {
        std::ofstream out(path, std::ios::app);
        out << "{broken\n";
        out.close();
        CHECK_THROWS_WITH_AS(load_manifest(path), doctest::Contains("line 26"),
                             std::runtime_error);
    }
    SUBCASE("duplicate pair ids are rejected") {
        auto dup = records;
        dup.push_back(records.front());
        save_manifest(dup, path);
        CHECK_THROWS_WITH_AS(load_manifest(path), doctest::Contains("duplicate pair_id"),
                             std::runtime_error);
    }
    SUBCASE("unknown fields are rejected by name") {
        std::ifstream in(path);
        std::string line;
        std::getline(in, line);
        in.close();
        json j = json::parse(line);
        j["surprise"] = 1;
        std::ofstream out(path);
        out << j.dump() << "\n";
        out.close();
        CHECK_THROWS_WITH_AS(load_manifest(path), doctest::Contains("unknown field 'surprise'"),
                             std::runtime_error);
    }
    std::filesystem::remove(path);
}
