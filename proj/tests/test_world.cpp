#include <doctest.h>

#include "crpo/router.hpp"
#include "crpo/world.hpp"

using namespace crpo;

namespace {

const Direction kAll[] = {Direction::Left,     Direction::Right,   Direction::Up,
                          Direction::Down,     Direction::UpLeft,  Direction::UpRight,
                          Direction::DownLeft, Direction::DownRight, Direction::None};

WorldState make_state(Direction d, Arrow a = Arrow::Forward, SegmentOrder o = SegmentOrder::AB) {
    WorldState w;
    w.direction = d;
    w.arrow = a;
    w.order = o;
    w.statics = {{"color", "red"}};
    return w;
}

// Hand-built direction question over an explicit option list.
world::WorldInstance direction_instance(Direction d, std::vector<std::string> options) {
    world::WorldInstance inst;
    inst.kind = world::QuestionKind::MovingDirection;
    inst.state = make_state(d);
    Question& q = inst.question;
    q.id = "q";
    q.options = std::move(options);
    q.prompt_key = "moving_direction||manual";
    q.ground_truth = *q.find_option(std::string(to_label(d)));
    q.flip_changes_answer = world::flip_direction(d) != d;
    q.reversal_changes_answer = world::reverse_direction(d) != d;
    q.task_type = router::classify(q.flip_changes_answer, q.reversal_changes_answer);
    for (auto t : {Transformation::HorizontalFlip, Transformation::TemporalReversal,
                   Transformation::SegmentReorder}) {
        const auto label = to_label(world::apply_transformation(inst.state, t).direction);
        const auto found = q.find_option(std::string(label));
        inst.oracle[t] = found ? *found : q.null_option();
    }
    return inst;
}

}  // namespace

TEST_CASE("horizontal flip mirrors left-right and keeps time") {
    const WorldState w = make_state(Direction::Left);
    const WorldState flipped = world::apply_transformation(w, Transformation::HorizontalFlip);
    CHECK(flipped.direction == Direction::Right);
    CHECK(flipped.arrow == Arrow::Forward);
    CHECK(flipped.order == SegmentOrder::AB);
    CHECK(flipped.statics == w.statics);
}

TEST_CASE("temporal reversal reverses motion, arrow and order") {
    const WorldState w = make_state(Direction::Left);
    const WorldState reversed = world::apply_transformation(w, Transformation::TemporalReversal);
    CHECK(reversed.direction == Direction::Right);
    CHECK(reversed.arrow == Arrow::Backward);
    CHECK(reversed.order == SegmentOrder::BA);
    CHECK(reversed.statics == w.statics);
}

TEST_CASE("segment reorder swaps only the order") {
    const WorldState w = make_state(Direction::UpLeft);
    const WorldState reordered = world::apply_transformation(w, Transformation::SegmentReorder);
    CHECK(reordered.order == SegmentOrder::BA);
    CHECK(reordered.direction == w.direction);
    CHECK(reordered.arrow == w.arrow);
}

TEST_CASE("every transformation is an involution over the whole attribute space") {
    for (Direction d : kAll)
        for (Arrow a : {Arrow::Forward, Arrow::Backward})
            for (SegmentOrder o : {SegmentOrder::AB, SegmentOrder::BA}) {
                const WorldState w = make_state(d, a, o);
                for (auto t : {Transformation::HorizontalFlip, Transformation::TemporalReversal,
                               Transformation::SegmentReorder}) {
                    const auto twice =
                        world::apply_transformation(world::apply_transformation(w, t), t);
                    CHECK(twice == w);
                }
            }
}

TEST_CASE("transformed_answer returns null when the true label is unlisted") {
    // "Which way is it moving?" with options {left, up}: reversal makes the
    // true answer "right", which is not listed.
    const auto inst = direction_instance(Direction::Left, {"left", "up"});
    const AnswerId reversed = world::transformed_answer(inst, Transformation::TemporalReversal);
    CHECK(inst.question.is_null(reversed));
}

TEST_CASE("transformed_answer finds the listed flipped label") {
    const auto inst = direction_instance(Direction::Left, {"left", "right"});
    const AnswerId flipped = world::transformed_answer(inst, Transformation::HorizontalFlip);
    CHECK(flipped == *inst.question.find_option("right"));
}

TEST_CASE("static questions are invariant under every transformation") {
    world::WorldConfig cfg;
    cfg.question_mix = {{TaskType::Static, 1.0}};
    Rng rng(13);
    for (int i = 0; i < 50; ++i) {
        const auto inst = world::sample_instance(cfg, rng);
        for (auto t : {Transformation::HorizontalFlip, Transformation::TemporalReversal,
                       Transformation::SegmentReorder})
            CHECK(world::transformed_answer(inst, t) == inst.question.ground_truth);
    }
}

TEST_CASE("oracle gap is reported for uncovered transformations") {
    auto inst = direction_instance(Direction::Left, {"left", "right"});
    inst.oracle.erase(Transformation::SegmentReorder);
    CHECK_THROWS_WITH_AS(world::transformed_answer(inst, Transformation::SegmentReorder),
                         doctest::Contains("oracle gap"), std::runtime_error);
}

TEST_CASE("observation channels expose what they should") {
    const auto inst = direction_instance(Direction::Left, {"left", "right"});
    const WorldState& w = inst.state;
    const Question& q = inst.question;

    SUBCASE("text-only signatures depend on the prompt alone") {
        const WorldState other = make_state(Direction::Right, Arrow::Backward, SegmentOrder::BA);
        CHECK(world::observe(w, q, ObservationChannel::TextOnly) ==
              world::observe(other, q, ObservationChannel::TextOnly));
    }
    SUBCASE("full video distinguishes a flip") {
        const auto flipped = world::apply_transformation(w, Transformation::HorizontalFlip);
        CHECK(world::observe(w, q, ObservationChannel::FullVideo) !=
              world::observe(flipped, q, ObservationChannel::FullVideo));
    }
    SUBCASE("a single frame cannot see temporal reversal") {
        const auto reversed = world::apply_transformation(w, Transformation::TemporalReversal);
        CHECK(world::observe(w, q, ObservationChannel::SingleFrame) ==
              world::observe(reversed, q, ObservationChannel::SingleFrame));
    }
    SUBCASE("shuffled frames keep the motion axis but lose the sign of time") {
        const auto reversed = world::apply_transformation(w, Transformation::TemporalReversal);
        CHECK(world::observe(w, q, ObservationChannel::ShuffledFrames) ==
              world::observe(reversed, q, ObservationChannel::ShuffledFrames));
        const WorldState vertical = make_state(Direction::Up);
        CHECK(world::observe(w, q, ObservationChannel::ShuffledFrames) !=
              world::observe(vertical, q, ObservationChannel::ShuffledFrames));
    }
}

TEST_CASE("channel monotonicity: full-video equality implies equality everywhere") {
    world::WorldConfig cfg;
    Rng rng(17);
    for (int i = 0; i < 300; ++i) {
        const auto a = world::sample_instance(cfg, rng);
        const auto b = world::sample_instance(cfg, rng);
        if (world::observe(a.state, a.question, ObservationChannel::FullVideo) !=
            world::observe(b.state, a.question, ObservationChannel::FullVideo))
            continue;
        for (auto ch : {ObservationChannel::SingleFrame, ObservationChannel::ShuffledFrames,
                        ObservationChannel::TextOnly})
            CHECK(world::observe(a.state, a.question, ch) ==
                  world::observe(b.state, a.question, ch));
    }
}

TEST_CASE("sample_instance respects the question mix") {
    Rng rng(19);
    SUBCASE("static-only mix") {
        world::WorldConfig cfg;
        cfg.question_mix = {{TaskType::Static, 1.0}};
        for (int i = 0; i < 100; ++i) {
            const auto inst = world::sample_instance(cfg, rng);
            CHECK(inst.question.task_type == TaskType::Static);
            CHECK_FALSE(inst.question.flip_changes_answer);
            CHECK_FALSE(inst.question.reversal_changes_answer);
        }
    }
    SUBCASE("temporal mix restricted to order questions") {
        world::WorldConfig cfg;
        cfg.question_mix = {{TaskType::Temporal, 1.0}};
        cfg.allowed_kinds = {world::QuestionKind::EventOrder};
        for (int i = 0; i < 100; ++i) {
            const auto inst = world::sample_instance(cfg, rng);
            CHECK(inst.kind == world::QuestionKind::EventOrder);
            CHECK(inst.question.reversal_changes_answer);
            CHECK_FALSE(inst.question.flip_changes_answer);
        }
    }
    SUBCASE("degenerate mix is rejected") {
        world::WorldConfig cfg;
        cfg.question_mix = {{TaskType::Static, 0.0}};
        CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    }
}

TEST_CASE("sampled instances are internally consistent") {
    world::WorldConfig cfg;
    cfg.direction_set = {Direction::Left, Direction::Right, Direction::Up, Direction::Down};
    cfg.option_count = 3;
    cfg.p_answer_listed = 0.7;
    cfg.question_mix = {{TaskType::Spatiotemporal, 1.0},
                        {TaskType::Temporal, 1.0},
                        {TaskType::Static, 1.0}};
    Rng rng(23);
    for (int i = 0; i < 500; ++i) {
        const auto inst = world::sample_instance(cfg, rng);
        CHECK(validate_question(inst.question).empty());
        // Oracle agrees with a brute-force lookup of the transformed label.
        for (auto t : {Transformation::HorizontalFlip, Transformation::TemporalReversal,
                       Transformation::SegmentReorder}) {
            const auto label = world::answer_label(
                inst.kind, inst.static_attribute, world::apply_transformation(inst.state, t));
            const auto expected = inst.question.find_option(label);
            CHECK(world::transformed_answer(inst, t) ==
                  (expected ? *expected : inst.question.null_option()));
        }
    }
}

TEST_CASE("p_answer_listed controls how often the transformed label is an option") {
    world::WorldConfig cfg;
    cfg.direction_set = {Direction::Left, Direction::Right, Direction::Up, Direction::Down};
    cfg.option_count = 2;
    cfg.p_answer_listed = 0.5;
    cfg.cue_attribute.clear();
    cfg.question_mix = {{TaskType::Temporal, 1.0}};
    cfg.allowed_kinds = {world::QuestionKind::MovingDirection};
    Rng rng(29);
    const int n = 10000;
    int listed = 0;
    for (int i = 0; i < n; ++i) {
        const auto inst = world::sample_instance(cfg, rng);
        // Temporal direction questions are paired with temporal reversal.
        if (!inst.question.is_null(
                world::transformed_answer(inst, Transformation::TemporalReversal)))
            ++listed;
    }
    const double fraction = static_cast<double>(listed) / n;
    CHECK(fraction >= 0.47);
    CHECK(fraction <= 0.53);
}

TEST_CASE("benchmark pairs flip the answer and share the question") {
    world::WorldConfig cfg;
    cfg.direction_set = {Direction::Left, Direction::Right, Direction::Up, Direction::Down};
    cfg.option_count = 4;
    cfg.question_mix = {{TaskType::Spatiotemporal, 1.0}, {TaskType::Temporal, 1.0}};
    Rng rng(31);
    const auto pairs = world::build_paired_benchmark(cfg, 200, rng);
    REQUIRE(pairs.size() == 200);
    for (const auto& p : pairs) {
        CHECK(p.a.question.ground_truth != p.b.question.ground_truth);
        CHECK(p.a.question.options == p.b.question.options);
        CHECK(p.a.question.prompt_key == p.b.question.prompt_key);
        CHECK_FALSE(p.a.question.is_null(p.b.question.ground_truth));
        CHECK(p.b.state == world::apply_transformation(p.a.state, p.transformation));
    }
}

TEST_CASE("segment-reorder pairs swap the order and nothing else") {
    world::WorldConfig cfg;
    cfg.question_mix = {{TaskType::Temporal, 1.0}};
    cfg.allowed_kinds = {world::QuestionKind::EventOrder};
    Rng rng(37);
    const auto pairs = world::build_paired_benchmark(cfg, 50, rng);
    for (const auto& p : pairs) {
        CHECK(p.transformation == Transformation::SegmentReorder);
        CHECK(p.subtask == Subtask::EventSequence);
        CHECK(p.b.state.order != p.a.state.order);
        CHECK(p.b.state.direction == p.a.state.direction);
        CHECK(p.b.state.arrow == p.a.state.arrow);
        CHECK(p.b.state.statics == p.a.state.statics);
    }
}

TEST_CASE("static weight cannot enter a paired benchmark") {
    world::WorldConfig cfg;  // default mix includes Static
    Rng rng(41);
    CHECK_THROWS_WITH_AS(world::build_paired_benchmark(cfg, 10, rng),
                         "static questions cannot form answer-changing pairs",
                         std::invalid_argument);
}
