#include "crpo/world.hpp"

#include <algorithm>
#include <cstdio>
#include <stdexcept>

#include "crpo/router.hpp"

namespace crpo::world {

namespace {

constexpr Direction kAllDirections[] = {
    Direction::Left,    Direction::Right,   Direction::Up,       Direction::Down,
    Direction::UpLeft,  Direction::UpRight, Direction::DownLeft, Direction::DownRight,
    Direction::None};

bool is_diagonal(Direction d) {
    return d == Direction::UpLeft || d == Direction::UpRight || d == Direction::DownLeft ||
           d == Direction::DownRight;
}

int direction_rank(Direction d) {
    int i = 0;
    for (Direction c : kAllDirections) {
        if (c == d) return i;
        ++i;
    }
    return i;
}

std::string hex_id(Rng& rng) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "q%016llx",
                  static_cast<unsigned long long>(rng.next_u64()));
    return std::string(buf);
}

template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i)
        std::swap(v[i - 1], v[rng.next_below(i)]);
}

template <typename T>
const T& pick(const std::vector<T>& v, Rng& rng) {
    return v[rng.next_below(v.size())];
}

}  // namespace

std::string_view to_label(QuestionKind k) {
    switch (k) {
        case QuestionKind::MovingDirection: return "moving_direction";
        case QuestionKind::TiltAxis: return "tilt_axis";
        case QuestionKind::EventOrder: return "event_order";
        case QuestionKind::ArrowOfTime: return "arrow_of_time";
        case QuestionKind::StaticAttribute: return "static_attribute";
    }
    throw std::invalid_argument("bad question kind");
}

Direction flip_direction(Direction d) {
    switch (d) {
        case Direction::Left: return Direction::Right;
        case Direction::Right: return Direction::Left;
        case Direction::UpLeft: return Direction::UpRight;
        case Direction::UpRight: return Direction::UpLeft;
        case Direction::DownLeft: return Direction::DownRight;
        case Direction::DownRight: return Direction::DownLeft;
        default: return d;  // Up, Down, None are mirror-symmetric
    }
}

Direction reverse_direction(Direction d) {
    switch (d) {
        case Direction::Left: return Direction::Right;
        case Direction::Right: return Direction::Left;
        case Direction::Up: return Direction::Down;
        case Direction::Down: return Direction::Up;
        case Direction::UpLeft: return Direction::DownRight;
        case Direction::UpRight: return Direction::DownLeft;
        case Direction::DownLeft: return Direction::UpRight;
        case Direction::DownRight: return Direction::UpLeft;
        case Direction::None: return Direction::None;
    }
    throw std::invalid_argument("bad direction");
}

std::string_view direction_axis(Direction d) {
    switch (d) {
        case Direction::Left:
        case Direction::Right: return "horizontal";
        case Direction::Up:
        case Direction::Down: return "vertical";
        case Direction::UpLeft:
        case Direction::DownRight: return "nw_se";
        case Direction::UpRight:
        case Direction::DownLeft: return "ne_sw";
        case Direction::None: return "none";
    }
    throw std::invalid_argument("bad direction");
}

WorldState apply_transformation(const WorldState& w, Transformation t) {
    WorldState out = w;  // statics never change
    switch (t) {
        case Transformation::HorizontalFlip:
            out.direction = flip_direction(w.direction);
            break;
        case Transformation::TemporalReversal:
            out.direction = reverse_direction(w.direction);
            out.arrow = w.arrow == Arrow::Forward ? Arrow::Backward : Arrow::Forward;
            out.order = w.order == SegmentOrder::AB ? SegmentOrder::BA : SegmentOrder::AB;
            break;
        case Transformation::SegmentReorder:
            out.order = w.order == SegmentOrder::AB ? SegmentOrder::BA : SegmentOrder::AB;
            break;
    }
    return out;
}

std::string answer_label(QuestionKind kind, const std::string& attribute, const WorldState& w) {
    switch (kind) {
        case QuestionKind::MovingDirection: return std::string(crpo::to_label(w.direction));
        case QuestionKind::TiltAxis: {
            if (!is_diagonal(w.direction))
                throw std::invalid_argument("tilt_axis question on non-diagonal motion");
            return std::string(direction_axis(w.direction));
        }
        case QuestionKind::EventOrder:
            return w.order == SegmentOrder::AB ? "a_then_b" : "b_then_a";
        case QuestionKind::ArrowOfTime: return std::string(crpo::to_label(w.arrow));
        case QuestionKind::StaticAttribute: {
            auto it = w.statics.find(attribute);
            if (it == w.statics.end())
                throw std::invalid_argument("static attribute '" + attribute +
                                            "' missing from world state");
            return it->second;
        }
    }
    throw std::invalid_argument("bad question kind");
}

void WorldConfig::validate() const {
    if (option_count < 2 || option_count > 4)
        throw std::invalid_argument("world.option_count: must be in [2, 4]");
    if (p_answer_listed < 0.0 || p_answer_listed > 1.0)
        throw std::invalid_argument("world.p_answer_listed: must be in [0, 1]");
    if (cue_strength < 0.0 || cue_strength > 1.0)
        throw std::invalid_argument("world.cue_strength: must be in [0, 1]");
    if (p_arrow_forward < 0.0 || p_arrow_forward > 1.0)
        throw std::invalid_argument("world.p_arrow_forward: must be in [0, 1]");
    if (p_order_ab < 0.0 || p_order_ab > 1.0)
        throw std::invalid_argument("world.p_order_ab: must be in [0, 1]");
    if (router_noise < 0.0 || router_noise > 1.0)
        throw std::invalid_argument("world.router_noise: must be in [0, 1]");
    if (!cue_attribute.empty() && !static_registry.count(cue_attribute))
        throw std::invalid_argument("world.cue_attribute: '" + cue_attribute +
                                    "' not in static_registry");
    for (const auto& [attr, values] : static_registry) {
        if (values.empty())
            throw std::invalid_argument("world.static_registry." + attr + ": empty value list");
        for (std::size_t i = 0; i < values.size(); ++i)
            for (std::size_t k = i + 1; k < values.size(); ++k)
                if (values[i] == values[k])
                    throw std::invalid_argument("world.static_registry." + attr +
                                                ": duplicate value '" + values[i] + "'");
    }
    if (direction_set.empty())
        throw std::invalid_argument("world.direction_set: must not be empty");

    bool any_positive = false;
    for (const auto& [task, weight] : question_mix) {
        if (weight < 0.0)
            throw std::invalid_argument(std::string("world.question_mix.") +
                                        std::string(crpo::to_label(task)) +
                                        ": negative weight");
        if (weight > 0.0) {
            any_positive = true;
            if (compatible_kinds(*this, task).empty())
                throw std::invalid_argument(std::string("world.question_mix.") +
                                            std::string(crpo::to_label(task)) +
                                            ": no sampleable question family under this config");
        }
    }
    if (!any_positive)
        throw std::invalid_argument("world.question_mix: at least one weight must be positive");
}

std::vector<Direction> WorldConfig::direction_closure() const {
    std::vector<Direction> closure;
    auto add = [&](Direction d) {
        if (std::find(closure.begin(), closure.end(), d) == closure.end()) closure.push_back(d);
    };
    for (Direction d : direction_set) add(d);
    for (std::size_t i = 0; i < closure.size(); ++i) {
        add(flip_direction(closure[i]));
        add(reverse_direction(closure[i]));
    }
    std::sort(closure.begin(), closure.end(),
              [](Direction a, Direction b) { return direction_rank(a) < direction_rank(b); });
    return closure;
}

Direction WorldConfig::cue_direction(const std::string& value) const {
    if (cue_attribute.empty()) return Direction::None;
    const auto& values = static_registry.at(cue_attribute);
    auto it = std::find(values.begin(), values.end(), value);
    if (it == values.end())
        throw std::invalid_argument("cue value '" + value + "' not in registry");
    const auto idx = static_cast<std::size_t>(it - values.begin());
    return direction_set[idx % direction_set.size()];
}

namespace {

// Directions whose answers a family may ask about, per task category.
std::vector<Direction> direction_class(const WorldConfig& cfg, QuestionKind kind, TaskType task) {
    std::vector<Direction> out;
    for (Direction d : cfg.direction_set) {
        const bool flips = flip_direction(d) != d;
        const bool reverses = reverse_direction(d) != d;
        switch (kind) {
            case QuestionKind::MovingDirection:
                if (task == TaskType::Spatiotemporal && flips && reverses) out.push_back(d);
                if (task == TaskType::Temporal && !flips && reverses) out.push_back(d);
                break;
            case QuestionKind::TiltAxis:
                if (is_diagonal(d)) out.push_back(d);
                break;
            default: out.push_back(d); break;
        }
    }
    return out;
}

bool kind_allowed(const WorldConfig& cfg, QuestionKind k) {
    if (cfg.allowed_kinds.empty()) return true;
    return std::find(cfg.allowed_kinds.begin(), cfg.allowed_kinds.end(), k) !=
           cfg.allowed_kinds.end();
}

std::vector<std::string> attributes_with_choices(const WorldConfig& cfg) {
    std::vector<std::string> attrs;
    for (const auto& [attr, values] : cfg.static_registry)
        if (values.size() >= 2) attrs.push_back(attr);
    return attrs;
}

}  // namespace

std::vector<QuestionKind> compatible_kinds(const WorldConfig& cfg, TaskType task) {
    std::vector<QuestionKind> kinds;
    auto consider = [&](QuestionKind k) {
        if (kind_allowed(cfg, k)) kinds.push_back(k);
    };
    switch (task) {
        case TaskType::Spatial:
            if (!direction_class(cfg, QuestionKind::TiltAxis, task).empty())
                consider(QuestionKind::TiltAxis);
            break;
        case TaskType::Temporal:
            consider(QuestionKind::EventOrder);
            consider(QuestionKind::ArrowOfTime);
            if (!direction_class(cfg, QuestionKind::MovingDirection, task).empty())
                consider(QuestionKind::MovingDirection);
            break;
        case TaskType::Spatiotemporal:
            if (!direction_class(cfg, QuestionKind::MovingDirection, task).empty())
                consider(QuestionKind::MovingDirection);
            break;
        case TaskType::Static:
            if (!attributes_with_choices(cfg).empty()) consider(QuestionKind::StaticAttribute);
            break;
    }
    return kinds;
}

namespace {

TaskType draw_task(const WorldConfig& cfg, Rng& rng) {
    double total = 0.0;
    for (const auto& [task, weight] : cfg.question_mix) total += weight;
    double x = rng.next_double() * total;
    for (const auto& [task, weight] : cfg.question_mix) {
        x -= weight;
        if (x < 0.0 && weight > 0.0) return task;
    }
    for (auto it = cfg.question_mix.rbegin(); it != cfg.question_mix.rend(); ++it)
        if (it->second > 0.0) return it->first;
    throw std::invalid_argument("world.question_mix: no positive weight");
}

// Only the attribute a family asks about is skewed (the static cue for
// motion, the forward/natural-order priors for time); everything else is
// uniform so transformed states stay covered.
WorldState sample_state(const WorldConfig& cfg, QuestionKind kind, TaskType task, Rng& rng) {
    WorldState st;
    for (const auto& [attr, values] : cfg.static_registry) st.statics[attr] = pick(values, rng);

    const bool direction_question =
        kind == QuestionKind::MovingDirection || kind == QuestionKind::TiltAxis;
    std::vector<Direction> dirs = direction_class(cfg, kind, task);
    if (dirs.empty()) dirs = cfg.direction_set;
    const Direction cue = direction_question && !cfg.cue_attribute.empty()
                              ? cfg.cue_direction(st.statics.at(cfg.cue_attribute))
                              : Direction::None;
    if (dirs.size() > 1 && std::find(dirs.begin(), dirs.end(), cue) != dirs.end()) {
        if (rng.next_bool(cfg.cue_strength)) {
            st.direction = cue;
        } else {
            std::vector<Direction> rest;
            for (Direction d : dirs)
                if (d != cue) rest.push_back(d);
            st.direction = pick(rest, rng);
        }
    } else {
        st.direction = pick(dirs, rng);
    }
    st.arrow = kind == QuestionKind::ArrowOfTime
                   ? (rng.next_bool(cfg.p_arrow_forward) ? Arrow::Forward : Arrow::Backward)
                   : (rng.next_bool(0.5) ? Arrow::Forward : Arrow::Backward);
    st.order = kind == QuestionKind::EventOrder
                   ? (rng.next_bool(cfg.p_order_ab) ? SegmentOrder::AB : SegmentOrder::BA)
                   : (rng.next_bool(0.5) ? SegmentOrder::AB : SegmentOrder::BA);
    return st;
}

std::vector<std::string> canonical_pair_options(QuestionKind kind) {
    switch (kind) {
        case QuestionKind::TiltAxis: return {"nw_se", "ne_sw"};
        case QuestionKind::EventOrder: return {"a_then_b", "b_then_a"};
        case QuestionKind::ArrowOfTime: return {"forward", "backward"};
        default: throw std::invalid_argument("not a binary question family");
    }
}

// Option list for a MovingDirection question. If the candidate pool fits into
// option_count the list is canonical; otherwise the transformed correct label
// is included with probability p_answer_listed and the rest are distractors.
std::vector<std::string> direction_options(const WorldConfig& cfg, const WorldState& st,
                                           TaskType task, Rng& rng) {
    const std::vector<Direction> pool = cfg.direction_closure();
    const auto need = static_cast<std::size_t>(cfg.option_count);
    std::vector<Direction> selected;
    if (pool.size() <= need) {
        selected = pool;
    } else {
        Transformation primary = Transformation::TemporalReversal;
        if (task == TaskType::Spatiotemporal && rng.next_bool(0.5))
            primary = Transformation::HorizontalFlip;
        const Direction t_dir = primary == Transformation::HorizontalFlip
                                    ? flip_direction(st.direction)
                                    : reverse_direction(st.direction);
        const bool listed = t_dir == st.direction || rng.next_bool(cfg.p_answer_listed);
        selected.push_back(st.direction);
        if (listed && t_dir != st.direction) selected.push_back(t_dir);
        std::vector<Direction> rest;
        for (Direction d : pool)
            if (d != st.direction && d != t_dir) rest.push_back(d);
        shuffle(rest, rng);
        for (Direction d : rest) {
            if (selected.size() >= need) break;
            selected.push_back(d);
        }
        if (selected.size() < need && !listed) selected.push_back(t_dir);
        std::sort(selected.begin(), selected.end(), [](Direction a, Direction b) {
            return direction_rank(a) < direction_rank(b);
        });
    }
    std::vector<std::string> labels;
    labels.reserve(selected.size());
    for (Direction d : selected) labels.emplace_back(crpo::to_label(d));
    return labels;
}

std::vector<std::string> static_options(const WorldConfig& cfg, const std::string& attr,
                                        const std::string& gt_value, Rng& rng) {
    const auto& values = cfg.static_registry.at(attr);
    const auto need = static_cast<std::size_t>(cfg.option_count);
    if (values.size() <= need) return values;
    std::vector<std::string> rest;
    for (const auto& v : values)
        if (v != gt_value) rest.push_back(v);
    shuffle(rest, rng);
    std::vector<std::string> selected{gt_value};
    for (const auto& v : rest) {
        if (selected.size() >= need) break;
        selected.push_back(v);
    }
    // keep registry order so identical option sets share one prompt
    std::sort(selected.begin(), selected.end(), [&](const std::string& a, const std::string& b) {
        return std::find(values.begin(), values.end(), a) <
               std::find(values.begin(), values.end(), b);
    });
    return selected;
}

std::string make_prompt_key(QuestionKind kind, const std::string& attr,
                            const std::vector<std::string>& options) {
    std::string key = std::string(to_label(kind)) + "|" + attr + "|";
    for (std::size_t i = 0; i < options.size(); ++i) {
        if (i) key += ',';
        key += options[i];
    }
    return key;
}

}  // namespace

AnswerId transformed_answer(const WorldInstance& inst, Transformation t) {
    auto it = inst.oracle.find(t);
    if (it == inst.oracle.end())
        throw std::runtime_error(std::string("oracle gap: no entry for ") +
                                 std::string(crpo::to_label(t)));
    return it->second;
}

std::string observe(const WorldState& w, const Question& q, ObservationChannel ch) {
    std::string sig;
    switch (ch) {
        case ObservationChannel::FullVideo:
            sig = "fv|" + q.prompt_key + "|dir=" + std::string(crpo::to_label(w.direction)) +
                  "|arrow=" + std::string(crpo::to_label(w.arrow)) +
                  "|order=" + std::string(crpo::to_label(w.order));
            break;
        case ObservationChannel::SingleFrame:
            sig = "1f|" + q.prompt_key;
            break;
        case ObservationChannel::ShuffledFrames:
            sig = "sh|" + q.prompt_key + "|axis=" + std::string(direction_axis(w.direction));
            break;
        case ObservationChannel::TextOnly:
            return "tx|" + q.prompt_key;
    }
    for (const auto& [k, v] : w.statics) sig += "|" + k + "=" + v;
    return sig;
}

WorldInstance sample_instance(const WorldConfig& cfg, Rng& rng) {
    const TaskType task = draw_task(cfg, rng);
    const auto kinds = compatible_kinds(cfg, task);
    if (kinds.empty())
        throw std::invalid_argument(std::string("world.question_mix.") +
                                    std::string(crpo::to_label(task)) +
                                    ": no sampleable question family under this config");
    const QuestionKind kind = kinds[rng.next_below(kinds.size())];

    WorldInstance inst;
    inst.kind = kind;
    if (kind == QuestionKind::StaticAttribute)
        inst.static_attribute = pick(attributes_with_choices(cfg), rng);

    inst.state = sample_state(cfg, kind, task, rng);
    const std::string gt_label = answer_label(kind, inst.static_attribute, inst.state);

    Question& q = inst.question;
    switch (kind) {
        case QuestionKind::MovingDirection:
            q.options = direction_options(cfg, inst.state, task, rng);
            break;
        case QuestionKind::StaticAttribute:
            q.options = static_options(cfg, inst.static_attribute, gt_label, rng);
            break;
        default: q.options = canonical_pair_options(kind); break;
    }
    q.id = hex_id(rng);
    q.prompt_key = make_prompt_key(kind, inst.static_attribute, q.options);
    const auto gt = q.find_option(gt_label);
    if (!gt) throw std::runtime_error("sample_instance: ground truth label not listed");
    q.ground_truth = *gt;

    const bool flip_changes =
        answer_label(kind, inst.static_attribute,
                     apply_transformation(inst.state, Transformation::HorizontalFlip)) != gt_label;
    const bool reversal_changes =
        answer_label(kind, inst.static_attribute,
                     apply_transformation(inst.state, Transformation::TemporalReversal)) !=
        gt_label;
    const auto [flip_seen, reversal_seen] =
        router::apply_noise(flip_changes, reversal_changes, cfg.router_noise, rng);
    q.flip_changes_answer = flip_seen;
    q.reversal_changes_answer = reversal_seen;
    q.task_type = router::classify(flip_seen, reversal_seen);

    for (Transformation t : {Transformation::HorizontalFlip, Transformation::TemporalReversal,
                             Transformation::SegmentReorder}) {
        const std::string label =
            answer_label(kind, inst.static_attribute, apply_transformation(inst.state, t));
        const auto found = q.find_option(label);
        inst.oracle[t] = found ? *found : q.null_option();
    }
    return inst;
}

namespace {

Transformation pair_transformation(const WorldInstance& inst, Rng& rng) {
    switch (inst.kind) {
        case QuestionKind::EventOrder: return Transformation::SegmentReorder;
        case QuestionKind::ArrowOfTime: return Transformation::TemporalReversal;
        case QuestionKind::TiltAxis: return Transformation::HorizontalFlip;
        case QuestionKind::MovingDirection:
            if (inst.question.task_type == TaskType::Spatiotemporal)
                return rng.next_bool(0.5) ? Transformation::HorizontalFlip
                                          : Transformation::TemporalReversal;
            return Transformation::TemporalReversal;
        case QuestionKind::StaticAttribute:
            throw std::invalid_argument("static questions cannot form answer-changing pairs");
    }
    throw std::invalid_argument("bad question kind");
}

Subtask pair_subtask(QuestionKind kind) {
    switch (kind) {
        case QuestionKind::EventOrder: return Subtask::EventSequence;
        case QuestionKind::ArrowOfTime: return Subtask::ReversibleDynamics;
        default: return Subtask::MovingDirection;
    }
}

}  // namespace

std::vector<BenchmarkPair> build_paired_benchmark(const WorldConfig& cfg, int n_pairs, Rng& rng) {
    if (n_pairs < 1) throw std::invalid_argument("n_pairs must be >= 1");
    for (const auto& [task, weight] : cfg.question_mix)
        if (weight > 0.0 && !router::is_dynamic(task))
            throw std::invalid_argument("static questions cannot form answer-changing pairs");
    WorldConfig gen = cfg;
    gen.router_noise = 0.0;  // pair construction needs exact task semantics
    gen.validate();

    std::vector<BenchmarkPair> pairs;
    pairs.reserve(static_cast<std::size_t>(n_pairs));
    long attempts = 0;
    const long max_attempts = 1000L + 200L * n_pairs;
    while (pairs.size() < static_cast<std::size_t>(n_pairs)) {
        if (++attempts > max_attempts)
            throw std::runtime_error(
                "build_paired_benchmark: could not find answer-changing pairs; "
                "check direction_set and p_answer_listed");
        WorldInstance a = sample_instance(gen, rng);
        const Transformation t = pair_transformation(a, rng);
        const AnswerId answer_b = transformed_answer(a, t);
        if (a.question.is_null(answer_b) || answer_b == a.question.ground_truth) continue;

        WorldInstance b = a;
        b.state = apply_transformation(a.state, t);
        b.question.ground_truth = answer_b;
        for (auto& [bt, ans] : b.oracle) {
            const std::string label =
                answer_label(b.kind, b.static_attribute, apply_transformation(b.state, bt));
            const auto found = b.question.find_option(label);
            ans = found ? *found : b.question.null_option();
        }

        char id[16];
        std::snprintf(id, sizeof(id), "p%06zu", pairs.size());
        const Subtask subtask = pair_subtask(a.kind);
        pairs.push_back(BenchmarkPair{id, std::move(a), std::move(b), t, subtask});
    }
    return pairs;
}

std::vector<QuestionTemplate> enumerate_question_templates(const WorldConfig& cfg) {
    std::vector<QuestionTemplate> templates;
    const auto closure = cfg.direction_closure();
    const auto need = static_cast<std::size_t>(cfg.option_count);

    auto add = [&](QuestionKind kind, const std::string& attr, std::vector<std::string> options) {
        QuestionTemplate t;
        t.kind = kind;
        t.attribute = attr;
        t.prompt_key = make_prompt_key(kind, attr, options);
        t.options = std::move(options);
        templates.push_back(std::move(t));
    };

    bool any_direction_class = false;
    for (TaskType task : {TaskType::Temporal, TaskType::Spatiotemporal})
        if (!direction_class(cfg, QuestionKind::MovingDirection, task).empty())
            any_direction_class = true;
    if (kind_allowed(cfg, QuestionKind::MovingDirection) && any_direction_class) {
        if (closure.size() > need)
            throw std::invalid_argument(
                "enumerate_question_templates: option_count smaller than the direction pool; "
                "canonical enumeration is unsupported for subset option lists");
        std::vector<std::string> options;
        for (Direction d : closure) options.emplace_back(crpo::to_label(d));
        add(QuestionKind::MovingDirection, "", std::move(options));
    }
    if (kind_allowed(cfg, QuestionKind::TiltAxis) &&
        !direction_class(cfg, QuestionKind::TiltAxis, TaskType::Spatial).empty())
        add(QuestionKind::TiltAxis, "", canonical_pair_options(QuestionKind::TiltAxis));
    if (kind_allowed(cfg, QuestionKind::EventOrder))
        add(QuestionKind::EventOrder, "", canonical_pair_options(QuestionKind::EventOrder));
    if (kind_allowed(cfg, QuestionKind::ArrowOfTime))
        add(QuestionKind::ArrowOfTime, "", canonical_pair_options(QuestionKind::ArrowOfTime));
    if (kind_allowed(cfg, QuestionKind::StaticAttribute)) {
        for (const auto& attr : attributes_with_choices(cfg)) {
            const auto& values = cfg.static_registry.at(attr);
            if (values.size() > need)
                throw std::invalid_argument(
                    "enumerate_question_templates: option_count smaller than the value pool of '" +
                    attr + "'");
            add(QuestionKind::StaticAttribute, attr, values);
        }
    }
    return templates;
}

std::vector<WorldState> enumerate_states(const WorldConfig& cfg) {
    std::vector<WorldState> states;
    states.emplace_back();  // statics filled below
    std::vector<WorldState> expanded;
    for (const auto& [attr, values] : cfg.static_registry) {
        expanded.clear();
        for (const auto& st : states)
            for (const auto& v : values) {
                WorldState next = st;
                next.statics[attr] = v;
                expanded.push_back(std::move(next));
            }
        states.swap(expanded);
        if (states.size() > 200000)
            throw std::invalid_argument("enumerate_states: static registry too large");
    }
    std::vector<WorldState> out;
    for (Direction d : cfg.direction_closure())
        for (Arrow a : {Arrow::Forward, Arrow::Backward})
            for (SegmentOrder o : {SegmentOrder::AB, SegmentOrder::BA})
                for (const auto& st : states) {
                    WorldState next = st;
                    next.direction = d;
                    next.arrow = a;
                    next.order = o;
                    out.push_back(std::move(next));
                    if (out.size() > 200000)
                        throw std::invalid_argument("enumerate_states: state space too large");
                }
    return out;
}

}  // namespace crpo::world
