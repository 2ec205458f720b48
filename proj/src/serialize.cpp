#include "primvid/serialize.hpp"

#include "primvid/error.hpp"

namespace primvid {

namespace {

template <typename T>
T get_or(const Json& j, const char* key, T fallback) {
    auto it = j.find(key);
    return it == j.end() || it->is_null() ? fallback : it->get<T>();
}

std::string str(std::string_view s) { return std::string(s); }

constexpr std::pair<CardOp::Kind, std::string_view> kCardKinds[] = {
    {CardOp::Kind::push, "push"}, {CardOp::Kind::pop, "pop"}, {CardOp::Kind::move, "move"}};
constexpr std::pair<FsOp::Kind, std::string_view> kFsKinds[] = {{FsOp::Kind::enter, "enter"},
                                                                {FsOp::Kind::leave, "leave"},
                                                                {FsOp::Kind::create, "create"},
                                                                {FsOp::Kind::remove, "remove"}};
constexpr std::pair<SymbolOp::Kind, std::string_view> kSymbolKinds[] = {{SymbolOp::Kind::add, "add"},
                                                                        {SymbolOp::Kind::sub, "sub"},
                                                                        {SymbolOp::Kind::mul, "mul"},
                                                                        {SymbolOp::Kind::div, "div"}};

template <typename E, std::size_t N>
std::string kind_name(const std::pair<E, std::string_view> (&table)[N], E v) {
    for (const auto& [k, n] : table)
        if (k == v) return str(n);
    throw InvalidSpec("unnamed operation kind");
}

template <typename E, std::size_t N>
E kind_value(const std::pair<E, std::string_view> (&table)[N], const std::string& s) {
    for (const auto& [k, n] : table)
        if (n == s) return k;
    throw InvalidSpec("unknown operation kind '" + s + "'");
}

}  // namespace

void to_json(Json& j, const Vec2& v) { j = Json::array({v.x, v.y}); }
void from_json(const Json& j, Vec2& v) {
    if (!j.is_array() || j.size() != 2) throw InvalidSpec("vector must be a 2-element array");
    v = {j[0].get<double>(), j[1].get<double>()};
}

void to_json(Json& j, const AttributeChange& c) {
    j = {{"time_s", c.time_s}, {"attribute", to_string(c.attribute)}, {"new_value", c.new_value}};
}
void from_json(const Json& j, AttributeChange& c) {
    c.time_s = j.at("time_s").get<double>();
    c.attribute = attribute_from_string(j.at("attribute").get<std::string>());
    c.new_value = j.at("new_value").get<std::string>();
}

void to_json(Json& j, const TimeWindow& w) { j = Json::array({w.start_s, w.end_s}); }
void from_json(const Json& j, TimeWindow& w) {
    if (!j.is_array() || j.size() != 2) throw InvalidSpec("time window must be a 2-element array");
    w = {j[0].get<double>(), j[1].get<double>()};
}

void to_json(Json& j, const ObjectSpec& o) {
    j = {{"id", o.id},
         {"shape", to_string(o.shape)},
         {"color", to_string(o.color)},
         {"size", o.size},
         {"position", o.position},
         {"velocity", o.velocity},
         {"angular_velocity", o.angular_velocity},
         {"initial_angle", o.initial_angle},
         {"motion", to_string(o.motion)},
         {"acceleration", o.acceleration},
         {"orbit_center", o.orbit_center},
         {"orbit_rate", o.orbit_rate},
         {"zigzag_period_s", o.zigzag_period_s},
         {"bursts", o.bursts},
         {"attribute_schedule", o.attribute_schedule}};
}
void from_json(const Json& j, ObjectSpec& o) {
    o = {};
    o.id = j.at("id").get<int>();
    o.shape = shape_from_string(j.at("shape").get<std::string>());
    o.color = color_from_string(j.at("color").get<std::string>());
    o.size = j.at("size").get<double>();
    o.position = j.at("position").get<Vec2>();
    o.velocity = j.at("velocity").get<Vec2>();
    o.angular_velocity = get_or(j, "angular_velocity", 0.0);
    o.initial_angle = get_or(j, "initial_angle", 0.0);
    o.motion = motion_from_string(get_or<std::string>(j, "motion", "linear"));
    o.acceleration = get_or(j, "acceleration", 0.0);
    if (j.contains("orbit_center")) o.orbit_center = j.at("orbit_center").get<Vec2>();
    o.orbit_rate = get_or(j, "orbit_rate", 0.0);
    o.zigzag_period_s = get_or(j, "zigzag_period_s", 0.0);
    if (j.contains("bursts")) o.bursts = j.at("bursts").get<std::vector<TimeWindow>>();
    if (j.contains("attribute_schedule"))
        o.attribute_schedule = j.at("attribute_schedule").get<std::vector<AttributeChange>>();
}

void to_json(Json& j, const SceneSpec& s) {
    j = {{"seed", s.seed},
         {"canvas", {{"width", s.canvas.width}, {"height", s.canvas.height}}},
         {"duration_s", s.duration_s},
         {"fps", s.fps},
         {"task_type", to_string(s.task_type)},
         {"query_time_s", s.query_time_s},
         {"objects", s.objects}};
}
void from_json(const Json& j, SceneSpec& s) {
    s = {};
    s.seed = j.at("seed").get<std::uint64_t>();
    s.canvas = {j.at("canvas").at("width").get<int>(), j.at("canvas").at("height").get<int>()};
    s.duration_s = j.at("duration_s").get<double>();
    s.fps = j.at("fps").get<int>();
    s.task_type = task_from_string(j.at("task_type").get<std::string>());
    s.query_time_s = get_or(j, "query_time_s", 0.0);
    s.objects = j.at("objects").get<std::vector<ObjectSpec>>();
}

Json event_to_json(const EventRecord& e, int fps) {
    Json j = e;
    j["timestamp"] = format_timestamp(e.frame_index, fps);
    return j;
}
void to_json(Json& j, const EventRecord& e) {
    j = {{"frame", e.frame_index},
         {"time_s", e.time_s},
         {"kind", to_string(e.kind)},
         {"subject", e.subject},
         {"payload", e.payload}};
}
void from_json(const Json& j, EventRecord& e) {
    e.frame_index = j.at("frame").get<int>();
    e.time_s = j.at("time_s").get<double>();
    e.kind = event_kind_from_string(j.at("kind").get<std::string>());
    e.subject = j.at("subject").get<int>();
    e.payload = j.at("payload").get<std::string>();
}

void to_json(Json& j, const StateSnapshot& state) {
    j = {{"family", to_string(family_of(state))}};
    std::visit(
        [&](const auto& s) {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, CardStacks>) j["stacks"] = s.stacks;
            else if constexpr (std::is_same_v<T, ChipContainers>) j["counts"] = s.counts;
            else if constexpr (std::is_same_v<T, FileTree>) {
                j["dirs"] = s.dirs;
                j["cwd"] = s.cwd;
            } else if constexpr (std::is_same_v<T, SymbolRegister>) j["value"] = s.value;
            else if constexpr (std::is_same_v<T, ShellGrid>) {
                j["rows"] = s.rows;
                j["cols"] = s.cols;
                j["cells"] = s.cells;
            } else {
                j["rows"] = s.rows;
                j["cols"] = s.cols;
                j["tiles"] = s.tiles;
            }
        },
        state);
}
void from_json(const Json& j, StateSnapshot& state) {
    switch (family_from_string(j.at("family").get<std::string>())) {
        case Family::card_stack:
            state = CardStacks{j.at("stacks").get<std::vector<std::vector<std::string>>>()};
            break;
        case Family::chip_containers: state = ChipContainers{j.at("counts").get<std::vector<int>>()}; break;
        case Family::file_system:
            state = FileTree{j.at("dirs").get<std::vector<std::string>>(), j.at("cwd").get<std::string>()};
            break;
        case Family::symbol_arithmetic: state = SymbolRegister{j.at("value").get<std::int64_t>()}; break;
        case Family::shell_game:
            state = ShellGrid{j.at("rows").get<int>(), j.at("cols").get<int>(), j.at("cells").get<std::vector<std::string>>()};
            break;
        case Family::sliding_puzzle:
            state = SlidingPuzzle{j.at("rows").get<int>(), j.at("cols").get<int>(), j.at("tiles").get<std::vector<int>>()};
            break;
    }
}

void to_json(Json& j, const Action& action) {
    std::visit(
        [&](const auto& a) {
            using T = std::decay_t<decltype(a)>;
            if constexpr (std::is_same_v<T, CardOp>)
                j = {{"op", "card"}, {"kind", kind_name(kCardKinds, a.kind)}, {"from", a.from}, {"to", a.to}, {"card", a.card}};
            else if constexpr (std::is_same_v<T, ChipOp>)
                j = {{"op", "chips"}, {"amount", a.amount}, {"from", a.from}, {"to", a.to}};
            else if constexpr (std::is_same_v<T, FsOp>)
                j = {{"op", "fs"}, {"kind", kind_name(kFsKinds, a.kind)}, {"name", a.name}};
            else if constexpr (std::is_same_v<T, SymbolOp>)
                j = {{"op", "symbol"}, {"kind", kind_name(kSymbolKinds, a.kind)}, {"k", a.k}};
            else if constexpr (std::is_same_v<T, SwapOp>)
                j = {{"op", "swap"}, {"a", a.a}, {"b", a.b}};
            else
                j = {{"op", "slide"}, {"dir", to_string(a.dir)}};
        },
        action);
}
void from_json(const Json& j, Action& action) {
    const auto op = j.at("op").get<std::string>();
    if (op == "card")
        action = CardOp{kind_value(kCardKinds, j.at("kind").get<std::string>()), j.at("from").get<int>(),
                        j.at("to").get<int>(), j.at("card").get<std::string>()};
    else if (op == "chips")
        action = ChipOp{j.at("amount").get<int>(), j.at("from").get<int>(), j.at("to").get<int>()};
    else if (op == "fs")
        action = FsOp{kind_value(kFsKinds, j.at("kind").get<std::string>()), j.at("name").get<std::string>()};
    else if (op == "symbol")
        action = SymbolOp{kind_value(kSymbolKinds, j.at("kind").get<std::string>()), j.at("k").get<std::int64_t>()};
    else if (op == "swap")
        action = SwapOp{j.at("a").get<int>(), j.at("b").get<int>()};
    else if (op == "slide")
        action = SlideOp{direction_from_string(j.at("dir").get<std::string>())};
    else
        throw InvalidSpec("unknown operation type '" + op + "'");
}

void to_json(Json& j, const Operation& op) {
    j = {{"op_index", op.op_index}, {"duration_s", op.duration_s}, {"action", op.action}, {"text", describe(op.action)}};
}
void from_json(const Json& j, Operation& op) {
    op.op_index = j.at("op_index").get<int>();
    op.duration_s = j.at("duration_s").get<double>();
    op.action = j.at("action").get<Action>();
}

void to_json(Json& j, const ScenarioScript& s) {
    j = {{"seed", s.seed},
         {"family", to_string(s.family)},
         {"difficulty", to_string(s.difficulty)},
         {"question_mode", to_string(s.question_mode)},
         {"visible_state", to_string(s.visible_state)},
         {"per_op_duration_s", s.per_op_duration_s},
         {"reveal_duration_s", s.reveal_duration_s},
         {"initial", s.initial},
         {"operations", s.operations},
         {"final", s.final_state},
         {"query", nullptr}};
    if (s.query)
        j["query"] = {{"op_index", s.query->op_index},
                      {"property", s.query->property.name},
                      {"target", s.query->property.target}};
}
void from_json(const Json& j, ScenarioScript& s) {
    s = {};
    s.seed = j.at("seed").get<std::uint64_t>();
    s.family = family_from_string(j.at("family").get<std::string>());
    s.difficulty = difficulty_from_string(get_or<std::string>(j, "difficulty", "standard"));
    s.question_mode = question_mode_from_string(j.at("question_mode").get<std::string>());
    s.visible_state = visibility_from_string(j.at("visible_state").get<std::string>());
    s.per_op_duration_s = j.at("per_op_duration_s").get<double>();
    s.reveal_duration_s = j.at("reveal_duration_s").get<double>();
    s.initial = j.at("initial").get<StateSnapshot>();
    s.operations = j.at("operations").get<std::vector<Operation>>();
    s.final_state = j.at("final").get<StateSnapshot>();
    if (const auto& q = j.at("query"); !q.is_null())
        s.query = HistoricalQuery{q.at("op_index").get<int>(),
                                  QueryProperty{q.at("property").get<std::string>(), q.at("target").get<int>()}};
}

void to_json(Json& j, const Provenance& p) {
    j = {{"seed", p.seed},
         {"generator_version", p.generator_version},
         {"purpose", to_string(p.purpose)},
         {"difficulty", p.difficulty},
         {"params", p.params}};
}
void from_json(const Json& j, Provenance& p) {
    p.seed = j.at("seed").get<std::uint64_t>();
    p.generator_version = j.at("generator_version").get<std::string>();
    p.purpose = purpose_from_string(j.at("purpose").get<std::string>());
    p.difficulty = get_or<std::string>(j, "difficulty", "standard");
    p.params = get_or<std::string>(j, "params", "");
}

void to_json(Json& j, const QASample& s) {
    j = {{"id", s.id},
         {"video_path", s.video_path},
         {"metadata_path", s.metadata_path},
         {"target", s.target},
         {"long_term", s.long_term},
         {"question_mode", s.question_mode ? Json(to_string(*s.question_mode)) : Json(nullptr)},
         {"question", s.question},
         {"answer", s.answer},
         {"choices", s.choices},
         {"answer_index", s.answer_index ? Json(*s.answer_index) : Json(nullptr)},
         {"cot", s.cot ? Json(*s.cot) : Json(nullptr)},
         {"template_id", s.template_id},
         {"provenance", s.provenance}};
}
void from_json(const Json& j, QASample& s) {
    s = {};
    s.id = j.at("id").get<std::string>();
    s.video_path = j.at("video_path").get<std::string>();
    s.metadata_path = j.at("metadata_path").get<std::string>();
    s.target = j.at("target").get<std::string>();
    s.long_term = j.at("long_term").get<bool>();
    if (auto it = j.find("question_mode"); it != j.end() && !it->is_null())
        s.question_mode = question_mode_from_string(it->get<std::string>());
    s.question = j.at("question").get<std::string>();
    s.answer = j.at("answer").get<std::string>();
    s.choices = get_or(j, "choices", std::vector<std::string>{});
    if (auto it = j.find("answer_index"); it != j.end() && !it->is_null()) s.answer_index = it->get<int>();
    if (auto it = j.find("cot"); it != j.end() && !it->is_null()) s.cot = it->get<std::string>();
    s.template_id = get_or<std::string>(j, "template_id", "");
    s.provenance = j.at("provenance").get<Provenance>();
}

}  // namespace primvid
