#include "primvid/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <tuple>
#include <utility>

#include "enum_names.hpp"
#include "primvid/error.hpp"
#include "primvid/qa.hpp"

namespace primvid {

double Vec2::norm() const { return std::hypot(x, y); }

namespace {

constexpr std::pair<Shape, std::string_view> kShapeNames[] = {
    {Shape::circle, "circle"}, {Shape::square, "square"}, {Shape::triangle, "triangle"}, {Shape::star, "star"}};

struct PaletteEntry {
    Color color;
    std::string_view name;
    Rgb rgb;
};
constexpr PaletteEntry kPalette[] = {
    {Color::red, "red", {220, 40, 40}},        {Color::green, "green", {40, 180, 60}},
    {Color::blue, "blue", {50, 90, 230}},      {Color::yellow, "yellow", {240, 220, 40}},
    {Color::orange, "orange", {245, 140, 20}}, {Color::purple, "purple", {150, 60, 200}},
    {Color::cyan, "cyan", {40, 210, 220}},     {Color::white, "white", {245, 245, 245}},
};

constexpr std::pair<TaskType, std::string_view> kTaskNames[] = {
    {TaskType::collision_counting, "collision_counting"},
    {TaskType::direction_identification, "direction_identification"},
    {TaskType::trajectory_shape, "trajectory_shape"},
    {TaskType::speed_perception, "speed_perception"},
    {TaskType::motion_counting, "motion_counting"},
    {TaskType::attribute_change, "attribute_change"},
    {TaskType::rotation_counting, "rotation_counting"},
    {TaskType::relative_position, "relative_position"},
    {TaskType::acceleration_detection, "acceleration_detection"},
    {TaskType::velocity_comparison, "velocity_comparison"},
    {TaskType::distance_estimation, "distance_estimation"},
    {TaskType::event_ordering, "event_ordering"},
};

constexpr std::pair<Attribute, std::string_view> kAttributeNames[] = {
    {Attribute::color, "color"}, {Attribute::size, "size"}, {Attribute::shape, "shape"}};

constexpr std::pair<MotionKind, std::string_view> kMotionNames[] = {{MotionKind::linear, "linear"},
                                                                     {MotionKind::circular, "circular"},
                                                                     {MotionKind::zigzag, "zigzag"},
                                                                     {MotionKind::bursts, "bursts"}};

constexpr std::pair<EventKind, std::string_view> kEventNames[] = {
    {EventKind::wall_contact, "wall_contact"},
    {EventKind::direction_change, "direction_change"},
    {EventKind::attribute_change, "attribute_change"},
    {EventKind::rotation_complete, "rotation_complete"},
    {EventKind::operation_applied, "operation_applied"},
    {EventKind::phase_boundary, "phase_boundary"},
};

constexpr std::pair<Purpose, std::string_view> kPurposeNames[] = {{Purpose::rl, "rl"}, {Purpose::cot, "cot"}};

}  // namespace

std::string_view to_string(Shape s) { return detail::name_of(kShapeNames, s); }
Shape shape_from_string(std::string_view s) { return detail::value_of(kShapeNames, s, "shape"); }

std::string_view to_string(Color c) {
    for (const auto& e : kPalette)
        if (e.color == c) return e.name;
    return "?";
}
Rgb rgb_of(Color c) {
    for (const auto& e : kPalette)
        if (e.color == c) return e.rgb;
    return {};
}
Color color_from_string(std::string_view s) {
    for (const auto& e : kPalette)
        if (e.name == s) return e.color;
    throw InvalidSpec("unknown color '" + std::string(s) + "'");
}

std::string_view to_string(TaskType t) { return detail::name_of(kTaskNames, t); }
TaskType task_from_string(std::string_view s) { return detail::value_of(kTaskNames, s, "task type"); }
std::string_view to_string(Attribute a) { return detail::name_of(kAttributeNames, a); }
Attribute attribute_from_string(std::string_view s) { return detail::value_of(kAttributeNames, s, "attribute"); }
std::string_view to_string(MotionKind m) { return detail::name_of(kMotionNames, m); }
MotionKind motion_from_string(std::string_view s) { return detail::value_of(kMotionNames, s, "motion kind"); }
std::string_view to_string(EventKind k) { return detail::name_of(kEventNames, k); }
EventKind event_kind_from_string(std::string_view s) { return detail::value_of(kEventNames, s, "event kind"); }
std::string_view to_string(Purpose p) { return detail::name_of(kPurposeNames, p); }
Purpose purpose_from_string(std::string_view s) { return detail::value_of(kPurposeNames, s, "purpose"); }

int frame_count(double duration_s, int fps) {
    return static_cast<int>(std::ceil(duration_s * fps - 1e-9));
}

void validate(const SceneSpec& spec, const KinematicLimits& limits) {
    auto fail = [](const std::string& m) { throw InvalidSpec("SceneSpec: " + m); };
    if (!(spec.duration_s > 0)) fail("duration_s must be > 0");
    if (spec.fps <= 0) fail("fps must be > 0");
    if (spec.canvas.width < 64 || spec.canvas.height < 64) fail("canvas dimensions must be >= 64 px");
    const double w = spec.canvas.width, h = spec.canvas.height;
    for (const auto& o : spec.objects) {
        const std::string tag = "object " + std::to_string(o.id) + ": ";
        if (!(o.size > 0)) fail(tag + "size must be > 0");
        if (o.size * 2 >= std::min(w, h)) fail(tag + "size exceeds half the canvas");
        if (!(o.position.x > 0 && o.position.x < w && o.position.y > 0 && o.position.y < h))
            fail(tag + "initial position outside canvas");
        if (o.velocity.norm() > limits.max_speed) fail(tag + "speed exceeds bound");
        if (std::abs(o.angular_velocity) > limits.max_angular_velocity) fail(tag + "angular velocity exceeds bound");
        double prev = -1.0;
        for (const auto& c : o.attribute_schedule) {
            if (!(c.time_s > prev)) fail(tag + "attribute schedule times must be strictly increasing");
            if (!(c.time_s < spec.duration_s)) fail(tag + "attribute change after end of clip");
            if (c.time_s < 0) fail(tag + "attribute change before start");
            prev = c.time_s;
        }
        if (o.motion == MotionKind::zigzag && !(o.zigzag_period_s > 0)) fail(tag + "zigzag period must be > 0");
    }
    for (std::size_t i = 0; i < spec.objects.size(); ++i)
        for (std::size_t j = i + 1; j < spec.objects.size(); ++j)
            if (spec.objects[i].id == spec.objects[j].id) fail("duplicate object id");
}

EventRecord make_event(int frame, int fps, EventKind kind, int subject, std::string payload) {
    return EventRecord{frame, static_cast<double>(frame) / fps, kind, subject, std::move(payload)};
}

bool event_less(const EventRecord& a, const EventRecord& b) {
    return std::tie(a.frame_index, a.subject, a.kind) < std::tie(b.frame_index, b.subject, b.kind);
}

void sort_events(std::vector<EventRecord>& events) { std::stable_sort(events.begin(), events.end(), event_less); }

bool events_sorted(const std::vector<EventRecord>& events) {
    return std::is_sorted(events.begin(), events.end(), event_less);
}

std::string format_timestamp(int frame, int fps) {
    const long long ms = std::llround(static_cast<double>(frame) * 1000.0 / fps);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%02lld:%02lld.%03lld", ms / 60000, (ms / 1000) % 60, ms % 1000);
    return buf;
}

std::string format_clock(double seconds) {
    const long long s = std::llround(std::floor(seconds + 1e-9));
    char buf[48];
    std::snprintf(buf, sizeof buf, "%02lld:%02lld", s / 60, s % 60);
    return buf;
}

// ---- qa --------------------------------------------------------------------

SeedRange seed_range_for(Purpose p) {
    constexpr std::uint64_t kSplit = 1'000'000'000ULL;
    return p == Purpose::rl ? SeedRange{0, kSplit} : SeedRange{kSplit, 2 * kSplit};
}

char choice_letter(int index) { return static_cast<char>('A' + index); }

void validate_sample(const QASample& s) {
    auto fail = [&](const std::string& m) { throw InvalidSpec("sample " + s.id + ": " + m); };
    if (s.id.empty()) fail("empty id");
    if (s.answer.empty()) fail("empty answer");
    if (s.choices.empty()) {
        if (s.answer_index) fail("answer_index without choices");
        return;
    }
    for (std::size_t i = 0; i < s.choices.size(); ++i)
        for (std::size_t j = i + 1; j < s.choices.size(); ++j)
            if (s.choices[i] == s.choices[j]) fail("duplicate choices");
    const auto n = std::count(s.choices.begin(), s.choices.end(), s.answer);
    if (n != 1) fail("answer must appear exactly once among choices");
    if (!s.answer_index || *s.answer_index < 0 || *s.answer_index >= static_cast<int>(s.choices.size()))
        fail("answer_index out of range");
    if (s.choices[static_cast<std::size_t>(*s.answer_index)] != s.answer) fail("answer_index does not point to answer");
}

}  // namespace primvid
