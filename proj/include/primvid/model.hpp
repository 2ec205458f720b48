#pragma once

// Shared domain types for short-term scenes, event logs and QA records.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace primvid {

inline constexpr std::string_view kGeneratorVersion = "primvid 1.0.0";
inline constexpr int kSchemaVersion = 1;

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Vec2&, const Vec2&) = default;
    Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    double norm() const;
};

struct Rgb {
    std::uint8_t r = 0, g = 0, b = 0;
    friend bool operator==(const Rgb&, const Rgb&) = default;
};

enum class Shape { circle, square, triangle, star };
inline constexpr std::array kAllShapes{Shape::circle, Shape::square, Shape::triangle, Shape::star};

/// Fixed palette. Names appear verbatim in question text.
enum class Color { red, green, blue, yellow, orange, purple, cyan, white };
inline constexpr std::array kAllColors{Color::red,    Color::green,  Color::blue, Color::yellow,
                                       Color::orange, Color::purple, Color::cyan, Color::white};

std::string_view to_string(Shape s);
std::string_view to_string(Color c);
Rgb rgb_of(Color c);
Shape shape_from_string(std::string_view s);
Color color_from_string(std::string_view s);

/// The twelve short-term perceptual task categories.
enum class TaskType {
    collision_counting,
    direction_identification,
    trajectory_shape,
    speed_perception,
    motion_counting,
    attribute_change,
    rotation_counting,
    relative_position,
    acceleration_detection,
    velocity_comparison,
    distance_estimation,
    event_ordering,
};
inline constexpr std::array kAllTaskTypes{
    TaskType::collision_counting,     TaskType::direction_identification, TaskType::trajectory_shape,
    TaskType::speed_perception,       TaskType::motion_counting,          TaskType::attribute_change,
    TaskType::rotation_counting,      TaskType::relative_position,        TaskType::acceleration_detection,
    TaskType::velocity_comparison,    TaskType::distance_estimation,      TaskType::event_ordering,
};
std::string_view to_string(TaskType t);
TaskType task_from_string(std::string_view s);

enum class Attribute { color, size, shape };
std::string_view to_string(Attribute a);
Attribute attribute_from_string(std::string_view s);

/// How an object moves. `linear` covers constant velocity and constant
/// tangential acceleration; the others are the templates needed by the
/// trajectory and motion-counting tasks.
enum class MotionKind { linear, circular, zigzag, bursts };
std::string_view to_string(MotionKind m);
MotionKind motion_from_string(std::string_view s);

struct AttributeChange {
    double time_s = 0.0;
    Attribute attribute = Attribute::color;
    std::string new_value;  // color name, shape name, or size in px
    friend bool operator==(const AttributeChange&, const AttributeChange&) = default;
};

struct TimeWindow {
    double start_s = 0.0;
    double end_s = 0.0;
    friend bool operator==(const TimeWindow&, const TimeWindow&) = default;
};

struct ObjectSpec {
    int id = 0;
    Shape shape = Shape::circle;
    Color color = Color::red;
    double size = 10.0;  // radius / half-extent, px
    Vec2 position;       // px, top-left origin, y down
    Vec2 velocity;       // px/s
    double angular_velocity = 0.0;  // deg/s
    double initial_angle = 0.0;     // deg
    MotionKind motion = MotionKind::linear;
    double acceleration = 0.0;     // px/s^2 along the heading (linear only)
    Vec2 orbit_center;             // circular only
    double orbit_rate = 0.0;       // deg/s, circular only
    double zigzag_period_s = 0.0;  // time between heading flips, zigzag only
    std::vector<TimeWindow> bursts;                 // active windows, bursts only
    std::vector<AttributeChange> attribute_schedule;

    friend bool operator==(const ObjectSpec&, const ObjectSpec&) = default;
};

struct Canvas {
    int width = 448;
    int height = 448;
    friend bool operator==(const Canvas&, const Canvas&) = default;
};

struct SceneSpec {
    std::uint64_t seed = 0;
    Canvas canvas;
    double duration_s = 4.0;
    int fps = 30;
    std::vector<ObjectSpec> objects;
    TaskType task_type = TaskType::collision_counting;
    /// Task-specific parameter, e.g. the query time for distance estimation.
    double query_time_s = 0.0;

    friend bool operator==(const SceneSpec&, const SceneSpec&) = default;
};

/// Configured bounds for object kinematics.
struct KinematicLimits {
    double max_speed = 400.0;             // px/s
    double max_angular_velocity = 720.0;  // deg/s
};

/// Throws InvalidSpec on the first violated invariant.
void validate(const SceneSpec& spec, const KinematicLimits& limits = {});

/// ceil(duration_s * fps), tolerant of floating-point noise in the product.
int frame_count(double duration_s, int fps);

// ---- events ---------------------------------------------------------------

enum class EventKind {
    wall_contact,
    direction_change,
    attribute_change,
    rotation_complete,
    operation_applied,
    phase_boundary,
};
std::string_view to_string(EventKind k);
EventKind event_kind_from_string(std::string_view s);

struct EventRecord {
    int frame_index = 0;
    double time_s = 0.0;
    EventKind kind = EventKind::wall_contact;
    int subject = 0;      // object id / op index; -1 for the scene itself
    std::string payload;  // kind-specific detail

    friend bool operator==(const EventRecord&, const EventRecord&) = default;
};

EventRecord make_event(int frame, int fps, EventKind kind, int subject, std::string payload);

/// Frame, then subject, then kind.
bool event_less(const EventRecord& a, const EventRecord& b);
void sort_events(std::vector<EventRecord>& events);
bool events_sorted(const std::vector<EventRecord>& events);

/// "MM:SS.mmm" for the given frame.
std::string format_timestamp(int frame, int fps);
/// "MM:SS" for a whole-second time.
std::string format_clock(double seconds);

}  // namespace primvid
