#pragma once

// Kinematic simulation of short-term motion clips and ground-truth derivation.

#include <map>
#include <span>
#include <string>
#include <vector>

#include "primvid/model.hpp"
#include "primvid/rng.hpp"

namespace primvid::shortterm {

struct ObjectFrame {
    Vec2 position;
    Vec2 velocity;
    double angle = 0.0;  // deg, cumulative (not wrapped)
    Color color = Color::red;
    double size = 0.0;
    Shape shape = Shape::circle;
    friend bool operator==(const ObjectFrame&, const ObjectFrame&) = default;
};

struct SimulationTrace {
    int fps = 30;
    Canvas canvas;
    std::vector<int> object_ids;                    // object index -> id
    std::vector<std::vector<ObjectFrame>> frames;   // [frame][object index]
    std::vector<EventRecord> events;                // sorted
    std::vector<double> angular_displacement;       // deg per object over the clip

    int frame_count() const { return static_cast<int>(frames.size()); }
    int object_count() const { return static_cast<int>(object_ids.size()); }
    const ObjectFrame& at(int frame, int object_index) const {
        return frames[static_cast<std::size_t>(frame)][static_cast<std::size_t>(object_index)];
    }
    std::vector<Vec2> path(int object_index) const;
    friend bool operator==(const SimulationTrace&, const SimulationTrace&) = default;
};

/// Explicit Euler at dt = 1/fps with mirror reflection at the walls.
/// Throws InvalidSpec for invalid specs, including objects larger than half
/// the canvas and circular orbits that leave it.
SimulationTrace simulate(const SceneSpec& spec);

enum class Trajectory { linear, circular, zigzag };
std::string_view to_string(Trajectory t);

struct TrajectoryThresholds {
    double line_fraction = 0.02;     // max perpendicular deviation / path length
    double circle_fraction = 0.02;   // rms circle residual / fitted radius
    double reversal_deg = 60.0;      // turn size that counts as a reversal
    int min_reversals = 3;
};

/// Classifies a position trace; throws Unclassifiable if no test passes or
/// the trace has fewer than 10 points.
Trajectory classify_path(std::span<const Vec2> points, const TrajectoryThresholds& t = {});
Trajectory classify_trajectory(const SimulationTrace& trace, int object_index, const TrajectoryThresholds& t = {});

/// Number of turns between consecutive non-degenerate segments whose
/// absolute heading change exceeds `min_turn_deg`.
int count_heading_reversals(std::span<const Vec2> points, double min_turn_deg);

/// Canonical answer, the answer space it was drawn from, and template fields.
struct GroundTruth {
    std::string answer;
    std::vector<std::string> answer_space;  // includes the answer
    std::map<std::string, std::string> fields;
    bool numeric = false;  // counting task; eligible for free-form questions

    friend bool operator==(const GroundTruth&, const GroundTruth&) = default;
};

/// "red circle"
std::string describe_object(const ObjectSpec& o);

/// 8-way compass label for a screen-space displacement (y down).
std::string compass_direction(Vec2 displacement);
/// Smallest angular distance (deg) from a heading to a compass bucket boundary.
double bucket_boundary_margin(Vec2 displacement);

/// Dispatches on spec.task_type. Throws GenerationError when the scene does
/// not yield an unambiguous answer.
GroundTruth derive_answer(const SceneSpec& spec, const SimulationTrace& trace);

struct ShortTermOptions {
    Canvas canvas{448, 448};
    int fps = 30;
    int retry_limit = 20;
    KinematicLimits limits;
};

/// Draws a candidate scene for the task; may be ambiguous.
SceneSpec random_scene(TaskType task, Rng& rng, const ShortTermOptions& options = {});

struct ShortTermSample {
    SceneSpec spec;
    SimulationTrace trace;
    GroundTruth truth;
    int retries = 0;
};

/// Throws RetryExhausted (with the last offending parameters) after
/// options.retry_limit ambiguous scenes.
ShortTermSample generate_shortterm_sample(TaskType task, Rng& rng, const ShortTermOptions& options = {});

}  // namespace primvid::shortterm
