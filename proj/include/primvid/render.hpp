#pragma once

// Frame planning (inspectable draw-op log) and deterministic rasterization.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "primvid/model.hpp"
#include "primvid/shortterm.hpp"
#include "primvid/state.hpp"

namespace primvid::render {

struct RenderConfig {
    int width = 448;
    int height = 448;
    int fps = 30;
    Rgb background{24, 24, 32};
    bool antialias = true;
    int supersample = 4;  // samples per axis when antialiasing
    bool timestamp_longterm = true;
    bool timestamp_shortterm = false;
    friend bool operator==(const RenderConfig&, const RenderConfig&) = default;
};

enum class Phase { initial_reveal, operation, final_reveal, continuous_motion };
std::string_view to_string(Phase p);

/// What a draw command depicts. `entity` marks glyphs that show state
/// contents (objects, cards, chips, tiles, values); hidden-state checks scan
/// for these.
enum class DrawRole { entity, occluder, operation_cue, label, decoration };
std::string_view to_string(DrawRole r);

enum class Primitive { shape, rect, text, line };

struct DrawCommand {
    Primitive primitive = Primitive::shape;
    DrawRole role = DrawRole::entity;
    Shape shape = Shape::circle;  // Primitive::shape
    Rgb color;
    Vec2 center;             // shape/rect/text centre; line start
    double size = 0.0;       // shape radius
    double rotation_deg = 0.0;
    Vec2 extent;             // rect half-size; line end
    double thickness = 0.0;  // line width; rect outline width (0 = filled)
    std::string text;
    int text_scale = 2;
    int entity = -1;  // object id / cell index for entity glyphs

    friend bool operator==(const DrawCommand&, const DrawCommand&) = default;
};

struct PlannedFrame {
    Phase phase = Phase::continuous_motion;
    std::vector<DrawCommand> commands;
    friend bool operator==(const PlannedFrame&, const PlannedFrame&) = default;
};

struct FramePlan {
    int width = 0;
    int height = 0;
    int fps = 30;
    std::vector<PlannedFrame> frames;

    int frame_count() const { return static_cast<int>(frames.size()); }
    /// Number of frames per phase, in phase order of appearance.
    std::vector<std::pair<Phase, int>> phase_runs() const;
};

/// Throws InvalidSpec if trace fps or canvas disagree with cfg.
FramePlan plan_shortterm(const shortterm::SimulationTrace& trace, const RenderConfig& cfg);
/// Throws InvalidSpec for an invalid script.
FramePlan plan_longterm(const ScenarioScript& script, const RenderConfig& cfg);

/// Packed 24-bit RGB, row-major, top-left origin.
struct Image {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> rgb;
    friend bool operator==(const Image&, const Image&) = default;
};

/// Throws InvalidSpec if the plan and config disagree or glyphs do not fit.
Image rasterize_frame(const FramePlan& plan, int frame, const RenderConfig& cfg);
std::vector<Image> rasterize(const FramePlan& plan, const RenderConfig& cfg);

/// 64-bit FNV-1a, used for golden frame hashes.
std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t v);

/// Pixel width of `text` at the given scale in the embedded font.
int text_width(std::string_view text, int scale);
inline constexpr int kGlyphHeight = 7;

/// Smoothstep ease-in-out on [0, 1].
double ease_in_out(double t);

}  // namespace primvid::render
