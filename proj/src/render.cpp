#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "primvid/error.hpp"
#include "primvid/longterm.hpp"
#include "primvid/render.hpp"

namespace primvid::render {

namespace {

constexpr Rgb kInk{230, 230, 235};
constexpr Rgb kDim{90, 90, 110};
constexpr Rgb kCardFace{245, 240, 225};
constexpr Rgb kCardBack{120, 40, 60};
constexpr Rgb kCardText{30, 30, 40};
constexpr Rgb kCup{170, 110, 60};
constexpr Rgb kTile{200, 170, 110};
constexpr Rgb kCue{250, 200, 80};
constexpr Rgb kChipToken{150, 150, 160};

DrawCommand shape_cmd(DrawRole role, Shape shape, Rgb color, Vec2 c, double r, double rot = 0.0, int entity = -1) {
    DrawCommand d;
    d.primitive = Primitive::shape;
    d.role = role;
    d.shape = shape;
    d.color = color;
    d.center = c;
    d.size = r;
    d.rotation_deg = rot;
    d.entity = entity;
    return d;
}

DrawCommand rect_cmd(DrawRole role, Rgb color, Vec2 c, Vec2 half, double outline = 0.0, int entity = -1) {
    DrawCommand d;
    d.primitive = Primitive::rect;
    d.role = role;
    d.color = color;
    d.center = c;
    d.extent = half;
    d.thickness = outline;
    d.entity = entity;
    return d;
}

DrawCommand text_cmd(DrawRole role, Rgb color, Vec2 c, std::string text, int scale = 2, int entity = -1) {
    DrawCommand d;
    d.primitive = Primitive::text;
    d.role = role;
    d.color = color;
    d.center = c;
    d.text = std::move(text);
    d.text_scale = scale;
    d.entity = entity;
    return d;
}

DrawCommand line_cmd(DrawRole role, Rgb color, Vec2 a, Vec2 b, double thickness) {
    DrawCommand d;
    d.primitive = Primitive::line;
    d.role = role;
    d.color = color;
    d.center = a;
    d.extent = b;
    d.thickness = thickness;
    return d;
}

Vec2 lerp(Vec2 a, Vec2 b, double t) { return a + (b - a) * t; }

// Fits a text line to the canvas by lowering its scale.
int fit_scale(const std::string& text, int preferred, int max_width) {
    int s = preferred;
    while (s > 1 && text_width(text, s) > max_width) --s;
    return s;
}

struct Geometry {
    double w, h;
    double slot_x(int i, int n) const { return w * (i + 1) / (n + 1); }
};

// ---- per-family layouts ----------------------------------------------------

constexpr double kCardHalfW = 36, kCardHalfH = 12, kCardStep = 28;

Vec2 card_pos(const Geometry& g, int stack, int n_stacks, int height) {
    return {g.slot_x(stack, n_stacks), g.h * 0.72 - kCardHalfH - height * kCardStep};
}

void card_skeleton(std::vector<DrawCommand>& out, const Geometry& g, int n) {
    for (int i = 0; i < n; ++i) {
        const double x = g.slot_x(i, n);
        out.push_back(line_cmd(DrawRole::decoration, kDim, {x - 44, g.h * 0.72 + 2}, {x + 44, g.h * 0.72 + 2}, 3));
        out.push_back(text_cmd(DrawRole::label, kInk, {x, g.h * 0.72 + 24}, index_label(i)));
    }
}

void draw_cards(std::vector<DrawCommand>& out, const Geometry& g, const CardStacks& s) {
    const int n = static_cast<int>(s.stacks.size());
    card_skeleton(out, g, n);
    for (int i = 0; i < n; ++i) {
        const auto& stack = s.stacks[static_cast<std::size_t>(i)];
        for (int k = 0; k < static_cast<int>(stack.size()); ++k) {
            const Vec2 p = card_pos(g, i, n, k);
            out.push_back(rect_cmd(DrawRole::entity, kCardFace, p, {kCardHalfW, kCardHalfH}, 0, i));
            out.push_back(text_cmd(DrawRole::entity, kCardText, p, stack[static_cast<std::size_t>(k)], 2, i));
        }
    }
}

constexpr int kChipCols = 4;
constexpr double kChipR = 7, kChipStep = 18;

void container_skeleton(std::vector<DrawCommand>& out, const Geometry& g, int n) {
    for (int i = 0; i < n; ++i) {
        const double x = g.slot_x(i, n);
        out.push_back(rect_cmd(DrawRole::decoration, kDim, {x, g.h * 0.5}, {42, 90}, 3));
        out.push_back(text_cmd(DrawRole::label, kInk, {x, g.h * 0.5 + 110}, index_label(i)));
    }
}

Vec2 chip_pos(const Geometry& g, int container, int n, int k) {
    const double x0 = g.slot_x(container, n) - kChipStep * (kChipCols - 1) / 2.0;
    return {x0 + (k % kChipCols) * kChipStep, g.h * 0.5 + 78 - (k / kChipCols) * kChipStep};
}

void draw_chips(std::vector<DrawCommand>& out, const Geometry& g, const ChipContainers& s) {
    const int n = static_cast<int>(s.counts.size());
    container_skeleton(out, g, n);
    for (int i = 0; i < n; ++i) {
        const int c = s.counts[static_cast<std::size_t>(i)];
        for (int k = 0; k < std::min(c, 36); ++k)
            out.push_back(shape_cmd(DrawRole::entity, Shape::circle, Rgb{240, 200, 40}, chip_pos(g, i, n, k), kChipR, 0, i));
        out.push_back(text_cmd(DrawRole::entity, kInk, {g.slot_x(i, n), g.h * 0.5 - 110}, std::to_string(c), 3, i));
    }
}

void terminal_skeleton(std::vector<DrawCommand>& out, const Geometry& g) {
    out.push_back(rect_cmd(DrawRole::decoration, kDim, {g.w / 2, g.h / 2 - 24}, {g.w / 2 - 24, g.h / 2 - 64}, 3));
}

void draw_tree(std::vector<DrawCommand>& out, const Geometry& g, const FileTree& s) {
    terminal_skeleton(out, g);
    std::vector<std::string> lines{"/"};
    std::vector<bool> is_cwd{s.cwd == "/"};
    for (const auto& d : s.dirs) {
        const auto depth = std::count(d.begin(), d.end(), '/');
        lines.push_back(std::string(static_cast<std::size_t>(2 * (depth - 1)), ' ') + d.substr(d.rfind('/') + 1) + "/");
        is_cwd.push_back(d == s.cwd);
    }
    const double top = 60, bottom = g.h - 100;
    const double step = std::min(22.0, (bottom - top) / static_cast<double>(lines.size()));
    const int scale = step >= 20 ? 2 : 1;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        std::string text = (is_cwd[i] ? "> " : "  ") + lines[i];
        const double tw = text_width(text, scale);
        out.push_back(text_cmd(DrawRole::entity, is_cwd[i] ? kCue : kInk,
                               {48 + tw / 2, top + step * (static_cast<double>(i) + 0.5)}, std::move(text), scale,
                               static_cast<int>(i)));
    }
}

void register_skeleton(std::vector<DrawCommand>& out, const Geometry& g) {
    out.push_back(rect_cmd(DrawRole::decoration, kDim, {g.w / 2, g.h / 2}, {130, 50}, 3));
}

void draw_register(std::vector<DrawCommand>& out, const Geometry& g, const SymbolRegister& s) {
    register_skeleton(out, g);
    const std::string t = std::to_string(s.value);
    out.push_back(text_cmd(DrawRole::entity, kInk, {g.w / 2, g.h / 2}, t, fit_scale(t, 6, 240), 0));
}

Vec2 cell_center(const Geometry& g, int rows, int cols, int cell, double pitch) {
    const int r = cell / cols, c = cell % cols;
    return {g.w / 2 + (c - (cols - 1) / 2.0) * pitch, g.h / 2 + (r - (rows - 1) / 2.0) * pitch};
}

constexpr double kShellPitch = 130;

void shell_labels(std::vector<DrawCommand>& out, const Geometry& g, const ShellGrid& s) {
    for (int i = 0; i < s.rows * s.cols; ++i)
        out.push_back(text_cmd(DrawRole::label, kDim, cell_center(g, s.rows, s.cols, i, kShellPitch) + Vec2{0, 52},
                               index_label(i)));
}

DrawCommand cup_cmd(Vec2 c) { return rect_cmd(DrawRole::occluder, kCup, c, {38, 30}); }

std::pair<Shape, Rgb> shell_glyph(const std::string& object) {
    if (object == "ball") return {Shape::circle, rgb_of(Color::red)};
    if (object == "coin") return {Shape::circle, rgb_of(Color::yellow)};
    if (object == "key") return {Shape::triangle, rgb_of(Color::orange)};
    if (object == "ring") return {Shape::circle, rgb_of(Color::cyan)};
    if (object == "gem") return {Shape::star, rgb_of(Color::purple)};
    if (object == "bell") return {Shape::square, rgb_of(Color::green)};
    return {Shape::square, kInk};
}

void draw_shells(std::vector<DrawCommand>& out, const Geometry& g, const ShellGrid& s) {
    shell_labels(out, g, s);
    for (int i = 0; i < s.rows * s.cols; ++i) {
        const Vec2 c = cell_center(g, s.rows, s.cols, i, kShellPitch);
        out.push_back(cup_cmd(c - Vec2{0, 44}));  // lifted cup
        const auto& obj = s.cells[static_cast<std::size_t>(i)];
        if (obj.empty()) continue;
        const auto [shape, rgb] = shell_glyph(obj);
        out.push_back(shape_cmd(DrawRole::entity, shape, rgb, c + Vec2{0, 8}, 16, 0, i));
        out.push_back(text_cmd(DrawRole::entity, kInk, c + Vec2{0, 34}, obj, 1, i));
    }
}

constexpr double kTilePitch = 92;

void puzzle_skeleton(std::vector<DrawCommand>& out, const Geometry& g, const SlidingPuzzle& s) {
    out.push_back(rect_cmd(DrawRole::decoration, kDim, {g.w / 2, g.h / 2},
                           {s.cols * kTilePitch / 2 + 8, s.rows * kTilePitch / 2 + 8}, 3));
}

void draw_puzzle(std::vector<DrawCommand>& out, const Geometry& g, const SlidingPuzzle& s) {
    puzzle_skeleton(out, g, s);
    for (int i = 0; i < s.rows * s.cols; ++i) {
        const int t = s.tiles[static_cast<std::size_t>(i)];
        if (t == 0) continue;
        const Vec2 c = cell_center(g, s.rows, s.cols, i, kTilePitch);
        out.push_back(rect_cmd(DrawRole::entity, kTile, c, {42, 42}, 0, i));
        out.push_back(text_cmd(DrawRole::entity, kCardText, c, std::to_string(t), 4, i));
    }
}

void draw_state(std::vector<DrawCommand>& out, const Geometry& g, const StateSnapshot& state) {
    std::visit(
        [&](const auto& s) {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, CardStacks>) draw_cards(out, g, s);
            else if constexpr (std::is_same_v<T, ChipContainers>) draw_chips(out, g, s);
            else if constexpr (std::is_same_v<T, FileTree>) draw_tree(out, g, s);
            else if constexpr (std::is_same_v<T, SymbolRegister>) draw_register(out, g, s);
            else if constexpr (std::is_same_v<T, ShellGrid>) draw_shells(out, g, s);
            else draw_puzzle(out, g, s);
        },
        state);
}

// Content-free scaffolding shared by hidden reveals and operation frames.
void draw_skeleton(std::vector<DrawCommand>& out, const Geometry& g, const StateSnapshot& shape_source) {
    std::visit(
        [&](const auto& s) {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, CardStacks>) card_skeleton(out, g, static_cast<int>(s.stacks.size()));
            else if constexpr (std::is_same_v<T, ChipContainers>)
                container_skeleton(out, g, static_cast<int>(s.counts.size()));
            else if constexpr (std::is_same_v<T, FileTree>) terminal_skeleton(out, g);
            else if constexpr (std::is_same_v<T, SymbolRegister>) register_skeleton(out, g);
            else if constexpr (std::is_same_v<T, ShellGrid>) shell_labels(out, g, s);
            else puzzle_skeleton(out, g, s);
        },
        shape_source);
}

void draw_hidden(std::vector<DrawCommand>& out, const Geometry& g, const StateSnapshot& shape_source) {
    draw_skeleton(out, g, shape_source);
    if (const auto* shells = std::get_if<ShellGrid>(&shape_source))
        for (int i = 0; i < shells->rows * shells->cols; ++i)
            out.push_back(cup_cmd(cell_center(g, shells->rows, shells->cols, i, kShellPitch)));
    out.push_back(text_cmd(DrawRole::label, kDim, {g.w / 2, g.h / 2}, "?", 8));
}

Vec2 direction_vector(Direction d) {
    switch (d) {
        case Direction::up: return {0, -1};
        case Direction::down: return {0, 1};
        case Direction::left: return {-1, 0};
        case Direction::right: return {1, 0};
    }
    return {};
}

// Moving cue for one operation at eased progress t. Never depicts state contents.
void draw_operation(std::vector<DrawCommand>& out, const Geometry& g, const StateSnapshot& before,
                    const Operation& op, double t) {
    draw_skeleton(out, g, before);
    std::visit(
        [&](const auto& a) {
            using A = std::decay_t<decltype(a)>;
            if constexpr (std::is_same_v<A, CardOp>) {
                const auto& s = std::get<CardStacks>(before);
                const int n = static_cast<int>(s.stacks.size());
                auto top_of = [&](int i, int extra) {
                    return card_pos(g, i, n, static_cast<int>(s.stacks[static_cast<std::size_t>(i)].size()) + extra);
                };
                Vec2 from, to;
                if (a.kind == CardOp::Kind::push) {
                    from = {g.slot_x(a.to, n), 40};
                    to = top_of(a.to, 0);
                } else if (a.kind == CardOp::Kind::pop) {
                    from = top_of(a.from, -1);
                    to = {g.slot_x(a.from, n), 40};
                } else {
                    from = top_of(a.from, -1);
                    to = top_of(a.to, 0);
                }
                const double lift = std::sin(std::numbers::pi * t) * 40;
                out.push_back(
                    rect_cmd(DrawRole::operation_cue, kCardBack, lerp(from, to, t) - Vec2{0, lift}, {kCardHalfW, kCardHalfH}));
            } else if constexpr (std::is_same_v<A, ChipOp>) {
                const int n = static_cast<int>(std::get<ChipContainers>(before).counts.size());
                for (int k = 0; k < a.amount; ++k) {
                    const Vec2 from = Vec2{g.slot_x(a.from, n), g.h * 0.5 - 130} + Vec2{(k - (a.amount - 1) / 2.0) * 18, 0};
                    const Vec2 to = Vec2{g.slot_x(a.to, n), g.h * 0.5 - 130} + Vec2{(k - (a.amount - 1) / 2.0) * 18, 0};
                    out.push_back(shape_cmd(DrawRole::operation_cue, Shape::circle, kChipToken, lerp(from, to, t), kChipR));
                }
            } else if constexpr (std::is_same_v<A, SwapOp>) {
                const auto& s = std::get<ShellGrid>(before);
                const double lift = std::sin(std::numbers::pi * t) * 36;
                for (int i = 0; i < s.rows * s.cols; ++i) {
                    Vec2 c = cell_center(g, s.rows, s.cols, i, kShellPitch);
                    if (i == a.a || i == a.b) {
                        const Vec2 other = cell_center(g, s.rows, s.cols, i == a.a ? a.b : a.a, kShellPitch);
                        c = lerp(c, other, t) + Vec2{0, i == a.a ? -lift : lift};
                    }
                    out.push_back(cup_cmd(c));
                }
            } else if constexpr (std::is_same_v<A, SlideOp>) {
                const Vec2 c{g.w / 2, g.h / 2}, d = direction_vector(a.dir);
                const Vec2 start = c - d * 60, end = c + d * 60;
                out.push_back(line_cmd(DrawRole::operation_cue, kCue, start, lerp(start, end, t), 8));
                out.push_back(rect_cmd(DrawRole::operation_cue, kCardBack, lerp(start, end, t), {20, 20}));
            } else {
                // Register and file-system operations are shown by their caption
                // with a progress bar.
                const double x0 = g.w / 2 - 120;
                out.push_back(line_cmd(DrawRole::operation_cue, kCue, {x0, g.h - 84}, {x0 + 240 * std::max(t, 0.02), g.h - 84}, 6));
            }
        },
        op.action);
    const std::string caption = describe(op.action);
    out.push_back(text_cmd(DrawRole::operation_cue, kCue, {g.w / 2, g.h - 60}, caption,
                           fit_scale(caption, 3, static_cast<int>(g.w) - 16)));
}

void add_timestamp(std::vector<DrawCommand>& out, int frame, int fps, int width) {
    const std::string t = format_clock(static_cast<double>(frame) / fps);
    out.push_back(text_cmd(DrawRole::label, kInk, {width - 12.0 - text_width(t, 2) / 2.0, 14}, t, 2));
}

}  // namespace

std::string_view to_string(Phase p) {
    switch (p) {
        case Phase::initial_reveal: return "initial_reveal";
        case Phase::operation: return "operation";
        case Phase::final_reveal: return "final_reveal";
        case Phase::continuous_motion: return "continuous_motion";
    }
    return "?";
}

std::string_view to_string(DrawRole r) {
    switch (r) {
        case DrawRole::entity: return "entity";
        case DrawRole::occluder: return "occluder";
        case DrawRole::operation_cue: return "operation_cue";
        case DrawRole::label: return "label";
        case DrawRole::decoration: return "decoration";
    }
    return "?";
}

std::vector<std::pair<Phase, int>> FramePlan::phase_runs() const {
    std::vector<std::pair<Phase, int>> runs;
    for (const auto& f : frames) {
        if (runs.empty() || runs.back().first != f.phase) runs.push_back({f.phase, 0});
        ++runs.back().second;
    }
    return runs;
}

FramePlan plan_shortterm(const shortterm::SimulationTrace& trace, const RenderConfig& cfg) {
    if (trace.fps != cfg.fps)
        throw InvalidSpec("trace fps " + std::to_string(trace.fps) + " does not match render fps " +
                          std::to_string(cfg.fps));
    if (trace.canvas.width != cfg.width || trace.canvas.height != cfg.height)
        throw InvalidSpec("trace canvas does not match render canvas");
    FramePlan plan{cfg.width, cfg.height, cfg.fps, {}};
    plan.frames.reserve(static_cast<std::size_t>(trace.frame_count()));
    for (int f = 0; f < trace.frame_count(); ++f) {
        PlannedFrame pf{Phase::continuous_motion, {}};
        for (int i = 0; i < trace.object_count(); ++i) {
            const auto& o = trace.at(f, i);
            pf.commands.push_back(shape_cmd(DrawRole::entity, o.shape, rgb_of(o.color), o.position, o.size, o.angle,
                                            trace.object_ids[static_cast<std::size_t>(i)]));
        }
        if (cfg.timestamp_shortterm) add_timestamp(pf.commands, f, cfg.fps, cfg.width);
        plan.frames.push_back(std::move(pf));
    }
    return plan;
}

FramePlan plan_longterm(const ScenarioScript& script, const RenderConfig& cfg) {
    validate_script(script);
    const auto layout = longterm::phase_layout(script, cfg.fps);
    const Geometry g{static_cast<double>(cfg.width), static_cast<double>(cfg.height)};
    FramePlan plan{cfg.width, cfg.height, cfg.fps, {}};
    plan.frames.reserve(static_cast<std::size_t>(layout.total));

    const bool show_initial = script.visible_state == Visibility::initial_only;
    auto reveal = [&](Phase phase, const StateSnapshot& state, bool visible) {
        for (int k = 0; k < layout.reveal_frames; ++k) {
            PlannedFrame pf{phase, {}};
            if (visible) draw_state(pf.commands, g, state);
            else draw_hidden(pf.commands, g, state);
            plan.frames.push_back(std::move(pf));
        }
    };

    reveal(Phase::initial_reveal, script.initial, show_initial);
    StateSnapshot state = script.initial;
    for (std::size_t i = 0; i < script.operations.size(); ++i) {
        const auto& op = script.operations[i];
        const int n = layout.op_frames[i];
        for (int k = 0; k < n; ++k) {
            PlannedFrame pf{Phase::operation, {}};
            const double t = n > 1 ? ease_in_out(static_cast<double>(k) / (n - 1)) : 1.0;
            draw_operation(pf.commands, g, state, op, t);
            plan.frames.push_back(std::move(pf));
        }
        state = longterm::apply(state, op);
    }
    reveal(Phase::final_reveal, script.final_state, !show_initial);

    if (cfg.timestamp_longterm)
        for (int f = 0; f < plan.frame_count(); ++f)
            add_timestamp(plan.frames[static_cast<std::size_t>(f)].commands, f, cfg.fps, cfg.width);
    return plan;
}

}  // namespace primvid::render
