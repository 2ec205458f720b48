#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "font.hpp"
#include "primvid/error.hpp"
#include "primvid/render.hpp"

namespace primvid::render {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

struct Box {
    int x0, y0, x1, y1;  // half-open
};

Box clip_box(double minx, double miny, double maxx, double maxy, int w, int h) {
    return {std::max(0, static_cast<int>(std::floor(minx))), std::max(0, static_cast<int>(std::floor(miny))),
            std::min(w, static_cast<int>(std::ceil(maxx)) + 1), std::min(h, static_cast<int>(std::ceil(maxy)) + 1)};
}

bool in_polygon(const std::vector<Vec2>& poly, double x, double y) {
    bool inside = false;
    for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
        const Vec2 a = poly[i], b = poly[j];
        if ((a.y > y) != (b.y > y) && x < (b.x - a.x) * (y - a.y) / (b.y - a.y) + a.x) inside = !inside;
    }
    return inside;
}

// Vertices in screen space. Rotation is counter-clockwise as seen on screen.
std::vector<Vec2> shape_polygon(Shape shape, Vec2 c, double r, double rotation_deg) {
    std::vector<Vec2> local;
    switch (shape) {
        case Shape::square: {
            const double a = r / std::numbers::sqrt2;
            local = {{-a, -a}, {a, -a}, {a, a}, {-a, a}};
            break;
        }
        case Shape::triangle:
            for (int i = 0; i < 3; ++i) {
                const double t = (90.0 + 120.0 * i) * kDegToRad;
                local.push_back({r * std::cos(t), r * std::sin(t)});
            }
            break;
        case Shape::star:
            for (int i = 0; i < 10; ++i) {
                const double t = (90.0 + 36.0 * i) * kDegToRad;
                const double rr = i % 2 == 0 ? r : 0.45 * r;
                local.push_back({rr * std::cos(t), rr * std::sin(t)});
            }
            break;
        case Shape::circle: break;
    }
    const double cs = std::cos(rotation_deg * kDegToRad), sn = std::sin(rotation_deg * kDegToRad);
    std::vector<Vec2> out;
    for (const auto& p : local) {
        // Local coords are y-up; flip into screen space after rotating.
        const double x = p.x * cs - p.y * sn, y = p.x * sn + p.y * cs;
        out.push_back({c.x + x, c.y - y});
    }
    return out;
}

std::vector<Vec2> rect_polygon(Vec2 c, Vec2 half, double rotation_deg) {
    const double cs = std::cos(rotation_deg * kDegToRad), sn = std::sin(rotation_deg * kDegToRad);
    std::vector<Vec2> out;
    for (auto [sx, sy] : {std::pair{-1, -1}, {1, -1}, {1, 1}, {-1, 1}}) {
        const double x = sx * half.x, y = sy * half.y;
        out.push_back({c.x + x * cs + y * sn, c.y - x * sn + y * cs});
    }
    return out;
}

class Canvas {
public:
    Canvas(Image& img, int samples) : img_(img), s_(samples) {}

    template <typename Inside>
    void fill(Box b, Rgb color, Inside&& inside) {
        const int total = s_ * s_;
        for (int py = b.y0; py < b.y1; ++py)
            for (int px = b.x0; px < b.x1; ++px) {
                int n = 0;
                for (int j = 0; j < s_; ++j)
                    for (int i = 0; i < s_; ++i)
                        if (inside(px + (i + 0.5) / s_, py + (j + 0.5) / s_)) ++n;
                if (n) blend(px, py, color, n, total);
            }
    }

    // Axis-aligned [x0, x1) x [y0, y1); same sample grid as fill().
    void axis_rect(double x0, double y0, double x1, double y1, Rgb color) {
        if (x1 <= x0 || y1 <= y0) return;
        const int total = s_ * s_;
        const Box b = clip_box(x0, y0, x1, y1, img_.width, img_.height);
        for (int py = b.y0; py < b.y1; ++py) {
            const int ny = samples_in(py, y0, y1);
            if (!ny) continue;
            for (int px = b.x0; px < b.x1; ++px) {
                const int n = ny * samples_in(px, x0, x1);
                if (n) blend(px, py, color, n, total);
            }
        }
    }

    void solid(int x0, int y0, int x1, int y1, Rgb c) {
        x0 = std::max(0, x0), y0 = std::max(0, y0);
        x1 = std::min(img_.width, x1), y1 = std::min(img_.height, y1);
        for (int y = y0; y < y1; ++y)
            for (int x = x0; x < x1; ++x) blend(x, y, c, 1, 1);
    }

private:
    int samples_in(int p, double lo, double hi) const {
        int n = 0;
        for (int i = 0; i < s_; ++i) {
            const double v = p + (i + 0.5) / s_;
            if (v >= lo && v < hi) ++n;
        }
        return n;
    }

    void blend(int x, int y, Rgb c, int n, int total) {
        auto* p = &img_.rgb[(static_cast<std::size_t>(y) * static_cast<std::size_t>(img_.width) + static_cast<std::size_t>(x)) * 3];
        const int keep = total - n, half = total / 2;
        p[0] = static_cast<std::uint8_t>((p[0] * keep + c.r * n + half) / total);
        p[1] = static_cast<std::uint8_t>((p[1] * keep + c.g * n + half) / total);
        p[2] = static_cast<std::uint8_t>((p[2] * keep + c.b * n + half) / total);
    }

    Image& img_;
    int s_;
};

void draw_text(Canvas& cv, const DrawCommand& cmd) {
    const int scale = std::max(1, cmd.text_scale);
    const int left = static_cast<int>(std::lround(cmd.center.x - text_width(cmd.text, scale) / 2.0));
    const int top = static_cast<int>(std::lround(cmd.center.y - font::kHeight * scale / 2.0));
    int x = left;
    for (char ch : cmd.text) {
        const auto& rows = font::glyph(ch);
        for (int r = 0; r < font::kHeight; ++r)
            for (int c = 0; c < font::kWidth; ++c)
                if (rows[static_cast<std::size_t>(r)] & (1 << (font::kWidth - 1 - c)))
                    cv.solid(x + c * scale, top + r * scale, x + (c + 1) * scale, top + (r + 1) * scale, cmd.color);
        x += font::kAdvance * scale;
    }
}

void draw(Canvas& cv, const DrawCommand& cmd, int w, int h) {
    switch (cmd.primitive) {
        case Primitive::shape: {
            const double r = cmd.size;
            const Box b = clip_box(cmd.center.x - r, cmd.center.y - r, cmd.center.x + r, cmd.center.y + r, w, h);
            if (cmd.shape == Shape::circle) {
                const double r2 = r * r;
                cv.fill(b, cmd.color, [&](double x, double y) {
                    const double dx = x - cmd.center.x, dy = y - cmd.center.y;
                    return dx * dx + dy * dy <= r2;
                });
            } else {
                const auto poly = shape_polygon(cmd.shape, cmd.center, r, cmd.rotation_deg);
                cv.fill(b, cmd.color, [&](double x, double y) { return in_polygon(poly, x, y); });
            }
            break;
        }
        case Primitive::rect: {
            if (cmd.rotation_deg == 0.0) {
                const double ox0 = cmd.center.x - cmd.extent.x, ox1 = cmd.center.x + cmd.extent.x;
                const double oy0 = cmd.center.y - cmd.extent.y, oy1 = cmd.center.y + cmd.extent.y;
                if (cmd.thickness <= 0) {
                    cv.axis_rect(ox0, oy0, ox1, oy1, cmd.color);
                } else {
                    const double t = cmd.thickness;
                    const double ix0 = std::min(ox0 + t, cmd.center.x), ix1 = std::max(ox1 - t, cmd.center.x);
                    const double iy0 = std::min(oy0 + t, cmd.center.y), iy1 = std::max(oy1 - t, cmd.center.y);
                    cv.axis_rect(ox0, oy0, ox1, iy0, cmd.color);
                    cv.axis_rect(ox0, iy1, ox1, oy1, cmd.color);
                    cv.axis_rect(ox0, iy0, ix0, iy1, cmd.color);
                    cv.axis_rect(ix1, iy0, ox1, iy1, cmd.color);
                }
                break;
            }
            const double reach = std::hypot(cmd.extent.x, cmd.extent.y);
            const Box b = clip_box(cmd.center.x - reach, cmd.center.y - reach, cmd.center.x + reach,
                                   cmd.center.y + reach, w, h);
            const auto outer = rect_polygon(cmd.center, cmd.extent, cmd.rotation_deg);
            if (cmd.thickness <= 0) {
                cv.fill(b, cmd.color, [&](double x, double y) { return in_polygon(outer, x, y); });
            } else {
                const Vec2 in_half{std::max(0.0, cmd.extent.x - cmd.thickness), std::max(0.0, cmd.extent.y - cmd.thickness)};
                const auto inner = rect_polygon(cmd.center, in_half, cmd.rotation_deg);
                cv.fill(b, cmd.color,
                        [&](double x, double y) { return in_polygon(outer, x, y) && !in_polygon(inner, x, y); });
            }
            break;
        }
        case Primitive::line: {
            const Vec2 a = cmd.center, e = cmd.extent;
            const Vec2 d = e - a;
            const double len = d.norm();
            if (len <= 0) break;
            const double ht = std::max(0.5, cmd.thickness / 2);
            const Vec2 n{-d.y / len * ht, d.x / len * ht};
            const std::vector<Vec2> quad{a + n, e + n, e - n, a - n};
            const Box b = clip_box(std::min(a.x, e.x) - ht, std::min(a.y, e.y) - ht, std::max(a.x, e.x) + ht,
                                   std::max(a.y, e.y) + ht, w, h);
            cv.fill(b, cmd.color, [&](double x, double y) { return in_polygon(quad, x, y); });
            break;
        }
        case Primitive::text: draw_text(cv, cmd); break;
    }
}

void check_fits(const DrawCommand& cmd, int w, int h) {
    const int limit = std::min(w, h);
    if (cmd.primitive == Primitive::shape && cmd.size * 2 > limit)
        throw InvalidSpec("canvas too small for glyph of radius " + std::to_string(cmd.size));
    if (cmd.primitive == Primitive::text && text_width(cmd.text, cmd.text_scale) > w)
        throw InvalidSpec("canvas too small for text '" + cmd.text + "'");
    if (cmd.primitive == Primitive::rect && (cmd.extent.x * 2 > w || cmd.extent.y * 2 > h))
        throw InvalidSpec("canvas too small for rectangle");
}

}  // namespace

int text_width(std::string_view text, int scale) {
    if (text.empty()) return 0;
    return (static_cast<int>(text.size()) * font::kAdvance - 1) * std::max(1, scale);
}

double ease_in_out(double t) {
    t = std::clamp(t, 0.0, 1.0);
    return t * t * (3 - 2 * t);
}

Image rasterize_frame(const FramePlan& plan, int frame, const RenderConfig& cfg) {
    if (plan.width != cfg.width || plan.height != cfg.height || plan.fps != cfg.fps)
        throw InvalidSpec("plan does not match render config");
    if (frame < 0 || frame >= plan.frame_count()) throw Error("frame index out of range");
    Image img{cfg.width, cfg.height, {}};
    img.rgb.resize(static_cast<std::size_t>(cfg.width) * static_cast<std::size_t>(cfg.height) * 3);
    for (std::size_t i = 0; i < img.rgb.size(); i += 3) {
        img.rgb[i] = cfg.background.r;
        img.rgb[i + 1] = cfg.background.g;
        img.rgb[i + 2] = cfg.background.b;
    }
    Canvas cv(img, cfg.antialias ? std::max(1, cfg.supersample) : 1);
    for (const auto& cmd : plan.frames[static_cast<std::size_t>(frame)].commands) {
        check_fits(cmd, cfg.width, cfg.height);
        draw(cv, cmd, cfg.width, cfg.height);
    }
    return img;
}

std::vector<Image> rasterize(const FramePlan& plan, const RenderConfig& cfg) {
    std::vector<Image> out;
    out.reserve(static_cast<std::size_t>(plan.frame_count()));
    for (int i = 0; i < plan.frame_count(); ++i) out.push_back(rasterize_frame(plan, i, cfg));
    return out;
}

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes, std::uint64_t seed) {
    std::uint64_t h = seed;
    for (auto b : bytes) {
        h ^= b;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

}  // namespace primvid::render
