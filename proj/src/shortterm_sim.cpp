#include <algorithm>
#include <cmath>
#include <numbers>

#include "primvid/error.hpp"
#include "primvid/shortterm.hpp"

namespace primvid::shortterm {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

// Frame at which an attribute change scheduled at `time_s` becomes visible.
int change_frame(double time_s, int fps) { return static_cast<int>(std::ceil(time_s * fps - 1e-9)); }

bool burst_active(const ObjectSpec& o, double t) {
    for (const auto& w : o.bursts)
        if (t >= w.start_s - 1e-9 && t < w.end_s - 1e-9) return true;
    return false;
}

struct Mover {
    const ObjectSpec* spec;
    Vec2 pos;
    Vec2 vel;
    double orbit_radius = 0.0;
    double orbit_phase = 0.0;  // deg
    int zigzag_frames = 0;
    bool moving = false;  // bursts only
};

}  // namespace

std::vector<Vec2> SimulationTrace::path(int object_index) const {
    std::vector<Vec2> out;
    out.reserve(frames.size());
    for (const auto& f : frames) out.push_back(f[static_cast<std::size_t>(object_index)].position);
    return out;
}

SimulationTrace simulate(const SceneSpec& spec) {
    validate(spec);
    const int n = frame_count(spec.duration_s, spec.fps);
    const double dt = 1.0 / spec.fps;
    const double w = spec.canvas.width, h = spec.canvas.height;

    SimulationTrace trace;
    trace.fps = spec.fps;
    trace.canvas = spec.canvas;
    trace.frames.assign(static_cast<std::size_t>(n), {});
    trace.angular_displacement.assign(spec.objects.size(), 0.0);

    std::vector<Mover> movers;
    for (const auto& o : spec.objects) {
        trace.object_ids.push_back(o.id);
        Mover m{&o, o.position, o.velocity};
        if (o.motion == MotionKind::circular) {
            const Vec2 r = o.position - o.orbit_center;
            m.orbit_radius = r.norm();
            m.orbit_phase = std::atan2(-r.y, r.x) / kDegToRad;
            if (o.orbit_center.x - m.orbit_radius - o.size < 0 || o.orbit_center.x + m.orbit_radius + o.size > w ||
                o.orbit_center.y - m.orbit_radius - o.size < 0 || o.orbit_center.y + m.orbit_radius + o.size > h)
                throw InvalidSpec("object " + std::to_string(o.id) + ": circular orbit leaves the canvas");
            const double omega = o.orbit_rate * kDegToRad;
            const double th = m.orbit_phase * kDegToRad;
            m.vel = {-m.orbit_radius * omega * std::sin(th), -m.orbit_radius * omega * std::cos(th)};
        }
        if (o.motion == MotionKind::zigzag)
            m.zigzag_frames = std::max(1, static_cast<int>(std::lround(o.zigzag_period_s * spec.fps)));
        movers.push_back(m);
    }

    auto& events = trace.events;
    for (std::size_t i = 0; i < movers.size(); ++i) {
        auto& m = movers[i];
        const ObjectSpec& o = *m.spec;
        Color color = o.color;
        double size = o.size;
        Shape shape = o.shape;
        std::size_t next_change = 0;

        for (int k = 0; k < n; ++k) {
            if (k > 0) {
                const double t_prev = (k - 1) * dt;
                switch (o.motion) {
                    case MotionKind::circular: {
                        const double th = (m.orbit_phase + o.orbit_rate * k * dt) * kDegToRad;
                        const double omega = o.orbit_rate * kDegToRad;
                        m.pos = o.orbit_center + Vec2{std::cos(th), -std::sin(th)} * m.orbit_radius;
                        m.vel = {-m.orbit_radius * omega * std::sin(th), -m.orbit_radius * omega * std::cos(th)};
                        break;
                    }
                    case MotionKind::zigzag:
                        if (k - 1 > 0 && (k - 1) % m.zigzag_frames == 0) {
                            if (std::abs(m.vel.x) >= std::abs(m.vel.y))
                                m.vel.y = -m.vel.y;
                            else
                                m.vel.x = -m.vel.x;
                            events.push_back(make_event(k - 1, spec.fps, EventKind::direction_change, o.id, "zigzag"));
                        }
                        [[fallthrough]];
                    case MotionKind::linear:
                    case MotionKind::bursts: {
                        Vec2 step_vel = m.vel;
                        if (o.motion == MotionKind::bursts) {
                            const bool active = burst_active(o, t_prev);
                            if (active && !m.moving)
                                events.push_back(make_event(k - 1, spec.fps, EventKind::direction_change, o.id, "start"));
                            if (!active && m.moving)
                                events.push_back(make_event(k - 1, spec.fps, EventKind::direction_change, o.id, "stop"));
                            m.moving = active;
                            step_vel = active ? m.vel : Vec2{};
                        }
                        m.pos = m.pos + step_vel * dt;
                        if (o.motion == MotionKind::linear && o.acceleration != 0.0) {
                            const double speed = m.vel.norm();
                            if (speed > 0) {
                                const double next = std::max(0.0, speed + o.acceleration * dt);
                                m.vel = m.vel * (next / speed);
                            }
                        }
                        const double lo_x = size, hi_x = w - size, lo_y = size, hi_y = h - size;
                        if (m.pos.x < lo_x) {
                            m.pos.x = 2 * lo_x - m.pos.x;
                            m.vel.x = -m.vel.x;
                            events.push_back(make_event(k, spec.fps, EventKind::wall_contact, o.id, "left"));
                        } else if (m.pos.x > hi_x) {
                            m.pos.x = 2 * hi_x - m.pos.x;
                            m.vel.x = -m.vel.x;
                            events.push_back(make_event(k, spec.fps, EventKind::wall_contact, o.id, "right"));
                        }
                        if (m.pos.y < lo_y) {
                            m.pos.y = 2 * lo_y - m.pos.y;
                            m.vel.y = -m.vel.y;
                            events.push_back(make_event(k, spec.fps, EventKind::wall_contact, o.id, "top"));
                        } else if (m.pos.y > hi_y) {
                            m.pos.y = 2 * hi_y - m.pos.y;
                            m.vel.y = -m.vel.y;
                            events.push_back(make_event(k, spec.fps, EventKind::wall_contact, o.id, "bottom"));
                        }
                        break;
                    }
                }
            }

            while (next_change < o.attribute_schedule.size() &&
                   change_frame(o.attribute_schedule[next_change].time_s, spec.fps) <= k) {
                const auto& c = o.attribute_schedule[next_change++];
                std::string before;
                switch (c.attribute) {
                    case Attribute::color:
                        before = std::string(to_string(color));
                        color = color_from_string(c.new_value);
                        break;
                    case Attribute::size: {
                        char buf[32];
                        std::snprintf(buf, sizeof buf, "%g", size);
                        before = buf;
                        size = std::stod(c.new_value);
                        break;
                    }
                    case Attribute::shape:
                        before = std::string(to_string(shape));
                        shape = shape_from_string(c.new_value);
                        break;
                }
                events.push_back(make_event(k, spec.fps, EventKind::attribute_change, o.id,
                                            std::string(to_string(c.attribute)) + ":" + before + "->" + c.new_value));
            }

            const double cumulative = o.angular_velocity * k * dt;
            if (k > 0) {
                const double prev = o.angular_velocity * (k - 1) * dt;
                const auto turns = static_cast<long long>(std::floor(std::abs(cumulative) / 360.0));
                const auto prev_turns = static_cast<long long>(std::floor(std::abs(prev) / 360.0));
                if (turns > prev_turns)
                    events.push_back(make_event(k, spec.fps, EventKind::rotation_complete, o.id, std::to_string(turns)));
            }
            ObjectFrame f{m.pos, o.motion == MotionKind::bursts && !burst_active(o, k * dt) ? Vec2{} : m.vel,
                          o.initial_angle + cumulative, color, size, shape};
            trace.frames[static_cast<std::size_t>(k)].push_back(f);
            trace.angular_displacement[i] = cumulative;
        }
    }
    sort_events(events);
    return trace;
}

// ---- trajectory classification ---------------------------------------------

std::string_view to_string(Trajectory t) {
    switch (t) {
        case Trajectory::linear: return "linear";
        case Trajectory::circular: return "circular";
        case Trajectory::zigzag: return "zigzag";
    }
    return "?";
}

int count_heading_reversals(std::span<const Vec2> points, double min_turn_deg) {
    std::vector<double> headings;
    for (std::size_t i = 1; i < points.size(); ++i) {
        const Vec2 d = points[i] - points[i - 1];
        if (d.norm() < 1e-9) continue;
        headings.push_back(std::atan2(d.y, d.x) / kDegToRad);
    }
    int count = 0;
    for (std::size_t i = 1; i < headings.size(); ++i) {
        double turn = std::fmod(headings[i] - headings[i - 1] + 540.0, 360.0) - 180.0;
        if (std::abs(turn) > min_turn_deg) ++count;
    }
    return count;
}

namespace {

double path_length(std::span<const Vec2> p) {
    double len = 0;
    for (std::size_t i = 1; i < p.size(); ++i) len += (p[i] - p[i - 1]).norm();
    return len;
}

Vec2 centroid(std::span<const Vec2> p) {
    Vec2 c;
    for (const auto& q : p) c = c + q;
    return c * (1.0 / static_cast<double>(p.size()));
}

// Max perpendicular distance to the total-least-squares line.
double line_max_deviation(std::span<const Vec2> p) {
    const Vec2 c = centroid(p);
    double sxx = 0, sxy = 0, syy = 0;
    for (const auto& q : p) {
        const Vec2 d = q - c;
        sxx += d.x * d.x, sxy += d.x * d.y, syy += d.y * d.y;
    }
    const double theta = 0.5 * std::atan2(2 * sxy, sxx - syy);
    const Vec2 normal{-std::sin(theta), std::cos(theta)};
    double worst = 0;
    for (const auto& q : p) {
        const Vec2 d = q - c;
        worst = std::max(worst, std::abs(d.x * normal.x + d.y * normal.y));
    }
    return worst;
}

struct CircleFit {
    Vec2 center;
    double radius = 0;
    double rms = 0;
    bool ok = false;
};

// Algebraic (Kasa) fit on centred coordinates.
CircleFit fit_circle(std::span<const Vec2> p) {
    const Vec2 c = centroid(p);
    double suu = 0, svv = 0, suv = 0, suuu = 0, svvv = 0, suvv = 0, svuu = 0;
    for (const auto& q : p) {
        const double u = q.x - c.x, v = q.y - c.y;
        suu += u * u, svv += v * v, suv += u * v;
        suuu += u * u * u, svvv += v * v * v, suvv += u * v * v, svuu += v * u * u;
    }
    const double det = suu * svv - suv * suv;
    CircleFit fit;
    if (std::abs(det) < 1e-12) return fit;
    const double bu = 0.5 * (suuu + suvv), bv = 0.5 * (svvv + svuu);
    const double uc = (bu * svv - bv * suv) / det;
    const double vc = (suu * bv - suv * bu) / det;
    fit.center = {uc + c.x, vc + c.y};
    fit.radius = std::sqrt(uc * uc + vc * vc + (suu + svv) / static_cast<double>(p.size()));
    double ss = 0;
    for (const auto& q : p) {
        const double r = (q - fit.center).norm() - fit.radius;
        ss += r * r;
    }
    fit.rms = std::sqrt(ss / static_cast<double>(p.size()));
    fit.ok = fit.radius > 0;
    return fit;
}

}  // namespace

Trajectory classify_path(std::span<const Vec2> points, const TrajectoryThresholds& t) {
    if (points.size() < 10) throw Unclassifiable("trajectory needs at least 10 frames");
    if (count_heading_reversals(points, t.reversal_deg) >= t.min_reversals) return Trajectory::zigzag;
    const double len = path_length(points);
    if (len <= 1e-9) throw Unclassifiable("stationary trajectory");
    if (line_max_deviation(points) < t.line_fraction * len) return Trajectory::linear;
    const auto fit = fit_circle(points);
    if (fit.ok && fit.rms < t.circle_fraction * fit.radius) return Trajectory::circular;
    throw Unclassifiable("trajectory fits neither line, circle nor zigzag");
}

Trajectory classify_trajectory(const SimulationTrace& trace, int object_index, const TrajectoryThresholds& t) {
    const auto p = trace.path(object_index);
    return classify_path(p, t);
}

}  // namespace primvid::shortterm
