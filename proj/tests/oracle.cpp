#include "oracle.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace oracle {

using namespace primvid;

namespace {

constexpr double kPi = 3.14159265358979323846;

int frames_of(const SceneSpec& spec) { return static_cast<int>(std::lround(spec.duration_s * spec.fps)); }

// Position inside [lo, lo + len] of an unfolded coordinate.
double fold(double u, double lo, double len) {
    double t = std::fmod(u - lo, 2 * len);
    if (t < 0) t += 2 * len;
    return lo + (t <= len ? t : 2 * len - t);
}

long band(double u, double lo, double len) { return static_cast<long>(std::floor((u - lo) / len)); }

bool in_burst(const ObjectSpec& o, double t) {
    return std::any_of(o.bursts.begin(), o.bursts.end(),
                       [&](const TimeWindow& w) { return t + 1e-9 >= w.start_s && t + 1e-9 < w.end_s; });
}

std::string name_of(const ObjectSpec& o) {
    return std::string(to_string(o.color)) + " " + std::string(to_string(o.shape));
}

double mean_step(const std::vector<Vec2>& p) {
    double total = 0;
    for (std::size_t k = 1; k < p.size(); ++k) total += std::hypot(p[k].x - p[k - 1].x, p[k].y - p[k - 1].y);
    return total / static_cast<double>(p.size() - 1);
}

std::string join(const std::vector<std::string>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + v[i];
    return out;
}

int first_frame_at_or_after(double t, int fps) {
    int k = 0;
    while (static_cast<double>(k) / fps < t - 1e-9) ++k;
    return k;
}

}  // namespace

AxisRun run_object(const SceneSpec& spec, std::size_t index) {
    const auto& o = spec.objects.at(index);
    const int n = frames_of(spec);
    const double dt = 1.0 / spec.fps;
    AxisRun run;
    if (o.motion == MotionKind::circular) {
        const double rx = o.position.x - o.orbit_center.x, ry = o.position.y - o.orbit_center.y;
        const double r = std::hypot(rx, ry);
        const double phase = std::atan2(-ry, rx);
        for (int k = 0; k < n; ++k) {
            const double a = phase + o.orbit_rate * kPi / 180.0 * k * dt;
            run.positions.push_back({o.orbit_center.x + r * std::cos(a), o.orbit_center.y - r * std::sin(a)});
        }
        return run;
    }
    const double lo = o.size;
    const double len_x = spec.canvas.width - 2 * o.size, len_y = spec.canvas.height - 2 * o.size;
    double ux = o.position.x, uy = o.position.y;
    double vx = o.velocity.x, vy = o.velocity.y;
    const int flip_every = std::max(1, static_cast<int>(std::lround(o.zigzag_period_s * spec.fps)));
    run.positions.push_back(o.position);
    for (int k = 1; k < n; ++k) {
        const int from = k - 1;
        if (o.motion == MotionKind::zigzag && from > 0 && from % flip_every == 0) {
            if (std::abs(vx) >= std::abs(vy))
                vy = -vy;
            else
                vx = -vx;
        }
        const bool moving = o.motion != MotionKind::bursts || in_burst(o, from * dt);
        const double nx = ux + (moving ? vx * dt : 0.0), ny = uy + (moving ? vy * dt : 0.0);
        run.contacts += static_cast<int>(std::labs(band(nx, lo, len_x) - band(ux, lo, len_x)));
        run.contacts += static_cast<int>(std::labs(band(ny, lo, len_y) - band(uy, lo, len_y)));
        ux = nx, uy = ny;
        if (o.motion == MotionKind::linear && o.acceleration != 0.0) {
            const double speed = std::hypot(vx, vy);
            if (speed > 0) {
                const double scale = std::max(0.0, speed + o.acceleration * dt) / speed;
                vx *= scale, vy *= scale;
            }
        }
        run.positions.push_back({fold(ux, lo, len_x), fold(uy, lo, len_y)});
    }
    return run;
}

std::string compass(Vec2 d) {
    const double east = d.x, north = -d.y;
    const double t = std::tan(22.5 * kPi / 180.0);
    const std::string h = east >= 0 ? "right" : "left";
    const std::string v = north >= 0 ? "up" : "down";
    if (std::abs(north) < t * std::abs(east)) return h;
    if (std::abs(east) < t * std::abs(north)) return v;
    return v + "-" + h;
}

std::string classify(const std::vector<Vec2>& p) {
    int sharp_turns = 0;
    Vec2 prev{0, 0};
    bool have_prev = false;
    for (std::size_t k = 1; k < p.size(); ++k) {
        const Vec2 d{p[k].x - p[k - 1].x, p[k].y - p[k - 1].y};
        const double len = std::hypot(d.x, d.y);
        if (len < 1e-9) continue;
        if (have_prev) {
            const double cosine = (d.x * prev.x + d.y * prev.y) / (len * std::hypot(prev.x, prev.y));
            if (cosine < 0.5) ++sharp_turns;
        }
        prev = d;
        have_prev = true;
    }
    if (sharp_turns >= 3) return "zigzag";

    double length = 0;
    for (std::size_t k = 1; k < p.size(); ++k) length += std::hypot(p[k].x - p[k - 1].x, p[k].y - p[k - 1].y);
    const Vec2 a = p.front(), b = p.back();
    const double chord = std::hypot(b.x - a.x, b.y - a.y);
    if (chord > 1e-9) {
        double worst = 0;
        for (const auto& q : p)
            worst = std::max(worst, std::abs((b.x - a.x) * (a.y - q.y) - (a.x - q.x) * (b.y - a.y)) / chord);
        if (worst < 0.02 * length) return "linear";
    }

    // Circumcircle through three spread-out samples.
    const Vec2 p1 = p[0], p2 = p[p.size() / 3], p3 = p[2 * p.size() / 3];
    const double det = 2 * (p1.x * (p2.y - p3.y) + p2.x * (p3.y - p1.y) + p3.x * (p1.y - p2.y));
    if (std::abs(det) > 1e-9) {
        const double s1 = p1.x * p1.x + p1.y * p1.y, s2 = p2.x * p2.x + p2.y * p2.y, s3 = p3.x * p3.x + p3.y * p3.y;
        const double cx = (s1 * (p2.y - p3.y) + s2 * (p3.y - p1.y) + s3 * (p1.y - p2.y)) / det;
        const double cy = (s1 * (p3.x - p2.x) + s2 * (p1.x - p3.x) + s3 * (p2.x - p1.x)) / det;
        const double r = std::hypot(p1.x - cx, p1.y - cy);
        double worst = 0;
        for (const auto& q : p) worst = std::max(worst, std::abs(std::hypot(q.x - cx, q.y - cy) - r));
        if (worst < 0.02 * r) return "circular";
    }
    return "unclassifiable";
}

std::string shortterm_answer(const SceneSpec& spec) {
    const int n = frames_of(spec);
    const auto& objs = spec.objects;
    switch (spec.task_type) {
        case TaskType::collision_counting: return std::to_string(run_object(spec, 0).contacts);
        case TaskType::direction_identification: {
            const auto p = run_object(spec, 0).positions;
            return compass({p.back().x - p.front().x, p.back().y - p.front().y});
        }
        case TaskType::trajectory_shape: return classify(run_object(spec, 0).positions);
        case TaskType::speed_perception: {
            const double a = mean_step(run_object(spec, 0).positions), b = mean_step(run_object(spec, 1).positions);
            return a > b ? name_of(objs[0]) : name_of(objs[1]);
        }
        case TaskType::motion_counting: {
            int starts = 0;
            bool was = false;
            for (int j = 0; j + 1 < n; ++j) {
                const bool now = in_burst(objs[0], static_cast<double>(j) / spec.fps);
                if (now && !was) ++starts;
                was = now;
            }
            return std::to_string(starts);
        }
        case TaskType::attribute_change:
            for (const auto& c : objs[0].attribute_schedule)
                if (first_frame_at_or_after(c.time_s, spec.fps) < n) return std::string(to_string(c.attribute));
            return "none";
        case TaskType::rotation_counting: {
            const double degrees = std::abs(objs[0].angular_velocity) * (n - 1) / spec.fps;
            return std::to_string(static_cast<int>(degrees / 360.0));
        }
        case TaskType::relative_position: {
            const Vec2 a = run_object(spec, 0).positions.back(), b = run_object(spec, 1).positions.back();
            const double dx = a.x - b.x, dy = a.y - b.y;
            if (std::abs(dx) >= std::abs(dy)) return dx < 0 ? "left" : "right";
            return dy < 0 ? "above" : "below";
        }
        case TaskType::acceleration_detection:
            if (objs[0].acceleration > 0) return "accelerating";
            if (objs[0].acceleration < 0) return "decelerating";
            return "constant speed";
        case TaskType::velocity_comparison: {
            std::vector<std::pair<double, std::string>> r;
            for (std::size_t i = 0; i < objs.size(); ++i) r.emplace_back(mean_step(run_object(spec, i).positions), name_of(objs[i]));
            std::sort(r.begin(), r.end(), [](const auto& x, const auto& y) { return x.first > y.first; });
            std::vector<std::string> names;
            for (const auto& x : r) names.push_back(x.second);
            return join(names);
        }
        case TaskType::distance_estimation: {
            const auto q = static_cast<std::size_t>(std::lround(spec.query_time_s * spec.fps));
            const Vec2 ref = run_object(spec, 0).positions[q];
            double best = 1e300;
            std::string who;
            for (std::size_t i = 1; i < objs.size(); ++i) {
                const Vec2 p = run_object(spec, i).positions[q];
                const double d = std::hypot(p.x - ref.x, p.y - ref.y);
                if (d < best) best = d, who = name_of(objs[i]);
            }
            return who;
        }
        case TaskType::event_ordering: {
            std::vector<std::pair<int, std::string>> order;
            for (const auto& o : objs) order.emplace_back(first_frame_at_or_after(o.attribute_schedule.at(0).time_s, spec.fps), name_of(o));
            std::sort(order.begin(), order.end());
            std::vector<std::string> names;
            for (const auto& x : order) names.push_back(x.second);
            return join(names);
        }
    }
    return {};
}

// ---- long-term ---------------------------------------------------------------

namespace {

[[noreturn]] void refuse(const std::string& why) { throw std::runtime_error(why); }

std::string join_path(const std::string& dir, const std::string& name) { return (dir == "/" ? "" : dir) + "/" + name; }

std::string parent(const std::string& p) {
    const auto k = p.find_last_of('/');
    return k == 0 ? "/" : p.substr(0, k);
}

std::string leaf(const std::string& p) { return p.substr(p.find_last_of('/') + 1); }

bool has(const std::vector<std::string>& v, const std::string& x) { return std::find(v.begin(), v.end(), x) != v.end(); }

void add_dir(FileTree& t, const std::string& p) {
    if (has(t.dirs, p)) refuse("exists");
    t.dirs.push_back(p);
    std::sort(t.dirs.begin(), t.dirs.end());
}

void drop_dir(FileTree& t, const std::string& p) {
    if (!has(t.dirs, p)) refuse("missing");
    for (const auto& d : t.dirs)
        if (d.size() > p.size() && d.compare(0, p.size() + 1, p + "/") == 0) refuse("not empty");
    t.dirs.erase(std::find(t.dirs.begin(), t.dirs.end(), p));
}

// Row/column step from the blank to the tile that slides into it.
std::pair<int, int> source_step(Direction d) {
    switch (d) {
        case Direction::up: return {1, 0};
        case Direction::down: return {-1, 0};
        case Direction::left: return {0, 1};
        case Direction::right: return {0, -1};
    }
    return {0, 0};
}

SlidingPuzzle slide(SlidingPuzzle p, int dr, int dc) {
    const int b = static_cast<int>(std::find(p.tiles.begin(), p.tiles.end(), 0) - p.tiles.begin());
    const int r = b / p.cols + dr, c = b % p.cols + dc;
    if (r < 0 || c < 0 || r >= p.rows || c >= p.cols) refuse("slide off grid");
    std::swap(p.tiles[static_cast<std::size_t>(b)], p.tiles[static_cast<std::size_t>(r * p.cols + c)]);
    return p;
}

std::vector<std::string>& stack_at(CardStacks& s, int i) {
    if (i < 0 || i >= static_cast<int>(s.stacks.size())) refuse("bad stack");
    return s.stacks[static_cast<std::size_t>(i)];
}

void move_top(CardStacks& s, int from, int to) {
    auto& a = stack_at(s, from);
    auto& b = stack_at(s, to);
    if (a.empty() || from == to) refuse("bad move");
    b.push_back(a.back());
    a.pop_back();
}

StateSnapshot step(const StateSnapshot& s, const Action& a, bool reverse) {
    if (auto* op = std::get_if<CardOp>(&a)) {
        auto st = std::get<CardStacks>(s);
        const bool adds = (op->kind == CardOp::Kind::push) != reverse;
        if (op->kind == CardOp::Kind::move) {
            reverse ? move_top(st, op->to, op->from) : move_top(st, op->from, op->to);
        } else if (adds) {
            stack_at(st, op->kind == CardOp::Kind::push ? op->to : op->from).push_back(op->card);
        } else {
            auto& v = stack_at(st, op->kind == CardOp::Kind::push ? op->to : op->from);
            if (v.empty() || v.back() != op->card) refuse("top card mismatch");
            v.pop_back();
        }
        return st;
    }
    if (auto* op = std::get_if<ChipOp>(&a)) {
        auto st = std::get<ChipContainers>(s);
        const auto from = static_cast<std::size_t>(reverse ? op->to : op->from);
        const auto to = static_cast<std::size_t>(reverse ? op->from : op->to);
        if (st.counts.at(from) < op->amount) refuse("insufficient chips");
        st.counts[from] -= op->amount;
        st.counts[to] += op->amount;
        return st;
    }
    if (auto* op = std::get_if<FsOp>(&a)) {
        auto st = std::get<FileTree>(s);
        auto kind = op->kind;
        if (reverse) {
            switch (kind) {
                case FsOp::Kind::enter: kind = FsOp::Kind::leave; break;
                case FsOp::Kind::leave: kind = FsOp::Kind::enter; break;
                case FsOp::Kind::create: kind = FsOp::Kind::remove; break;
                case FsOp::Kind::remove: kind = FsOp::Kind::create; break;
            }
        }
        switch (kind) {
            case FsOp::Kind::enter:
                if (!has(st.dirs, join_path(st.cwd, op->name))) refuse("no such dir");
                st.cwd = join_path(st.cwd, op->name);
                break;
            case FsOp::Kind::leave:
                if (st.cwd == "/" || leaf(st.cwd) != op->name) refuse("cannot leave");
                st.cwd = parent(st.cwd);
                break;
            case FsOp::Kind::create: add_dir(st, join_path(st.cwd, op->name)); break;
            case FsOp::Kind::remove: drop_dir(st, join_path(st.cwd, op->name)); break;
        }
        return st;
    }
    if (auto* op = std::get_if<SymbolOp>(&a)) {
        auto st = std::get<SymbolRegister>(s);
        auto kind = op->kind;
        if (reverse) {
            switch (kind) {
                case SymbolOp::Kind::add: kind = SymbolOp::Kind::sub; break;
                case SymbolOp::Kind::sub: kind = SymbolOp::Kind::add; break;
                case SymbolOp::Kind::mul: kind = SymbolOp::Kind::div; break;
                case SymbolOp::Kind::div: kind = SymbolOp::Kind::mul; break;
            }
        }
        switch (kind) {
            case SymbolOp::Kind::add: st.value += op->k; break;
            case SymbolOp::Kind::sub: st.value -= op->k; break;
            case SymbolOp::Kind::mul: st.value *= op->k; break;
            case SymbolOp::Kind::div:
                if (st.value % op->k) refuse("not divisible");
                st.value /= op->k;
                break;
        }
        if (st.value < 0) refuse("negative register");
        return st;
    }
    if (auto* op = std::get_if<SwapOp>(&a)) {
        auto st = std::get<ShellGrid>(s);
        std::swap(st.cells.at(static_cast<std::size_t>(op->a)), st.cells.at(static_cast<std::size_t>(op->b)));
        return st;
    }
    const auto& op = std::get<SlideOp>(a);
    auto [dr, dc] = source_step(op.dir);
    if (reverse) dr = -dr, dc = -dc;
    return slide(std::get<SlidingPuzzle>(s), dr, dc);
}

}  // namespace

StateSnapshot forward(const StateSnapshot& s, const Action& a) { return step(s, a, false); }
StateSnapshot backward(const StateSnapshot& s, const Action& a) { return step(s, a, true); }

GroundingReport grounding(const std::vector<std::pair<Interval, Interval>>& pairs) {
    GroundingReport r;
    double iou_sum = 0, iop_sum = 0;
    int hit3 = 0, hit5 = 0, hit7 = 0;
    for (const auto& [p, g] : pairs) {
        const double lo = std::max(p.start, g.start), hi = std::min(p.end, g.end);
        const double inter = hi > lo ? hi - lo : 0.0;
        const double uni = std::max(p.end, g.end) - std::min(p.start, g.start);
        // Union of two overlapping intervals is their hull; for disjoint ones
        // the IoU is zero either way.
        const double iou = inter > 0 ? inter / uni : 0.0;
        const double plen = p.end - p.start;
        iou_sum += iou;
        iop_sum += plen > 0 ? inter / plen : 0.0;
        hit3 += iou >= 0.3;
        hit5 += iou >= 0.5;
        hit7 += iou >= 0.7;
    }
    const double n = static_cast<double>(pairs.size());
    r.count = static_cast<int>(pairs.size());
    r.r_at_03 = hit3 / n;
    r.r_at_05 = hit5 / n;
    r.r_at_07 = hit7 / n;
    r.miou = iou_sum / n;
    r.miop = iop_sum / n;
    return r;
}

}  // namespace oracle
