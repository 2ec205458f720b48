#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "primvid/error.hpp"
#include "primvid/shortterm.hpp"

namespace primvid::shortterm {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

// Ambiguity margins enforced on every generated scene.
constexpr double kSpeedRatioMargin = 1.3;
constexpr double kBucketMarginDeg = 10.0;
constexpr double kRotationFractionMargin = 0.15;
constexpr double kAccelGain = 1.5;       // accelerating: final/initial speed
constexpr double kDecelRatio = 1 / 1.5;  // decelerating: final/initial speed
constexpr double kRelativeMinOffset = 40.0;
constexpr double kDistanceRatio = 0.75;
constexpr double kEventGap_s = 0.5;

const char* const kCompass[] = {"right", "up-right", "up", "up-left", "left", "down-left", "down", "down-right"};

[[noreturn]] void ambiguous(const std::string& what) { throw GenerationError(what); }

double heading_deg(Vec2 d) {
    double a = std::atan2(-d.y, d.x) / kDegToRad;
    return a < 0 ? a + 360.0 : a;
}

int object_index(const SimulationTrace& trace, int id) {
    for (int i = 0; i < trace.object_count(); ++i)
        if (trace.object_ids[static_cast<std::size_t>(i)] == id) return i;
    throw Error("unknown object id " + std::to_string(id));
}

std::vector<const EventRecord*> events_of(const SimulationTrace& trace, EventKind kind, int subject) {
    std::vector<const EventRecord*> out;
    for (const auto& e : trace.events)
        if (e.kind == kind && e.subject == subject) out.push_back(&e);
    return out;
}

double mean_speed(const SimulationTrace& trace, int idx) {
    double s = 0;
    for (int k = 0; k < trace.frame_count(); ++k) s += trace.at(k, idx).velocity.norm();
    return s / trace.frame_count();
}

std::string relation(Vec2 a, Vec2 b, bool require_margin) {
    const Vec2 d = a - b;
    const double ax = std::abs(d.x), ay = std::abs(d.y);
    if (require_margin) {
        if (std::max(ax, ay) < kRelativeMinOffset) ambiguous("objects too close to call relative position");
        if (std::max(ax, ay) < 1.5 * std::min(ax, ay)) ambiguous("relative position is diagonal");
    }
    if (ax >= ay) return d.x < 0 ? "left" : "right";
    return d.y < 0 ? "above" : "below";
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

std::vector<std::string> permutations_of(std::vector<std::string> items) {
    std::vector<std::string> out;
    std::sort(items.begin(), items.end());
    do {
        out.push_back(join(items, ", "));
    } while (std::next_permutation(items.begin(), items.end()));
    return out;
}

std::vector<std::string> count_space(int answer) {
    std::vector<std::string> out;
    for (int v = std::max(0, answer - 3); v <= answer + 3; ++v) out.push_back(std::to_string(v));
    return out;
}

void require_objects(const SceneSpec& spec, std::size_t n) {
    if (spec.objects.size() != n)
        ambiguous(std::string(to_string(spec.task_type)) + " expects " + std::to_string(n) + " objects");
}

}  // namespace

std::string describe_object(const ObjectSpec& o) {
    return std::string(to_string(o.color)) + " " + std::string(to_string(o.shape));
}

std::string compass_direction(Vec2 displacement) {
    const double a = heading_deg(displacement);
    const int bucket = static_cast<int>(std::floor((a + 22.5) / 45.0)) % 8;
    return kCompass[bucket];
}

double bucket_boundary_margin(Vec2 displacement) {
    const double a = heading_deg(displacement);
    const double from_center = std::abs(std::fmod(a + 22.5, 45.0) - 22.5);
    return 22.5 - from_center;
}

GroundTruth derive_answer(const SceneSpec& spec, const SimulationTrace& trace) {
    GroundTruth gt;
    const int n = trace.frame_count();
    const int last = n - 1;
    switch (spec.task_type) {
        case TaskType::collision_counting: {
            require_objects(spec, 1);
            const auto& o = spec.objects[0];
            const auto contacts = events_of(trace, EventKind::wall_contact, o.id);
            if (contacts.empty()) ambiguous("no wall contacts");
            for (std::size_t i = 1; i < contacts.size(); ++i)
                if (contacts[i]->frame_index == contacts[i - 1]->frame_index) ambiguous("corner contact");
            if (contacts.back()->frame_index >= last - 1) ambiguous("contact at clip end");
            const int count = static_cast<int>(contacts.size());
            gt.answer = std::to_string(count);
            gt.answer_space = count_space(count);
            gt.fields["object"] = describe_object(o);
            gt.numeric = true;
            break;
        }
        case TaskType::direction_identification: {
            require_objects(spec, 1);
            const auto& o = spec.objects[0];
            if (!events_of(trace, EventKind::wall_contact, o.id).empty()) ambiguous("direction scene hits a wall");
            const Vec2 d = trace.at(last, 0).position - trace.at(0, 0).position;
            if (d.norm() < 30.0) ambiguous("displacement too small");
            if (bucket_boundary_margin(d) < kBucketMarginDeg) ambiguous("heading too close to a bucket boundary");
            gt.answer = compass_direction(d);
            gt.answer_space.assign(std::begin(kCompass), std::end(kCompass));
            gt.fields["object"] = describe_object(o);
            break;
        }
        case TaskType::trajectory_shape: {
            require_objects(spec, 1);
            const auto& o = spec.objects[0];
            Trajectory t;
            try {
                t = classify_trajectory(trace, 0);
            } catch (const Unclassifiable& e) {
                ambiguous(std::string("unclassifiable: ") + e.what());
            }
            const Trajectory expected = o.motion == MotionKind::circular ? Trajectory::circular
                                        : o.motion == MotionKind::zigzag ? Trajectory::zigzag
                                                                         : Trajectory::linear;
            if (t != expected) ambiguous("classifier disagrees with template");
            gt.answer = std::string(to_string(t));
            gt.answer_space = {"linear", "circular", "zigzag"};
            gt.fields["object"] = describe_object(o);
            break;
        }
        case TaskType::speed_perception: {
            require_objects(spec, 2);
            const double s0 = mean_speed(trace, 0), s1 = mean_speed(trace, 1);
            if (std::max(s0, s1) < kSpeedRatioMargin * std::min(s0, s1)) ambiguous("speeds too similar");
            const auto a = describe_object(spec.objects[0]), b = describe_object(spec.objects[1]);
            gt.answer = s0 > s1 ? a : b;
            gt.answer_space = {a, b};
            gt.fields["object_a"] = a;
            gt.fields["object_b"] = b;
            break;
        }
        case TaskType::motion_counting: {
            require_objects(spec, 1);
            const auto& o = spec.objects[0];
            int starts = 0;
            for (const auto* e : events_of(trace, EventKind::direction_change, o.id))
                if (e->payload == "start") ++starts;
            if (starts == 0) ambiguous("object never moves");
            gt.answer = std::to_string(starts);
            gt.answer_space = count_space(starts);
            gt.fields["object"] = describe_object(o);
            gt.numeric = true;
            break;
        }
        case TaskType::attribute_change: {
            require_objects(spec, 1);
            const auto& o = spec.objects[0];
            const auto changes = events_of(trace, EventKind::attribute_change, o.id);
            if (changes.size() != 1) ambiguous("attribute task needs exactly one realized change");
            gt.answer = changes[0]->payload.substr(0, changes[0]->payload.find(':'));
            gt.answer_space = {"color", "size", "shape"};
            gt.fields["object"] = describe_object(o);
            break;
        }
        case TaskType::rotation_counting: {
            require_objects(spec, 1);
            const auto& o = spec.objects[0];
            if (o.angular_velocity == 0.0) ambiguous("rotation task with zero angular velocity");
            if (o.shape == Shape::circle) ambiguous("rotation of a circle is invisible");
            const double turns = std::abs(trace.angular_displacement[0]) / 360.0;
            const double frac = turns - std::floor(turns);
            if (turns < 1.0) ambiguous("less than one full rotation");
            if (frac < kRotationFractionMargin || frac > 1 - kRotationFractionMargin)
                ambiguous("rotation ends too close to a whole turn");
            const int count = static_cast<int>(std::floor(turns));
            gt.answer = std::to_string(count);
            gt.answer_space = count_space(count);
            gt.fields["object"] = describe_object(o);
            gt.numeric = true;
            break;
        }
        case TaskType::relative_position: {
            require_objects(spec, 2);
            const auto start = relation(trace.at(0, 0).position, trace.at(0, 1).position, false);
            const auto end = relation(trace.at(last, 0).position, trace.at(last, 1).position, true);
            if (start == end) ambiguous("relative position never changes");
            gt.answer = end;
            gt.answer_space = {"left", "right", "above", "below"};
            gt.fields["object_a"] = describe_object(spec.objects[0]);
            gt.fields["object_b"] = describe_object(spec.objects[1]);
            break;
        }
        case TaskType::acceleration_detection: {
            require_objects(spec, 1);
            std::vector<double> speeds;
            for (int k = 0; k < n; ++k) speeds.push_back(trace.at(k, 0).velocity.norm());
            bool inc = true, dec = true, flat = true;
            for (std::size_t k = 1; k < speeds.size(); ++k) {
                const double d = speeds[k] - speeds[k - 1];
                inc = inc && d > 0;
                dec = dec && d < 0;
                flat = flat && std::abs(d) <= 1e-9 * std::max(1.0, speeds[k]);
            }
            const double ratio = speeds.front() > 0 ? speeds.back() / speeds.front() : 0.0;
            if (inc && ratio >= kAccelGain)
                gt.answer = "accelerating";
            else if (dec && ratio <= kDecelRatio && speeds.back() > 0)
                gt.answer = "decelerating";
            else if (flat && speeds.front() > 0)
                gt.answer = "constant speed";
            else
                ambiguous("speed change below margin");
            gt.answer_space = {"accelerating", "decelerating", "constant speed"};
            gt.fields["object"] = describe_object(spec.objects[0]);
            break;
        }
        case TaskType::velocity_comparison: {
            require_objects(spec, 3);
            std::vector<std::pair<double, std::string>> ranked;
            for (int i = 0; i < 3; ++i)
                ranked.emplace_back(mean_speed(trace, i), describe_object(spec.objects[static_cast<std::size_t>(i)]));
            std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
            for (std::size_t i = 1; i < ranked.size(); ++i)
                if (ranked[i - 1].first < kSpeedRatioMargin * ranked[i].first) ambiguous("speeds too similar to rank");
            std::vector<std::string> names;
            for (const auto& r : ranked) names.push_back(r.second);
            gt.answer = join(names, ", ");
            gt.answer_space = permutations_of(names);
            gt.fields["object_a"] = describe_object(spec.objects[0]);
            gt.fields["object_b"] = describe_object(spec.objects[1]);
            gt.fields["object_c"] = describe_object(spec.objects[2]);
            break;
        }
        case TaskType::distance_estimation: {
            require_objects(spec, 4);
            const int q = static_cast<int>(std::lround(spec.query_time_s * spec.fps));
            if (q <= 0 || q >= n) ambiguous("query time outside the clip");
            auto nearest = [&](int frame) {
                std::vector<std::pair<double, int>> d;
                for (int i = 1; i < 4; ++i)
                    d.emplace_back((trace.at(frame, i).position - trace.at(frame, 0).position).norm(), i);
                std::sort(d.begin(), d.end());
                return d;
            };
            const auto at_q = nearest(q);
            if (at_q[0].first > kDistanceRatio * at_q[1].first) ambiguous("nearest object not clearly nearest");
            if (nearest(0)[0].second == at_q[0].second) ambiguous("nearest object unchanged from the start");
            gt.answer = describe_object(spec.objects[static_cast<std::size_t>(at_q[0].second)]);
            for (int i = 1; i < 4; ++i) gt.answer_space.push_back(describe_object(spec.objects[static_cast<std::size_t>(i)]));
            gt.fields["reference"] = describe_object(spec.objects[0]);
            gt.fields["time"] = format_clock(spec.query_time_s);
            break;
        }
        case TaskType::event_ordering: {
            require_objects(spec, 3);
            std::vector<std::pair<int, std::string>> order;
            for (const auto& o : spec.objects) {
                const auto ch = events_of(trace, EventKind::attribute_change, o.id);
                if (ch.size() != 1) ambiguous("each object needs exactly one change");
                order.emplace_back(ch[0]->frame_index, describe_object(o));
            }
            std::sort(order.begin(), order.end());
            for (std::size_t i = 1; i < order.size(); ++i)
                if ((order[i].first - order[i - 1].first) < kEventGap_s * spec.fps) ambiguous("events too close together");
            std::vector<std::string> names;
            for (const auto& e : order) names.push_back(e.second);
            gt.answer = join(names, ", ");
            gt.answer_space = permutations_of(names);
            gt.fields["object_a"] = describe_object(spec.objects[0]);
            gt.fields["object_b"] = describe_object(spec.objects[1]);
            gt.fields["object_c"] = describe_object(spec.objects[2]);
            break;
        }
    }
    return gt;
}

// ---- scene sampling -----------------------------------------------------------

namespace {

Vec2 heading_vector(double deg, double speed) { return Vec2{std::cos(deg * kDegToRad), -std::sin(deg * kDegToRad)} * speed; }

struct SceneBuilder {
    Rng& rng;
    const ShortTermOptions& opt;
    SceneSpec spec;
    std::vector<Color> colors;

    SceneBuilder(Rng& r, const ShortTermOptions& o, TaskType task) : rng(r), opt(o) {
        spec.canvas = o.canvas;
        spec.fps = o.fps;
        spec.task_type = task;
        colors.assign(kAllColors.begin(), kAllColors.end());
        rng.shuffle(colors);
    }

    double w() const { return spec.canvas.width; }
    double h() const { return spec.canvas.height; }

    ObjectSpec& add(bool allow_circle = true) {
        ObjectSpec o;
        o.id = static_cast<int>(spec.objects.size());
        o.color = colors[spec.objects.size() % colors.size()];
        do {
            o.shape = kAllShapes[static_cast<std::size_t>(rng.uniform_int(0, 3))];
        } while (!allow_circle && o.shape == Shape::circle);
        o.size = static_cast<double>(rng.uniform_int(12, 22));
        o.position = random_point(o.size + 10);
        spec.objects.push_back(o);
        return spec.objects.back();
    }

    Vec2 random_point(double margin) {
        return {rng.uniform(margin, w() - margin), rng.uniform(margin, h() - margin)};
    }

    double any_heading() { return rng.uniform(0.0, 360.0); }
};

}  // namespace

SceneSpec random_scene(TaskType task, Rng& rng, const ShortTermOptions& options) {
    SceneBuilder b(rng, options, task);
    auto& spec = b.spec;
    switch (task) {
        case TaskType::collision_counting: {
            spec.duration_s = static_cast<double>(rng.uniform_int(4, 6));
            auto& o = b.add();
            o.velocity = heading_vector(b.any_heading(), rng.uniform(150, 320));
            break;
        }
        case TaskType::direction_identification: {
            spec.duration_s = 3.0;
            auto& o = b.add();
            const double heading = 45.0 * static_cast<double>(rng.uniform_int(0, 7)) + rng.uniform(-12.0, 12.0);
            const double speed = rng.uniform(40, 80);
            o.velocity = heading_vector(heading, speed);
            const Vec2 travel = o.velocity * spec.duration_s;
            o.position = Vec2{b.w() / 2, b.h() / 2} - travel * 0.5 + Vec2{rng.uniform(-40, 40), rng.uniform(-40, 40)};
            break;
        }
        case TaskType::trajectory_shape: {
            spec.duration_s = 4.0;
            auto& o = b.add();
            const auto kind = static_cast<int>(rng.uniform_int(0, 2));
            if (kind == 0) {
                o.motion = MotionKind::linear;
                const double speed = rng.uniform(40, 80);
                o.velocity = heading_vector(b.any_heading(), speed);
                o.position = Vec2{b.w() / 2, b.h() / 2} - o.velocity * (spec.duration_s / 2);
            } else if (kind == 1) {
                o.motion = MotionKind::circular;
                const double r = rng.uniform(60, 140);
                o.orbit_center = Vec2{b.w() / 2, b.h() / 2} + Vec2{rng.uniform(-30, 30), rng.uniform(-30, 30)};
                const double phase = b.any_heading();
                o.position = o.orbit_center + Vec2{std::cos(phase * kDegToRad), -std::sin(phase * kDegToRad)} * r;
                o.orbit_rate = (rng.bernoulli(0.5) ? 1 : -1) * rng.uniform(90, 180);
            } else {
                o.motion = MotionKind::zigzag;
                const double base = rng.uniform(40, 60), lateral = rng.uniform(60, 100);
                const bool horizontal = rng.bernoulli(0.5);
                const double sb = rng.bernoulli(0.5) ? 1 : -1, sl = rng.bernoulli(0.5) ? 1 : -1;
                o.velocity = horizontal ? Vec2{sb * base, sl * lateral} : Vec2{sl * lateral, sb * base};
                // The larger component is the one that flips, so keep lateral > base.
                o.zigzag_period_s = rng.uniform(0.45, 0.7);
                const Vec2 drift = horizontal ? Vec2{sb * base, 0} : Vec2{0, sb * base};
                o.position = Vec2{b.w() / 2, b.h() / 2} - drift * (spec.duration_s / 2);
            }
            break;
        }
        case TaskType::speed_perception: {
            spec.duration_s = 4.0;
            const double slow = rng.uniform(50, 110), fast = slow * rng.uniform(1.5, 3.0);
            const bool first_fast = rng.bernoulli(0.5);
            b.add().velocity = heading_vector(b.any_heading(), first_fast ? fast : slow);
            b.add().velocity = heading_vector(b.any_heading(), first_fast ? slow : fast);
            break;
        }
        case TaskType::motion_counting: {
            auto& o = b.add();
            o.motion = MotionKind::bursts;
            o.velocity = heading_vector(b.any_heading(), rng.uniform(100, 180));
            const auto count = rng.uniform_int(2, 5);
            double t = rng.uniform(0.3, 0.6);
            for (std::int64_t i = 0; i < count; ++i) {
                const double len = rng.uniform(0.4, 0.7);
                o.bursts.push_back({t, t + len});
                t += len + rng.uniform(0.4, 0.7);
            }
            spec.duration_s = std::ceil(t + 0.3);
            break;
        }
        case TaskType::attribute_change: {
            spec.duration_s = 4.0;
            auto& o = b.add();
            o.position = Vec2{b.w() / 2, b.h() / 2} + Vec2{rng.uniform(-60, 60), rng.uniform(-60, 60)};
            o.velocity = heading_vector(b.any_heading(), rng.uniform(10, 30));
            AttributeChange c;
            c.time_s = rng.uniform(1.5, 2.5);
            c.attribute = static_cast<Attribute>(rng.uniform_int(0, 2));
            switch (c.attribute) {
                case Attribute::color: c.new_value = std::string(to_string(b.colors.back())); break;
                case Attribute::size: {
                    const double factor = rng.bernoulli(0.5) ? 1.6 : 0.6;
                    c.new_value = std::to_string(static_cast<int>(std::lround(o.size * factor)));
                    break;
                }
                case Attribute::shape: {
                    Shape s;
                    do {
                        s = kAllShapes[static_cast<std::size_t>(rng.uniform_int(0, 3))];
                    } while (s == o.shape);
                    c.new_value = std::string(to_string(s));
                    break;
                }
            }
            o.attribute_schedule.push_back(c);
            break;
        }
        case TaskType::rotation_counting: {
            spec.duration_s = static_cast<double>(rng.uniform_int(3, 5));
            auto& o = b.add(false);
            o.size = static_cast<double>(rng.uniform_int(24, 40));
            o.position = Vec2{b.w() / 2, b.h() / 2} + Vec2{rng.uniform(-80, 80), rng.uniform(-80, 80)};
            o.angular_velocity = (rng.bernoulli(0.5) ? 1 : -1) * rng.uniform(120, 400);
            o.initial_angle = rng.uniform(0, 90);
            break;
        }
        case TaskType::relative_position: {
            spec.duration_s = 4.0;
            auto& a = b.add();
            auto& bo = b.add();
            a.velocity = heading_vector(b.any_heading(), rng.uniform(60, 140));
            bo.velocity = heading_vector(b.any_heading(), rng.uniform(60, 140));
            break;
        }
        case TaskType::acceleration_detection: {
            spec.duration_s = 4.0;
            auto& o = b.add();
            const double v0 = rng.uniform(80, 140);
            o.velocity = heading_vector(b.any_heading(), v0);
            const auto kind = rng.uniform_int(0, 2);
            if (kind == 0) o.acceleration = v0 * (rng.uniform(1.7, 2.5) - 1) / spec.duration_s;
            if (kind == 1) o.acceleration = -v0 * (1 - rng.uniform(0.3, 0.55)) / spec.duration_s;
            break;
        }
        case TaskType::velocity_comparison: {
            spec.duration_s = 4.0;
            const double s0 = rng.uniform(40, 70);
            std::vector<double> speeds{s0, s0 * rng.uniform(1.4, 2.0)};
            speeds.push_back(speeds[1] * rng.uniform(1.4, 2.0));
            rng.shuffle(speeds);
            for (double s : speeds) b.add().velocity = heading_vector(b.any_heading(), s);
            break;
        }
        case TaskType::distance_estimation: {
            spec.duration_s = 4.0;
            for (int i = 0; i < 4; ++i) b.add().velocity = heading_vector(b.any_heading(), rng.uniform(40, 150));
            spec.query_time_s = static_cast<double>(rng.uniform_int(1, 3));
            break;
        }
        case TaskType::event_ordering: {
            spec.duration_s = 5.0;
            std::vector<double> times{rng.uniform(0.8, 1.4), 0, 0};
            times[1] = times[0] + rng.uniform(0.7, 1.2);
            times[2] = times[1] + rng.uniform(0.7, 1.2);
            rng.shuffle(times);
            for (int i = 0; i < 3; ++i) {
                auto& o = b.add();
                o.velocity = heading_vector(b.any_heading(), rng.uniform(15, 40));
                const int grown = static_cast<int>(std::lround(o.size * 1.6));
                o.attribute_schedule.push_back({times[static_cast<std::size_t>(i)], Attribute::size, std::to_string(grown)});
            }
            break;
        }
    }
    return spec;
}

ShortTermSample generate_shortterm_sample(TaskType task, Rng& rng, const ShortTermOptions& options) {
    std::string last_reason;
    SceneSpec last_spec;
    for (int attempt = 0; attempt < options.retry_limit; ++attempt) {
        SceneSpec spec = random_scene(task, rng, options);
        try {
            auto trace = simulate(spec);
            auto truth = derive_answer(spec, trace);
            return ShortTermSample{std::move(spec), std::move(trace), std::move(truth), attempt};
        } catch (const GenerationError& e) {
            last_reason = e.what();
        } catch (const InvalidSpec& e) {
            last_reason = e.what();
        }
        last_spec = std::move(spec);
    }
    std::ostringstream msg;
    msg << "generate_shortterm_sample(" << to_string(task) << "): " << options.retry_limit
        << " retries exhausted; last reason: " << last_reason << "; last scene: duration " << last_spec.duration_s
        << " s, " << last_spec.objects.size() << " objects";
    for (const auto& o : last_spec.objects)
        msg << "; #" << o.id << " " << describe_object(o) << " at (" << o.position.x << ", " << o.position.y
            << ") v=(" << o.velocity.x << ", " << o.velocity.y << ")";
    throw RetryExhausted(msg.str());
}

}  // namespace primvid::shortterm
