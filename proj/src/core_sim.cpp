#include "orchestra/core_sim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "orchestra/synth.hpp"

namespace orchestra {
namespace {

constexpr int kMaxFolds = 64;

// Mirror `pos` back into [lo, hi], negating `vel` once per wall hit.
void reflect_axis(double& pos, double& vel, double lo, double hi) {
    for (int i = 0; i < kMaxFolds && (pos < lo || pos > hi); ++i) {
        if (pos > hi) {
            pos = 2.0 * hi - pos;
        } else {
            pos = 2.0 * lo - pos;
        }
        vel = -vel;
    }
    pos = std::clamp(pos, lo, hi);
}

Vec3 planar_velocity(double speed, double heading) {
    return {speed * std::cos(heading), speed * std::sin(heading), 0.0};
}

bool contains(const IdSet& set, int id) { return std::binary_search(set.begin(), set.end(), id); }

int hue_for(const std::string& chord, int id) {
    const auto& names = default_chord_names();
    const auto it = std::find(names.begin(), names.end(), chord);
    if (it != names.end()) return static_cast<int>(it - names.begin());
    return id % 10;
}

}  // namespace

const char* to_string(EventKind kind) {
    switch (kind) {
        case EventKind::enter: return "enter";
        case EventKind::exit: return "exit";
        case EventKind::stroke: return "stroke";
    }
    return "?";
}

EventKind event_kind_from_string(const std::string& s) {
    if (s == "enter") return EventKind::enter;
    if (s == "exit") return EventKind::exit;
    if (s == "stroke") return EventKind::stroke;
    throw std::invalid_argument("unknown event kind '" + s + "'");
}

double normalize_angle(double radians) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    double a = std::remainder(radians, two_pi);  // [-pi, pi]
    if (a <= -std::numbers::pi) a += two_pi;
    return a;
}

double AltitudeRamp::at(double t) const {
    const double frac = duration > 0.0 ? (t - t_start) / duration : 1.0;
    if (frac >= 1.0) return target_z;
    if (frac <= 0.0) return start_z;
    return start_z + (target_z - start_z) * frac;
}

WorldState init_world(const Config& config, std::uint64_t seed) {
    validate(config);
    const auto chords = bubble_chord_names(config);

    WorldState world;
    world.play_space = {config.space.width, config.space.depth, config.space.fence_height};
    world.altitude = config.start_altitude();
    world.speed = config.bubbles.speed;
    world.redirect_rate = config.bubbles.redirect_rate;
    world.rng.reseed(seed);

    const double r = config.radius();
    const double span_x = config.space.width - 2.0 * r;
    const double span_y = config.space.depth - 2.0 * r;

    world.bubbles.reserve(static_cast<std::size_t>(config.bubbles.count));
    for (int id = 0; id < config.bubbles.count; ++id) {
        Bubble b;
        b.id = id;
        b.radius = r;
        b.center.x = r + world.rng.uniform() * span_x;
        b.center.y = r + world.rng.uniform() * span_y;
        b.center.z = world.altitude;
        const double heading = 2.0 * std::numbers::pi * world.rng.uniform();
        b.velocity = planar_velocity(world.speed, heading);
        b.chord = chords[static_cast<std::size_t>(id)];
        b.color = hue_for(b.chord, id);
        world.bubbles.push_back(std::move(b));
    }

    world.head.position = {world.play_space.width / 2.0, world.play_space.depth / 2.0, world.altitude};
    refresh_inside(world);
    return world;
}

void advance(WorldState& world, double dt) {
    if (!(dt >= 0.0) || !std::isfinite(dt)) throw std::invalid_argument("step: dt must be finite and >= 0");

    const double t_next = world.t + dt;
    const auto& space = world.play_space;

    const double redirect_p = world.redirect_rate > 0.0 ? 1.0 - std::exp(-world.redirect_rate * dt) : 0.0;

    for (auto& b : world.bubbles) {
        double x = b.center.x + b.velocity.x * dt;
        double y = b.center.y + b.velocity.y * dt;
        reflect_axis(x, b.velocity.x, b.radius, space.width - b.radius);
        reflect_axis(y, b.velocity.y, b.radius, space.depth - b.radius);
        b.center.x = x;
        b.center.y = y;

        if (redirect_p > 0.0 && world.rng.uniform() < redirect_p) {
            b.velocity = planar_velocity(world.speed, 2.0 * std::numbers::pi * world.rng.uniform());
        }
    }

    if (world.altitude_ramp) {
        const auto& ramp = *world.altitude_ramp;
        world.altitude = ramp.at(t_next);
        if (t_next >= ramp.t_start + ramp.duration) {
            world.altitude = ramp.target_z;
            world.altitude_ramp.reset();
        }
    }
    for (auto& b : world.bubbles) b.center.z = world.altitude;

    world.t = t_next;
    refresh_inside(world);
}

void refresh_inside(WorldState& world) {
    IdSet next;
    next.reserve(world.bubbles.size());
    for (const auto& b : world.bubbles) {
        const double d = distance(world.head.position, b.center);
        const bool was_inside = contains(world.inside_set, b.id);
        if (d < b.radius || (was_inside && d <= b.radius + kExitHysteresis)) next.push_back(b.id);
    }
    std::sort(next.begin(), next.end());
    world.inside_set = std::move(next);
}

Containment containment(const HeadPose& head, const Bubble& bubble) {
    const double d_norm = distance(head.position, bubble.center) / bubble.radius;
    return {d_norm < 1.0, d_norm};
}

std::vector<InteractionEvent> detect_events(const IdSet& prev_inside, const IdSet& cur_inside, double t,
                                            const std::vector<Bubble>& bubbles) {
    auto chord_of = [&](int id) -> std::string {
        for (const auto& b : bubbles)
            if (b.id == id) return b.chord;
        return {};
    };

    std::vector<InteractionEvent> events;
    auto p = prev_inside.begin();
    auto c = cur_inside.begin();
    while (p != prev_inside.end() || c != cur_inside.end()) {
        if (c == cur_inside.end() || (p != prev_inside.end() && *p < *c)) {
            events.push_back({t, EventKind::exit, *p, chord_of(*p)});
            ++p;
        } else if (p == prev_inside.end() || *c < *p) {
            events.push_back({t, EventKind::enter, *c, chord_of(*c)});
            events.push_back({t, EventKind::stroke, *c, chord_of(*c)});
            ++c;
        } else {
            ++p;
            ++c;
        }
    }
    return events;
}

std::vector<InteractionEvent> detect_events(const IdSet& prev_inside, const IdSet& cur_inside, double t) {
    return detect_events(prev_inside, cur_inside, t, {});
}

WorldState set_altitude(WorldState world, double z_target) {
    if (!(z_target >= kMinAltitude && z_target <= kMaxAltitude))
        throw std::invalid_argument("set_altitude: target must lie in [0.5, 2.5] m");
    if (z_target == world.altitude) {
        world.altitude_ramp.reset();
        return world;
    }
    world.altitude_ramp = AltitudeRamp{world.altitude, z_target, world.t, kAltitudeRampSeconds};
    return world;
}

}  // namespace orchestra
