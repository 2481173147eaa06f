#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "orchestra/config.hpp"
#include "orchestra/rng.hpp"
#include "orchestra/vec.hpp"

namespace orchestra {

/// Exit hysteresis: a bubble already containing the head only releases it once
/// the head is this far past the radius.
inline constexpr double kExitHysteresis = 0.02;

struct PlaySpace {
    double width = 3.3;
    double depth = 3.3;
    double fence_height = 1.2;

    Vec2 center_marker() const { return {width / 2.0, depth / 2.0}; }
    bool operator==(const PlaySpace&) const = default;
};

struct Bubble {
    int id = 0;
    Vec3 center;
    Vec3 velocity;  // z is always 0
    double radius = 0.4;
    std::string chord;
    int color = 0;  // hue index 0..9

    bool operator==(const Bubble&) const = default;
};

/// Listener pose. Yaw 0 faces +y, counter-clockwise positive, kept in (-pi, pi].
struct HeadPose {
    Vec3 position;
    double yaw = 0.0;
    double t = 0.0;

    bool operator==(const HeadPose&) const = default;
};

struct AltitudeRamp {
    double start_z = 0.0;
    double target_z = 0.0;
    double t_start = 0.0;
    double duration = 1.0;

    double at(double t) const;
    bool operator==(const AltitudeRamp&) const = default;
};

/// Sorted ascending, no duplicates.
using IdSet = std::vector<int>;

struct WorldState {
    PlaySpace play_space;
    std::vector<Bubble> bubbles;
    HeadPose head;
    IdSet inside_set;
    double altitude = 1.6;
    std::optional<AltitudeRamp> altitude_ramp;
    double speed = 0.2;
    double redirect_rate = 0.0;
    Xoshiro256 rng;
    double t = 0.0;

    bool operator==(const WorldState&) const = default;
};

enum class EventKind { enter, exit, stroke };

const char* to_string(EventKind kind);
EventKind event_kind_from_string(const std::string& s);  // throws std::invalid_argument

struct InteractionEvent {
    double t = 0.0;
    EventKind kind = EventKind::enter;
    int bubble_id = 0;
    std::string chord;

    bool operator==(const InteractionEvent&) const = default;
};

struct Containment {
    bool inside = false;
    double d_norm = 0.0;
};

/// Wraps an angle into (-pi, pi].
double normalize_angle(double radians);

WorldState init_world(const Config& config, std::uint64_t seed);

/// Advances kinematics, the altitude ramp and the inside set by `dt` seconds.
/// Throws std::invalid_argument for dt < 0.
void advance(WorldState& world, double dt);

inline WorldState step(WorldState world, double dt) {
    advance(world, dt);
    return world;
}

/// Recomputes `inside_set` against `world.head` (enter at d < r, exit at d > r + hysteresis).
void refresh_inside(WorldState& world);

Containment containment(const HeadPose& head, const Bubble& bubble);

std::vector<InteractionEvent> detect_events(const IdSet& prev_inside, const IdSet& cur_inside, double t,
                                            const std::vector<Bubble>& bubbles);

/// Variant without chord names, for callers that only need the kinds and ids.
std::vector<InteractionEvent> detect_events(const IdSet& prev_inside, const IdSet& cur_inside, double t);

/// Ramps every bubble's altitude to `z_target` over one simulated second.
/// Throws std::invalid_argument outside [0.5, 2.5] m.
WorldState set_altitude(WorldState world, double z_target);

inline constexpr double kAltitudeRampSeconds = 1.0;

}  // namespace orchestra
