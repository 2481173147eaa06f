#pragma once

#include <cstdint>
#include <vector>

#include "orchestra/config.hpp"
#include "orchestra/core_sim.hpp"
#include "orchestra/spatializer.hpp"

namespace orchestra {

/// One instrument session: world, voices and limiter stepped one audio block
/// at a time. The offline renderer and the live server both drive this class,
/// so a recorded trace replays through exactly the same arithmetic.
///
/// Call order per block k: render() the block at the current time, then
/// advance() to the next block boundary with the head pose for that time.
class Engine {
public:
    Engine(Config config, std::uint64_t seed, const HeadPose& initial_head);

    const WorldState& world() const { return world_; }
    const Config& config() const { return config_; }
    const std::vector<VoiceState>& voices() const { return voices_; }
    std::uint64_t seed() const { return seed_; }

    int block_frames() const { return config_.audio.block; }
    int sample_rate() const { return config_.audio.sample_rate; }
    double block_seconds() const { return dt_; }

    /// Time of the next block boundary, computed exactly as advance() will.
    double next_time() const { return world_.t + dt_; }

    AudioBlock render();

    /// Moves the head to `head` and steps one block. Returns the events at the new time.
    std::vector<InteractionEvent> advance(const HeadPose& head);

    /// Events produced when the head was first placed (t = 0).
    const std::vector<InteractionEvent>& initial_events() const { return initial_events_; }

    /// Starts an accessibility altitude ramp. Throws std::invalid_argument out of range.
    void set_altitude(double z_target);

private:
    Config config_;
    std::uint64_t seed_;
    double dt_;
    WorldState world_;
    std::vector<VoiceState> voices_;
    Limiter limiter_;
    std::vector<InteractionEvent> initial_events_;
};

}  // namespace orchestra
