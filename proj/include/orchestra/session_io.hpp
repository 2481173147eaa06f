#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "orchestra/config.hpp"
#include "orchestra/core_sim.hpp"

namespace orchestra {

// ---- configuration ---------------------------------------------------------

/// JSON config; absent fields keep their defaults. Throws ParseError (with the
/// line) on malformed JSON and ConfigError (with the field path) on bad values.
Config parse_config(std::string_view text);

/// Full JSON form of `config`; parse_config(config_to_json(c)) == c.
std::string config_to_json(const Config& config, int indent = 2);

// ---- movement traces -------------------------------------------------------

struct SessionTrace {
    std::vector<HeadPose> samples;  // strictly increasing t

    /// Linear position, shortest-arc yaw; clamps outside the sampled range.
    HeadPose pose_at(double t) const;
    double start_time() const { return samples.front().t; }
    double end_time() const { return samples.back().t; }
};

/// JSON Lines, one {t, x, y, z, yaw} object per line; blank lines are skipped.
SessionTrace load_trace(std::string_view text);

std::string trace_line(const HeadPose& pose);

/// Boustrophedon sweep of the play-space at `speed` m/s, sampled at `rate_hz`,
/// head at the configured bubble altitude, facing the direction of travel.
SessionTrace make_demo_trace(const Config& config, double duration, double rate_hz = 50.0, double speed = 1.0);
std::string write_trace(const SessionTrace& trace);

// ---- event logs ------------------------------------------------------------

using EventLog = std::vector<InteractionEvent>;

/// JSON Lines {t, kind, bubble_id, chord}.
std::string write_events(const EventLog& log);
EventLog parse_events(std::string_view text);

// ---- audio -----------------------------------------------------------------

inline constexpr std::size_t kWavHeaderBytes = 44;

/// round(s * 32767), clamped to the int16 range.
std::int16_t to_pcm16(float sample);

/// Appends little-endian PCM16 for interleaved samples.
void append_pcm16(std::vector<std::uint8_t>& out, std::span<const float> interleaved);

/// RIFF/WAVE, PCM 16-bit little-endian stereo.
std::vector<std::uint8_t> write_wav(std::span<const float> interleaved, int sample_rate);

// ---- offline rendering -----------------------------------------------------

struct SessionRender {
    std::vector<std::uint8_t> wav;
    EventLog events;
    std::size_t frames = 0;
};

/// Renders ceil(duration * rate / block) whole blocks. Uses config.seed, or
/// kDefaultSeed when unset. Throws std::invalid_argument for duration <= 0.
SessionRender render_session(const Config& config, const SessionTrace& trace, double duration);

}  // namespace orchestra
