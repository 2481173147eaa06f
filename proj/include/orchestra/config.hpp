#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace orchestra {

struct SpaceConfig {
    double width = 3.3;
    double depth = 3.3;
    double fence_height = 1.2;  // drawn only

    bool operator==(const SpaceConfig&) const = default;
};

struct BubbleConfig {
    int count = 10;
    double diameter = 0.8;
    double speed = 0.2;          // m/s, one meter every five seconds
    double altitude = 1.6;       // m, head level
    double redirect_rate = 0.0;  // Poisson heading changes per second, 0 = bounces only
    // Explicit id -> chord name mapping. Empty means the chord table order.
    std::vector<std::string> chords;

    bool operator==(const BubbleConfig&) const = default;
};

struct AudioConfig {
    int sample_rate = 48000;
    int block = 256;

    bool operator==(const AudioConfig&) const = default;
};

struct AccessibilityConfig {
    std::optional<double> height;  // starting altitude override, metres

    bool operator==(const AccessibilityConfig&) const = default;
};

struct SynthConfig {
    bool vibrato = false;  // 5 Hz, +/-6 cent

    bool operator==(const SynthConfig&) const = default;
};

inline constexpr std::uint64_t kDefaultSeed = 7;
inline constexpr double kMinAltitude = 0.5;
inline constexpr double kMaxAltitude = 2.5;

struct Config {
    SpaceConfig space;
    BubbleConfig bubbles;
    AudioConfig audio;
    std::optional<std::uint64_t> seed;
    std::map<std::string, std::vector<int>> chord_overrides;
    AccessibilityConfig accessibility;
    SynthConfig synth;

    double radius() const { return bubbles.diameter / 2.0; }
    double block_seconds() const {
        return static_cast<double>(audio.block) / static_cast<double>(audio.sample_rate);
    }
    double start_altitude() const { return accessibility.height.value_or(bubbles.altitude); }

    bool operator==(const Config&) const = default;
};

/// Throws ConfigError naming the first offending field.
void validate(const Config& config);

/// Chord name for every bubble id, honouring `bubbles.chords` and `chord_overrides`.
std::vector<std::string> bubble_chord_names(const Config& config);

}  // namespace orchestra
