#include "orchestra/config.hpp"

#include <cmath>
#include <string>

#include "orchestra/errors.hpp"
#include "orchestra/synth.hpp"

namespace orchestra {
namespace {

void require_positive(double value, const char* field) {
    if (!(value > 0.0) || !std::isfinite(value)) throw ConfigError(field, "must be a positive number");
}

bool is_power_of_two(int v) { return v > 0 && (v & (v - 1)) == 0; }

}  // namespace

void validate(const Config& c) {
    require_positive(c.space.width, "space.width");
    require_positive(c.space.depth, "space.depth");
    require_positive(c.space.fence_height, "space.fence_height");

    if (c.bubbles.count < 1) throw ConfigError("bubbles.count", "must be at least 1");
    require_positive(c.bubbles.diameter, "bubbles.diameter");
    if (c.bubbles.diameter > c.space.width || c.bubbles.diameter > c.space.depth)
        throw ConfigError("bubbles.diameter", "bubble does not fit inside the play-space");
    // Zero is allowed: stationary bubbles.
    if (!(c.bubbles.speed >= 0.0) || !std::isfinite(c.bubbles.speed))
        throw ConfigError("bubbles.speed", "must be a non-negative number");
    if (!(c.bubbles.altitude >= kMinAltitude && c.bubbles.altitude <= kMaxAltitude))
        throw ConfigError("bubbles.altitude", "must lie in [0.5, 2.5] m");
    if (!(c.bubbles.redirect_rate >= 0.0) || !std::isfinite(c.bubbles.redirect_rate))
        throw ConfigError("bubbles.redirect_rate", "must be a non-negative number");

    if (c.audio.sample_rate < 8000 || c.audio.sample_rate > 192000)
        throw ConfigError("audio.sample_rate", "must lie in [8000, 192000] Hz");
    if (!is_power_of_two(c.audio.block) || c.audio.block < 64 || c.audio.block > 4096)
        throw ConfigError("audio.block", "must be a power of two in [64, 4096]");

    if (c.accessibility.height) {
        const double h = *c.accessibility.height;
        if (!(h >= kMinAltitude && h <= kMaxAltitude))
            throw ConfigError("accessibility.height", "must lie in [0.5, 2.5] m");
    }

    for (const auto& [name, notes] : c.chord_overrides) {
        const std::string field = "chord_overrides." + name;
        if (name.empty()) throw ConfigError("chord_overrides", "chord name must not be empty");
        if (notes.empty()) throw ConfigError(field, "needs at least one note");
        for (int n : notes)
            if (n < 0 || n > 127) throw ConfigError(field, "MIDI notes must lie in [0, 127]");
    }

    bubble_chord_names(c);
}

std::vector<std::string> bubble_chord_names(const Config& c) {
    const auto count = static_cast<std::size_t>(c.bubbles.count);
    if (!c.bubbles.chords.empty()) {
        if (c.bubbles.chords.size() < count)
            throw ConfigError("bubbles.chords", "needs one chord per bubble (" + std::to_string(count) + ")");
        std::vector<std::string> names(c.bubbles.chords.begin(), c.bubbles.chords.begin() + static_cast<long>(count));
        for (const auto& name : names) {
            try {
                resolve_chord(name, c.chord_overrides);
            } catch (const LookupError&) {
                throw ConfigError("bubbles.chords", "unknown chord '" + name + "'");
            }
        }
        return names;
    }
    const auto& defaults = default_chord_names();
    if (count > defaults.size())
        throw ConfigError("bubbles.count",
                          "exceeds the " + std::to_string(defaults.size()) + "-entry chord table; set bubbles.chords");
    return {defaults.begin(), defaults.begin() + static_cast<long>(count)};
}

}  // namespace orchestra
