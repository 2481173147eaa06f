#pragma once

#include <span>
#include <vector>

#include "orchestra/core_sim.hpp"
#include "orchestra/synth.hpp"

namespace orchestra {

inline constexpr double kRearDamping = 0.8;
inline constexpr double kVoiceHeadroom = 0.25;
inline constexpr double kLimiterReleaseSeconds = 0.05;

struct SpatialGains {
    double distance_gain = 0.0;
    double left = 0.0;
    double right = 0.0;
};

struct PanGains {
    double left = 0.0;
    double right = 0.0;
};

/// Interleaved stereo, samples in [-1, 1] once limited.
struct AudioBlock {
    int nframes = 0;
    int sample_rate = 48000;
    std::vector<float> samples;

    AudioBlock() = default;
    AudioBlock(int frames, int rate)
        : nframes(frames), sample_rate(rate), samples(static_cast<std::size_t>(frames) * 2, 0.0f) {}

    float left(int frame) const { return samples[static_cast<std::size_t>(frame) * 2]; }
    float right(int frame) const { return samples[static_cast<std::size_t>(frame) * 2 + 1]; }
    bool operator==(const AudioBlock&) const = default;
};

/// sqrt(max(0, 1 - d / r)): unity at the centre, silent at and beyond the surface.
double gain_from_distance(double d, double r);

/// Horizontal angle of `source` relative to the facing direction, positive to the right.
double azimuth(const HeadPose& head, const Vec3& source);

/// Constant-power law; rear azimuths clamp to the nearer side.
PanGains pan_gains(double az);

SpatialGains spatial_gains(const HeadPose& head, const Bubble& bubble);

/// Peak limiter: instant attack, linear gain recovery over 50 ms.
class Limiter {
public:
    explicit Limiter(int sample_rate = 48000);
    void process(std::span<float> interleaved);
    double gain() const { return gain_; }
    bool operator==(const Limiter&) const = default;

private:
    double gain_ = 1.0;
    double release_step_ = 0.0;
};

struct VoiceInput {
    std::span<const float> mono;
    SpatialGains gains;
};

/// Throws std::invalid_argument if any input length differs from `nframes`.
AudioBlock mix_and_limit(std::span<const VoiceInput> inputs, int nframes, int sample_rate, Limiter& limiter);
AudioBlock mix_and_limit(std::span<const VoiceInput> inputs, int nframes, int sample_rate = 48000);

/// Voices indexed by bubble id.
std::vector<VoiceState> make_voices(const WorldState& world, const Config& config);

/// Updates envelopes from the inside set, renders every sounding voice with
/// gains taken from the geometry at block start, then mixes and limits.
AudioBlock render_block_into(const WorldState& world, std::vector<VoiceState>& voices, Limiter& limiter, int nframes,
                             int sample_rate);

struct BlockRender {
    AudioBlock block;
    std::vector<VoiceState> voices;
    Limiter limiter;
};

BlockRender render_block(const WorldState& world, std::vector<VoiceState> voices, Limiter limiter, int nframes,
                         int sample_rate);

}  // namespace orchestra
