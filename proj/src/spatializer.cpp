#include "orchestra/spatializer.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace orchestra {

double gain_from_distance(double d, double r) {
    if (r <= 0.0) return 0.0;
    return std::sqrt(std::max(0.0, 1.0 - d / r));
}

double azimuth(const HeadPose& head, const Vec3& source) {
    const double dx = source.x - head.position.x;
    const double dy = source.y - head.position.y;
    if (dx == 0.0 && dy == 0.0) return 0.0;
    // Facing (-sin yaw, cos yaw); right-hand side (cos yaw, sin yaw).
    const double s = std::sin(head.yaw);
    const double c = std::cos(head.yaw);
    const double forward = -s * dx + c * dy;
    const double right = c * dx + s * dy;
    return normalize_angle(std::atan2(right, forward));
}

PanGains pan_gains(double az) {
    constexpr double half_pi = std::numbers::pi / 2.0;
    const double theta = (std::clamp(az, -half_pi, half_pi) + half_pi) / 2.0;
    return {std::cos(theta), std::sin(theta)};
}

SpatialGains spatial_gains(const HeadPose& head, const Bubble& bubble) {
    const double az = azimuth(head, bubble.center);
    const auto pan = pan_gains(az);
    double g = gain_from_distance(distance(head.position, bubble.center), bubble.radius);
    if (std::abs(az) > std::numbers::pi / 2.0) g *= kRearDamping;
    return {g, pan.left, pan.right};
}

Limiter::Limiter(int sample_rate) : release_step_(1.0 / (kLimiterReleaseSeconds * sample_rate)) {}

void Limiter::process(std::span<float> interleaved) {
    for (std::size_t i = 0; i + 1 < interleaved.size(); i += 2) {
        const double peak = std::max(std::abs(static_cast<double>(interleaved[i])),
                                     std::abs(static_cast<double>(interleaved[i + 1])));
        gain_ = std::min(1.0, gain_ + release_step_);
        if (peak * gain_ > 1.0) gain_ = 1.0 / peak;
        interleaved[i] = std::clamp(static_cast<float>(interleaved[i] * gain_), -1.0f, 1.0f);
        interleaved[i + 1] = std::clamp(static_cast<float>(interleaved[i + 1] * gain_), -1.0f, 1.0f);
    }
}

AudioBlock mix_and_limit(std::span<const VoiceInput> inputs, int nframes, int sample_rate, Limiter& limiter) {
    for (const auto& in : inputs) {
        if (in.mono.size() != static_cast<std::size_t>(nframes))
            throw std::invalid_argument("mix_and_limit: voice block size differs from nframes");
    }
    AudioBlock block(nframes, sample_rate);
    std::vector<double> left(static_cast<std::size_t>(nframes), 0.0);
    std::vector<double> right(static_cast<std::size_t>(nframes), 0.0);
    for (const auto& in : inputs) {
        const double gl = kVoiceHeadroom * in.gains.distance_gain * in.gains.left;
        const double gr = kVoiceHeadroom * in.gains.distance_gain * in.gains.right;
        if (gl == 0.0 && gr == 0.0) continue;
        for (std::size_t i = 0; i < in.mono.size(); ++i) {
            left[i] += gl * in.mono[i];
            right[i] += gr * in.mono[i];
        }
    }
    for (std::size_t i = 0; i < left.size(); ++i) {
        block.samples[2 * i] = static_cast<float>(left[i]);
        block.samples[2 * i + 1] = static_cast<float>(right[i]);
    }
    limiter.process(block.samples);
    return block;
}

AudioBlock mix_and_limit(std::span<const VoiceInput> inputs, int nframes, int sample_rate) {
    Limiter limiter(sample_rate);
    return mix_and_limit(inputs, nframes, sample_rate, limiter);
}

std::vector<VoiceState> make_voices(const WorldState& world, const Config& config) {
    std::vector<VoiceState> voices;
    voices.reserve(world.bubbles.size());
    for (const auto& b : world.bubbles) {
        voices.push_back(make_voice(resolve_chord(b.chord, config.chord_overrides), config.synth.vibrato));
    }
    return voices;
}

AudioBlock render_block_into(const WorldState& world, std::vector<VoiceState>& voices, Limiter& limiter, int nframes,
                             int sample_rate) {
    std::vector<std::vector<float>> buffers;
    std::vector<SpatialGains> gains;
    buffers.reserve(world.bubbles.size());

    for (const auto& b : world.bubbles) {
        if (b.id < 0 || static_cast<std::size_t>(b.id) >= voices.size()) continue;
        auto& voice = voices[static_cast<std::size_t>(b.id)];
        const bool inside = std::binary_search(world.inside_set.begin(), world.inside_set.end(), b.id);
        if (inside && !voice.held) voice = trigger_stroke(std::move(voice), world.t);
        if (!inside && voice.held) voice = release_stroke(std::move(voice), world.t);
        if (voice.stage == EnvelopeStage::idle) continue;

        auto& buf = buffers.emplace_back(static_cast<std::size_t>(nframes), 0.0f);
        render_voice_into(voice, buf, sample_rate);
        gains.push_back(spatial_gains(world.head, b));
    }

    std::vector<VoiceInput> inputs;
    inputs.reserve(buffers.size());
    for (std::size_t i = 0; i < buffers.size(); ++i) inputs.push_back({buffers[i], gains[i]});
    return mix_and_limit(inputs, nframes, sample_rate, limiter);
}

BlockRender render_block(const WorldState& world, std::vector<VoiceState> voices, Limiter limiter, int nframes,
                         int sample_rate) {
    auto block = render_block_into(world, voices, limiter, nframes, sample_rate);
    return {std::move(block), std::move(voices), limiter};
}

}  // namespace orchestra
