#pragma once

#include <array>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace orchestra {

struct ChordSpec {
    std::string name;
    std::vector<int> notes;           // MIDI note numbers
    std::vector<double> fundamentals;  // Hz, one per note

    bool operator==(const ChordSpec&) const = default;
};

/// The ten chord names in table order; bubble ids 0..9 take them in this order.
const std::array<std::string, 10>& default_chord_names();

/// Built-in root-position voicing. Throws LookupError for unknown names.
ChordSpec chord_to_notes(std::string_view name);

/// Voicing lookup that consults `overrides` before the built-in table.
ChordSpec resolve_chord(std::string_view name, const std::map<std::string, std::vector<int>>& overrides);

ChordSpec make_chord(std::string name, std::vector<int> notes);

/// Equal temperament, A4 = 440 Hz. Throws std::invalid_argument outside [0, 127].
double midi_to_freq(int note);

inline constexpr int kCelloLowestNote = 36;
inline constexpr int kCelloHighestNote = 76;

struct StrokeEnvelope {
    double attack = 0.08;
    double decay = 0.15;
    double sustain_level = 0.8;
    double release = 0.12;
    double stroke_length = 2.5;
    double rebow_crossfade = 0.08;

    // Release used when the head leaves the bubble.
    double exit_release() const { return release < kExitReleaseCap ? release : kExitReleaseCap; }

    static constexpr double kExitReleaseCap = 0.05;
    bool operator==(const StrokeEnvelope&) const = default;
};

enum class EnvelopeStage { idle, attack, decay, sustain, release };

struct VoiceState {
    ChordSpec chord;
    StrokeEnvelope envelope;
    std::vector<double> phases;  // fundamental phase per note; partial k runs at k * phase
    EnvelopeStage stage = EnvelopeStage::idle;
    double stage_time = 0.0;
    double stroke_clock = 0.0;
    double gain = 1.0;
    double level = 0.0;       // last envelope output
    double ramp_from = 0.0;   // level when the current attack/release began
    double ramp_duration = 0.0;
    bool held = false;        // listener inside: re-bow keeps the tone going
    bool vibrato = false;
    double vibrato_phase = 0.0;
    double last_trigger_t = 0.0;

    bool operator==(const VoiceState&) const = default;
};

VoiceState make_voice(ChordSpec chord, bool vibrato = false, StrokeEnvelope envelope = {});

/// Starts a bow stroke from the current envelope level.
VoiceState trigger_stroke(VoiceState voice, double t);

/// Fades to silence within the exit release (at most 50 ms).
VoiceState release_stroke(VoiceState voice, double t);

struct RenderedVoice {
    std::vector<float> samples;
    VoiceState voice;
};

RenderedVoice render_voice(VoiceState voice, int nframes, int sample_rate);

/// In-place variant used by the block renderer; overwrites `out`.
void render_voice_into(VoiceState& voice, std::span<float> out, int sample_rate);

/// Envelope output only, advancing the same state machine render_voice uses.
std::vector<double> render_envelope(VoiceState& voice, int nframes, int sample_rate);

struct Partial {
    int note = 0;
    int harmonic = 1;
    double frequency = 0.0;  // highest instantaneous frequency, including vibrato excursion
    double amplitude = 0.0;
};

/// K = floor((sample_rate / 2 - 1) / f0).
int harmonic_count(double f0, int sample_rate);

/// Every partial render_voice will synthesise for `chord`.
std::vector<Partial> partial_table(const ChordSpec& chord, int sample_rate, bool vibrato = false);

inline constexpr double kVibratoRateHz = 5.0;
inline constexpr double kVibratoCents = 6.0;

}  // namespace orchestra
