#include "orchestra/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "orchestra/errors.hpp"

namespace orchestra {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Voicing {
    const char* name;
    std::initializer_list<int> notes;
};

// Root position; roots E..B in octave 2, C and D in octave 3.
const std::array<Voicing, 10> kVoicings = {{
    {"EMaj", {40, 44, 47}},
    {"Em", {40, 43, 47}},
    {"FMaj7", {41, 45, 48, 52}},
    {"GMaj", {43, 47, 50}},
    {"G7", {43, 47, 50, 53}},
    {"Am", {45, 48, 52}},
    {"Bdim", {47, 50, 53}},
    {"Bm5", {47, 50, 54}},  // read as B minor
    {"Cmaj", {48, 52, 55}},
    {"Dm", {50, 53, 57}},
}};

double vibrato_ratio_max() { return std::exp2(kVibratoCents / 1200.0); }

void start_attack(VoiceState& v, double duration) {
    v.ramp_from = v.level;
    v.ramp_duration = duration;
    v.stage = EnvelopeStage::attack;
    v.stage_time = 0.0;
    v.stroke_clock = 0.0;
}

// Output for the current sample, then advance by dt. Stage boundaries allow
// half a sample of slack so accumulated stage_time cannot leave a stray sample.
double envelope_tick(VoiceState& v, double dt) {
    const auto& e = v.envelope;
    const double slack = 0.5 * dt;
    if (v.held && v.stroke_clock >= e.stroke_length) start_attack(v, e.rebow_crossfade);

    double out = 0.0;
    switch (v.stage) {
        case EnvelopeStage::idle:
            out = 0.0;
            break;
        case EnvelopeStage::attack:
            out = v.ramp_from + (1.0 - v.ramp_from) * std::min(1.0, v.stage_time / v.ramp_duration);
            break;
        case EnvelopeStage::decay:
            out = 1.0 - (1.0 - e.sustain_level) * std::min(1.0, v.stage_time / e.decay);
            break;
        case EnvelopeStage::sustain:
            out = e.sustain_level;
            break;
        case EnvelopeStage::release:
            out = v.stage_time + slack >= v.ramp_duration ? 0.0 : v.ramp_from * (1.0 - v.stage_time / v.ramp_duration);
            break;
    }
    v.level = out;

    v.stage_time += dt;
    if (v.held) v.stroke_clock += dt;

    switch (v.stage) {
        case EnvelopeStage::attack:
            if (v.stage_time + slack >= v.ramp_duration) {
                v.stage = EnvelopeStage::decay;
                v.stage_time = 0.0;
            }
            break;
        case EnvelopeStage::decay:
            if (v.stage_time + slack >= e.decay) {
                v.stage = EnvelopeStage::sustain;
                v.stage_time = 0.0;
            }
            break;
        case EnvelopeStage::release:
            if (v.stage_time + slack >= v.ramp_duration) {
                v.stage = EnvelopeStage::idle;
                v.stage_time = 0.0;
                v.level = 0.0;
            }
            break;
        default:
            break;
    }
    return out;
}

// sum_{k=1..K} sin(k * phase) / k for four phases at once, via the Chebyshev
// recurrence sin((k+1)x) = 2 cos(x) sin(kx) - sin((k-1)x).
void saw_sum4(const double* phase, const double* inv_k, int harmonics, double* out) {
    double prev[4] = {0.0, 0.0, 0.0, 0.0};
    double cur[4];
    double twice_cos[4];
    double acc[4];
    for (int j = 0; j < 4; ++j) {
        cur[j] = std::sin(phase[j]);
        twice_cos[j] = 2.0 * std::cos(phase[j]);
        acc[j] = cur[j];
    }
    for (int k = 2; k <= harmonics; ++k) {
        const double w = inv_k[k];
        for (int j = 0; j < 4; ++j) {
            const double next = twice_cos[j] * cur[j] - prev[j];
            prev[j] = cur[j];
            cur[j] = next;
            acc[j] += next * w;
        }
    }
    for (int j = 0; j < 4; ++j) out[j] = acc[j];
}

const std::vector<double>& inverse_table(int harmonics) {
    static thread_local std::vector<double> table;
    if (static_cast<int>(table.size()) <= harmonics) {
        const auto old = table.size();
        table.resize(static_cast<std::size_t>(harmonics) + 1);
        for (auto k = std::max<std::size_t>(old, 1); k < table.size(); ++k) table[k] = 1.0 / static_cast<double>(k);
    }
    return table;
}

}  // namespace

const std::array<std::string, 10>& default_chord_names() {
    static const std::array<std::string, 10> names = [] {
        std::array<std::string, 10> out;
        for (std::size_t i = 0; i < kVoicings.size(); ++i) out[i] = kVoicings[i].name;
        return out;
    }();
    return names;
}

double midi_to_freq(int note) {
    if (note < 0 || note > 127) throw std::invalid_argument("midi_to_freq: note out of range [0, 127]");
    return 440.0 * std::exp2((note - 69) / 12.0);
}

ChordSpec make_chord(std::string name, std::vector<int> notes) {
    ChordSpec spec;
    spec.name = std::move(name);
    spec.fundamentals.reserve(notes.size());
    for (int n : notes) spec.fundamentals.push_back(midi_to_freq(n));
    spec.notes = std::move(notes);
    return spec;
}

ChordSpec chord_to_notes(std::string_view name) {
    for (const auto& v : kVoicings) {
        if (name == v.name) return make_chord(v.name, std::vector<int>(v.notes));
    }
    throw LookupError("unknown chord '" + std::string(name) + "'");
}

ChordSpec resolve_chord(std::string_view name, const std::map<std::string, std::vector<int>>& overrides) {
    if (const auto it = overrides.find(std::string(name)); it != overrides.end()) return make_chord(it->first, it->second);
    return chord_to_notes(name);
}

VoiceState make_voice(ChordSpec chord, bool vibrato, StrokeEnvelope envelope) {
    VoiceState v;
    v.phases.assign(chord.notes.size(), 0.0);
    v.chord = std::move(chord);
    v.envelope = envelope;
    v.vibrato = vibrato;
    return v;
}

VoiceState trigger_stroke(VoiceState voice, double t) {
    start_attack(voice, voice.envelope.attack);
    voice.held = true;
    voice.last_trigger_t = t;
    return voice;
}

VoiceState release_stroke(VoiceState voice, double /*t*/) {
    voice.held = false;
    if (voice.stage == EnvelopeStage::idle) return voice;
    if (voice.level <= 0.0) {
        voice.stage = EnvelopeStage::idle;
        voice.level = 0.0;
        return voice;
    }
    voice.ramp_from = voice.level;
    voice.ramp_duration = voice.envelope.exit_release();
    voice.stage = EnvelopeStage::release;
    voice.stage_time = 0.0;
    return voice;
}

int harmonic_count(double f0, int sample_rate) {
    if (f0 <= 0.0) return 0;
    return static_cast<int>(std::floor((sample_rate / 2.0 - 1.0) / f0));
}

std::vector<Partial> partial_table(const ChordSpec& chord, int sample_rate, bool vibrato) {
    const double excursion = vibrato ? vibrato_ratio_max() : 1.0;
    std::vector<Partial> partials;
    for (std::size_t n = 0; n < chord.fundamentals.size(); ++n) {
        const double f_max = chord.fundamentals[n] * excursion;
        const int k_max = harmonic_count(f_max, sample_rate);
        for (int k = 1; k <= k_max; ++k) {
            partials.push_back({chord.notes[n], k, f_max * k, 1.0 / k});
        }
    }
    return partials;
}

std::vector<double> render_envelope(VoiceState& voice, int nframes, int sample_rate) {
    std::vector<double> out(static_cast<std::size_t>(std::max(nframes, 0)));
    const double dt = 1.0 / sample_rate;
    for (auto& s : out) s = envelope_tick(voice, dt);
    return out;
}

void render_voice_into(VoiceState& voice, std::span<float> out, int sample_rate) {
    const auto nframes = static_cast<int>(out.size());
    const double dt = 1.0 / sample_rate;

    std::vector<double> env(out.size());
    bool silent = true;
    for (auto& e : env) {
        e = envelope_tick(voice, dt);
        silent = silent && e == 0.0;
    }

    const std::size_t note_count = voice.chord.fundamentals.size();
    if (voice.phases.size() != note_count) voice.phases.assign(note_count, 0.0);

    // Per-sample phase for every note; also advances the stored phases.
    const double vib_depth = kVibratoCents / 1200.0;
    std::vector<double> ratio(out.size(), 1.0);
    if (voice.vibrato) {
        for (auto& r : ratio) {
            r = std::exp2(vib_depth * std::sin(voice.vibrato_phase));
            voice.vibrato_phase = std::fmod(voice.vibrato_phase + kTwoPi * kVibratoRateHz * dt, kTwoPi);
        }
    }

    std::vector<double> mix(out.size(), 0.0);
    std::vector<double> phase(static_cast<std::size_t>(nframes) + 3, 0.0);
    const double note_gain = note_count > 0 ? 1.0 / (2.0 * static_cast<double>(note_count)) : 0.0;
    const double excursion = voice.vibrato ? vibrato_ratio_max() : 1.0;

    for (std::size_t n = 0; n < note_count; ++n) {
        const double f0 = voice.chord.fundamentals[n];
        const double inc = kTwoPi * f0 * dt;
        double ph = voice.phases[n];
        for (int i = 0; i < nframes; ++i) {
            phase[static_cast<std::size_t>(i)] = ph;
            ph += inc * ratio[static_cast<std::size_t>(i)];
            if (ph >= kTwoPi) ph -= kTwoPi;
        }
        voice.phases[n] = ph;
        if (silent) continue;

        const int harmonics = harmonic_count(f0 * excursion, sample_rate);
        const auto& inv_k = inverse_table(harmonics);
        double chunk[4];
        for (int i = 0; i < nframes; i += 4) {
            saw_sum4(&phase[static_cast<std::size_t>(i)], inv_k.data(), harmonics, chunk);
            for (int j = 0; j < 4 && i + j < nframes; ++j) mix[static_cast<std::size_t>(i + j)] += note_gain * chunk[j];
        }
    }

    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = silent ? 0.0f : static_cast<float>(voice.gain * env[i] * mix[i]);
    }
}

RenderedVoice render_voice(VoiceState voice, int nframes, int sample_rate) {
    RenderedVoice result;
    result.samples.assign(static_cast<std::size_t>(std::max(nframes, 0)), 0.0f);
    render_voice_into(voice, result.samples, sample_rate);
    result.voice = std::move(voice);
    return result;
}

}  // namespace orchestra
