#include "orchestra/session_io.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

#include <json.hpp>

#include "orchestra/engine.hpp"
#include "orchestra/errors.hpp"

namespace orchestra {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

std::size_t line_of_offset(std::string_view text, std::size_t byte) {
    const auto end = std::min(byte, text.size());
    return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<long>(end), '\n'));
}

std::string join_path(const std::string& prefix, const std::string& key) {
    return prefix.empty() ? key : prefix + "." + key;
}

const json& object_at(const json& parent, const char* key, const std::string& path) {
    const auto& v = parent.at(key);
    if (!v.is_object()) throw ConfigError(path, "must be an object");
    return v;
}

void reject_unknown(const json& obj, const std::set<std::string>& known, const std::string& prefix) {
    for (const auto& [key, value] : obj.items()) {
        (void)value;
        if (!known.count(key)) throw ConfigError(join_path(prefix, key), "unknown field");
    }
}

void read_number(const json& obj, const char* key, const std::string& prefix, double& out) {
    if (!obj.contains(key)) return;
    const auto& v = obj.at(key);
    if (!v.is_number()) throw ConfigError(join_path(prefix, key), "must be a number");
    out = v.get<double>();
}

void read_int(const json& obj, const char* key, const std::string& prefix, int& out) {
    if (!obj.contains(key)) return;
    const auto& v = obj.at(key);
    const auto path = join_path(prefix, key);
    if (!v.is_number_integer()) throw ConfigError(path, "must be an integer");
    const auto value = v.get<long long>();
    if (value < std::numeric_limits<int>::min() || value > std::numeric_limits<int>::max())
        throw ConfigError(path, "out of range");
    out = static_cast<int>(value);
}

double require_field(const json& obj, const char* key, std::size_t line) {
    if (!obj.contains(key)) throw ParseError(line, std::string("missing field '") + key + "'");
    const auto& v = obj.at(key);
    if (!v.is_number()) throw ParseError(line, std::string("field '") + key + "' must be a number");
    return v.get<double>();
}

template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        auto line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        const bool blank = std::all_of(line.begin(), line.end(), [](char ch) { return ch == ' ' || ch == '\t'; });
        if (!blank) fn(line, line_no);
        if (nl == std::string_view::npos) break;
        pos = nl + 1;
    }
}

json parse_line_object(std::string_view line, std::size_t line_no) {
    json obj;
    try {
        obj = json::parse(line);
    } catch (const json::parse_error& e) {
        throw ParseError(line_no, std::string("malformed JSON: ") + e.what());
    }
    if (!obj.is_object()) throw ParseError(line_no, "expected a JSON object");
    return obj;
}

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xff));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}

void put_tag(std::vector<std::uint8_t>& out, const char (&tag)[5]) { out.insert(out.end(), tag, tag + 4); }

}  // namespace

Config parse_config(std::string_view text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(line_of_offset(text, e.byte == 0 ? 0 : e.byte - 1), std::string("malformed JSON: ") + e.what());
    }
    if (!root.is_object()) throw ConfigError("", "config must be a JSON object");

    Config c;
    try {
        reject_unknown(root, {"space", "bubbles", "audio", "seed", "chord_overrides", "accessibility", "synth"}, "");

        if (root.contains("space")) {
            const auto& s = object_at(root, "space", "space");
            reject_unknown(s, {"width", "depth", "fence_height"}, "space");
            read_number(s, "width", "space", c.space.width);
            read_number(s, "depth", "space", c.space.depth);
            read_number(s, "fence_height", "space", c.space.fence_height);
        }
        if (root.contains("bubbles")) {
            const auto& b = object_at(root, "bubbles", "bubbles");
            reject_unknown(b, {"count", "diameter", "speed", "altitude", "redirect_rate", "chords"}, "bubbles");
            read_int(b, "count", "bubbles", c.bubbles.count);
            read_number(b, "diameter", "bubbles", c.bubbles.diameter);
            read_number(b, "speed", "bubbles", c.bubbles.speed);
            read_number(b, "altitude", "bubbles", c.bubbles.altitude);
            read_number(b, "redirect_rate", "bubbles", c.bubbles.redirect_rate);
            if (b.contains("chords")) {
                const auto& list = b.at("chords");
                if (!list.is_array()) throw ConfigError("bubbles.chords", "must be an array of chord names");
                for (const auto& name : list) {
                    if (!name.is_string()) throw ConfigError("bubbles.chords", "must be an array of chord names");
                    c.bubbles.chords.push_back(name.get<std::string>());
                }
            }
        }
        if (root.contains("audio")) {
            const auto& a = object_at(root, "audio", "audio");
            reject_unknown(a, {"sample_rate", "block"}, "audio");
            read_int(a, "sample_rate", "audio", c.audio.sample_rate);
            read_int(a, "block", "audio", c.audio.block);
        }
        if (root.contains("seed")) {
            const auto& s = root.at("seed");
            if (!s.is_number_unsigned()) throw ConfigError("seed", "must be a non-negative integer");
            c.seed = s.get<std::uint64_t>();
        }
        if (root.contains("chord_overrides")) {
            const auto& o = object_at(root, "chord_overrides", "chord_overrides");
            for (const auto& [name, notes] : o.items()) {
                const auto path = "chord_overrides." + name;
                if (!notes.is_array()) throw ConfigError(path, "must be an array of MIDI note numbers");
                std::vector<int> list;
                for (const auto& n : notes) {
                    if (!n.is_number_integer()) throw ConfigError(path, "must be an array of MIDI note numbers");
                    list.push_back(n.get<int>());
                }
                c.chord_overrides[name] = std::move(list);
            }
        }
        if (root.contains("accessibility")) {
            const auto& a = object_at(root, "accessibility", "accessibility");
            reject_unknown(a, {"height"}, "accessibility");
            if (a.contains("height") && !a.at("height").is_null()) {
                double h = 0.0;
                read_number(a, "height", "accessibility", h);
                c.accessibility.height = h;
            }
        }
        if (root.contains("synth")) {
            const auto& s = object_at(root, "synth", "synth");
            reject_unknown(s, {"vibrato"}, "synth");
            if (s.contains("vibrato")) {
                if (!s.at("vibrato").is_boolean()) throw ConfigError("synth.vibrato", "must be a boolean");
                c.synth.vibrato = s.at("vibrato").get<bool>();
            }
        }
    } catch (const json::exception& e) {
        throw ConfigError("", e.what());
    }

    validate(c);
    return c;
}

std::string config_to_json(const Config& c, int indent) {
    ordered_json j;
    j["space"] = {{"width", c.space.width}, {"depth", c.space.depth}, {"fence_height", c.space.fence_height}};
    ordered_json bubbles = {{"count", c.bubbles.count},
                            {"diameter", c.bubbles.diameter},
                            {"speed", c.bubbles.speed},
                            {"altitude", c.bubbles.altitude},
                            {"redirect_rate", c.bubbles.redirect_rate}};
    if (!c.bubbles.chords.empty()) bubbles["chords"] = c.bubbles.chords;
    j["bubbles"] = bubbles;
    j["audio"] = {{"sample_rate", c.audio.sample_rate}, {"block", c.audio.block}};
    if (c.seed) j["seed"] = *c.seed;
    ordered_json overrides = ordered_json::object();
    for (const auto& [name, notes] : c.chord_overrides) overrides[name] = notes;
    j["chord_overrides"] = overrides;
    ordered_json access = ordered_json::object();
    if (c.accessibility.height) access["height"] = *c.accessibility.height;
    j["accessibility"] = access;
    j["synth"] = {{"vibrato", c.synth.vibrato}};
    return j.dump(indent);
}

HeadPose SessionTrace::pose_at(double t) const {
    if (samples.empty()) throw std::logic_error("pose_at on an empty trace");
    HeadPose out;
    if (t <= samples.front().t) {
        out = samples.front();
    } else if (t >= samples.back().t) {
        out = samples.back();
    } else {
        const auto hi = std::upper_bound(samples.begin(), samples.end(), t,
                                         [](double value, const HeadPose& p) { return value < p.t; });
        const auto& b = *hi;
        const auto& a = *(hi - 1);
        const double alpha = (t - a.t) / (b.t - a.t);
        out.position = a.position + (b.position - a.position) * alpha;
        out.yaw = normalize_angle(a.yaw + alpha * normalize_angle(b.yaw - a.yaw));
    }
    out.t = t;
    return out;
}

SessionTrace load_trace(std::string_view text) {
    SessionTrace trace;
    for_each_line(text, [&](std::string_view line, std::size_t line_no) {
        const auto obj = parse_line_object(line, line_no);
        HeadPose p;
        p.t = require_field(obj, "t", line_no);
        p.position.x = require_field(obj, "x", line_no);
        p.position.y = require_field(obj, "y", line_no);
        p.position.z = require_field(obj, "z", line_no);
        p.yaw = normalize_angle(require_field(obj, "yaw", line_no));
        if (!trace.samples.empty() && !(p.t > trace.samples.back().t))
            throw ParseError(line_no, "timestamps must be strictly increasing");
        trace.samples.push_back(p);
    });
    if (trace.samples.empty()) throw ParseError(1, "trace needs at least one sample");
    return trace;
}

std::string trace_line(const HeadPose& p) {
    ordered_json j = {{"t", p.t}, {"x", p.position.x}, {"y", p.position.y}, {"z", p.position.z}, {"yaw", p.yaw}};
    return j.dump();
}

SessionTrace make_demo_trace(const Config& config, double duration, double rate_hz, double speed) {
    if (!(duration >= 0.0) || !(rate_hz > 0.0) || !(speed > 0.0))
        throw std::invalid_argument("demo trace: duration >= 0, rate > 0 and speed > 0 required");

    const double w = config.space.width;
    const double d = config.space.depth;
    const double margin = std::min({0.3, w / 4.0, d / 4.0});
    const double lane = std::max(config.radius(), 0.05);

    // Out along the lanes, then back the same way, repeated.
    std::vector<Vec2> path;
    bool rightward = true;
    for (double y = margin; y <= d - margin + 1e-9; y += lane) {
        const double x0 = rightward ? margin : w - margin;
        const double x1 = rightward ? w - margin : margin;
        path.push_back({x0, y});
        path.push_back({x1, y});
        rightward = !rightward;
    }
    for (auto i = static_cast<long>(path.size()) - 2; i >= 0; --i) path.push_back(path[static_cast<std::size_t>(i)]);

    std::vector<double> cumulative(path.size(), 0.0);
    for (std::size_t i = 1; i < path.size(); ++i)
        cumulative[i] = cumulative[i - 1] + std::hypot(path[i].x - path[i - 1].x, path[i].y - path[i - 1].y);
    const double loop = cumulative.back();

    SessionTrace trace;
    const auto count = static_cast<std::size_t>(std::floor(duration * rate_hz)) + 1;
    trace.samples.reserve(count);
    std::size_t seg = 1;
    for (std::size_t n = 0; n < count; ++n) {
        const double t = static_cast<double>(n) / rate_hz;
        const double s = loop > 0.0 ? std::fmod(speed * t, loop) : 0.0;
        if (n == 0 || s < cumulative[seg - 1]) seg = 1;
        while (seg + 1 < path.size() && cumulative[seg] < s) ++seg;

        const auto& a = path[seg - 1];
        const auto& b = path[seg];
        const double len = cumulative[seg] - cumulative[seg - 1];
        const double alpha = len > 0.0 ? (s - cumulative[seg - 1]) / len : 0.0;
        HeadPose p;
        p.t = t;
        p.position = {a.x + (b.x - a.x) * alpha, a.y + (b.y - a.y) * alpha, config.start_altitude()};
        p.yaw = normalize_angle(std::atan2(-(b.x - a.x), b.y - a.y));
        trace.samples.push_back(p);
    }
    return trace;
}

std::string write_trace(const SessionTrace& trace) {
    std::string out;
    for (const auto& p : trace.samples) out += trace_line(p) + "\n";
    return out;
}

std::string write_events(const EventLog& log) {
    std::string out;
    for (const auto& e : log) {
        ordered_json j = {{"t", e.t}, {"kind", to_string(e.kind)}, {"bubble_id", e.bubble_id}, {"chord", e.chord}};
        out += j.dump();
        out += '\n';
    }
    return out;
}

EventLog parse_events(std::string_view text) {
    EventLog log;
    for_each_line(text, [&](std::string_view line, std::size_t line_no) {
        const auto obj = parse_line_object(line, line_no);
        try {
            InteractionEvent e;
            e.t = obj.at("t").get<double>();
            e.kind = event_kind_from_string(obj.at("kind").get<std::string>());
            e.bubble_id = obj.at("bubble_id").get<int>();
            e.chord = obj.at("chord").get<std::string>();
            log.push_back(std::move(e));
        } catch (const std::exception& ex) {
            throw ParseError(line_no, ex.what());
        }
    });
    return log;
}

std::int16_t to_pcm16(float sample) {
    const double scaled = static_cast<double>(sample) * 32767.0;
    if (std::isnan(scaled)) return 0;
    const double r = std::clamp(std::round(scaled), -32768.0, 32767.0);
    return static_cast<std::int16_t>(r);
}

void append_pcm16(std::vector<std::uint8_t>& out, std::span<const float> interleaved) {
    out.reserve(out.size() + interleaved.size() * 2);
    for (float s : interleaved) put_u16(out, static_cast<std::uint16_t>(to_pcm16(s)));
}

std::vector<std::uint8_t> write_wav(std::span<const float> interleaved, int sample_rate) {
    constexpr std::uint16_t channels = 2;
    constexpr std::uint16_t bits = 16;
    const auto data_bytes = static_cast<std::uint32_t>(interleaved.size() * sizeof(std::int16_t));

    std::vector<std::uint8_t> out;
    out.reserve(kWavHeaderBytes + data_bytes);
    put_tag(out, "RIFF");
    put_u32(out, 36 + data_bytes);
    put_tag(out, "WAVE");
    put_tag(out, "fmt ");
    put_u32(out, 16);
    put_u16(out, 1);  // PCM
    put_u16(out, channels);
    put_u32(out, static_cast<std::uint32_t>(sample_rate));
    put_u32(out, static_cast<std::uint32_t>(sample_rate) * channels * bits / 8);
    put_u16(out, channels * bits / 8);
    put_u16(out, bits);
    put_tag(out, "data");
    put_u32(out, data_bytes);
    append_pcm16(out, interleaved);
    return out;
}

SessionRender render_session(const Config& config, const SessionTrace& trace, double duration) {
    if (!(duration > 0.0) || !std::isfinite(duration)) throw std::invalid_argument("render_session: duration must be > 0");
    validate(config);

    const int block = config.audio.block;
    const int rate = config.audio.sample_rate;
    const auto blocks = static_cast<std::size_t>(std::ceil(duration * rate / block - 1e-9));

    Engine engine(config, config.seed.value_or(kDefaultSeed), trace.pose_at(0.0));

    SessionRender result;
    result.events = engine.initial_events();
    std::vector<float> samples;
    samples.reserve(blocks * static_cast<std::size_t>(block) * 2);

    for (std::size_t k = 0; k < blocks; ++k) {
        if (k > 0) {
            auto events = engine.advance(trace.pose_at(engine.next_time()));
            result.events.insert(result.events.end(), events.begin(), events.end());
        }
        const auto audio = engine.render();
        samples.insert(samples.end(), audio.samples.begin(), audio.samples.end());
    }

    result.frames = samples.size() / 2;
    result.wav = write_wav(samples, rate);
    return result;
}

}  // namespace orchestra
