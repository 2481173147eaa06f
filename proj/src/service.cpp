#include "orchestra/service.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "orchestra/session_io.hpp"

namespace orchestra::service {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

double number_field(const json& obj, const char* key) {
    if (!obj.contains(key)) throw ProtocolError(std::string("missing field '") + key + "'");
    const auto& v = obj.at(key);
    if (!v.is_number()) throw ProtocolError(std::string("field '") + key + "' must be a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ProtocolError(std::string("field '") + key + "' must be finite");
    return d;
}

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}

std::uint32_t get_u32(std::span<const std::uint8_t> b, std::size_t at) {
    return static_cast<std::uint32_t>(b[at]) | static_cast<std::uint32_t>(b[at + 1]) << 8 |
           static_cast<std::uint32_t>(b[at + 2]) << 16 | static_cast<std::uint32_t>(b[at + 3]) << 24;
}

}  // namespace

SessionMsg parse_session_msg(std::string_view text) {
    json obj;
    try {
        obj = json::parse(text);
    } catch (const json::parse_error&) {
        throw ProtocolError("malformed JSON");
    }
    if (!obj.is_object()) throw ProtocolError("message must be a JSON object");
    if (!obj.contains("type") || !obj.at("type").is_string()) throw ProtocolError("missing message type");

    const auto type = obj.at("type").get<std::string>();
    if (type == "join") return JoinMsg{};
    if (type == "input") return InputMsg{number_field(obj, "vx"), number_field(obj, "vy")};
    if (type == "teleport") return TeleportMsg{number_field(obj, "x"), number_field(obj, "y")};
    if (type == "yaw") return YawMsg{number_field(obj, "value")};
    if (type == "set_height") return SetHeightMsg{number_field(obj, "z")};
    if (type == "record") {
        if (!obj.contains("on") || !obj.at("on").is_boolean()) throw ProtocolError("field 'on' must be a boolean");
        return RecordMsg{obj.at("on").get<bool>()};
    }
    throw ProtocolError("unknown message type '" + type + "'");
}

std::string error_message(std::string_view reason) {
    ordered_json j = {{"type", "error"}, {"reason", std::string(reason)}};
    return j.dump();
}

std::string state_message(const WorldState& world, double accessibility_height) {
    ordered_json bubbles = ordered_json::array();
    for (const auto& b : world.bubbles) {
        const bool inside = std::binary_search(world.inside_set.begin(), world.inside_set.end(), b.id);
        bubbles.push_back({{"id", b.id},
                           {"x", b.center.x},
                           {"y", b.center.y},
                           {"z", b.center.z},
                           {"r", b.radius},
                           {"chord", b.chord},
                           {"color", b.color},
                           {"inside", inside}});
    }
    ordered_json j = {{"type", "state"},
                      {"t", world.t},
                      {"listener",
                       {{"x", world.head.position.x},
                        {"y", world.head.position.y},
                        {"z", world.head.position.z},
                        {"yaw", world.head.yaw}}},
                      {"bubbles", bubbles},
                      {"accessibility_height", accessibility_height}};
    return j.dump();
}

std::vector<std::uint8_t> encode_audio(const AudioBlock& block, std::uint32_t seq) {
    std::vector<std::uint8_t> out;
    out.reserve(kAudioHeaderBytes + block.samples.size() * 2);
    put_u32(out, seq);
    put_u32(out, static_cast<std::uint32_t>(block.nframes));
    append_pcm16(out, block.samples);
    return out;
}

AudioFrame decode_audio(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < kAudioHeaderBytes) throw ProtocolError("audio frame shorter than its header");
    AudioFrame frame;
    frame.seq = get_u32(bytes, 0);
    frame.frames = get_u32(bytes, 4);
    if (bytes.size() - kAudioHeaderBytes != static_cast<std::size_t>(frame.frames) * 4)
        throw ProtocolError("audio payload length does not match the frame count");
    frame.pcm.resize(static_cast<std::size_t>(frame.frames) * 2);
    for (std::size_t i = 0; i < frame.pcm.size(); ++i) {
        const auto at = kAudioHeaderBytes + 2 * i;
        frame.pcm[i] = static_cast<std::int16_t>(static_cast<std::uint16_t>(bytes[at] | (bytes[at + 1] << 8)));
    }
    return frame;
}

LiveSession::LiveSession(Config config, SessionOptions options)
    : config_(std::move(config)),
      options_(std::move(options)),
      position_{config_.space.width / 2.0, config_.space.depth / 2.0},
      accessibility_height_(config_.start_altitude()) {
    validate(config_);
}

LiveSession::~LiveSession() = default;

std::vector<std::string> LiveSession::handle_message(std::string_view text) {
    try {
        return apply(parse_session_msg(text));
    } catch (const ProtocolError& e) {
        return {error_message(e.what())};
    }
}

std::string LiveSession::current_state() const { return state_message(engine_->world(), accessibility_height_); }

std::vector<std::string> LiveSession::apply(const SessionMsg& msg) {
    if (!joined() && !std::holds_alternative<JoinMsg>(msg)) return {error_message("not joined: send {\"type\":\"join\"} first")};

    return std::visit(
        overloaded{
            [&](const JoinMsg&) -> std::vector<std::string> {
                if (!joined()) {
                    HeadPose head;
                    head.position = {position_.x, position_.y, config_.start_altitude()};
                    head.yaw = yaw_;
                    engine_.emplace(config_, options_.seed, head);
                    next_state_t_ = kStateInterval;
                }
                return {current_state()};
            },
            [&](const InputMsg& m) -> std::vector<std::string> {
                double vx = m.vx;
                double vy = m.vy;
                const double speed = std::hypot(vx, vy);
                if (speed > kMaxWalkSpeed) {
                    vx *= kMaxWalkSpeed / speed;
                    vy *= kMaxWalkSpeed / speed;
                }
                velocity_ = {vx, vy};
                return {};
            },
            [&](const TeleportMsg& m) -> std::vector<std::string> {
                position_ = {std::clamp(m.x, 0.0, config_.space.width), std::clamp(m.y, 0.0, config_.space.depth)};
                return {};
            },
            [&](const YawMsg& m) -> std::vector<std::string> {
                yaw_ = normalize_angle(m.value);
                return {};
            },
            [&](const SetHeightMsg& m) -> std::vector<std::string> {
                try {
                    engine_->set_altitude(m.z);
                } catch (const std::invalid_argument& e) {
                    return {error_message(e.what())};
                }
                accessibility_height_ = m.z;
                return {};
            },
            [&](const RecordMsg& m) -> std::vector<std::string> {
                if (m.on && !recording_.is_open()) {
                    std::error_code ec;
                    std::filesystem::create_directories(options_.record_dir, ec);
                    record_path_ = options_.record_dir / ("session-" + std::to_string(options_.session_id) + "-" +
                                                          std::to_string(++recording_count_) + ".jsonl");
                    recording_.open(record_path_, std::ios::out | std::ios::trunc);
                    if (!recording_) return {error_message("cannot open trace file " + record_path_.string())};
                    recording_ << trace_line(engine_->world().head) << '\n';
                } else if (!m.on && recording_.is_open()) {
                    recording_.close();
                }
                ordered_json reply = {{"type", "record"},
                                      {"on", recording_.is_open()},
                                      {"path", record_path_.string()},
                                      {"seed", options_.seed}};
                return {reply.dump()};
            },
        },
        msg);
}

LiveSession::Tick LiveSession::tick() {
    if (!joined()) throw std::logic_error("tick before join");
    Tick out;
    auto& engine = *engine_;

    out.audio = encode_audio(engine.render(), sequence_++);

    const double dt = engine.block_seconds();
    position_.x = std::clamp(position_.x + velocity_.x * dt, 0.0, config_.space.width);
    position_.y = std::clamp(position_.y + velocity_.y * dt, 0.0, config_.space.depth);

    HeadPose head;
    // The listener's head rides the bubble plane, so lowering the bubbles lowers the listener too.
    head.position = {position_.x, position_.y, engine.world().altitude};
    head.yaw = yaw_;
    out.events = engine.advance(head);

    if (recording_.is_open()) recording_ << trace_line(engine.world().head) << '\n';

    if (engine.world().t >= next_state_t_) {
        out.state = current_state();
        while (next_state_t_ <= engine.world().t) next_state_t_ += kStateInterval;
    }
    return out;
}

}  // namespace orchestra::service
