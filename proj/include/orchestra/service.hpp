#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "orchestra/config.hpp"
#include "orchestra/engine.hpp"

namespace orchestra::service {

inline constexpr double kMaxWalkSpeed = 1.5;      // m/s
inline constexpr double kStateInterval = 0.05;    // s, 20 Hz
inline constexpr std::size_t kAudioHeaderBytes = 8;

// ---- client -> server ------------------------------------------------------

struct JoinMsg {};
struct InputMsg {
    double vx = 0.0;
    double vy = 0.0;
};
struct TeleportMsg {
    double x = 0.0;
    double y = 0.0;
};
struct YawMsg {
    double value = 0.0;
};
struct SetHeightMsg {
    double z = 0.0;
};
struct RecordMsg {
    bool on = false;
};

using SessionMsg = std::variant<JoinMsg, InputMsg, TeleportMsg, YawMsg, SetHeightMsg, RecordMsg>;

class ProtocolError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Throws ProtocolError for malformed JSON, unknown types or bad fields.
SessionMsg parse_session_msg(std::string_view text);

// ---- server -> client ------------------------------------------------------

std::string error_message(std::string_view reason);

std::string state_message(const WorldState& world, double accessibility_height);

/// u32 LE sequence, u32 LE frame count, then interleaved PCM16 LE stereo.
std::vector<std::uint8_t> encode_audio(const AudioBlock& block, std::uint32_t seq);

struct AudioFrame {
    std::uint32_t seq = 0;
    std::uint32_t frames = 0;
    std::vector<std::int16_t> pcm;
};

/// Throws ProtocolError if the payload length does not match the header.
AudioFrame decode_audio(std::span<const std::uint8_t> bytes);

// ---- per-connection state --------------------------------------------------

struct SessionOptions {
    std::uint64_t seed = kDefaultSeed;
    int session_id = 0;
    std::filesystem::path record_dir = ".";
};

/// One client's instrument. Not thread-safe: the owning connection drives it
/// from a single executor, calling handle_message() for inbound text and
/// tick() once per audio block.
class LiveSession {
public:
    LiveSession(Config config, SessionOptions options);
    ~LiveSession();
    LiveSession(LiveSession&&) = default;
    LiveSession& operator=(LiveSession&&) = default;

    /// Applies one text message. Returns the replies to send right away.
    std::vector<std::string> handle_message(std::string_view text);

    struct Tick {
        std::vector<std::uint8_t> audio;
        std::optional<std::string> state;
        std::vector<InteractionEvent> events;
    };

    /// Renders the current block, then moves the listener and steps the world.
    /// Requires joined().
    Tick tick();

    bool joined() const { return engine_.has_value(); }
    const Engine& engine() const { return *engine_; }
    Vec2 listener() const { return position_; }
    Vec2 velocity() const { return velocity_; }
    double yaw() const { return yaw_; }
    double accessibility_height() const { return accessibility_height_; }
    bool recording() const { return recording_.is_open(); }
    const std::filesystem::path& record_path() const { return record_path_; }
    std::uint32_t next_sequence() const { return sequence_; }
    std::uint64_t seed() const { return options_.seed; }

private:
    std::vector<std::string> apply(const SessionMsg& msg);
    std::string current_state() const;

    Config config_;
    SessionOptions options_;
    std::optional<Engine> engine_;
    Vec2 position_;
    Vec2 velocity_;
    double yaw_ = 0.0;
    double accessibility_height_;
    double next_state_t_ = 0.0;
    std::uint32_t sequence_ = 0;
    int recording_count_ = 0;
    std::ofstream recording_;
    std::filesystem::path record_path_;
};

}  // namespace orchestra::service
