#include "orchestra/engine.hpp"

namespace orchestra {

Engine::Engine(Config config, std::uint64_t seed, const HeadPose& initial_head)
    : config_(std::move(config)),
      seed_(seed),
      dt_(config_.block_seconds()),
      world_(init_world(config_, seed)),
      limiter_(config_.audio.sample_rate) {
    voices_ = make_voices(world_, config_);
    world_.head = initial_head;
    world_.head.t = world_.t;
    world_.head.yaw = normalize_angle(world_.head.yaw);
    world_.inside_set.clear();
    refresh_inside(world_);
    initial_events_ = detect_events({}, world_.inside_set, world_.t, world_.bubbles);
}

AudioBlock Engine::render() {
    return render_block_into(world_, voices_, limiter_, config_.audio.block, config_.audio.sample_rate);
}

std::vector<InteractionEvent> Engine::advance(const HeadPose& head) {
    const IdSet previous = world_.inside_set;
    world_.head = head;
    world_.head.yaw = normalize_angle(head.yaw);
    orchestra::advance(world_, dt_);
    world_.head.t = world_.t;
    return detect_events(previous, world_.inside_set, world_.t, world_.bubbles);
}

void Engine::set_altitude(double z_target) { world_ = orchestra::set_altitude(std::move(world_), z_target); }

}  // namespace orchestra
