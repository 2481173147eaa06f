#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <vector>

#include "oracles.hpp"
#include "orchestra/core_sim.hpp"
#include "orchestra/spatializer.hpp"
#include "orchestra/synth.hpp"

using namespace orchestra;

namespace {

constexpr double kPi = std::numbers::pi;

HeadPose head_at(double x, double y, double z, double yaw = 0.0) {
    HeadPose h;
    h.position = {x, y, z};
    h.yaw = yaw;
    return h;
}

Bubble bubble_at(double x, double y, double z, int id = 0) {
    Bubble b;
    b.id = id;
    b.center = {x, y, z};
    b.radius = 0.4;
    b.chord = default_chord_names()[static_cast<std::size_t>(id % 10)];
    return b;
}

}  // namespace

TEST_CASE("distance gain examples") {
    CHECK(gain_from_distance(0.0, 0.4) == 1.0);
    CHECK(gain_from_distance(0.2, 0.4) == doctest::Approx(0.7071067811865476).epsilon(1e-12));
    CHECK(gain_from_distance(0.4, 0.4) == 0.0);
    CHECK(gain_from_distance(1.0, 0.4) == 0.0);
}

TEST_CASE("distance gain is monotone non-increasing") {
    double prev = 2.0;
    for (int i = 0; i <= 1000; ++i) {
        const double g = gain_from_distance(i * 0.001, 0.4);
        REQUIRE(g <= prev);
        REQUIRE(g >= 0.0);
        REQUIRE(g <= 1.0);
        prev = g;
    }
}

TEST_CASE("azimuth sign convention") {
    const auto h = head_at(1.65, 1.65, 1.6);
    CHECK(azimuth(h, {1.65, 2.0, 1.6}) == doctest::Approx(0.0));
    CHECK(azimuth(h, {2.0, 1.65, 1.6}) == doctest::Approx(kPi / 2));
    CHECK(azimuth(h, {1.3, 1.65, 1.6}) == doctest::Approx(-kPi / 2));
    CHECK(std::abs(azimuth(h, {1.65, 1.3, 1.6})) == doctest::Approx(kPi));
    // Turning left by 90 degrees puts +y on the right.
    const auto turned = head_at(1.65, 1.65, 1.6, kPi / 2);
    CHECK(azimuth(turned, {1.65, 2.0, 1.6}) == doctest::Approx(kPi / 2));
}

TEST_CASE("pan law examples") {
    const auto c = pan_gains(0.0);
    CHECK(c.left == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));
    CHECK(c.right == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));
    const auto r = pan_gains(kPi / 2);
    CHECK(r.left == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(r.right == doctest::Approx(1.0).epsilon(1e-12));
    const auto l = pan_gains(-kPi / 2);
    CHECK(l.left == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(l.right == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("pan law is constant power and sided over a sweep") {
    for (int i = 0; i < 1000; ++i) {
        const double az = -kPi + 2.0 * kPi * (i + 0.5) / 1000.0;
        const auto p = pan_gains(az);
        REQUIRE(std::abs(p.left * p.left + p.right * p.right - 1.0) < 1e-6);
        if (az > 0) REQUIRE(p.right >= p.left);
        if (az < 0) REQUIRE(p.left >= p.right);
    }
}

TEST_CASE("rear sources are damped") {
    const auto h = head_at(1.65, 1.65, 1.6);
    const auto front = spatial_gains(h, bubble_at(1.65, 1.85, 1.6));
    const auto back = spatial_gains(h, bubble_at(1.65, 1.45, 1.6));
    CHECK(back.distance_gain == doctest::Approx(front.distance_gain * kRearDamping).epsilon(1e-12));
}

TEST_CASE("mix of constant signals matches the closed form") {
    const int n = 64;
    std::vector<float> a(n, 0.5f);
    std::vector<float> b(n, -0.25f);
    std::vector<VoiceInput> in{{a, {0.8, 0.6, 0.8}}, {b, {0.5, 1.0, 0.0}}};
    const auto block = mix_and_limit(in, n, 48000);
    const double l = 0.25 * (0.8 * 0.6 * 0.5 + 0.5 * 1.0 * -0.25);
    const double r = 0.25 * (0.8 * 0.8 * 0.5);
    for (int i = 0; i < n; ++i) {
        CHECK(block.left(i) == doctest::Approx(l).epsilon(1e-6));
        CHECK(block.right(i) == doctest::Approx(r).epsilon(1e-6));
    }
}

TEST_CASE("mix is linear below the limiter threshold") {
    std::mt19937 gen(3);
    std::uniform_real_distribution<float> u(-1.0f, 1.0f);
    const int n = 256;
    std::vector<float> a(n);
    std::vector<float> b(n);
    for (int i = 0; i < n; ++i) {
        a[i] = u(gen);
        b[i] = u(gen);
    }
    const SpatialGains ga{0.9, 0.3, 0.95};
    const SpatialGains gb{0.5, 0.8, 0.6};
    std::vector<VoiceInput> only_a{{a, ga}};
    std::vector<VoiceInput> only_b{{b, gb}};
    std::vector<VoiceInput> both{{a, ga}, {b, gb}};
    const auto ma = mix_and_limit(only_a, n, 48000);
    const auto mb = mix_and_limit(only_b, n, 48000);
    const auto mab = mix_and_limit(both, n, 48000);
    for (std::size_t i = 0; i < mab.samples.size(); ++i)
        REQUIRE(std::abs(mab.samples[i] - (ma.samples[i] + mb.samples[i])) < 1e-6f);
}

TEST_CASE("ten coincident full-scale voices stay within [-1, 1]") {
    const int n = 4800;
    std::vector<std::vector<float>> bufs(10, std::vector<float>(n));
    for (int v = 0; v < 10; ++v)
        for (int i = 0; i < n; ++i) bufs[v][i] = (i / 7 + v) % 2 ? 1.0f : -1.0f;
    std::vector<VoiceInput> in;
    for (auto& b : bufs) in.push_back({b, {1.0, 1.0, 1.0}});
    const auto block = mix_and_limit(in, n, 48000);
    for (float s : block.samples) REQUIRE(std::abs(s) <= 1.0f);
}

TEST_CASE("limiter recovers linearly over 50 ms") {
    Limiter lim(48000);
    std::vector<float> burst{4.0f, 4.0f};
    lim.process(burst);
    CHECK(lim.gain() == doctest::Approx(0.25));
    CHECK(burst[0] == doctest::Approx(1.0f));
    std::vector<float> quiet(2 * 1200, 0.0f);
    lim.process(quiet);
    CHECK(lim.gain() == doctest::Approx(0.25 + 1200.0 / 2400.0).epsilon(1e-9));
    std::vector<float> more(2 * 1200, 0.0f);
    lim.process(more);
    CHECK(lim.gain() == 1.0);
}

TEST_CASE("mismatched voice length is rejected") {
    std::vector<float> a(10);
    std::vector<VoiceInput> in{{a, {1, 1, 1}}};
    CHECK_THROWS_AS(mix_and_limit(in, 11, 48000), std::invalid_argument);
}

TEST_CASE("render_block is silent when the listener is outside every bubble") {
    auto world = init_world(Config{}, 1);
    world.head.position = {-5.0, -5.0, 1.6};
    refresh_inside(world);
    auto voices = make_voices(world, Config{});
    const auto r = render_block(world, voices, Limiter(48000), 256, 48000);
    for (float s : r.block.samples) REQUIRE(s == 0.0f);
}

TEST_CASE("render_block sounds a bubble the listener stands in") {
    WorldState world;
    world.bubbles.push_back(bubble_at(1.65, 1.65, 1.6, 0));
    world.head = head_at(1.65, 1.65, 1.6);
    refresh_inside(world);
    auto voices = make_voices(world, Config{});
    Limiter lim(48000);
    std::vector<float> all;
    for (int k = 0; k < 40; ++k) {
        const auto block = render_block_into(world, voices, lim, 256, 48000);
        all.insert(all.end(), block.samples.begin(), block.samples.end());
    }
    CHECK(oracle::rms(all) > 0.01);
    for (float s : all) REQUIRE(std::abs(s) <= 1.0f);
}

TEST_CASE("render_block is pure") {
    WorldState world;
    world.bubbles.push_back(bubble_at(1.65, 1.65, 1.6, 0));
    world.head = head_at(1.7, 1.6, 1.6, 0.3);
    refresh_inside(world);
    const auto voices = make_voices(world, Config{});
    const auto a = render_block(world, voices, Limiter(48000), 256, 48000);
    const auto b = render_block(world, voices, Limiter(48000), 256, 48000);
    CHECK(a.block == b.block);
    CHECK(a.voices == b.voices);
}
