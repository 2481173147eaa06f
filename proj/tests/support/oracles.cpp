#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <random>

#include <fftw3.h>

namespace oracle {

using namespace orchestra;

double fold(double x0, double v, double t, double lo, double hi) {
    const double span = hi - lo;
    if (span <= 0.0) return lo;
    const double period = 2.0 * span;
    double u = std::fmod((x0 - lo) + v * t, period);
    if (u < 0.0) u += period;
    return lo + (u <= span ? u : period - u);
}

Vec3 bubble_position(const Bubble& b, const PlaySpace& space, double t) {
    return {fold(b.center.x, b.velocity.x, t, b.radius, space.width - b.radius),
            fold(b.center.y, b.velocity.y, t, b.radius, space.depth - b.radius), b.center.z};
}

std::vector<Event> brute_force_events(const WorldState& initial, const SessionTrace& trace, double end_time,
                                      double rate_hz) {
    std::vector<Event> out;
    std::vector<bool> inside(initial.bubbles.size(), false);
    const auto samples = static_cast<long>(std::floor(end_time * rate_hz + 1e-9));
    for (long i = 0; i <= samples; ++i) {
        const double t = static_cast<double>(i) / rate_hz;
        const auto head = trace.pose_at(t).position;
        for (std::size_t k = 0; k < initial.bubbles.size(); ++k) {
            const auto& b = initial.bubbles[k];
            const auto c = bubble_position(b, initial.play_space, t);
            const double d = std::sqrt((head.x - c.x) * (head.x - c.x) + (head.y - c.y) * (head.y - c.y) +
                                       (head.z - c.z) * (head.z - c.z));
            if (!inside[k] && d < b.radius) {
                inside[k] = true;
                out.push_back({t, EventKind::enter, b.id});
                out.push_back({t, EventKind::stroke, b.id});
            } else if (inside[k] && d > b.radius + 0.02) {
                inside[k] = false;
                out.push_back({t, EventKind::exit, b.id});
            }
        }
    }
    return out;
}

EventMatch match_events(const std::vector<InteractionEvent>& engine, const std::vector<Event>& reference,
                        double tolerance, double cutoff) {
    std::map<int, std::vector<Event>> lhs;
    std::map<int, std::vector<Event>> rhs;
    for (const auto& e : engine)
        if (e.t <= cutoff) lhs[e.bubble_id].push_back({e.t, e.kind, e.bubble_id});
    for (const auto& e : reference)
        if (e.t <= cutoff) rhs[e.bubble_id].push_back(e);

    EventMatch m;
    std::map<int, bool> ids;
    for (const auto& [id, v] : lhs) ids[id] = true;
    for (const auto& [id, v] : rhs) ids[id] = true;
    for (const auto& [id, unused] : ids) {
        (void)unused;
        const auto& a = lhs[id];
        const auto& b = rhs[id];
        const auto n = std::min(a.size(), b.size());
        for (std::size_t i = 0; i < n; ++i) {
            const double dt = std::abs(a[i].t - b[i].t);
            m.worst_dt = std::max(m.worst_dt, dt);
            ++m.compared;
            if (a[i].kind != b[i].kind || dt > tolerance) {
                m.ok = false;
                m.detail = "bubble " + std::to_string(id) + " event " + std::to_string(i) + ": engine " +
                           to_string(a[i].kind) + "@" + std::to_string(a[i].t) + " vs oracle " + to_string(b[i].kind) +
                           "@" + std::to_string(b[i].t);
                return m;
            }
        }
        // Near the cutoff one side may already report an event the other only
        // reports just after it; such trailing extras are not a disagreement.
        const auto& longer = a.size() > b.size() ? a : b;
        const bool trailing_only = std::all_of(longer.begin() + static_cast<std::ptrdiff_t>(n), longer.end(),
                                               [&](const Event& e) { return e.t > cutoff - tolerance; });
        if (a.size() != b.size() && !trailing_only) {
            m.ok = false;
            m.detail = "bubble " + std::to_string(id) + ": engine has " + std::to_string(a.size()) +
                       " events, oracle " + std::to_string(b.size());
            m.detail += "; first unmatched at t=" + std::to_string(longer[n].t);
            return m;
        }
    }
    return m;
}

SessionTrace random_walk_trace(std::uint64_t seed, const Config& config, double duration) {
    std::mt19937_64 gen(seed * 7919 + 17);
    std::uniform_real_distribution<double> ux(0.0, config.space.width);
    std::uniform_real_distribution<double> uy(0.0, config.space.depth);
    std::uniform_real_distribution<double> speed(0.3, 1.5);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_real_distribution<double> height(config.bubbles.altitude - 0.15, config.bubbles.altitude + 0.15);

    SessionTrace trace;
    HeadPose p;
    p.t = 0.0;
    p.position = {ux(gen), uy(gen), height(gen)};
    p.yaw = 0.0;
    trace.samples.push_back(p);
    while (p.t < duration) {
        if (unit(gen) < 0.2) {
            p.t += 0.5 + 2.5 * unit(gen);  // stand still
        } else {
            const Vec3 next{ux(gen), uy(gen), height(gen)};
            const double dist = distance(next, p.position);
            p.yaw = std::atan2(-(next.x - p.position.x), next.y - p.position.y);
            p.t += std::max(dist / speed(gen), 0.05);
            p.position = next;
        }
        trace.samples.push_back(p);
    }
    return trace;
}

Spectrum spectrum(std::span<const double> signal, int sample_rate, std::size_t fft_size) {
    std::vector<double> in(fft_size, 0.0);
    const auto n = std::min(signal.size(), fft_size);
    for (std::size_t i = 0; i < n; ++i) {
        const double w = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n - 1));
        in[i] = signal[i] * w;
    }
    std::vector<fftw_complex> out(fft_size / 2 + 1);
    fftw_plan plan = fftw_plan_dft_r2c_1d(static_cast<int>(fft_size), in.data(), out.data(), FFTW_ESTIMATE);
    fftw_execute(plan);
    fftw_destroy_plan(plan);

    Spectrum s;
    s.bin_hz = static_cast<double>(sample_rate) / static_cast<double>(fft_size);
    s.magnitude.resize(out.size());
    for (std::size_t i = 0; i < out.size(); ++i) s.magnitude[i] = std::hypot(out[i][0], out[i][1]);
    return s;
}

double peak_near(const Spectrum& s, double f, double search_hz) {
    const auto lo = static_cast<std::size_t>(std::max(1.0, std::floor((f - search_hz) / s.bin_hz)));
    const auto hi = std::min(s.magnitude.size() - 2, static_cast<std::size_t>(std::ceil((f + search_hz) / s.bin_hz)));
    std::size_t best = lo;
    for (auto i = lo; i <= hi; ++i)
        if (s.magnitude[i] > s.magnitude[best]) best = i;
    const double a = s.magnitude[best - 1];
    const double b = s.magnitude[best];
    const double c = s.magnitude[best + 1];
    const double denom = a - 2.0 * b + c;
    const double offset = denom != 0.0 ? 0.5 * (a - c) / denom : 0.0;
    return (static_cast<double>(best) + offset) * s.bin_hz;
}

double rms(std::span<const float> samples) {
    if (samples.empty()) return 0.0;
    double acc = 0.0;
    for (float v : samples) acc += static_cast<double>(v) * v;
    return std::sqrt(acc / static_cast<double>(samples.size()));
}

}  // namespace oracle
