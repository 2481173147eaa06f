#include "orchestra/cli.hpp"

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <iterator>
#include <sstream>

#include <pthread.h>

#include <CLI11.hpp>

#include "orchestra/errors.hpp"
#include "orchestra/server.hpp"
#include "orchestra/session_io.hpp"

namespace orchestra {
namespace {

std::string read_text(const std::string& path) {
    if (path == "-") return {std::istreambuf_iterator<char>(std::cin), std::istreambuf_iterator<char>()};
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

template <typename Bytes>
void write_file(const std::string& path, const Bytes& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

Config load_config(const std::string& path) { return path.empty() ? Config{} : parse_config(read_text(path)); }

int run_serve(const Config& config, service::ServerOptions options, std::ostream& out) {
    if (const char* env = std::getenv("BUBBLE_ORCH_PORT"); env && *env) {
        const long port = std::strtol(env, nullptr, 10);
        if (port < 0 || port > 65535) throw std::runtime_error("BUBBLE_ORCH_PORT out of range");
        options.port = static_cast<unsigned short>(port);
    }

    // Route SIGINT/SIGTERM to this thread only; the I/O threads inherit the mask.
    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    service::Server server(config, options);
    const auto port = server.start();
    out << "listening on " << options.address << ":" << port << " (WebSocket /session)" << std::endl;

    int received = 0;
    sigwait(&signals, &received);
    out << "shutting down" << std::endl;
    server.stop();
    return 0;
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Locomotion bubble instrument: offline renderer and live session server", "bubble_orch"};
    app.require_subcommand(1);

    std::string config_path;

    auto* simulate = app.add_subcommand("simulate", "Render a movement trace to WAV plus an event log");
    std::string trace_path;
    std::string out_path = "out.wav";
    std::string events_path = "events.jsonl";
    double duration = 0.0;
    std::uint64_t seed = 0;
    simulate->add_option("--config", config_path, "Config JSON (defaults when omitted)");
    simulate->add_option("--trace", trace_path, "Head trace, JSON Lines {t,x,y,z,yaw}")->required();
    simulate->add_option("--duration", duration, "Seconds to render (default: trace end)");
    simulate->add_option("--out", out_path, "WAV output path");
    simulate->add_option("--events", events_path, "Event log output path");
    auto* seed_opt = simulate->add_option("--seed", seed, "Override the config seed");

    auto* serve = app.add_subcommand("serve", "Run the live WebSocket session server");
    service::ServerOptions server_options;
    std::string web_root;
    std::string record_dir = ".";
    serve->add_option("--config", config_path, "Config JSON");
    serve->add_option("--port", server_options.port, "TCP port (env BUBBLE_ORCH_PORT overrides)");
    serve->add_option("--address", server_options.address, "Bind address");
    serve->add_option("--web-root", web_root, "Directory of static UI assets served at /");
    serve->add_option("--record-dir", record_dir, "Where recorded traces are written");
    serve->add_option("--threads", server_options.threads, "I/O threads")->check(CLI::Range(1, 64));

    auto* validate_cmd = app.add_subcommand("validate-config", "Parse a config and print it with defaults filled in");
    std::string validate_path;
    validate_cmd->add_option("config", validate_path, "Config JSON path, or - for stdin")->required();

    auto* demo = app.add_subcommand("demo-trace", "Emit a lawn-mower sweep of the play-space as a trace");
    double demo_duration = 60.0;
    double demo_rate = 50.0;
    double demo_speed = 1.0;
    std::string demo_out;
    demo->add_option("--config", config_path, "Config JSON (for the space size and altitude)");
    demo->add_option("--duration", demo_duration, "Seconds")->check(CLI::NonNegativeNumber);
    demo->add_option("--rate", demo_rate, "Samples per second")->check(CLI::PositiveNumber);
    demo->add_option("--speed", demo_speed, "Walking speed, m/s")->check(CLI::PositiveNumber);
    demo->add_option("--out", demo_out, "Output path (stdout when omitted)");

    std::vector<std::string> argv_storage;
    argv_storage.reserve(args.size() + 1);
    argv_storage.emplace_back("bubble_orch");
    argv_storage.insert(argv_storage.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& a : argv_storage) argv.push_back(a.data());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    try {
        if (*simulate) {
            auto config = load_config(config_path);
            if (seed_opt->count() > 0) config.seed = seed;
            const auto trace = load_trace(read_text(trace_path));
            const double length = duration > 0.0 ? duration : trace.end_time();
            if (!(length > 0.0)) throw std::runtime_error("--duration required: the trace spans zero seconds");
            const auto result = render_session(config, trace, length);
            write_file(out_path, result.wav);
            write_file(events_path, write_events(result.events));
            out << "rendered " << result.frames << " frames (" << static_cast<double>(result.frames) / config.audio.sample_rate
                << " s) to " << out_path << ", " << result.events.size() << " events to " << events_path << "\n";
            return 0;
        }
        if (*serve) {
            server_options.web_root = web_root;
            server_options.record_dir = record_dir;
            return run_serve(load_config(config_path), server_options, out);
        }
        if (*validate_cmd) {
            const auto config = parse_config(read_text(validate_path));
            out << config_to_json(config) << "\n";
            err << "config ok\n";
            return 0;
        }
        if (*demo) {
            const auto trace = make_demo_trace(load_config(config_path), demo_duration, demo_rate, demo_speed);
            const auto text = write_trace(trace);
            if (demo_out.empty()) {
                out << text;
            } else {
                write_file(demo_out, text);
            }
            return 0;
        }
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return 2;
    } catch (const ParseError& e) {
        err << "parse error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}

}  // namespace orchestra
