#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>

#include "orchestra/config.hpp"

namespace orchestra::service {

struct ServerOptions {
    std::string address = "0.0.0.0";
    unsigned short port = 8080;  // 0 picks a free port
    std::filesystem::path web_root;  // static UI assets served at /
    std::filesystem::path record_dir = ".";
    int threads = 2;
};

/// WebSocket session server. Each connection to /session owns an independent
/// LiveSession paced by the wall clock at one audio block per block period.
class Server {
public:
    Server(Config config, ServerOptions options);
    ~Server();
    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    /// Binds and starts the I/O threads. Returns the bound port.
    /// Throws std::runtime_error if the address cannot be bound.
    unsigned short start();

    /// Blocks until stop() is called from another thread or a signal handler.
    void wait();
    void stop();

    unsigned short port() const;
    std::size_t active_sessions() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace orchestra::service
