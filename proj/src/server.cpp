#include "orchestra/server.hpp"

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <fstream>
#include <iostream>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>
#include <vector>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include "orchestra/service.hpp"

namespace orchestra::service {
namespace {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;
using Clock = std::chrono::steady_clock;

constexpr std::size_t kMaxOutbox = 4096;

const char* kPlaceholderPage =
    "<!doctype html><html><head><title>bubble orchestra</title></head><body>"
    "<p>UI assets are not installed. Start the server with --web-root pointing at the built client, "
    "or connect a WebSocket client to <code>/session</code>.</p></body></html>";

struct Registry {
    std::atomic<int> next_id{1};
    std::atomic<std::size_t> active{0};
};

std::string mime_type(const std::filesystem::path& path) {
    const auto ext = path.extension().string();
    if (ext == ".html" || ext == ".htm") return "text/html";
    if (ext == ".js" || ext == ".mjs") return "application/javascript";
    if (ext == ".css") return "text/css";
    if (ext == ".json") return "application/json";
    if (ext == ".svg") return "image/svg+xml";
    if (ext == ".png") return "image/png";
    if (ext == ".wasm") return "application/wasm";
    return "application/octet-stream";
}

class WsSession : public std::enable_shared_from_this<WsSession> {
public:
    WsSession(tcp::socket&& socket, const Config& config, SessionOptions options, Registry& registry)
        : ws_(std::move(socket)),
          timer_(ws_.get_executor()),
          session_(config, std::move(options)),
          registry_(registry),
          period_(std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(config.block_seconds()))) {
        ++registry_.active;
    }

    ~WsSession() { --registry_.active; }

    void run(http::request<http::string_body> req) {
        ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
        ws_.async_accept(req, beast::bind_front_handler(&WsSession::on_accept, shared_from_this()));
    }

private:
    void on_accept(beast::error_code ec) {
        if (ec) return;
        do_read();
    }

    void do_read() { ws_.async_read(buffer_, beast::bind_front_handler(&WsSession::on_read, shared_from_this())); }

    void on_read(beast::error_code ec, std::size_t) {
        if (ec) {
            closed_ = true;
            timer_.cancel();
            return;
        }
        if (!ws_.got_text()) {
            buffer_.consume(buffer_.size());
            send_text(error_message("binary frames are not accepted from clients"));
            close_after_flush_ = true;
            return;
        }
        inbox_.push_back(beast::buffers_to_string(buffer_.data()));
        buffer_.consume(buffer_.size());

        // Before join there is no block clock, so apply right away.
        if (!session_.joined()) {
            drain_inbox();
            if (session_.joined()) {
                start_ = Clock::now();
                blocks_ = 0;
                on_tick({});
            }
        }
        do_read();
    }

    void drain_inbox() {
        for (const auto& text : inbox_) {
            for (auto& reply : session_.handle_message(text)) send_text(std::move(reply));
        }
        inbox_.clear();
    }

    void on_tick(beast::error_code ec) {
        if (ec == net::error::operation_aborted || closed_) return;
        drain_inbox();

        const auto now = Clock::now();
        while (start_ + period_ * static_cast<long>(blocks_) <= now) {
            auto tick = session_.tick();
            ++blocks_;
            send_binary(std::move(tick.audio));
            if (tick.state) send_text(std::move(*tick.state));
        }
        if (closed_) return;
        timer_.expires_at(start_ + period_ * static_cast<long>(blocks_));
        timer_.async_wait(beast::bind_front_handler(&WsSession::on_tick, shared_from_this()));
    }

    void send_text(std::string text) { enqueue(false, std::move(text)); }

    void send_binary(std::vector<std::uint8_t> bytes) { enqueue(true, std::string(bytes.begin(), bytes.end())); }

    void enqueue(bool binary, std::string payload) {
        if (closed_) return;
        if (outbox_.size() >= kMaxOutbox) {
            // Client is not draining; give up on it.
            closed_ = true;
            timer_.cancel();
            beast::get_lowest_layer(ws_).close();
            return;
        }
        outbox_.emplace_back(binary, std::move(payload));
        if (!writing_) do_write();
    }

    void do_write() {
        writing_ = true;
        auto& [binary, payload] = outbox_.front();
        ws_.binary(binary);
        ws_.async_write(net::buffer(payload), beast::bind_front_handler(&WsSession::on_write, shared_from_this()));
    }

    void on_write(beast::error_code ec, std::size_t) {
        writing_ = false;
        if (ec) {
            closed_ = true;
            timer_.cancel();
            return;
        }
        outbox_.pop_front();
        if (!outbox_.empty()) {
            do_write();
        } else if (close_after_flush_ && !closed_) {
            closed_ = true;
            timer_.cancel();
            ws_.async_close(websocket::close_code::policy_error,
                            [self = shared_from_this()](beast::error_code) {});
        }
    }

    websocket::stream<beast::tcp_stream> ws_;
    net::steady_timer timer_;
    beast::flat_buffer buffer_;
    LiveSession session_;
    Registry& registry_;
    Clock::duration period_;
    Clock::time_point start_{};
    std::uint64_t blocks_ = 0;
    std::vector<std::string> inbox_;
    std::deque<std::pair<bool, std::string>> outbox_;
    bool writing_ = false;
    bool closed_ = false;
    bool close_after_flush_ = false;
};

struct Shared {
    Config config;
    ServerOptions options;
    Registry registry;
};

class HttpSession : public std::enable_shared_from_this<HttpSession> {
public:
    HttpSession(tcp::socket&& socket, Shared& shared) : stream_(std::move(socket)), shared_(shared) {}

    void run() { do_read(); }

private:
    void do_read() {
        req_ = {};
        stream_.expires_after(std::chrono::seconds(30));
        http::async_read(stream_, buffer_, req_, beast::bind_front_handler(&HttpSession::on_read, shared_from_this()));
    }

    void on_read(beast::error_code ec, std::size_t) {
        if (ec) return;
        if (websocket::is_upgrade(req_)) {
            if (req_.target() == "/session") {
                stream_.expires_never();
                SessionOptions opts;
                opts.session_id = shared_.registry.next_id++;
                opts.record_dir = shared_.options.record_dir;
                opts.seed = shared_.config.seed ? *shared_.config.seed
                                                : (static_cast<std::uint64_t>(std::random_device{}()) << 32) ^
                                                      static_cast<std::uint64_t>(Clock::now().time_since_epoch().count());
                std::make_shared<WsSession>(stream_.release_socket(), shared_.config, std::move(opts), shared_.registry)
                    ->run(std::move(req_));
                return;
            }
            return respond(http::status::not_found, "text/plain", "no WebSocket endpoint here; use /session\n");
        }
        serve_static();
    }

    void serve_static() {
        if (req_.method() != http::verb::get && req_.method() != http::verb::head)
            return respond(http::status::method_not_allowed, "text/plain", "GET only\n");

        std::string target(req_.target());
        if (const auto q = target.find('?'); q != std::string::npos) target.resize(q);
        if (target.empty() || target[0] != '/' || target.find("..") != std::string::npos)
            return respond(http::status::bad_request, "text/plain", "bad path\n");
        if (target.back() == '/') target += "index.html";

        const auto& root = shared_.options.web_root;
        if (!root.empty()) {
            const auto path = root / target.substr(1);
            std::ifstream in(path, std::ios::binary);
            if (in) {
                std::ostringstream body;
                body << in.rdbuf();
                return respond(http::status::ok, mime_type(path), body.str());
            }
        }
        if (target == "/index.html") return respond(http::status::ok, "text/html", kPlaceholderPage);
        respond(http::status::not_found, "text/plain", "not found\n");
    }

    void respond(http::status status, const std::string& type, std::string body) {
        auto res = std::make_shared<http::response<http::string_body>>(status, req_.version());
        res->set(http::field::server, "bubble-orch");
        res->set(http::field::content_type, type);
        res->keep_alive(req_.keep_alive());
        if (req_.method() != http::verb::head) res->body() = std::move(body);
        res->prepare_payload();
        http::async_write(stream_, *res,
                          [self = shared_from_this(), res](beast::error_code ec, std::size_t) {
                              if (ec) return;
                              if (res->need_eof()) {
                                  beast::error_code ignored;
                                  self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
                                  return;
                              }
                              self->do_read();
                          });
    }

    beast::tcp_stream stream_;
    beast::flat_buffer buffer_;
    http::request<http::string_body> req_;
    Shared& shared_;
};

class Listener : public std::enable_shared_from_this<Listener> {
public:
    Listener(net::io_context& ioc, tcp::acceptor acceptor, Shared& shared)
        : ioc_(ioc), acceptor_(std::move(acceptor)), shared_(shared) {}

    void run() { do_accept(); }

private:
    void do_accept() {
        acceptor_.async_accept(net::make_strand(ioc_), beast::bind_front_handler(&Listener::on_accept, shared_from_this()));
    }

    void on_accept(beast::error_code ec, tcp::socket socket) {
        if (ec == net::error::operation_aborted) return;
        if (!ec) std::make_shared<HttpSession>(std::move(socket), shared_)->run();
        do_accept();
    }

    net::io_context& ioc_;
    tcp::acceptor acceptor_;
    Shared& shared_;
};

}  // namespace

struct Server::Impl {
    Shared shared;
    net::io_context ioc;
    std::optional<net::executor_work_guard<net::io_context::executor_type>> work;
    std::vector<std::thread> threads;
    unsigned short port = 0;
    std::mutex mutex;
    std::condition_variable stopped_cv;
    bool stopped = false;
};

Server::Server(Config config, ServerOptions options) : impl_(std::make_unique<Impl>()) {
    validate(config);
    impl_->shared.config = std::move(config);
    impl_->shared.options = std::move(options);
}

Server::~Server() { stop(); }

unsigned short Server::start() {
    auto& impl = *impl_;
    const auto& opts = impl.shared.options;

    beast::error_code ec;
    const auto address = net::ip::make_address(opts.address, ec);
    if (ec) throw std::runtime_error("invalid bind address '" + opts.address + "': " + ec.message());
    const tcp::endpoint endpoint{address, opts.port};

    tcp::acceptor acceptor(net::make_strand(impl.ioc));
    acceptor.open(endpoint.protocol(), ec);
    if (!ec) acceptor.set_option(net::socket_base::reuse_address(true), ec);
    if (!ec) acceptor.bind(endpoint, ec);
    if (!ec) acceptor.listen(net::socket_base::max_listen_connections, ec);
    if (ec)
        throw std::runtime_error("cannot listen on " + opts.address + ":" + std::to_string(opts.port) + ": " +
                                 ec.message());
    impl.port = acceptor.local_endpoint().port();

    std::make_shared<Listener>(impl.ioc, std::move(acceptor), impl.shared)->run();
    impl.work.emplace(net::make_work_guard(impl.ioc));
    const int n = std::max(1, opts.threads);
    for (int i = 0; i < n; ++i) impl.threads.emplace_back([&impl] { impl.ioc.run(); });
    return impl.port;
}

void Server::wait() {
    std::unique_lock lock(impl_->mutex);
    impl_->stopped_cv.wait(lock, [this] { return impl_->stopped; });
}

void Server::stop() {
    if (!impl_) return;
    impl_->work.reset();
    impl_->ioc.stop();
    for (auto& t : impl_->threads)
        if (t.joinable() && t.get_id() != std::this_thread::get_id()) t.join();
    impl_->threads.clear();
    {
        std::lock_guard lock(impl_->mutex);
        impl_->stopped = true;
    }
    impl_->stopped_cv.notify_all();
}

unsigned short Server::port() const { return impl_->port; }

std::size_t Server::active_sessions() const { return impl_->shared.registry.active.load(); }

}  // namespace orchestra::service
