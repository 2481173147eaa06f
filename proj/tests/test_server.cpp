#include <doctest.h>

#include <boost/asio/connect.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <filesystem>
#include <fstream>
#include <thread>

#include "orchestra/server.hpp"
#include "ws_client.hpp"

using namespace orchestra;
using namespace orchestra::service;
using namespace std::chrono_literals;
using nlohmann::json;

namespace {

namespace beast = boost::beast;
namespace http = beast::http;
using tcp = boost::asio::ip::tcp;

struct HttpReply {
    int status = 0;
    std::string content_type;
    std::string body;
};

HttpReply http_get(unsigned short port, const std::string& target) {
    boost::asio::io_context ioc;
    tcp::resolver resolver(ioc);
    beast::tcp_stream stream(ioc);
    stream.connect(resolver.resolve("127.0.0.1", std::to_string(port)));
    http::request<http::empty_body> req{http::verb::get, target, 11};
    req.set(http::field::host, "127.0.0.1");
    http::write(stream, req);
    beast::flat_buffer buffer;
    http::response<http::string_body> res;
    http::read(stream, buffer, res);
    beast::error_code ec;
    stream.socket().shutdown(tcp::socket::shutdown_both, ec);
    return {static_cast<int>(res.result_int()), std::string(res[http::field::content_type]), res.body()};
}

ServerOptions local_options() {
    ServerOptions o;
    o.address = "127.0.0.1";
    o.port = 0;
    o.record_dir = std::filesystem::temp_directory_path() / "orchestra-test-server";
    return o;
}

}  // namespace

TEST_CASE("join over the socket returns the bubbles and starts audio") {
    Server server(Config{}, local_options());
    const auto port = server.start();
    testing::WsClient client(port);
    client.send_json({{"type", "join"}});
    const auto state = client.wait_type("state");
    REQUIRE(state);
    CHECK((*state)["bubbles"].size() == 10);
    std::this_thread::sleep_for(300ms);
    const auto frames = client.frames();
    REQUIRE(frames.size() > 10);
    for (std::size_t i = 0; i < frames.size(); ++i) {
        CHECK(frames[i].seq == i);
        CHECK(frames[i].frames == 256);
        CHECK(frames[i].bytes == 8 + 1024);
    }
    server.stop();
}

TEST_CASE("malformed text gets an error and the session survives") {
    Server server(Config{}, local_options());
    const auto port = server.start();
    testing::WsClient client(port);
    client.send_text("not json");
    CHECK(client.wait_type("error"));
    client.send_json({{"type", "join"}});
    CHECK(client.wait_type("state"));
    client.send_text("{\"type\":\"moonwalk\"}");
    CHECK(client.wait_type("error"));
    client.send_json({{"type", "yaw"}, {"value", 7.0}});
    const auto s = client.wait_for([](const json& j) {
        return j.value("type", "") == "state" && std::abs(j["listener"]["yaw"].get<double>() - 0.7168146928204138) < 1e-9;
    });
    CHECK(s);
    CHECK_FALSE(client.closed());
    server.stop();
}

TEST_CASE("binary client frames are a protocol violation") {
    Server server(Config{}, local_options());
    const auto port = server.start();
    testing::WsClient client(port);
    client.send_json({{"type", "join"}});
    REQUIRE(client.wait_type("state"));
    client.send_binary("\x01\x02\x03");
    CHECK(client.wait_type("error"));
    for (int i = 0; i < 100 && !client.closed(); ++i) std::this_thread::sleep_for(20ms);
    CHECK(client.closed());
    server.stop();
}

TEST_CASE("sessions are isolated") {
    auto config = Config{};
    Server server(config, local_options());
    const auto port = server.start();
    testing::WsClient a(port);
    testing::WsClient b(port);
    a.send_json({{"type", "join"}});
    b.send_json({{"type", "join"}});
    REQUIRE(a.wait_type("state"));
    REQUIRE(b.wait_type("state"));
    a.send_json({{"type", "teleport"}, {"x", 0.2}, {"y", 0.3}});
    const auto moved = a.wait_for([](const json& j) { return j.value("type", "") == "state" && j["listener"]["x"] == 0.2; });
    CHECK(moved);
    const auto other = b.wait_type("state");
    REQUIRE(other);
    CHECK((*other)["listener"]["x"] == 1.65);

    for (int i = 0; i < 100 && server.active_sessions() != 2; ++i) std::this_thread::sleep_for(10ms);
    CHECK(server.active_sessions() == 2);
    a.close();
    for (int i = 0; i < 200 && server.active_sessions() != 1; ++i) std::this_thread::sleep_for(10ms);
    CHECK(server.active_sessions() == 1);
    const auto before = b.frame_count();
    std::this_thread::sleep_for(200ms);
    CHECK(b.frame_count() > before + 10);
    CHECK_FALSE(b.closed());
    server.stop();
}

TEST_CASE("static assets are served at the root") {
    const auto root = std::filesystem::temp_directory_path() / "orchestra-test-web";
    std::filesystem::remove_all(root);
    std::filesystem::create_directories(root / "assets");
    std::ofstream(root / "index.html") << "<html>hello</html>";
    std::ofstream(root / "assets" / "app.js") << "console.log(1);";

    auto opts = local_options();
    opts.web_root = root;
    Server server(Config{}, opts);
    const auto port = server.start();
    auto r = http_get(port, "/");
    CHECK(r.status == 200);
    CHECK(r.body == "<html>hello</html>");
    CHECK(r.content_type.find("text/html") == 0);
    r = http_get(port, "/assets/app.js");
    CHECK(r.status == 200);
    CHECK(r.content_type.find("javascript") != std::string::npos);
    CHECK(http_get(port, "/missing.css").status == 404);
    CHECK(http_get(port, "/../etc/passwd").status != 200);
    server.stop();
}

TEST_CASE("a root without index.html gets a placeholder page") {
    Server server(Config{}, local_options());
    const auto port = server.start();
    const auto r = http_get(port, "/");
    CHECK(r.status == 200);
    CHECK_FALSE(r.body.empty());
    server.stop();
}

TEST_CASE("binding a taken port fails at startup") {
    Server first(Config{}, local_options());
    const auto port = first.start();
    auto opts = local_options();
    opts.port = port;
    Server second(Config{}, opts);
    CHECK_THROWS_AS(second.start(), std::runtime_error);
    first.stop();
}
