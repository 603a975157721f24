#include <poll.h>
#include <sys/socket.h>

#include <set>

#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <spdlog/spdlog.h>

#include "taa/service.hpp"

namespace taa {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

struct Server::Impl {
    ServiceCore& core;
    net::io_context ioc;
    tcp::acceptor acceptor{ioc};
    std::thread accept_thread;
    std::atomic<bool> stopping{false};
    std::mutex mu;
    std::set<int> open_fds;
    std::vector<std::thread> workers;

    explicit Impl(ServiceCore& c) : core(c) {}

    void accept_loop();
    void serve(tcp::socket socket);
    void stream_events(websocket::stream<tcp::socket&>& ws, Session& s, std::uint64_t since);
};

namespace {

http::response<http::string_body> make_response(const ServiceResponse& r, unsigned version, bool keep_alive) {
    http::response<http::string_body> res{static_cast<http::status>(r.status), version};
    res.set(http::field::server, "taa");
    res.set(http::field::access_control_allow_origin, "*");
    res.set(http::field::access_control_allow_methods, "GET, POST, DELETE, OPTIONS");
    res.set(http::field::access_control_allow_headers, "Content-Type");
    if (r.status != 204) {
        res.set(http::field::content_type, "application/json");
        res.body() = r.body.dump();
    }
    res.keep_alive(keep_alive);
    res.prepare_payload();
    return res;
}

}  // namespace

void Server::Impl::accept_loop() {
    while (!stopping) {
        tcp::socket socket{ioc};
        beast::error_code ec;
        acceptor.accept(socket, ec);
        if (stopping) break;
        if (ec) {
            spdlog::warn("accept failed: {}", ec.message());
            continue;
        }
        std::lock_guard lock(mu);
        workers.emplace_back([this, s = std::move(socket)]() mutable { serve(std::move(s)); });
    }
}

void Server::Impl::serve(tcp::socket socket) {
    const int fd = socket.native_handle();
    {
        std::lock_guard lock(mu);
        if (stopping) return;
        open_fds.insert(fd);
    }
    beast::error_code ec;
    beast::flat_buffer buffer;
    for (;;) {
        http::request<http::string_body> req;
        http::read(socket, buffer, req, ec);
        if (ec) break;

        if (websocket::is_upgrade(req)) {
            const std::string target(req.target());
            const auto id = events_session_id(target);
            auto session = id ? core.find(*id) : nullptr;
            if (!session) {
                http::write(socket, make_response({404, {{"error", "not-found"}, {"message", "no event stream " + target}}},
                                                  req.version(), false),
                            ec);
                break;
            }
            websocket::stream<tcp::socket&> ws{socket};
            ws.accept(req, ec);
            if (!ec) stream_events(ws, *session, since_param(target));
            break;
        }

        const auto r = core.handle(std::string(req.method_string()), std::string(req.target()), req.body());
        http::write(socket, make_response(r, req.version(), req.keep_alive()), ec);
        if (ec || !req.keep_alive()) break;
    }
    socket.shutdown(tcp::socket::shutdown_send, ec);
    std::lock_guard lock(mu);
    open_fds.erase(fd);
}

void Server::Impl::stream_events(websocket::stream<tcp::socket&>& ws, Session& s, std::uint64_t since) {
    ws.text(true);
    beast::error_code ec;
    std::uint64_t cursor = since;
    auto idle = std::chrono::steady_clock::now();
    while (!stopping && !s.closed()) {
        const auto batch = s.events_after(cursor, std::chrono::milliseconds(200));
        for (const auto& e : batch) {
            ws.write(net::buffer(to_json(e).dump()), ec);
            if (ec) return;
            cursor = e.seq;
        }
        // Inbound frames: close handshakes, pongs, ignored client messages.
        pollfd pfd{ws.next_layer().native_handle(), POLLIN, 0};
        if (::poll(&pfd, 1, 0) > 0) {
            beast::flat_buffer discard;
            ws.read(discard, ec);
            if (ec) return;  // includes websocket::error::closed; Beast already answered the close
        }
        if (!batch.empty()) {
            idle = std::chrono::steady_clock::now();
        } else if (std::chrono::steady_clock::now() - idle > std::chrono::seconds(10)) {
            // Detects clients that went away without a close frame.
            ws.ping({}, ec);
            if (ec) return;
            idle = std::chrono::steady_clock::now();
        }
    }
    ws.close(websocket::close_code::normal, ec);
}

Server::Server(ServiceCore& core, const std::string& address, unsigned short port) : impl_(std::make_unique<Impl>(core)) {
    const tcp::endpoint ep{net::ip::make_address(address), port};
    impl_->acceptor.open(ep.protocol());
    impl_->acceptor.set_option(net::socket_base::reuse_address(true));
    impl_->acceptor.bind(ep);
    impl_->acceptor.listen();
    port_ = impl_->acceptor.local_endpoint().port();
}

Server::~Server() { stop(); }

void Server::start() {
    impl_->accept_thread = std::thread([this] { impl_->accept_loop(); });
}

void Server::stop() {
    if (!impl_ || impl_->stopping.exchange(true)) return;
    // Wake the blocking accept with a throwaway connection.
    if (impl_->accept_thread.joinable()) {
        beast::error_code ec;
        tcp::socket poke{impl_->ioc};
        poke.connect({net::ip::make_address("127.0.0.1"), port_}, ec);
        impl_->accept_thread.join();
    }
    {
        std::lock_guard lock(impl_->mu);
        for (int fd : impl_->open_fds) ::shutdown(fd, SHUT_RDWR);
    }
    std::vector<std::thread> workers;
    {
        std::lock_guard lock(impl_->mu);
        workers.swap(impl_->workers);
    }
    for (auto& t : workers) t.join();
    beast::error_code ec;
    impl_->acceptor.close(ec);
}

void run_server(const std::string& address, unsigned short port) {
    ServiceCore core;
    Server server(core, address, port);
    spdlog::info("listening on {}:{}", address, server.port());
    server.start();
    for (;;) std::this_thread::sleep_for(std::chrono::hours(24));
}

}  // namespace taa
