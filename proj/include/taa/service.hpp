#pragma once

// Session-oriented tutoring service. ServiceCore is transport-free: it maps
// (method, target, body) to (status, JSON) and keeps per-session event logs.
// run_server/Server put it behind HTTP + WebSocket (Boost.Beast).

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "taa/harness.hpp"

namespace taa {

struct ServiceResponse {
    int status = 200;
    nlohmann::json body;
};

struct Event {
    std::uint64_t seq = 0;
    std::string type;
    nlohmann::json payload;
};

nlohmann::json to_json(const Event& e);

class Session {
public:
    Session(std::string id, ExperimentConfig config);

    const std::string& id() const { return id_; }

    /// Appends to the log; sequence numbers start at 1 and never skip.
    void publish(std::string type, nlohmann::json payload);
    /// Events with seq > since, waiting up to `timeout` for the first one.
    /// Returns empty on timeout or once the session is closed.
    std::vector<Event> events_after(std::uint64_t since, std::chrono::milliseconds timeout);
    std::uint64_t last_seq() const;
    void close();
    bool closed() const { return closed_; }

    std::mutex state_mu;         // guards trainer
    std::atomic<bool> busy{false};  // single-writer flag; contention is a 409
    Trainer trainer;

private:
    std::string id_;
    mutable std::mutex log_mu_;
    std::condition_variable log_cv_;
    std::vector<Event> log_;
    std::atomic<bool> closed_{false};
};

class ServiceCore {
public:
    ServiceCore() = default;

    /// `target` is the request path with an optional query string.
    ServiceResponse handle(const std::string& method, const std::string& target, const std::string& body);

    std::shared_ptr<Session> find(const std::string& id) const;
    std::size_t session_count() const;

private:
    ServiceResponse create_session(const std::string& body);
    ServiceResponse delete_session(const std::string& id);
    ServiceResponse get_state(Session& s);
    ServiceResponse get_graph(Session& s, bool full);
    ServiceResponse step_episodes(Session& s, const nlohmann::json& body);
    ServiceResponse post_scene(Session& s, const nlohmann::json& body);
    ServiceResponse post_instruction(Session& s, const nlohmann::json& body);
    ServiceResponse hme_propose(Session& s, const nlohmann::json& body);

    mutable std::mutex mu_;
    std::map<std::string, std::shared_ptr<Session>> sessions_;
    std::uint64_t next_id_ = 1;
};

/// Path of a WebSocket event stream: "/sessions/{id}/events".
std::optional<std::string> events_session_id(const std::string& target);
/// Value of `since` in the query string, 0 when absent.
std::uint64_t since_param(const std::string& target);

/// Blocking HTTP + WebSocket server, one thread per connection.
class Server {
public:
    /// Port 0 picks a free port; see port().
    Server(ServiceCore& core, const std::string& address, unsigned short port);
    ~Server();

    unsigned short port() const { return port_; }
    void start();  // accept loop on a background thread
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    unsigned short port_ = 0;
};

/// Serves until the process is terminated.
void run_server(const std::string& address, unsigned short port);

}  // namespace taa
