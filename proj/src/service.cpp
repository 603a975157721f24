#include "taa/service.hpp"

#include <charconv>

#include <spdlog/spdlog.h>

#include "taa/error.hpp"

namespace taa {

nlohmann::json to_json(const Event& e) { return {{"seq", e.seq}, {"type", e.type}, {"payload", e.payload}}; }

// ------------------------------------------------------------------ session

Session::Session(std::string id, ExperimentConfig config) : trainer(std::move(config)), id_(std::move(id)) {}

void Session::publish(std::string type, nlohmann::json payload) {
    {
        std::lock_guard lock(log_mu_);
        log_.push_back({log_.size() + 1, std::move(type), std::move(payload)});
    }
    log_cv_.notify_all();
}

std::vector<Event> Session::events_after(std::uint64_t since, std::chrono::milliseconds timeout) {
    std::unique_lock lock(log_mu_);
    log_cv_.wait_for(lock, timeout, [&] { return closed_ || log_.size() > since; });
    if (log_.size() <= since) return {};
    return {log_.begin() + static_cast<std::ptrdiff_t>(since), log_.end()};
}

std::uint64_t Session::last_seq() const {
    std::lock_guard lock(log_mu_);
    return log_.size();
}

void Session::close() {
    closed_ = true;
    log_cv_.notify_all();
}

// ------------------------------------------------------------------ helpers

namespace {

struct HttpError {
    int status;
    nlohmann::json body;
};

[[noreturn]] void fail(int status, std::string_view error, const std::string& message) {
    throw HttpError{status, {{"error", error}, {"message", message}}};
}

int status_for(ErrorKind k) {
    switch (k) {
        case ErrorKind::invalid_config:
        case ErrorKind::parse:
        case ErrorKind::dimension:
        case ErrorKind::invalid_world:
        case ErrorKind::unsupported_size:
        case ErrorKind::unknown_node: return 400;
        case ErrorKind::not_yet_grounded: return 409;
        case ErrorKind::unknown_sentence:
        case ErrorKind::invariant_violation:
        case ErrorKind::infeasible_intervention:
        case ErrorKind::illegal_move:
        case ErrorKind::invalid_goal:
        case ErrorKind::no_compatible_goal:
        case ErrorKind::inconsistent_data: return 422;
        case ErrorKind::inventory_load: return 500;
    }
    return 500;
}

nlohmann::json parse_body(const std::string& body) {
    if (body.find_first_not_of(" \t\r\n") == std::string::npos) return nlohmann::json::object();
    try {
        return nlohmann::json::parse(body);
    } catch (const nlohmann::json::exception& e) {
        fail(400, "parse", std::string("malformed JSON: ") + e.what());
    }
}

std::vector<std::string> split_path(std::string_view path) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < path.size()) {
        if (path[i] == '/') {
            ++i;
            continue;
        }
        const auto j = path.find('/', i);
        out.emplace_back(path.substr(i, j == std::string_view::npos ? std::string_view::npos : j - i));
        if (j == std::string_view::npos) break;
        i = j;
    }
    return out;
}

std::optional<std::string> query_param(const std::string& target, std::string_view key) {
    const auto q = target.find('?');
    if (q == std::string::npos) return std::nullopt;
    std::string_view rest(target);
    rest.remove_prefix(q + 1);
    while (!rest.empty()) {
        const auto amp = rest.find('&');
        const auto item = rest.substr(0, amp);
        const auto eq = item.find('=');
        if (item.substr(0, eq) == key) {
            return std::string(eq == std::string_view::npos ? std::string_view{} : item.substr(eq + 1));
        }
        if (amp == std::string_view::npos) break;
        rest.remove_prefix(amp + 1);
    }
    return std::nullopt;
}

bool truthy(const std::optional<std::string>& v) { return v && (*v == "1" || *v == "true" || v->empty()); }

// Single-writer guard: a second mutating request while one runs is a 409.
class WriteGuard {
public:
    explicit WriteGuard(Session& s) : s_(s) {
        if (s_.busy.exchange(true)) fail(409, "busy", "session " + s_.id() + " is busy");
    }
    ~WriteGuard() { s_.busy = false; }
    WriteGuard(const WriteGuard&) = delete;
    WriteGuard& operator=(const WriteGuard&) = delete;

private:
    Session& s_;
};

TrainerHooks live_hooks(Session& s) {
    TrainerHooks h;
    h.on_episode_started = [&s](EpisodeMode mode, const Configuration& goal) {
        s.publish("episode_started", {{"episode", s.trainer.episodes_run()},
                                      {"mode", to_string(mode)},
                                      {"goal", goal.bits()}});
    };
    h.on_pair_internalized = [&s](const FrontierPair& p) { s.publish("pair_internalized", to_json(p)); };
    h.episode.on_move = [&s](const Configuration& from, const Move& move, bool ok, const Configuration& to) {
        s.publish("move_executed", {{"from", from.bits()}, {"move", to_json(move)}, {"success", ok}, {"to", to.bits()}});
    };
    h.episode.on_discovered = [&s](const Configuration& c) { s.publish("goal_discovered", {{"config", c.bits()}}); };
    return h;
}

nlohmann::json metric_payload(const Trainer& t) {
    return {{"episodes_run", t.episodes_run()},
            {"discovered", t.learner().discovered.size()},
            {"total_configurations", t.graph().size()},
            {"converged_sentences", t.grounding().converged_count()}};
}

void collect_leaves(const Expression& e, std::vector<std::string>& out) {
    if (e.op == Expression::Op::leaf) out.push_back(e.text);
    for (const auto& c : e.children) collect_leaves(c, out);
}

}  // namespace

std::optional<std::string> events_session_id(const std::string& target) {
    const auto path = target.substr(0, target.find('?'));
    const auto parts = split_path(path);
    if (parts.size() == 3 && parts[0] == "sessions" && parts[2] == "events") return parts[1];
    return std::nullopt;
}

std::uint64_t since_param(const std::string& target) {
    const auto v = query_param(target, "since");
    std::uint64_t n = 0;
    if (v) std::from_chars(v->data(), v->data() + v->size(), n);
    return n;
}

// ------------------------------------------------------------------ routing

std::shared_ptr<Session> ServiceCore::find(const std::string& id) const {
    std::lock_guard lock(mu_);
    const auto it = sessions_.find(id);
    return it == sessions_.end() ? nullptr : it->second;
}

std::size_t ServiceCore::session_count() const {
    std::lock_guard lock(mu_);
    return sessions_.size();
}

ServiceResponse ServiceCore::handle(const std::string& method, const std::string& target, const std::string& body) {
    try {
        const auto parts = split_path(target.substr(0, target.find('?')));
        if (method == "OPTIONS") return {204, nullptr};
        if (parts.empty()) fail(404, "not-found", "no route for " + target);
        if (parts == std::vector<std::string>{"health"} && method == "GET") return {200, {{"status", "ok"}}};
        if (parts[0] != "sessions") fail(404, "not-found", "no route for " + target);

        if (parts.size() == 1) {
            if (method == "POST") return create_session(body);
            if (method == "GET") {
                nlohmann::json ids = nlohmann::json::array();
                std::lock_guard lock(mu_);
                for (const auto& [id, _] : sessions_) ids.push_back(id);
                return {200, {{"sessions", ids}}};
            }
            fail(405, "method-not-allowed", method + " " + target);
        }

        auto session = find(parts[1]);
        if (!session) fail(404, "not-found", "unknown session " + parts[1]);
        const std::vector<std::string> rest(parts.begin() + 2, parts.end());
        auto route = [&](const char* m, std::initializer_list<const char*> path) {
            if (method != m || rest.size() != path.size()) return false;
            return std::equal(rest.begin(), rest.end(), path.begin());
        };

        if (route("DELETE", {})) return delete_session(parts[1]);
        if (route("GET", {"state"})) return get_state(*session);
        if (route("GET", {"graph"})) return get_graph(*session, truthy(query_param(target, "full")));
        if (route("POST", {"episodes"})) return step_episodes(*session, parse_body(body));
        if (route("POST", {"scene"})) return post_scene(*session, parse_body(body));
        if (route("POST", {"instruction"})) return post_instruction(*session, parse_body(body));
        if (route("POST", {"hme", "propose"})) return hme_propose(*session, parse_body(body));
        fail(404, "not-found", "no route for " + method + " " + target);
    } catch (const HttpError& e) {
        return {e.status, e.body};
    } catch (const Error& e) {
        return {status_for(e.kind()), {{"error", to_string(e.kind())}, {"message", e.what()}}};
    } catch (const std::exception& e) {
        spdlog::error("unhandled error on {} {}: {}", method, target, e.what());
        return {500, {{"error", "internal"}, {"message", e.what()}}};
    }
}

// ---------------------------------------------------------------- endpoints

ServiceResponse ServiceCore::create_session(const std::string& body) {
    auto config = experiment_config_from_json(parse_body(body));
    config.output.clear();  // sessions never write to disk
    std::string id;
    {
        std::lock_guard lock(mu_);
        id = "s" + std::to_string(next_id_++);
    }
    auto session = std::make_shared<Session>(id, config);
    {
        std::lock_guard lock(mu_);
        sessions_.emplace(id, session);
    }
    const auto& t = session->trainer;
    session->publish("session_created", {{"id", id},
                                         {"config", to_json(t.config())},
                                         {"initial", extract_config(t.scene()).bits()},
                                         {"scene", to_json(t.scene())}});
    return {201, {{"id", id}}};
}

ServiceResponse ServiceCore::delete_session(const std::string& id) {
    std::shared_ptr<Session> s;
    {
        std::lock_guard lock(mu_);
        const auto it = sessions_.find(id);
        if (it == sessions_.end()) fail(404, "not-found", "unknown session " + id);
        s = it->second;
        sessions_.erase(it);
    }
    s->close();
    return {200, {{"deleted", id}}};
}

ServiceResponse ServiceCore::get_state(Session& s) {
    std::lock_guard lock(s.state_mu);
    const auto& t = s.trainer;
    nlohmann::json believed = nlohmann::json::array();
    for (const auto& c : t.tutor().believed_discovered) believed.push_back(c.bits());
    return {200,
            {{"id", s.id()},
             {"episodes_run", t.episodes_run()},
             {"config", to_json(t.config())},
             {"scene", to_json(t.scene())},
             {"current_config", extract_config(t.scene()).bits()},
             {"learner", to_json(t.learner())},
             {"tutor", {{"beta", t.tutor().beta}, {"believed_discovered", believed}}},
             {"grounding",
              {{"converged", t.grounding().converged_count()},
               {"sentences", t.inventory().size()},
               {"table", t.grounding().to_json()}}},
             {"last_seq", s.last_seq()}}};
}

ServiceResponse ServiceCore::get_graph(Session& s, bool full) {
    std::lock_guard lock(s.state_mu);
    const auto& t = s.trainer;
    auto j = t.graph().induced(t.learner().discovered).to_json();
    nlohmann::json frontier = nlohmann::json::array();
    ConfigSet seen;
    for (const auto& p : frontier_pairs(t.graph(), t.tutor().believed_discovered)) {
        if (seen.insert(p.frontier).second) frontier.push_back(p.frontier.bits());
    }
    j["frontier"] = frontier;
    if (full) j["full"] = t.graph().to_json();
    return {200, j};
}

ServiceResponse ServiceCore::step_episodes(Session& s, const nlohmann::json& body) {
    RunMode mode = RunMode::scheduled;
    int count = 1;
    try {
        mode = run_mode_from_string(body.value("mode", std::string("scheduled")));
        count = body.value("count", 1);
    } catch (const nlohmann::json::exception& e) {
        fail(400, "parse", std::string("episodes request: ") + e.what());
    }
    if (count < 0) fail(400, "invalid-config", "count: must be non-negative");

    WriteGuard guard(s);
    std::lock_guard lock(s.state_mu);
    auto& t = s.trainer;
    const auto hooks = live_hooks(s);
    nlohmann::json records = nlohmann::json::array();
    int social = 0;
    std::optional<std::string> reason;
    for (int i = 0; i < count; ++i) {
        if (mode == RunMode::social && frontier_pairs(t.graph(), t.tutor().believed_discovered).empty()) {
            reason = "space fully discovered";
            break;
        }
        const auto rec = t.step(mode, &hooks);
        social += rec.mode == "social";
        auto j = to_json(rec);
        s.publish("episode_finished", j);
        s.publish("metric_update", metric_payload(t));
        records.push_back(std::move(j));
    }
    nlohmann::json out{{"episodes", records},
                       {"count", records.size()},
                       {"social_episodes", social},
                       {"discovered", t.learner().discovered.size()}};
    if (reason) out["reason"] = *reason;
    return {200, out};
}

ServiceResponse ServiceCore::post_scene(Session& s, const nlohmann::json& body) {
    WriteGuard guard(s);
    std::lock_guard lock(s.state_mu);
    auto& t = s.trainer;
    const int n = t.config().n_blocks;
    if (body.contains("intervention") || body.contains("strategy")) {
        t.apply_intervention(intervention_from_json(n, body.contains("intervention") ? body.at("intervention") : body));
    } else {
        t.set_scene(scene_from_json(n, body.contains("scene") ? body.at("scene") : body));
    }
    const nlohmann::json payload{{"scene", to_json(t.scene())}, {"config", extract_config(t.scene()).bits()}};
    s.publish("scene_set", payload);
    return {200, payload};
}

ServiceResponse ServiceCore::post_instruction(Session& s, const nlohmann::json& body) {
    if (!body.contains("expression")) fail(400, "parse", "instruction request needs an 'expression'");
    const auto expr = expression_from_json(body.at("expression"));
    int attempts = 5;
    try {
        attempts = body.value("attempts", 5);
    } catch (const nlohmann::json::exception& e) {
        fail(400, "parse", std::string("attempts: ") + e.what());
    }
    if (attempts < 1) fail(400, "invalid-config", "attempts: must be at least 1");

    WriteGuard guard(s);
    std::lock_guard lock(s.state_mu);
    auto& t = s.trainer;
    std::vector<std::string> leaves;
    collect_leaves(expr, leaves);
    nlohmann::json unknown = nlohmann::json::object();
    for (const auto& text : leaves) {
        if (!t.inventory().find(text)) unknown[text] = t.inventory().nearest(text);
    }
    if (!unknown.empty()) {
        throw HttpError{422, {{"error", "unknown-sentence"},
                              {"message", "sentence not in the inventory"},
                              {"nearest", unknown}}};
    }
    for (const auto& text : leaves) {
        if (!t.grounding().converged(text)) {
            throw HttpError{409, {{"error", "not-yet-grounded"},
                                  {"message", "not yet grounded: '" + text + "'"},
                                  {"sentence", text}}};
        }
    }

    const auto hooks = live_hooks(s);
    const auto result = t.instruct(expr, attempts, &hooks.episode);
    for (std::size_t i = 0; i < result.attempts.size(); ++i) {
        const auto& a = result.attempts[i];
        nlohmann::json p{{"mode", "instructed"}, {"attempt", i + 1}, {"compatible", a.compatible}};
        p["goal"] = a.goal ? nlohmann::json(a.goal->bits()) : nlohmann::json(nullptr);
        p["success"] = a.outcome && a.outcome->success;
        p["moves"] = a.outcome ? a.outcome->moves_used : 0;
        if (!a.goal) p["reason"] = "no compatible goal";
        s.publish("episode_finished", p);
    }
    s.publish("metric_update", metric_payload(t));
    auto out = to_json(result);
    out["final_scene"] = to_json(result.final_scene);
    out["expression"] = expr.to_string();
    if (!result.success && std::none_of(result.attempts.begin(), result.attempts.end(),
                                        [](const auto& a) { return a.goal.has_value(); })) {
        out["reason"] = "no compatible goal";
    }
    return {200, out};
}

ServiceResponse ServiceCore::hme_propose(Session& s, const nlohmann::json& body) {
    bool run = false;
    std::optional<FrontierPair> requested;
    try {
        run = body.value("run", false);
        if (body.contains("pair")) requested = frontier_pair_from_json(s.trainer.config().n_blocks, body.at("pair"));
    } catch (const nlohmann::json::exception& e) {
        fail(400, "parse", std::string("propose request: ") + e.what());
    }

    WriteGuard guard(s);
    std::lock_guard lock(s.state_mu);
    auto& t = s.trainer;
    const auto pair = requested ? requested : t.propose();
    if (!pair) return {200, {{"pair", nullptr}, {"reason", "space fully discovered"}}};
    nlohmann::json out{{"pair", to_json(*pair)}};
    if (run) {
        const auto hooks = live_hooks(s);
        const auto rec = t.step(RunMode::social, &hooks, &*pair);
        auto j = to_json(rec);
        s.publish("episode_finished", j);
        s.publish("metric_update", metric_payload(t));
        out["episode"] = j;
    }
    return {200, out};
}

}  // namespace taa
