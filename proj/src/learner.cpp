#include "taa/learner.hpp"

#include <algorithm>
#include <cmath>

#include <spdlog/spdlog.h>

namespace taa {

double CompetenceModel::probability(std::int64_t practice) const {
    return p0 + (p_max - p0) * (1.0 - std::exp(-static_cast<double>(practice) / tau));
}

void CompetenceModel::validate() const {
    if (!(p0 >= 0.0 && p0 <= p_max && p_max <= 1.0)) {
        throw Error(ErrorKind::invalid_config, "competence: need 0 <= p0 <= p_max <= 1");
    }
    if (!(tau > 0.0)) throw Error(ErrorKind::invalid_config, "competence: tau must be positive");
}

std::string_view to_string(Curriculum c) {
    switch (c) {
        case Curriculum::uniform: return "uniform";
        case Curriculum::learning_progress: return "learning_progress";
        case Curriculum::random_config: return "random_config";
    }
    return "uniform";
}

Curriculum curriculum_from_string(std::string_view s) {
    if (s == "uniform") return Curriculum::uniform;
    if (s == "learning_progress") return Curriculum::learning_progress;
    if (s == "random_config") return Curriculum::random_config;
    throw Error(ErrorKind::invalid_config, "unknown curriculum '" + std::string(s) + "'");
}

// ------------------------------------------------------------------- state

std::int64_t LearnerState::practice(const Configuration& from, const Configuration& to) const {
    auto it = edge_stats.find({from, to});
    return it == edge_stats.end() ? 0 : it->second.attempts;
}

void LearnerState::record_goal(const Configuration& goal, bool success) {
    auto& history = goal_stats[goal];
    history.push_back(success);
    while (static_cast<int>(history.size()) > 2 * settings.lp_window) history.pop_front();
}

double LearnerState::learning_progress(const Configuration& goal) const {
    auto it = goal_stats.find(goal);
    if (it == goal_stats.end()) return 0.0;
    const auto& h = it->second;
    const int n = static_cast<int>(h.size());
    const int recent_n = std::min(n, settings.lp_window);
    const int older_n = n - recent_n;
    auto rate = [&](int begin, int count) {
        if (count == 0) return 0.0;
        int wins = 0;
        for (int i = begin; i < begin + count; ++i) wins += h[i] ? 1 : 0;
        return static_cast<double>(wins) / count;
    };
    return std::abs(rate(older_n, recent_n) - rate(0, older_n));
}

bool LearnerState::has_unmastered_pair() const {
    return std::any_of(internalized.begin(), internalized.end(), [](const auto& p) { return !p.mastered; });
}

LearnerState make_learner(int n_blocks, const LearnerSettings& settings, std::uint64_t seed,
                          const Configuration& initial) {
    LearnerState s;
    s.n_blocks = n_blocks;
    s.settings = settings;
    s.rng_seed = seed;
    s.discovered.insert(initial);
    return s;
}

// ------------------------------------------------------------ goal sampling

Configuration sample_goal(const LearnerState& state, const GoalGraph& full, Curriculum curriculum, Rng& rng) {
    if (curriculum != Curriculum::random_config && state.discovered.empty()) {
        spdlog::warn("sample_goal: no discovered goals, falling back to a random configuration");
        curriculum = Curriculum::random_config;
    }
    switch (curriculum) {
        case Curriculum::random_config: return full.node(static_cast<int>(rng.index(full.size())));
        case Curriculum::uniform: {
            auto it = state.discovered.begin();
            std::advance(it, rng.index(state.discovered.size()));
            return *it;
        }
        case Curriculum::learning_progress: {
            std::vector<const Configuration*> goals;
            std::vector<double> weights;
            double total = 0.0;
            for (const auto& g : state.discovered) {
                goals.push_back(&g);
                weights.push_back(state.learning_progress(g) + state.settings.lp_floor);
                total += weights.back();
            }
            if (!(total > 0.0)) return *goals[rng.index(goals.size())];
            double u = rng.uniform() * total;
            for (std::size_t i = 0; i < goals.size(); ++i) {
                if (u < weights[i]) return *goals[i];
                u -= weights[i];
            }
            // Rounding can leave u just above the last weight.
            for (std::size_t i = goals.size(); i-- > 0;) {
                if (weights[i] > 0.0) return *goals[i];
            }
        }
    }
    return *state.discovered.begin();
}

// ----------------------------------------------------------------- episodes

std::optional<Path> plan(const LearnerState& state, const GoalGraph& full, const Configuration& current,
                         const Configuration& goal) {
    const auto here = full.id(current);
    const auto& adj = full.adjacent(here);
    return shortest_path(full, current, goal, [&](GoalGraph::NodeId id) {
        return state.discovered.contains(full.node(id)) || std::binary_search(adj.begin(), adj.end(), id);
    });
}

namespace {

std::optional<Move> move_to(const Scene& scene, const Configuration& next) {
    for (const auto& m : legal_moves(scene)) {
        if (extract_config(apply_move(scene, m)) == next) return m;
    }
    return std::nullopt;
}

}  // namespace

EpisodeOutcome run_episode(LearnerState& state, const GoalGraph& full, const Scene& initial,
                           const Configuration& goal, const CompetenceModel& competence, int max_moves, Rng& rng,
                           const EpisodeObserver* observer) {
    if (goal.n_blocks() != state.n_blocks || !full.contains(goal)) {
        throw Error(ErrorKind::invalid_goal, "goal " + goal.bits() + " is not a valid configuration");
    }
    if (max_moves < 1) throw Error(ErrorKind::invalid_config, "max_moves must be at least 1");

    EpisodeOutcome out;
    out.goal = goal;
    Scene scene = initial;
    Configuration current = extract_config(scene);
    out.trajectory.push_back(current);

    auto discover = [&](const Configuration& c) {
        if (state.discovered.insert(c).second) {
            out.newly_discovered.insert(c);
            if (observer && observer->on_discovered) observer->on_discovered(c);
        }
    };
    discover(current);

    ConfigSet credited;
    while (current != goal && out.moves_used < max_moves) {
        std::optional<Move> move;
        Configuration intended;
        const bool explore = rng.bernoulli(state.settings.epsilon);
        if (!explore) {
            if (auto p = plan(state, full, current, goal)) {
                intended = (*p)[1];
                move = move_to(scene, intended);
            }
        }
        if (!move) {
            // Exploration, or no known way to the goal.
            const auto moves = legal_moves(scene);
            move = moves[rng.index(moves.size())];
            intended = extract_config(apply_move(scene, *move));
        }

        auto& stats = state.edge_stats[{current, intended}];
        const bool ok = rng.bernoulli(competence.probability(stats.attempts));
        ++stats.attempts;
        ++out.moves_used;
        if (ok) {
            ++stats.successes;
            scene = apply_move(scene, *move);
        }
        const Configuration before = current;
        current = extract_config(scene);
        if (observer && observer->on_move) observer->on_move(before, *move, ok, current);
        out.trajectory.push_back(current);
        if (ok) {
            discover(current);
            // Hindsight: a configuration reached on the way counts as an
            // achieved goal.
            if (current != goal && credited.insert(current).second) state.record_goal(current, true);
        }
    }
    out.success = current == goal;
    state.record_goal(goal, out.success);
    out.final_scene = scene;
    return out;
}

bool internalize(LearnerState& state, const FrontierPair& pair) {
    state.discovered.insert(pair.frontier);
    state.discovered.insert(pair.beyond);
    for (const auto& p : state.internalized) {
        if (p.pair == pair) return false;
    }
    InternalizedPair entry{pair};
    // Already mastered if its last outcomes form a full success streak.
    if (auto it = state.goal_stats.find(pair.beyond); it != state.goal_stats.end()) {
        const auto& h = it->second;
        const int m = state.settings.mastery_streak;
        if (static_cast<int>(h.size()) >= m && std::all_of(h.end() - m, h.end(), [](bool b) { return b; })) {
            entry.mastered = true;
            entry.streak = m;
        }
    }
    state.internalized.push_back(entry);
    return true;
}

std::optional<Rehearsal> rehearse(LearnerState& state, const GoalGraph& full, const CompetenceModel& competence,
                                  int max_moves, Rng& rng, const EpisodeObserver* observer) {
    auto it = std::find_if(state.internalized.begin(), state.internalized.end(),
                           [](const auto& p) { return !p.mastered; });
    if (it == state.internalized.end()) return std::nullopt;
    const std::size_t slot = static_cast<std::size_t>(it - state.internalized.begin());
    const FrontierPair pair = it->pair;

    const auto start = realize(pair.frontier);
    if (!start) throw Error(ErrorKind::invalid_goal, "internalized frontier " + pair.frontier.bits() + " is invalid");
    Rehearsal r{pair, run_episode(state, full, *start, pair.beyond, competence, max_moves, rng, observer)};

    auto& entry = state.internalized[slot];
    entry.streak = r.outcome.success ? entry.streak + 1 : 0;
    if (entry.streak >= state.settings.mastery_streak) {
        entry.mastered = true;
        r.now_mastered = true;
    }
    return r;
}

double estimated_competence(const LearnerState& state, const GoalGraph& full, const Configuration& current,
                            const Configuration& goal, const CompetenceModel& competence) {
    const auto p = plan(state, full, current, goal);
    if (!p) return 0.0;
    double prob = 1.0;
    for (std::size_t k = 1; k < p->size(); ++k) prob *= competence.probability(state.practice((*p)[k - 1], (*p)[k]));
    return prob;
}

// --------------------------------------------------------------------- json

nlohmann::json to_json(const CompetenceModel& c) { return {{"p0", c.p0}, {"p_max", c.p_max}, {"tau", c.tau}}; }

CompetenceModel competence_from_json(const nlohmann::json& j) {
    CompetenceModel c;
    c.p0 = j.value("p0", c.p0);
    c.p_max = j.value("p_max", c.p_max);
    c.tau = j.value("tau", c.tau);
    c.validate();
    return c;
}

nlohmann::json to_json(const LearnerState& s) {
    nlohmann::json discovered = nlohmann::json::array();
    for (const auto& c : s.discovered) discovered.push_back(c.bits());
    nlohmann::json edges = nlohmann::json::array();
    for (const auto& [key, st] : s.edge_stats) {
        edges.push_back({{"from", key.first.bits()}, {"to", key.second.bits()}, {"attempts", st.attempts},
                         {"successes", st.successes}});
    }
    nlohmann::json goals = nlohmann::json::array();
    for (const auto& [g, h] : s.goal_stats) {
        std::string hist;
        for (bool b : h) hist.push_back(b ? '1' : '0');
        goals.push_back({{"goal", g.bits()}, {"history", hist}});
    }
    nlohmann::json pairs = nlohmann::json::array();
    for (const auto& p : s.internalized) {
        pairs.push_back({{"frontier", p.pair.frontier.bits()}, {"beyond", p.pair.beyond.bits()},
                         {"mastered", p.mastered}, {"streak", p.streak}});
    }
    return {{"n_blocks", s.n_blocks},
            {"rng_seed", s.rng_seed},
            {"settings",
             {{"epsilon", s.settings.epsilon},
              {"lp_window", s.settings.lp_window},
              {"lp_floor", s.settings.lp_floor},
              {"mastery_streak", s.settings.mastery_streak}}},
            {"discovered", discovered},
            {"edge_stats", edges},
            {"goal_stats", goals},
            {"internalized", pairs}};
}

LearnerState learner_from_json(const nlohmann::json& j) {
    try {
        LearnerState s;
        s.n_blocks = j.at("n_blocks").get<int>();
        require_supported_size(s.n_blocks);
        s.rng_seed = j.value("rng_seed", std::uint64_t{0});
        if (j.contains("settings")) {
            const auto& st = j.at("settings");
            s.settings.epsilon = st.value("epsilon", s.settings.epsilon);
            s.settings.lp_window = st.value("lp_window", s.settings.lp_window);
            s.settings.lp_floor = st.value("lp_floor", s.settings.lp_floor);
            s.settings.mastery_streak = st.value("mastery_streak", s.settings.mastery_streak);
        }
        for (const auto& c : j.at("discovered")) s.discovered.insert(config_from_json(s.n_blocks, c));
        for (const auto& e : j.value("edge_stats", nlohmann::json::array())) {
            s.edge_stats[{config_from_json(s.n_blocks, e.at("from")), config_from_json(s.n_blocks, e.at("to"))}] =
                EdgeStats{e.at("attempts").get<std::int64_t>(), e.at("successes").get<std::int64_t>()};
        }
        for (const auto& g : j.value("goal_stats", nlohmann::json::array())) {
            auto& h = s.goal_stats[config_from_json(s.n_blocks, g.at("goal"))];
            for (char ch : g.at("history").get<std::string>()) h.push_back(ch == '1');
        }
        for (const auto& p : j.value("internalized", nlohmann::json::array())) {
            s.internalized.push_back({{config_from_json(s.n_blocks, p.at("frontier")),
                                       config_from_json(s.n_blocks, p.at("beyond"))},
                                      p.value("mastered", false),
                                      p.value("streak", 0)});
        }
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::parse, std::string("malformed learner snapshot: ") + e.what());
    }
}

nlohmann::json to_json(const EpisodeOutcome& o) {
    nlohmann::json traj = nlohmann::json::array();
    for (const auto& c : o.trajectory) traj.push_back(c.bits());
    nlohmann::json fresh = nlohmann::json::array();
    for (const auto& c : o.newly_discovered) fresh.push_back(c.bits());
    return {{"goal", o.goal.bits()}, {"success", o.success},         {"moves", o.moves_used},
            {"trajectory", traj},    {"newly_discovered", fresh}};
}

}  // namespace taa
