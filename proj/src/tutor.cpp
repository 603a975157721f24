#include "taa/tutor.hpp"

#include <deque>

#include "taa/error.hpp"

namespace taa {

TutorModel make_tutor(std::shared_ptr<const GoalGraph> full, double beta, const Configuration& initial) {
    if (!(beta >= 0.0 && beta <= 1.0)) throw Error(ErrorKind::invalid_config, "beta must lie in [0, 1]");
    TutorModel m;
    m.full = std::move(full);
    m.beta = beta;
    m.believed_discovered.insert(initial);
    return m;
}

void observe(TutorModel& model, const EpisodeOutcome& outcome) {
    model.believed_discovered.insert(outcome.newly_discovered.begin(), outcome.newly_discovered.end());
    model.believed_discovered.insert(outcome.trajectory.begin(), outcome.trajectory.end());
}

std::optional<FrontierPair> propose_hme_goals(const TutorModel& model, Rng& rng) {
    const auto pairs = frontier_pairs(*model.full, model.believed_discovered);
    if (pairs.empty()) return std::nullopt;
    return pairs[rng.index(pairs.size())];
}

std::string_view to_string(EpisodeMode m) { return m == EpisodeMode::social ? "social" : "autotelic"; }

EpisodeMode schedule(const TutorModel& model, Rng& rng) {
    return rng.bernoulli(model.beta) ? EpisodeMode::social : EpisodeMode::autotelic;
}

// ------------------------------------------------------------------- scenes

nlohmann::json to_json(const SceneIntervention& s) {
    switch (s.kind) {
        case SceneIntervention::Kind::random_scatter: return {{"strategy", "random_scatter"}};
        case SceneIntervention::Kind::pre_stacked: return {{"strategy", "pre_stacked"}, {"k", s.stack_height}};
        case SceneIntervention::Kind::near_goal:
            return {{"strategy", "near_goal"}, {"goal", to_json(*s.goal)}, {"distance", s.distance}};
    }
    return {};
}

SceneIntervention intervention_from_json(int n_blocks, const nlohmann::json& j) {
    try {
        const auto name = j.at("strategy").get<std::string>();
        if (name == "random_scatter") return SceneIntervention::random_scatter();
        if (name == "pre_stacked") return SceneIntervention::pre_stacked(j.value("k", 2));
        if (name == "near_goal") {
            return SceneIntervention::near_goal(config_from_json(n_blocks, j.at("goal")), j.value("distance", 1));
        }
        throw Error(ErrorKind::parse, "unknown scene strategy '" + name + "'");
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::parse, std::string("malformed scene intervention: ") + e.what());
    }
}

namespace {

bool all_singles(const Scene& s) {
    for (const auto& cluster : s.clusters) {
        for (const auto& st : cluster) {
            if (st.kind != Structure::Kind::single) return false;
        }
    }
    return true;
}

// Exactly one stack of height k, everything else single.
bool one_stack_of(const Scene& s, int k) {
    int stacks = 0;
    for (const auto& cluster : s.clusters) {
        for (const auto& st : cluster) {
            if (st.kind == Structure::Kind::pyramid) return false;
            if (st.kind == Structure::Kind::stack) {
                if (static_cast<int>(st.blocks.size()) != k) return false;
                ++stacks;
            }
        }
    }
    return stacks == 1;
}

const std::vector<Scene>& scenes_of(int n_blocks) {
    static const std::vector<std::vector<Scene>> all = [] {
        std::vector<std::vector<Scene>> v(kMaxBlocks + 1);
        for (int n = kMinBlocks; n <= kMaxBlocks; ++n) v[n] = enumerate_scenes(n);
        return v;
    }();
    require_supported_size(n_blocks);
    return all[n_blocks];
}

template <class Pred>
Scene pick(int n_blocks, Rng& rng, Pred keep) {
    std::vector<const Scene*> pool;
    for (const auto& s : scenes_of(n_blocks)) {
        if (keep(s)) pool.push_back(&s);
    }
    return *pool[rng.index(pool.size())];
}

}  // namespace

Scene set_scene(const SceneIntervention& iv, int n_blocks, Rng& rng, const GoalGraph* full) {
    switch (iv.kind) {
        case SceneIntervention::Kind::random_scatter: return pick(n_blocks, rng, all_singles);
        case SceneIntervention::Kind::pre_stacked: {
            if (iv.stack_height < 2 || iv.stack_height > n_blocks) {
                throw Error(ErrorKind::infeasible_intervention,
                            "cannot pre-stack " + std::to_string(iv.stack_height) + " of " +
                                std::to_string(n_blocks) + " blocks");
            }
            return pick(n_blocks, rng, [&](const Scene& s) { return one_stack_of(s, iv.stack_height); });
        }
        case SceneIntervention::Kind::near_goal: {
            if (!full || full->n_blocks() != n_blocks) {
                throw Error(ErrorKind::invalid_config, "near_goal needs the configuration graph");
            }
            if (!iv.goal || !full->contains(*iv.goal)) {
                throw Error(ErrorKind::infeasible_intervention,
                            "near_goal target " + (iv.goal ? iv.goal->bits() : std::string("<none>")) +
                                " is not a valid configuration");
            }
            if (iv.distance < 0) throw Error(ErrorKind::infeasible_intervention, "near_goal distance is negative");
            // BFS ball around the goal
            std::vector<int> dist(full->size(), -1);
            std::deque<int> queue{full->id(*iv.goal)};
            dist[queue.front()] = 0;
            std::vector<int> ball;
            while (!queue.empty()) {
                const int u = queue.front();
                queue.pop_front();
                ball.push_back(u);
                if (dist[u] == iv.distance) continue;
                for (int v : full->adjacent(u)) {
                    if (dist[v] < 0) {
                        dist[v] = dist[u] + 1;
                        queue.push_back(v);
                    }
                }
            }
            std::sort(ball.begin(), ball.end());
            return *realize(full->node(ball[rng.index(ball.size())]));
        }
    }
    throw Error(ErrorKind::invalid_config, "unknown scene strategy");
}

std::optional<Sentence> describe(const Configuration& before, const Configuration& after, const Inventory& inventory,
                                 Rng& rng) {
    std::vector<int> changed;
    for (int i = 0; i < before.size(); ++i) {
        if (before.get(i) != after.get(i)) changed.push_back(i);
    }
    if (changed.empty()) return std::nullopt;
    const int i = changed[rng.index(changed.size())];
    const auto options = inventory.for_transformation({PredicateId::from_index(before.n_blocks(), i), after.get(i)});
    if (options.empty()) return std::nullopt;
    return *options[rng.index(options.size())];
}

SocialEpisode run_social_episode(TutorModel& model, LearnerState& learner, const FrontierPair& pair,
                                 const Scene& initial, const CompetenceModel& competence, int max_moves, Rng& rng,
                                 const EpisodeObserver* observer) {
    SocialEpisode ep{pair, run_episode(learner, *model.full, initial, pair.frontier, competence, max_moves, rng, observer),
                     std::nullopt, false};
    observe(model, ep.frontier);
    if (!ep.frontier.success) return ep;

    ep.beyond = run_episode(learner, *model.full, ep.frontier.final_scene, pair.beyond, competence, max_moves, rng,
                            observer);
    observe(model, *ep.beyond);
    ep.internalized = internalize(learner, pair);
    model.believed_discovered.insert(pair.frontier);
    model.believed_discovered.insert(pair.beyond);
    return ep;
}

}  // namespace taa
