#pragma once

// The social partner: keeps a copy of the learner's discovered graph,
// schedules social episodes, proposes frontier/beyond goal pairs, arranges
// scenes and names what changed.

#include <memory>
#include <optional>
#include <string_view>

#include <json.hpp>

#include "taa/goal_graph.hpp"
#include "taa/language.hpp"
#include "taa/learner.hpp"
#include "taa/rng.hpp"
#include "taa/semantics.hpp"

namespace taa {

struct TutorModel {
    std::shared_ptr<const GoalGraph> full;
    ConfigSet believed_discovered;
    double beta = 0.0;  // rate of social episodes

    friend bool operator==(const TutorModel& a, const TutorModel& b) {
        return a.believed_discovered == b.believed_discovered && a.beta == b.beta;
    }
};

/// Throws ErrorKind::invalid_config unless beta is in [0, 1].
TutorModel make_tutor(std::shared_ptr<const GoalGraph> full, double beta, const Configuration& initial);

void observe(TutorModel& model, const EpisodeOutcome& outcome);

/// Uniform over the frontier pairs of the believed discovered set.
std::optional<FrontierPair> propose_hme_goals(const TutorModel& model, Rng& rng);

enum class EpisodeMode { autotelic, social };
std::string_view to_string(EpisodeMode m);

EpisodeMode schedule(const TutorModel& model, Rng& rng);

struct SceneIntervention {
    enum class Kind { random_scatter, pre_stacked, near_goal };

    Kind kind = Kind::random_scatter;
    int stack_height = 2;  // pre_stacked
    std::optional<Configuration> goal;  // near_goal
    int distance = 1;  // near_goal

    static SceneIntervention random_scatter() { return {}; }
    static SceneIntervention pre_stacked(int k) { return {Kind::pre_stacked, k, std::nullopt, 1}; }
    static SceneIntervention near_goal(Configuration g, int d) { return {Kind::near_goal, 2, g, d}; }

    friend bool operator==(const SceneIntervention&, const SceneIntervention&) = default;
};

/// {"strategy": "random_scatter"} | {"strategy": "pre_stacked", "k": 2} |
/// {"strategy": "near_goal", "goal": [...], "distance": 1}
nlohmann::json to_json(const SceneIntervention& s);
SceneIntervention intervention_from_json(int n_blocks, const nlohmann::json& j);

/// Random scene for the intervention. NearGoal needs the full graph and
/// throws ErrorKind::infeasible_intervention when the goal is not a node.
Scene set_scene(const SceneIntervention& intervention, int n_blocks, Rng& rng, const GoalGraph* full = nullptr);

/// One changed predicate, uniformly, then one of its sentences, uniformly.
std::optional<Sentence> describe(const Configuration& before, const Configuration& after, const Inventory& inventory,
                                 Rng& rng);

struct SocialEpisode {
    FrontierPair pair;
    EpisodeOutcome frontier;
    std::optional<EpisodeOutcome> beyond;  // only after frontier success
    bool internalized = false;  // true when the pair was new to the learner
};

/// Frontier goal first; on success the beyond goal from where the learner
/// stands, and the pair is handed over. The tutor observes both episodes.
SocialEpisode run_social_episode(TutorModel& model, LearnerState& learner, const FrontierPair& pair,
                                 const Scene& initial, const CompetenceModel& competence, int max_moves, Rng& rng,
                                 const EpisodeObserver* observer = nullptr);

}  // namespace taa
