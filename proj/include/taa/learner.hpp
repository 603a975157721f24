#pragma once

// The autotelic learner: goal sampling, planning over what it has seen,
// stochastic execution under a practice-driven competence curve, hindsight
// discovery and rehearsal of tutor-communicated goal pairs.

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "taa/goal_graph.hpp"
#include "taa/rng.hpp"
#include "taa/semantics.hpp"

namespace taa {

/// Per-edge success probability after k practice attempts:
/// p(k) = p0 + (p_max - p0) * (1 - exp(-k / tau)).
struct CompetenceModel {
    double p0 = 0.5;
    double p_max = 0.95;
    double tau = 10.0;

    double probability(std::int64_t practice) const;
    /// Throws ErrorKind::invalid_config unless 0 <= p0 <= p_max <= 1, tau > 0.
    void validate() const;

    friend bool operator==(const CompetenceModel&, const CompetenceModel&) = default;
};

enum class Curriculum { uniform, learning_progress, random_config };

std::string_view to_string(Curriculum c);
Curriculum curriculum_from_string(std::string_view s);

struct LearnerSettings {
    double epsilon = 0.2;
    int lp_window = 20;
    double lp_floor = 0.05;
    int mastery_streak = 3;

    friend bool operator==(const LearnerSettings&, const LearnerSettings&) = default;
};

struct EdgeStats {
    std::int64_t attempts = 0;
    std::int64_t successes = 0;

    friend bool operator==(const EdgeStats&, const EdgeStats&) = default;
};

struct InternalizedPair {
    FrontierPair pair;
    bool mastered = false;
    int streak = 0;

    friend bool operator==(const InternalizedPair&, const InternalizedPair&) = default;
};

struct LearnerState {
    int n_blocks = 3;
    LearnerSettings settings;
    std::uint64_t rng_seed = 0;
    ConfigSet discovered;
    std::map<std::pair<Configuration, Configuration>, EdgeStats> edge_stats;
    /// Oldest first; capped at two LP windows.
    std::map<Configuration, std::deque<bool>> goal_stats;
    std::vector<InternalizedPair> internalized;

    std::int64_t practice(const Configuration& from, const Configuration& to) const;
    void record_goal(const Configuration& goal, bool success);
    /// |recent-window success rate - older-window success rate|; an empty
    /// window counts as rate 0.
    double learning_progress(const Configuration& goal) const;
    bool has_unmastered_pair() const;

    friend bool operator==(const LearnerState&, const LearnerState&) = default;
};

struct EpisodeOutcome {
    Configuration goal;
    bool success = false;
    /// Configuration after every move attempt, starting with the initial one.
    std::vector<Configuration> trajectory;
    int moves_used = 0;
    ConfigSet newly_discovered;
    Scene final_scene;
};

/// Optional hooks, used by the service to stream live events.
struct EpisodeObserver {
    std::function<void(const Configuration& from, const Move& move, bool success, const Configuration& to)> on_move;
    std::function<void(const Configuration& discovered)> on_discovered;
};

/// Fresh learner whose only known goal is the starting configuration.
LearnerState make_learner(int n_blocks, const LearnerSettings& settings, std::uint64_t seed,
                          const Configuration& initial);

Configuration sample_goal(const LearnerState& state, const GoalGraph& full, Curriculum curriculum, Rng& rng);

/// Shortest plan over the full move grammar restricted to discovered
/// configurations plus the current configuration's neighbours.
std::optional<Path> plan(const LearnerState& state, const GoalGraph& full, const Configuration& current,
                         const Configuration& goal);

EpisodeOutcome run_episode(LearnerState& state, const GoalGraph& full, const Scene& initial,
                           const Configuration& goal, const CompetenceModel& competence, int max_moves, Rng& rng,
                           const EpisodeObserver* observer = nullptr);

/// Returns true when the pair was new. Both configurations become known goals.
bool internalize(LearnerState& state, const FrontierPair& pair);

struct Rehearsal {
    FrontierPair pair;
    EpisodeOutcome outcome;
    bool now_mastered = false;
};

/// Trains the oldest unmastered internalized pair once; nothing when all are
/// mastered.
std::optional<Rehearsal> rehearse(LearnerState& state, const GoalGraph& full, const CompetenceModel& competence,
                                  int max_moves, Rng& rng, const EpisodeObserver* observer = nullptr);

/// Product of per-edge success probabilities along the learner's plan; 0 if
/// it has no plan.
double estimated_competence(const LearnerState& state, const GoalGraph& full, const Configuration& current,
                            const Configuration& goal, const CompetenceModel& competence);

nlohmann::json to_json(const LearnerState& state);
LearnerState learner_from_json(const nlohmann::json& j);
nlohmann::json to_json(const EpisodeOutcome& outcome);
nlohmann::json to_json(const CompetenceModel& c);
CompetenceModel competence_from_json(const nlohmann::json& j);

}  // namespace taa
