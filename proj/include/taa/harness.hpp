#pragma once

// Training loop, evaluation setups, social-rate sweep and scene-setting
// ablation. Everything is a pure function of (config, seed).

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "taa/goal_graph.hpp"
#include "taa/language.hpp"
#include "taa/learner.hpp"
#include "taa/tutor.hpp"

namespace taa {

struct ExperimentConfig {
    int n_blocks = 3;
    int episodes = 1000;
    int max_moves = 10;
    CompetenceModel competence;
    double epsilon = 0.2;
    Curriculum curriculum = Curriculum::uniform;
    double beta = 0.0;
    SceneIntervention scene_strategy;
    std::uint64_t seed = 0;
    std::string output;

    int lp_window = 20;
    double lp_floor = 0.05;
    int mastery_streak = 3;
    int rehearsal_every = 5;  // every R-th autotelic episode rehearses; 0 disables
    bool describe = true;     // tutor narrates transitions for grounding induction
    bool stop_on_full_discovery = false;
    bool wall_clock = false;  // off keeps metrics byte-reproducible

    LearnerSettings learner_settings() const;
    /// Throws ErrorKind::invalid_config naming the offending field.
    void validate() const;

    friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

nlohmann::json to_json(const ExperimentConfig& c);
/// Missing keys keep their defaults; unknown keys are rejected.
ExperimentConfig experiment_config_from_json(const nlohmann::json& j);
ExperimentConfig load_experiment_config(const std::filesystem::path& file);

enum class RunMode { scheduled, autotelic, social };
RunMode run_mode_from_string(std::string_view s);

struct MetricsRecord {
    int episode = 0;
    std::string mode;  // social | autotelic | instructed
    bool rehearsal = false;
    Configuration goal;
    bool success = false;
    int moves = 0;
    std::size_t discovered = 0;
    std::size_t newly_discovered = 0;
    std::optional<double> wall_clock_ms;

    friend bool operator==(const MetricsRecord&, const MetricsRecord&) = default;
};

nlohmann::json to_json(const MetricsRecord& r);
MetricsRecord metrics_record_from_json(int n_blocks, const nlohmann::json& j);

/// Live hooks for the service's event stream.
struct TrainerHooks {
    std::function<void(EpisodeMode mode, const Configuration& goal)> on_episode_started;
    std::function<void(const FrontierPair&)> on_pair_internalized;
    EpisodeObserver episode;
};

/// One learner, one tutor, one grounding table, stepped one episode at a time.
class Trainer {
public:
    explicit Trainer(ExperimentConfig config);

    /// Runs one episode. autotelic/social bypass the tutor's schedule; a
    /// social episode with no frontier left falls back to autotelic. `pair`
    /// replaces the tutor's own proposal.
    MetricsRecord step(RunMode mode = RunMode::scheduled, const TrainerHooks* hooks = nullptr,
                       const FrontierPair* pair = nullptr);

    /// The next episode starts from this scene instead of the strategy's.
    void set_scene(const Scene& scene);
    void apply_intervention(const SceneIntervention& iv);

    /// Instruction following from the current scene, with the induced
    /// grounding table. Uses a stream separate from episodes.
    InstructionResult instruct(const Expression& expr, int attempts, const EpisodeObserver* observer = nullptr);
    std::optional<FrontierPair> propose();

    const ExperimentConfig& config() const { return config_; }
    const GoalGraph& graph() const { return *graph_; }
    const LearnerState& learner() const { return learner_; }
    const TutorModel& tutor() const { return tutor_; }
    const GroundingTable& grounding() const { return grounding_; }
    const Inventory& inventory() const { return *inventory_; }
    /// Scene the next episode or instruction starts from.
    const Scene& scene() const { return scene_; }
    int episodes_run() const { return episode_; }
    bool fully_discovered() const { return learner_.discovered.size() == graph_->size(); }

private:
    void narrate(const EpisodeOutcome& outcome);
    Scene next_initial_scene();

    ExperimentConfig config_;
    std::shared_ptr<const GoalGraph> graph_;
    std::shared_ptr<const Inventory> inventory_;
    Rng rng_;
    Rng describe_rng_;
    std::uint64_t instruction_count_ = 0;
    LearnerState learner_;
    TutorModel tutor_;
    GroundingTable grounding_;
    Scene scene_;
    bool scene_pending_ = true;
    int episode_ = 0;
    int autotelic_count_ = 0;
};

std::shared_ptr<const GoalGraph> shared_graph(int n_blocks);
std::shared_ptr<const Inventory> shared_inventory(int n_blocks);

/// Trained agent as consumed by the evaluations.
struct Snapshot {
    ExperimentConfig config;
    LearnerState learner;
};

nlohmann::json to_json(const Snapshot& s);
Snapshot snapshot_from_json(const nlohmann::json& j);

struct TrainingResult {
    std::vector<MetricsRecord> records;
    Snapshot snapshot;
    std::size_t converged_sentences = 0;
};

nlohmann::json summary_json(const TrainingResult& r);

/// With config.output set, writes metrics.jsonl, summary.json and
/// snapshot.json there.
TrainingResult run_training(const ExperimentConfig& config);

struct EvalResult {
    double rate = 0.0;
    double stderr_ = 0.0;  // over sentences/expressions/agents
    std::size_t trials = 0;
};

/// Every sentence `trials` times from a fresh RandomScatter scene.
EvalResult eval_transition(const Snapshot& s, int attempts, std::uint64_t seed, int trials = 5);
/// With satisfiable_only, expressions whose grounding from the initial scene
/// is empty are resampled.
EvalResult eval_expression(const Snapshot& s, int attempts, std::uint64_t seed, int n_expressions = 500,
                           bool satisfiable_only = false);

/// Per agent and sequence: random sentences in order, no reset, stop at the
/// first failure. Returns the mean count of successes.
EvalResult eval_sequence(const std::vector<Snapshot>& agents, std::uint64_t seed, int seq_len = 20,
                         int sequences_per_agent = 1, int attempts = 5);

/// E[min(streak, len)] for i.i.d. successes with probability q.
double truncated_geometric_mean(double q, int len);

void write_eval_csv(const std::filesystem::path& file, const std::vector<std::pair<std::string, int>>& setups,
                    const std::vector<EvalResult>& results);

struct SweepRow {
    double beta = 0.0;
    std::vector<int> episodes;  // per seed, budget when censored
    int censored = 0;
    double mean = 0.0;
    double stderr_ = 0.0;
};

/// Episodes until discovered equals the full node set, capped at
/// base.episodes. Seeds run in parallel.
std::vector<SweepRow> sweep_beta(const ExperimentConfig& base, const std::vector<double>& betas, int seeds,
                                 unsigned threads = 0);
nlohmann::json to_json(const SweepRow& r);

struct AblationRow {
    SceneIntervention strategy;
    std::vector<int> first_stack2;  // per seed; budget + 1 when censored
    std::vector<int> first_stack3;
};

/// Configurations with a block directly on another / a three-block tower.
bool has_stack2(const Configuration& c);
bool has_stack3(const Configuration& c);

std::vector<AblationRow> ablation_scene_setting(const ExperimentConfig& base,
                                                const std::vector<SceneIntervention>& strategies, int seeds,
                                                unsigned threads = 0);
nlohmann::json to_json(const AblationRow& r);

/// One-sided sign test: P(X >= wins) for X ~ Bin(wins + losses, 1/2).
double sign_test_p(int wins, int losses);

struct Calibration {
    CompetenceModel competence;
    double transition1 = 0.0;
    int iterations = 0;
};

/// Bisects p_max (p0 tied to it by the base ratio) until the trained
/// agents' mean eval_transition(1) is within a quarter band of the middle of [lo, hi].
Calibration calibrate(const ExperimentConfig& base, int seeds, double lo = 0.85, double hi = 0.93,
                      int max_iterations = 20);

/// Runs fn(i) for i in [0, n) on a small thread pool.
void parallel_for(int n, const std::function<void(int)>& fn, unsigned threads = 0);

}  // namespace taa
