#pragma once

// Instruction sentences and their grounding as sets of configurations.
// A sentence names one predicate transformation; logical combinations are
// evaluated as set algebra over the goals the learner has discovered.

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "taa/goal_graph.hpp"
#include "taa/learner.hpp"
#include "taa/rng.hpp"
#include "taa/semantics.hpp"

namespace taa {

struct Transformation {
    PredicateId predicate;
    bool target = true;

    friend bool operator==(const Transformation&, const Transformation&) = default;
    friend auto operator<=>(const Transformation&, const Transformation&) = default;
};

struct Sentence {
    std::string text;
    Transformation transformation;  // oracle meaning, hidden from the learner
};

class Inventory {
public:
    Inventory() = default;
    Inventory(int n_blocks, std::vector<Sentence> sentences);

    int n_blocks() const { return n_blocks_; }
    std::size_t size() const { return sentences_.size(); }
    const std::vector<Sentence>& sentences() const { return sentences_; }
    const Sentence& at(std::size_t i) const { return sentences_.at(i); }

    const Sentence* find(std::string_view text) const;
    /// Throws ErrorKind::unknown_sentence listing the closest entries.
    const Sentence& get(std::string_view text) const;
    std::vector<const Sentence*> for_transformation(const Transformation& t) const;
    /// Closest surface forms by edit distance, for error messages.
    std::vector<std::string> nearest(std::string_view text, std::size_t k = 3) const;

private:
    int n_blocks_ = 0;
    std::vector<Sentence> sentences_;
    std::map<std::string, std::size_t, std::less<>> by_text_;
};

/// Template expansion: verb synonyms x argument orders x polarity.
std::vector<Sentence> generate_sentences(int n_blocks);

std::filesystem::path default_data_dir();

/// n = 3 loads the shipped `sentences_n3.json`; other sizes expand the same
/// templates. Throws ErrorKind::inventory_load on a malformed file.
Inventory build_inventory(int n_blocks, const std::filesystem::path& data_dir = default_data_dir());
Inventory load_inventory(int n_blocks, const std::filesystem::path& file);
nlohmann::json to_json(const std::vector<Sentence>& sentences);

/// Configurations of `universe` where the predicate holds the target value.
/// With exclude_satisfied_current, `current` is dropped when it already
/// satisfies the target: a sentence asks for a change.
ConfigSet oracle_ground(const Transformation& t, const Configuration& current, const ConfigSet& universe,
                        bool exclude_satisfied_current = true);

/// Symbolic induction of sentence meanings from (before, sentence, after)
/// observations. Each sentence keeps a candidate set that only shrinks.
class GroundingTable {
public:
    explicit GroundingTable(int n_blocks = 3) : n_blocks_(n_blocks) {}

    /// Throws ErrorKind::inconsistent_data when the example contradicts the
    /// previous ones, and ErrorKind::invalid_config when before == after.
    void induce(const Configuration& before, std::string_view text, const Configuration& after);

    bool converged(std::string_view text) const;
    std::optional<Transformation> lookup(std::string_view text) const;
    /// Every transformation when the sentence has never been observed.
    std::set<Transformation> candidates(std::string_view text) const;
    std::size_t converged_count() const;

    nlohmann::json to_json() const;

    friend bool operator==(const GroundingTable&, const GroundingTable&) = default;

private:
    int n_blocks_;
    std::map<std::string, std::set<Transformation>, std::less<>> candidates_;
};

struct Expression {
    enum class Op { leaf, and_, or_, not_ };

    Op op = Op::leaf;
    std::string text;  // leaf only
    std::vector<Expression> children;

    static Expression leaf(std::string text) { return {Op::leaf, std::move(text), {}}; }
    static Expression all(Expression a, Expression b) { return {Op::and_, {}, {std::move(a), std::move(b)}}; }
    static Expression any(Expression a, Expression b) { return {Op::or_, {}, {std::move(a), std::move(b)}}; }
    static Expression negate(Expression a) { return {Op::not_, {}, {std::move(a)}}; }

    int depth() const;
    std::string to_string() const;

    friend bool operator==(const Expression&, const Expression&) = default;
};

/// Wire form: {"op": "leaf", "text": ...} | {"op": "and"|"or", "children": [a, b]} |
/// {"op": "not", "children": [a]}. A bare string is a leaf.
nlohmann::json to_json(const Expression& e);
Expression expression_from_json(const nlohmann::json& j);

/// Uniform node kind over {leaf, and, or, not}, forced leaves at max_depth,
/// leaves uniform over the inventory.
Expression sample_expression(const Inventory& inventory, Rng& rng, int max_depth = 2);

/// Resolves leaf sentences either through the oracle meaning or, when a
/// table is given, through induced meanings.
struct LeafGrounding {
    const Inventory* inventory = nullptr;
    const GroundingTable* table = nullptr;
    bool exclude_satisfied_current = true;

    Transformation resolve(std::string_view text) const;
};

/// Leaf -> oracle_ground over `discovered`; and -> intersection;
/// or -> union; not -> complement within `discovered`.
ConfigSet ground_expression(const Expression& expr, const Configuration& current, const ConfigSet& discovered,
                            const LeafGrounding& grounding);

struct GoalChoice {
    Configuration goal;
    double competence = 0.0;
    bool desperate = false;  // nothing reachable; lexicographic pick
};

/// Easiest candidate: highest estimated competence, then shortest plan,
/// then smallest bit string. Throws ErrorKind::no_compatible_goal when empty.
GoalChoice select_goal(const ConfigSet& candidates, const LearnerState& learner, const GoalGraph& full,
                       const Configuration& current, const CompetenceModel& competence);

struct InstructionAttempt {
    std::optional<Configuration> goal;  // nothing when no compatible goal was left
    std::optional<EpisodeOutcome> outcome;
    std::size_t compatible = 0;
};

struct InstructionResult {
    bool success = false;
    std::vector<InstructionAttempt> attempts;
    Scene final_scene;
};

struct InstructionSettings {
    int attempts = 5;
    int max_moves = 10;
};

/// Try-again loop without scene reset: ground from the current
/// configuration, drop goals that already failed for this instruction and,
/// with exclude_satisfied_current, the current configuration itself; pick
/// the easiest, run an episode.
InstructionResult follow_instruction(const Expression& expr, LearnerState& learner, const GoalGraph& full,
                                     const Scene& scene, const LeafGrounding& grounding,
                                     const CompetenceModel& competence, const InstructionSettings& settings, Rng& rng,
                                     const EpisodeObserver* observer = nullptr);

nlohmann::json to_json(const InstructionResult& r);

}  // namespace taa
