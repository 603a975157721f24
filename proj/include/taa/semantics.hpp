#pragma once

// Blocks, close/above predicates, configurations, scenes and one-block moves.

#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "taa/error.hpp"

namespace taa {

using BlockId = int;

inline constexpr int kMinBlocks = 2;
inline constexpr int kMaxBlocks = 5;

/// 3 * C(n, 2): C(n,2) close pairs plus n(n-1) ordered above pairs.
int predicate_count(int n_blocks);

/// Display name for a block index ("red", "green", "blue", ...).
std::string_view block_name(BlockId b);
std::optional<BlockId> block_from_name(std::string_view name);

void require_supported_size(int n_blocks);

struct PredicateId {
    enum class Kind : std::uint8_t { close, above };

    Kind kind;
    BlockId a;  // close: a < b; above: a is above b
    BlockId b;

    auto operator<=>(const PredicateId&) const = default;

    static PredicateId close(BlockId a, BlockId b);
    static PredicateId above(BlockId a, BlockId b) { return {Kind::above, a, b}; }

    /// Canonical linear index: close pairs in lexicographic order, then the
    /// ordered above pairs in lexicographic order.
    int index(int n_blocks) const;
    static PredicateId from_index(int n_blocks, int index);

    std::string name() const;  // "close(red,green)" / "above(red,green)"
    static PredicateId parse(std::string_view text);
};

/// Binary vector of predicate values. Predicate i is stored at word bit
/// (count - 1 - i) so that comparing words orders configurations like their
/// bit strings.
class Configuration {
public:
    Configuration() = default;
    explicit Configuration(int n_blocks, std::uint32_t word = 0);

    static Configuration zero(int n_blocks) { return Configuration(n_blocks); }
    /// Parses "111110100"; throws ErrorKind::dimension on a length mismatch.
    static Configuration from_bits(int n_blocks, std::string_view bits);

    int n_blocks() const { return n_blocks_; }
    int size() const { return count_; }
    std::uint32_t word() const { return word_; }

    bool get(int index) const { return (word_ >> (count_ - 1 - index)) & 1U; }
    bool get(const PredicateId& p) const { return get(p.index(n_blocks_)); }
    void set(int index, bool value);
    void set(const PredicateId& p, bool value) { set(p.index(n_blocks_), value); }

    bool close(BlockId a, BlockId b) const;
    bool above(BlockId a, BlockId b) const { return get(PredicateId::above(a, b)); }

    std::string bits() const;

    friend bool operator==(const Configuration&, const Configuration&) = default;
    friend std::strong_ordering operator<=>(const Configuration& x, const Configuration& y) {
        if (auto c = x.n_blocks_ <=> y.n_blocks_; c != 0) return c;
        return x.word_ <=> y.word_;
    }

private:
    std::uint8_t n_blocks_ = 0;
    std::uint8_t count_ = 0;
    std::uint32_t word_ = 0;
};

using ConfigSet = std::set<Configuration>;

struct Structure {
    enum class Kind : std::uint8_t { single, stack, pyramid };

    Kind kind;
    /// Bottom to top. For a pyramid: the two base blocks (sorted), then the top.
    std::vector<BlockId> blocks;

    BlockId top() const { return blocks.back(); }

    static Structure single(BlockId b) { return {Kind::single, {b}}; }
    static Structure stack(std::vector<BlockId> bottom_to_top);
    static Structure pyramid(BlockId top, BlockId base_a, BlockId base_b);

    friend bool operator==(const Structure&, const Structure&) = default;
    friend auto operator<=>(const Structure&, const Structure&) = default;
};

/// Physical realization of a configuration: structures grouped into
/// proximity clusters. Canonical form sorts structures inside each cluster
/// and clusters by their contents; all library functions return canonical
/// scenes, so == is scene identity.
struct Scene {
    int n_blocks = 0;
    std::vector<std::vector<Structure>> clusters;

    friend bool operator==(const Scene&, const Scene&) = default;
};

/// Throws ErrorKind::invariant_violation naming the broken rule.
void validate(const Scene& scene);
Scene canonical(Scene scene);

/// Every block alone in its own cluster.
Scene scattered_scene(int n_blocks);

Configuration extract_config(const Scene& scene);

/// Scene realizing the configuration, or nothing if none exists. The scene
/// is unique up to canonical form.
std::optional<Scene> realize(const Configuration& config);

bool is_valid(const Configuration& config);
/// Also checks the bit length against the world size (ErrorKind::dimension).
bool is_valid(const Configuration& config, int n_blocks);

/// All scenes of the block grammar, canonical and deduplicated.
std::vector<Scene> enumerate_scenes(int n_blocks);
ConfigSet enumerate_valid_configs(int n_blocks);

struct Placement {
    enum class Kind : std::uint8_t { alone_far, join_cluster, on_top, bridge };

    Kind kind;
    int cluster = -1;     // join_cluster: index into the pre-move scene's clusters
    BlockId target = -1;  // on_top / bridge
    BlockId target2 = -1; // bridge

    friend bool operator==(const Placement&, const Placement&) = default;
};

struct Move {
    BlockId block;
    Placement placement;

    friend bool operator==(const Move&, const Move&) = default;

    static Move alone_far(BlockId b) { return {b, {Placement::Kind::alone_far}}; }
    static Move join_cluster(BlockId b, int c) { return {b, {Placement::Kind::join_cluster, c}}; }
    static Move on_top(BlockId b, BlockId t) { return {b, {Placement::Kind::on_top, -1, t}}; }
    static Move bridge(BlockId b, BlockId x, BlockId y) {
        return {b, {Placement::Kind::bridge, -1, std::min(x, y), std::max(x, y)}};
    }
};

std::string to_string(const Move& move);

/// True when no block rests on b.
bool is_clear(const Scene& scene, BlockId b);

/// Moves of one clear block. Targets are judged on the scene with the moved
/// block lifted, so sliding a block from one support onto a neighbour is a
/// single move. Placements that reproduce the same scene are excluded.
/// Order is deterministic: by block, then AloneFar, JoinCluster, OnTop, Bridge.
std::vector<Move> legal_moves(const Scene& scene);

/// Throws ErrorKind::illegal_move naming the failed precondition.
Scene apply_move(const Scene& scene, const Move& move);

// Wire forms.
nlohmann::json to_json(const Configuration& config);  // integer array
Configuration config_from_json(int n_blocks, const nlohmann::json& j);  // bit string or array
nlohmann::json to_json(const Scene& scene);
Scene scene_from_json(int n_blocks, const nlohmann::json& j);
nlohmann::json to_json(const Move& move);

}  // namespace taa

template <>
struct std::hash<taa::Configuration> {
    std::size_t operator()(const taa::Configuration& c) const noexcept {
        return std::hash<std::uint64_t>{}((std::uint64_t{static_cast<std::uint8_t>(c.n_blocks())} << 32) | c.word());
    }
};
