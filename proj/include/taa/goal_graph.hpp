#pragma once

#include <functional>
#include <optional>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "taa/semantics.hpp"

namespace taa {

/// Configuration graph: nodes are valid configurations, an edge joins two
/// configurations one block move apart. Node ids follow lexicographic bit
/// string order, so the smallest id is also the smallest bit string.
/// Immutable after construction.
class GoalGraph {
public:
    using NodeId = int;

    GoalGraph() = default;
    /// Builds from an explicit adjacency; used for subgraphs and tests.
    GoalGraph(int n_blocks, std::vector<Configuration> sorted_nodes, std::vector<std::vector<NodeId>> adjacency);

    int n_blocks() const { return n_blocks_; }
    std::size_t size() const { return nodes_.size(); }
    std::size_t edge_count() const;

    const std::vector<Configuration>& nodes() const { return nodes_; }
    const Configuration& node(NodeId id) const { return nodes_.at(id); }
    const std::vector<NodeId>& adjacent(NodeId id) const { return adjacency_.at(id); }

    bool contains(const Configuration& c) const { return index_.contains(c); }
    std::optional<NodeId> find(const Configuration& c) const;
    /// Throws ErrorKind::unknown_node.
    NodeId id(const Configuration& c) const;

    /// Subgraph induced by the given configurations (all must be nodes).
    GoalGraph induced(const ConfigSet& keep) const;

    /// {nodes: [bit strings, sorted], edges: [[i, j], ...] with i < j}
    nlohmann::json to_json() const;

private:
    int n_blocks_ = 0;
    std::vector<Configuration> nodes_;
    std::vector<std::vector<NodeId>> adjacency_;
    std::unordered_map<Configuration, NodeId> index_;
};

struct FrontierPair {
    Configuration frontier;
    Configuration beyond;

    friend bool operator==(const FrontierPair&, const FrontierPair&) = default;
    friend auto operator<=>(const FrontierPair&, const FrontierPair&) = default;
};

using Path = std::vector<Configuration>;

GoalGraph build_full_graph(int n_blocks);

ConfigSet neighbors(const GoalGraph& graph, const Configuration& c);

/// Minimal node sequence from -> to (both inclusive), or nothing when
/// disconnected. Among shortest paths the one whose successive nodes are
/// lexicographically smallest is returned. `allowed`, when given, restricts
/// intermediate and end nodes (the start node is always allowed).
std::optional<Path> shortest_path(const GoalGraph& graph, const Configuration& from, const Configuration& to,
                                  const std::function<bool(GoalGraph::NodeId)>& allowed = {});

/// Sub-goal sequence: the shortest path without its first node. Empty when
/// current == goal, nothing when unreachable.
std::optional<Path> decompose(const GoalGraph& graph, const Configuration& current, const Configuration& goal);

std::vector<FrontierPair> frontier_pairs(const GoalGraph& full, const ConfigSet& discovered);

nlohmann::json to_json(const FrontierPair& pair);
FrontierPair frontier_pair_from_json(int n_blocks, const nlohmann::json& j);

}  // namespace taa
