#include "taa/goal_graph.hpp"

#include <algorithm>
#include <deque>
#include <limits>

namespace taa {

GoalGraph::GoalGraph(int n_blocks, std::vector<Configuration> sorted_nodes, std::vector<std::vector<NodeId>> adjacency)
    : n_blocks_(n_blocks), nodes_(std::move(sorted_nodes)), adjacency_(std::move(adjacency)) {
    for (NodeId i = 0; i < static_cast<NodeId>(nodes_.size()); ++i) index_.emplace(nodes_[i], i);
    for (auto& adj : adjacency_) std::sort(adj.begin(), adj.end());
}

std::size_t GoalGraph::edge_count() const {
    std::size_t total = 0;
    for (const auto& adj : adjacency_) total += adj.size();
    return total / 2;
}

std::optional<GoalGraph::NodeId> GoalGraph::find(const Configuration& c) const {
    if (auto it = index_.find(c); it != index_.end()) return it->second;
    return std::nullopt;
}

GoalGraph::NodeId GoalGraph::id(const Configuration& c) const {
    if (auto found = find(c)) return *found;
    throw Error(ErrorKind::unknown_node, "configuration " + c.bits() + " is not a graph node");
}

GoalGraph GoalGraph::induced(const ConfigSet& keep) const {
    std::vector<Configuration> nodes(keep.begin(), keep.end());
    std::unordered_map<NodeId, NodeId> remap;
    for (NodeId i = 0; i < static_cast<NodeId>(nodes.size()); ++i) remap.emplace(id(nodes[i]), i);
    std::vector<std::vector<NodeId>> adjacency(nodes.size());
    for (const auto& [old_id, new_id] : remap) {
        for (NodeId nb : adjacency_[old_id]) {
            if (auto it = remap.find(nb); it != remap.end()) adjacency[new_id].push_back(it->second);
        }
    }
    return GoalGraph(n_blocks_, std::move(nodes), std::move(adjacency));
}

nlohmann::json GoalGraph::to_json() const {
    nlohmann::json nodes = nlohmann::json::array();
    nlohmann::json edges = nlohmann::json::array();
    for (NodeId i = 0; i < static_cast<NodeId>(nodes_.size()); ++i) {
        nodes.push_back(nodes_[i].bits());
        for (NodeId j : adjacency_[i]) {
            if (i < j) edges.push_back({i, j});
        }
    }
    return {{"n_blocks", n_blocks_}, {"nodes", nodes}, {"edges", edges}};
}

GoalGraph build_full_graph(int n_blocks) {
    require_supported_size(n_blocks);
    const auto scenes = enumerate_scenes(n_blocks);
    ConfigSet configs;
    for (const auto& s : scenes) configs.insert(extract_config(s));

    std::vector<Configuration> nodes(configs.begin(), configs.end());
    std::unordered_map<Configuration, GoalGraph::NodeId> index;
    for (int i = 0; i < static_cast<int>(nodes.size()); ++i) index.emplace(nodes[i], i);

    // Scenes and configurations are in bijection, so one realizing scene per
    // node witnesses all of its edges.
    std::vector<std::vector<GoalGraph::NodeId>> adjacency(nodes.size());
    for (int i = 0; i < static_cast<int>(nodes.size()); ++i) {
        const Scene scene = *realize(nodes[i]);
        for (const auto& move : legal_moves(scene)) {
            const auto next = extract_config(apply_move(scene, move));
            if (next == nodes[i]) continue;
            adjacency[i].push_back(index.at(next));
        }
        std::sort(adjacency[i].begin(), adjacency[i].end());
        adjacency[i].erase(std::unique(adjacency[i].begin(), adjacency[i].end()), adjacency[i].end());
    }
    // No symmetrization: reversibility of the move grammar makes the
    // adjacency symmetric, and the tests check that it does.
    return GoalGraph(n_blocks, std::move(nodes), std::move(adjacency));
}

ConfigSet neighbors(const GoalGraph& graph, const Configuration& c) {
    ConfigSet out;
    for (auto j : graph.adjacent(graph.id(c))) out.insert(graph.node(j));
    return out;
}

std::optional<Path> shortest_path(const GoalGraph& graph, const Configuration& from, const Configuration& to,
                                  const std::function<bool(GoalGraph::NodeId)>& allowed) {
    const auto src = graph.id(from);
    const auto dst = graph.id(to);
    if (src == dst) return Path{from};
    if (allowed && !allowed(dst)) return std::nullopt;

    // Distances to the destination, then a greedy forward walk that always
    // takes the smallest neighbour one step closer.
    constexpr int kUnseen = std::numeric_limits<int>::max();
    std::vector<int> dist(graph.size(), kUnseen);
    std::deque<GoalGraph::NodeId> queue{dst};
    dist[dst] = 0;
    while (!queue.empty() && dist[src] == kUnseen) {
        const auto u = queue.front();
        queue.pop_front();
        for (auto v : graph.adjacent(u)) {
            if (dist[v] != kUnseen) continue;
            if (v != src && allowed && !allowed(v)) continue;
            dist[v] = dist[u] + 1;
            queue.push_back(v);
        }
    }
    if (dist[src] == kUnseen) return std::nullopt;

    Path path{from};
    auto u = src;
    while (u != dst) {
        for (auto v : graph.adjacent(u)) {
            if (dist[v] == dist[u] - 1) {
                u = v;
                break;
            }
        }
        path.push_back(graph.node(u));
    }
    return path;
}

std::optional<Path> decompose(const GoalGraph& graph, const Configuration& current, const Configuration& goal) {
    auto path = shortest_path(graph, current, goal);
    if (!path) return std::nullopt;
    path->erase(path->begin());
    return path;
}

std::vector<FrontierPair> frontier_pairs(const GoalGraph& full, const ConfigSet& discovered) {
    std::vector<FrontierPair> out;
    for (const auto& f : discovered) {
        for (auto j : full.adjacent(full.id(f))) {
            const auto& b = full.node(j);
            if (!discovered.contains(b)) out.push_back({f, b});
        }
    }
    return out;
}

nlohmann::json to_json(const FrontierPair& pair) {
    return {{"frontier", pair.frontier.bits()}, {"beyond", pair.beyond.bits()}};
}

FrontierPair frontier_pair_from_json(int n_blocks, const nlohmann::json& j) {
    try {
        return {config_from_json(n_blocks, j.at("frontier")), config_from_json(n_blocks, j.at("beyond"))};
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::parse, std::string("malformed frontier pair: ") + e.what());
    }
}

}  // namespace taa
