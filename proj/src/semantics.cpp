#include "taa/semantics.hpp"

#include <algorithm>
#include <array>
#include <numeric>
#include <sstream>

namespace taa {

namespace {

constexpr std::array<std::string_view, kMaxBlocks> kBlockNames = {"red", "green", "blue", "yellow", "purple"};

std::string block_label(BlockId b) {
    if (b >= 0 && b < kMaxBlocks) return std::string(kBlockNames[b]);
    return std::to_string(b);
}

[[noreturn]] void violation(const std::string& what) { throw Error(ErrorKind::invariant_violation, what); }
[[noreturn]] void illegal(const std::string& what) { throw Error(ErrorKind::illegal_move, what); }

BlockId min_block(const Structure& s) { return *std::min_element(s.blocks.begin(), s.blocks.end()); }

BlockId min_block(const std::vector<Structure>& cluster) {
    BlockId m = kMaxBlocks;
    for (const auto& s : cluster) m = std::min(m, min_block(s));
    return m;
}

struct Location {
    int cluster = -1;
    int structure = -1;
    int height = -1;  // position inside Structure::blocks
};

Location locate(const Scene& scene, BlockId b) {
    for (int c = 0; c < static_cast<int>(scene.clusters.size()); ++c) {
        const auto& cluster = scene.clusters[c];
        for (int s = 0; s < static_cast<int>(cluster.size()); ++s) {
            const auto& blocks = cluster[s].blocks;
            for (int h = 0; h < static_cast<int>(blocks.size()); ++h) {
                if (blocks[h] == b) return {c, s, h};
            }
        }
    }
    return {};
}

// Scene with clear block b lifted out. Whatever supported b stays in place.
Scene lift(const Scene& scene, BlockId b) {
    const Location loc = locate(scene, b);
    Scene out = scene;
    auto& cluster = out.clusters[loc.cluster];
    Structure& s = cluster[loc.structure];
    switch (s.kind) {
        case Structure::Kind::single:
            cluster.erase(cluster.begin() + loc.structure);
            if (cluster.empty()) out.clusters.erase(out.clusters.begin() + loc.cluster);
            break;
        case Structure::Kind::stack:
            s.blocks.pop_back();
            if (s.blocks.size() == 1) s.kind = Structure::Kind::single;
            break;
        case Structure::Kind::pyramid: {
            const BlockId x = s.blocks[0];
            const BlockId y = s.blocks[1];
            s = Structure::single(x);
            cluster.push_back(Structure::single(y));
            break;
        }
    }
    return canonical(std::move(out));
}

// Residual-scene placement; nothing when the placement is ill-formed.
enum class Fit { ok, not_clear, on_pyramid, not_single, split_clusters, bad_target };

Fit place(Scene& residual, BlockId b, const Placement& p, int residual_cluster) {
    switch (p.kind) {
        case Placement::Kind::alone_far:
            residual.clusters.push_back({Structure::single(b)});
            return Fit::ok;
        case Placement::Kind::join_cluster:
            residual.clusters[residual_cluster].push_back(Structure::single(b));
            return Fit::ok;
        case Placement::Kind::on_top: {
            const Location t = locate(residual, p.target);
            if (t.cluster < 0) return Fit::bad_target;
            Structure& s = residual.clusters[t.cluster][t.structure];
            if (s.top() != p.target) return Fit::not_clear;
            if (s.kind == Structure::Kind::pyramid) return Fit::on_pyramid;
            s.kind = Structure::Kind::stack;
            s.blocks.push_back(b);
            return Fit::ok;
        }
        case Placement::Kind::bridge: {
            const Location x = locate(residual, p.target);
            const Location y = locate(residual, p.target2);
            if (x.cluster < 0 || y.cluster < 0) return Fit::bad_target;
            if (residual.clusters[x.cluster][x.structure].kind != Structure::Kind::single ||
                residual.clusters[y.cluster][y.structure].kind != Structure::Kind::single) {
                return Fit::not_single;
            }
            if (x.cluster != y.cluster) return Fit::split_clusters;
            auto& cluster = residual.clusters[x.cluster];
            cluster.erase(cluster.begin() + std::max(x.structure, y.structure));
            cluster.erase(cluster.begin() + std::min(x.structure, y.structure));
            cluster.push_back(Structure::pyramid(b, p.target, p.target2));
            return Fit::ok;
        }
    }
    return Fit::bad_target;
}

template <class F>
void set_partitions(int m, std::vector<int>& assign, int next, int blocks_used, F&& emit) {
    if (next == m) {
        std::vector<std::vector<int>> parts(blocks_used);
        for (int i = 0; i < m; ++i) parts[assign[i]].push_back(i);
        emit(parts);
        return;
    }
    for (int k = 0; k <= blocks_used; ++k) {
        assign[next] = k;
        set_partitions(m, assign, next + 1, std::max(blocks_used, k + 1), emit);
    }
}

template <class F>
void for_each_set_partition(int m, F&& emit) {
    std::vector<int> assign(m, 0);
    set_partitions(m, assign, 0, 0, emit);
}

std::vector<Structure> structure_options(const std::vector<int>& part) {
    std::vector<Structure> out;
    if (part.size() == 1) {
        out.push_back(Structure::single(part[0]));
        return out;
    }
    std::vector<int> perm = part;
    std::sort(perm.begin(), perm.end());
    do {
        out.push_back(Structure::stack(perm));
    } while (std::next_permutation(perm.begin(), perm.end()));
    if (part.size() == 3) {
        for (int t = 0; t < 3; ++t) {
            out.push_back(Structure::pyramid(part[t], part[(t + 1) % 3], part[(t + 2) % 3]));
        }
    }
    return out;
}

}  // namespace

void require_supported_size(int n_blocks) {
    if (n_blocks < kMinBlocks || n_blocks > kMaxBlocks) {
        throw Error(ErrorKind::unsupported_size,
                    "world size " + std::to_string(n_blocks) + " outside supported range [2, 5]");
    }
}

int predicate_count(int n_blocks) {
    if (n_blocks < kMinBlocks) {
        throw Error(ErrorKind::invalid_world, "a world needs at least 2 blocks, got " + std::to_string(n_blocks));
    }
    return 3 * n_blocks * (n_blocks - 1) / 2;
}

std::string_view block_name(BlockId b) {
    if (b < 0 || b >= kMaxBlocks) throw Error(ErrorKind::invalid_world, "no block " + std::to_string(b));
    return kBlockNames[b];
}

std::optional<BlockId> block_from_name(std::string_view name) {
    for (int i = 0; i < kMaxBlocks; ++i) {
        if (kBlockNames[i] == name) return i;
    }
    return std::nullopt;
}

// ---------------------------------------------------------------- predicates

PredicateId PredicateId::close(BlockId a, BlockId b) {
    if (a == b) throw Error(ErrorKind::invalid_world, "close() needs two distinct blocks");
    return {Kind::close, std::min(a, b), std::max(a, b)};
}

int PredicateId::index(int n) const {
    if (a < 0 || b < 0 || a >= n || b >= n || a == b) {
        throw Error(ErrorKind::dimension, "predicate " + name() + " outside a " + std::to_string(n) + "-block world");
    }
    if (kind == Kind::close) {
        // Pairs (i, j) with i < a come first: sum over i of (n - 1 - i).
        return a * (2 * n - a - 1) / 2 + (b - a - 1);
    }
    const int n_close = n * (n - 1) / 2;
    return n_close + a * (n - 1) + (b < a ? b : b - 1);
}

PredicateId PredicateId::from_index(int n, int index) {
    const int n_close = n * (n - 1) / 2;
    if (index < 0 || index >= 3 * n_close) {
        throw Error(ErrorKind::dimension, "predicate index " + std::to_string(index) + " out of range");
    }
    if (index < n_close) {
        int a = 0;
        while (index >= n - 1 - a) {
            index -= n - 1 - a;
            ++a;
        }
        return {Kind::close, a, a + 1 + index};
    }
    index -= n_close;
    const int a = index / (n - 1);
    const int r = index % (n - 1);
    return {Kind::above, a, r < a ? r : r + 1};
}

std::string PredicateId::name() const {
    return std::string(kind == Kind::close ? "close(" : "above(") + block_label(a) + "," + block_label(b) + ")";
}

PredicateId PredicateId::parse(std::string_view text) {
    auto fail = [&] { throw Error(ErrorKind::parse, "bad predicate '" + std::string(text) + "'"); };
    const auto open = text.find('(');
    const auto comma = text.find(',');
    if (open == std::string_view::npos || comma == std::string_view::npos || text.back() != ')') fail();
    const auto head = text.substr(0, open);
    const auto first = block_from_name(text.substr(open + 1, comma - open - 1));
    const auto second = block_from_name(text.substr(comma + 1, text.size() - comma - 2));
    if (!first || !second || *first == *second) fail();
    if (head == "close") return close(*first, *second);
    if (head != "above") fail();
    return above(*first, *second);
}

// ------------------------------------------------------------- configuration

Configuration::Configuration(int n_blocks, std::uint32_t word)
    : n_blocks_(static_cast<std::uint8_t>(n_blocks)),
      count_(static_cast<std::uint8_t>(predicate_count(n_blocks))),
      word_(word) {
    if (n_blocks > kMaxBlocks) require_supported_size(n_blocks);
    if (count_ < 32 && (word >> count_) != 0) {
        throw Error(ErrorKind::dimension, "configuration word has bits beyond the predicate count");
    }
}

Configuration Configuration::from_bits(int n_blocks, std::string_view bits) {
    Configuration c(n_blocks);
    if (static_cast<int>(bits.size()) != c.count_) {
        throw Error(ErrorKind::dimension, "expected " + std::to_string(c.count_) + " bits, got " +
                                              std::to_string(bits.size()));
    }
    for (int i = 0; i < c.count_; ++i) {
        if (bits[i] != '0' && bits[i] != '1') throw Error(ErrorKind::parse, "bit string must contain only 0/1");
        c.set(i, bits[i] == '1');
    }
    return c;
}

void Configuration::set(int index, bool value) {
    const std::uint32_t mask = 1U << (count_ - 1 - index);
    word_ = value ? (word_ | mask) : (word_ & ~mask);
}

bool Configuration::close(BlockId a, BlockId b) const { return get(PredicateId::close(a, b)); }

std::string Configuration::bits() const {
    std::string out(count_, '0');
    for (int i = 0; i < count_; ++i) out[i] = get(i) ? '1' : '0';
    return out;
}

// --------------------------------------------------------------------- scene

Structure Structure::stack(std::vector<BlockId> bottom_to_top) {
    return {Kind::stack, std::move(bottom_to_top)};
}

Structure Structure::pyramid(BlockId top, BlockId base_a, BlockId base_b) {
    return {Kind::pyramid, {std::min(base_a, base_b), std::max(base_a, base_b), top}};
}

Scene canonical(Scene scene) {
    for (auto& cluster : scene.clusters) {
        for (auto& s : cluster) {
            if (s.kind == Structure::Kind::pyramid && s.blocks.size() == 3 && s.blocks[0] > s.blocks[1]) {
                std::swap(s.blocks[0], s.blocks[1]);
            }
        }
        std::sort(cluster.begin(), cluster.end(),
                  [](const Structure& x, const Structure& y) { return min_block(x) < min_block(y); });
    }
    std::sort(scene.clusters.begin(), scene.clusters.end(),
              [](const auto& x, const auto& y) { return min_block(x) < min_block(y); });
    return scene;
}

void validate(const Scene& scene) {
    if (scene.n_blocks < kMinBlocks || scene.n_blocks > kMaxBlocks) {
        violation("scene world size " + std::to_string(scene.n_blocks) + " unsupported");
    }
    std::vector<int> seen(scene.n_blocks, 0);
    for (const auto& cluster : scene.clusters) {
        if (cluster.empty()) violation("empty cluster");
        for (const auto& s : cluster) {
            switch (s.kind) {
                case Structure::Kind::single:
                    if (s.blocks.size() != 1) violation("single must hold exactly one block");
                    break;
                case Structure::Kind::stack:
                    if (s.blocks.size() < 2) violation("stack must hold at least two blocks");
                    break;
                case Structure::Kind::pyramid:
                    if (s.blocks.size() != 3) violation("pyramid must hold a top and two base blocks");
                    break;
            }
            for (BlockId b : s.blocks) {
                if (b < 0 || b >= scene.n_blocks) violation("block " + std::to_string(b) + " out of range");
                if (++seen[b] > 1) violation("block " + block_label(b) + " appears more than once");
            }
        }
    }
    for (int b = 0; b < scene.n_blocks; ++b) {
        if (seen[b] == 0) violation("block " + block_label(b) + " missing from scene");
    }
}

Scene scattered_scene(int n_blocks) {
    require_supported_size(n_blocks);
    Scene scene{n_blocks, {}};
    for (int b = 0; b < n_blocks; ++b) scene.clusters.push_back({Structure::single(b)});
    return scene;
}

Configuration extract_config(const Scene& scene) {
    validate(scene);
    Configuration c(scene.n_blocks);
    for (const auto& cluster : scene.clusters) {
        std::vector<BlockId> members;
        for (const auto& s : cluster) members.insert(members.end(), s.blocks.begin(), s.blocks.end());
        for (std::size_t i = 0; i < members.size(); ++i) {
            for (std::size_t j = i + 1; j < members.size(); ++j) c.set(PredicateId::close(members[i], members[j]), true);
        }
        for (const auto& s : cluster) {
            if (s.kind == Structure::Kind::pyramid) {
                c.set(PredicateId::above(s.blocks[2], s.blocks[0]), true);
                c.set(PredicateId::above(s.blocks[2], s.blocks[1]), true);
            } else {
                // Transitive within a stack: every block is above all blocks beneath it.
                for (std::size_t lo = 0; lo < s.blocks.size(); ++lo) {
                    for (std::size_t hi = lo + 1; hi < s.blocks.size(); ++hi) {
                        c.set(PredicateId::above(s.blocks[hi], s.blocks[lo]), true);
                    }
                }
            }
        }
    }
    return c;
}

std::optional<Scene> realize(const Configuration& c) {
    const int n = c.n_blocks();
    // Fast rejection: above => close, antisymmetry, transitivity (which with
    // antisymmetry also rules out cycles), and close as an equivalence.
    for (int a = 0; a < n; ++a) {
        for (int b = 0; b < n; ++b) {
            if (a == b) continue;
            if (c.above(a, b) && !c.close(a, b)) return std::nullopt;
            if (c.above(a, b) && c.above(b, a)) return std::nullopt;
            for (int d = 0; d < n; ++d) {
                if (d == a || d == b) continue;
                if (c.above(a, b) && c.above(b, d) && !c.above(a, d)) return std::nullopt;
                if (c.close(a, b) && c.close(b, d) && !c.close(a, d)) return std::nullopt;
            }
        }
    }

    // Structures are the connected components of the above relation.
    std::vector<int> component(n, -1);
    std::vector<std::vector<BlockId>> groups;
    for (int start = 0; start < n; ++start) {
        if (component[start] >= 0) continue;
        std::vector<BlockId> group{start};
        component[start] = static_cast<int>(groups.size());
        for (std::size_t i = 0; i < group.size(); ++i) {
            for (int o = 0; o < n; ++o) {
                if (o != group[i] && component[o] < 0 && (c.above(group[i], o) || c.above(o, group[i]))) {
                    component[o] = component[start];
                    group.push_back(o);
                }
            }
        }
        groups.push_back(std::move(group));
    }

    std::vector<Structure> structures;
    for (auto& group : groups) {
        if (group.size() == 1) {
            structures.push_back(Structure::single(group[0]));
            continue;
        }
        std::vector<int> below(n, 0);
        for (BlockId x : group) {
            for (BlockId y : group) below[x] += (y != x && c.above(x, y)) ? 1 : 0;
        }
        auto below_count = [&](BlockId x) { return below[x]; };
        std::sort(group.begin(), group.end(), [&](BlockId x, BlockId y) { return below[x] < below[y]; });
        bool total = true;
        for (std::size_t i = 0; i < group.size(); ++i) total = total && below_count(group[i]) == static_cast<int>(i);
        if (total) {
            structures.push_back(Structure::stack(group));
            continue;
        }
        if (group.size() == 3 && below_count(group[0]) == 0 && below_count(group[1]) == 0 && below_count(group[2]) == 2) {
            structures.push_back(Structure::pyramid(group[2], group[0], group[1]));
            continue;
        }
        return std::nullopt;
    }

    Scene scene{n, {}};
    std::vector<int> cluster_of(n, -1);
    for (const auto& s : structures) {
        const BlockId rep = s.blocks[0];
        int found = -1;
        for (int b = 0; b < n && found < 0; ++b) {
            if (b != rep && cluster_of[b] >= 0 && c.close(rep, b)) found = cluster_of[b];
        }
        if (found < 0) {
            found = static_cast<int>(scene.clusters.size());
            scene.clusters.emplace_back();
        }
        scene.clusters[found].push_back(s);
        for (BlockId b : s.blocks) cluster_of[b] = found;
    }
    scene = canonical(std::move(scene));
    if (extract_config(scene) != c) return std::nullopt;
    return scene;
}

bool is_valid(const Configuration& config) { return realize(config).has_value(); }

bool is_valid(const Configuration& config, int n_blocks) {
    if (config.n_blocks() != n_blocks) {
        throw Error(ErrorKind::dimension, "configuration has " + std::to_string(config.size()) + " bits, world expects " +
                                              std::to_string(predicate_count(n_blocks)));
    }
    return is_valid(config);
}

std::vector<Scene> enumerate_scenes(int n_blocks) {
    require_supported_size(n_blocks);
    std::vector<Scene> scenes;
    for_each_set_partition(n_blocks, [&](const std::vector<std::vector<int>>& parts) {
        std::vector<std::vector<Structure>> options;
        for (const auto& part : parts) options.push_back(structure_options(part));
        std::vector<std::size_t> pick(options.size(), 0);
        while (true) {
            std::vector<Structure> chosen;
            for (std::size_t i = 0; i < options.size(); ++i) chosen.push_back(options[i][pick[i]]);
            for_each_set_partition(static_cast<int>(chosen.size()), [&](const std::vector<std::vector<int>>& groups) {
                Scene scene{n_blocks, {}};
                for (const auto& g : groups) {
                    std::vector<Structure> cluster;
                    for (int idx : g) cluster.push_back(chosen[idx]);
                    scene.clusters.push_back(std::move(cluster));
                }
                scenes.push_back(canonical(std::move(scene)));
            });
            std::size_t i = 0;
            while (i < pick.size() && ++pick[i] == options[i].size()) pick[i++] = 0;
            if (i == pick.size()) break;
        }
    });
    return scenes;
}

ConfigSet enumerate_valid_configs(int n_blocks) {
    ConfigSet out;
    for (const auto& scene : enumerate_scenes(n_blocks)) out.insert(extract_config(scene));
    return out;
}

// --------------------------------------------------------------------- moves

bool is_clear(const Scene& scene, BlockId b) {
    const Location loc = locate(scene, b);
    return loc.cluster >= 0 && scene.clusters[loc.cluster][loc.structure].top() == b;
}

std::string to_string(const Move& m) {
    std::ostringstream os;
    os << "move(" << block_label(m.block) << ", ";
    switch (m.placement.kind) {
        case Placement::Kind::alone_far: os << "alone-far"; break;
        case Placement::Kind::join_cluster: os << "join-cluster " << m.placement.cluster; break;
        case Placement::Kind::on_top: os << "on-top " << block_label(m.placement.target); break;
        case Placement::Kind::bridge:
            os << "bridge " << block_label(m.placement.target) << "+" << block_label(m.placement.target2);
            break;
    }
    os << ")";
    return os.str();
}

std::vector<Move> legal_moves(const Scene& scene) {
    std::vector<Move> moves;
    for (BlockId b = 0; b < scene.n_blocks; ++b) {
        if (!is_clear(scene, b)) continue;
        const Scene residual = lift(scene, b);
        auto try_add = [&](const Move& move, const Placement& p, int residual_cluster) {
            Scene next = residual;
            if (place(next, b, p, residual_cluster) != Fit::ok) return;
            if (canonical(std::move(next)) == scene) return;
            moves.push_back(move);
        };

        try_add(Move::alone_far(b), {Placement::Kind::alone_far}, -1);

        std::vector<std::pair<int, int>> joins;  // (pre-scene cluster, residual cluster)
        for (int rc = 0; rc < static_cast<int>(residual.clusters.size()); ++rc) {
            joins.emplace_back(locate(scene, residual.clusters[rc][0].blocks[0]).cluster, rc);
        }
        std::sort(joins.begin(), joins.end());
        for (auto [pre, rc] : joins) try_add(Move::join_cluster(b, pre), {Placement::Kind::join_cluster, pre}, rc);

        for (BlockId t = 0; t < scene.n_blocks; ++t) {
            if (t == b) continue;
            try_add(Move::on_top(b, t), {Placement::Kind::on_top, -1, t}, -1);
        }
        for (BlockId x = 0; x < scene.n_blocks; ++x) {
            for (BlockId y = x + 1; y < scene.n_blocks; ++y) {
                if (x == b || y == b) continue;
                try_add(Move::bridge(b, x, y), {Placement::Kind::bridge, -1, x, y}, -1);
            }
        }
    }
    return moves;
}

Scene apply_move(const Scene& scene, const Move& move) {
    validate(scene);
    const BlockId b = move.block;
    const auto& p = move.placement;
    if (b < 0 || b >= scene.n_blocks) illegal("moved block " + std::to_string(b) + " does not exist");
    if (!is_clear(scene, b)) illegal("moved block " + block_label(b) + " is not clear");

    Scene residual = lift(scene, b);
    int residual_cluster = -1;
    switch (p.kind) {
        case Placement::Kind::alone_far: break;
        case Placement::Kind::join_cluster: {
            if (p.cluster < 0 || p.cluster >= static_cast<int>(scene.clusters.size())) {
                illegal("cluster " + std::to_string(p.cluster) + " does not exist");
            }
            BlockId rep = -1;
            for (const auto& s : scene.clusters[p.cluster]) {
                for (BlockId x : s.blocks) {
                    if (x != b && rep < 0) rep = x;
                }
            }
            if (rep < 0) illegal("cluster " + std::to_string(p.cluster) + " holds only the moved block");
            residual_cluster = locate(residual, rep).cluster;
            break;
        }
        case Placement::Kind::on_top:
            if (p.target == b) illegal("a block cannot be placed on itself");
            break;
        case Placement::Kind::bridge:
            if (p.target == p.target2) illegal("bridge targets must be two distinct blocks");
            if (p.target == b || p.target2 == b) illegal("a block cannot bridge itself");
            break;
    }

    switch (place(residual, b, p, residual_cluster)) {
        case Fit::ok: break;
        case Fit::bad_target: illegal("placement target does not exist");
        case Fit::not_clear: illegal("target block " + block_label(p.target) + " is not clear");
        case Fit::on_pyramid: illegal("cannot stack on top of a pyramid");
        case Fit::not_single: illegal("bridge targets must be free-standing blocks");
        case Fit::split_clusters: illegal("bridge targets must share a cluster");
    }
    Scene out = canonical(std::move(residual));
    if (out == scene) illegal("placement leaves the scene unchanged");
    return out;
}

// ----------------------------------------------------------------------- json

nlohmann::json to_json(const Configuration& config) {
    auto arr = nlohmann::json::array();
    for (int i = 0; i < config.size(); ++i) arr.push_back(config.get(i) ? 1 : 0);
    return arr;
}

Configuration config_from_json(int n_blocks, const nlohmann::json& j) {
    if (j.is_string()) return Configuration::from_bits(n_blocks, j.get<std::string>());
    if (!j.is_array()) throw Error(ErrorKind::parse, "configuration must be a bit string or an integer array");
    std::string bits;
    for (const auto& v : j) {
        if (!v.is_number_integer() || (v.get<int>() != 0 && v.get<int>() != 1)) {
            throw Error(ErrorKind::parse, "configuration array entries must be 0 or 1");
        }
        bits.push_back(v.get<int>() ? '1' : '0');
    }
    return Configuration::from_bits(n_blocks, bits);
}

nlohmann::json to_json(const Scene& scene) {
    nlohmann::json structures = nlohmann::json::array();
    nlohmann::json clusters = nlohmann::json::array();
    for (const auto& cluster : scene.clusters) {
        nlohmann::json ids = nlohmann::json::array();
        for (const auto& s : cluster) {
            ids.push_back(structures.size());
            switch (s.kind) {
                case Structure::Kind::single: structures.push_back({{"kind", "single"}, {"block", s.blocks[0]}}); break;
                case Structure::Kind::stack: structures.push_back({{"kind", "stack"}, {"blocks", s.blocks}}); break;
                case Structure::Kind::pyramid:
                    structures.push_back(
                        {{"kind", "pyramid"}, {"top", s.blocks[2]}, {"base", {s.blocks[0], s.blocks[1]}}});
                    break;
            }
        }
        clusters.push_back(std::move(ids));
    }
    return {{"n_blocks", scene.n_blocks}, {"structures", structures}, {"clusters", clusters}};
}

Scene scene_from_json(int n_blocks, const nlohmann::json& j) {
    try {
        std::vector<Structure> structures;
        for (const auto& s : j.at("structures")) {
            const auto kind = s.at("kind").get<std::string>();
            if (kind == "single") {
                structures.push_back(Structure::single(s.at("block").get<int>()));
            } else if (kind == "stack") {
                structures.push_back(Structure::stack(s.at("blocks").get<std::vector<int>>()));
            } else if (kind == "pyramid") {
                const auto base = s.at("base").get<std::vector<int>>();
                if (base.size() != 2) violation("pyramid base must list two blocks");
                structures.push_back(Structure::pyramid(s.at("top").get<int>(), base[0], base[1]));
            } else {
                violation("unknown structure kind '" + kind + "'");
            }
        }
        Scene scene{n_blocks, {}};
        std::vector<int> used(structures.size(), 0);
        if (j.contains("clusters")) {
            for (const auto& ids : j.at("clusters")) {
                std::vector<Structure> cluster;
                for (const auto& id : ids) {
                    const auto k = id.get<std::size_t>();
                    if (k >= structures.size()) violation("cluster references missing structure " + std::to_string(k));
                    if (used[k]++) violation("structure " + std::to_string(k) + " belongs to two clusters");
                    cluster.push_back(structures[k]);
                }
                scene.clusters.push_back(std::move(cluster));
            }
            for (std::size_t k = 0; k < used.size(); ++k) {
                if (!used[k]) violation("structure " + std::to_string(k) + " is in no cluster");
            }
        } else {
            for (auto& s : structures) scene.clusters.push_back({s});
        }
        validate(scene);
        return canonical(std::move(scene));
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::parse, std::string("malformed scene: ") + e.what());
    }
}

nlohmann::json to_json(const Move& m) {
    nlohmann::json j{{"block", m.block}};
    switch (m.placement.kind) {
        case Placement::Kind::alone_far: j["placement"] = "alone_far"; break;
        case Placement::Kind::join_cluster:
            j["placement"] = "join_cluster";
            j["cluster"] = m.placement.cluster;
            break;
        case Placement::Kind::on_top:
            j["placement"] = "on_top";
            j["target"] = m.placement.target;
            break;
        case Placement::Kind::bridge:
            j["placement"] = "bridge";
            j["targets"] = {m.placement.target, m.placement.target2};
            break;
    }
    return j;
}

}  // namespace taa
