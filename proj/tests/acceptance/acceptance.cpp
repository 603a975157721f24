// Acceptance run: one PASS/FAIL line per criterion.
//
//   acceptance [--only name[,name...]] [--known-failure name[,name...]]
//
// Exit status counts failures outside the known-failure list; known failures
// are still reported as FAIL.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "taa/harness.hpp"
#include "taa/service.hpp"

using namespace taa;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

ExperimentConfig frozen(const char* name) { return load_experiment_config(default_data_dir() / "configs" / name); }

double mean(const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

// ------------------------------------------------------------------ oracles

// u, v one move apart: some block clear in both, all predicates not naming it agree.
bool one_move_apart(const Configuration& u, const Configuration& v) {
    if (u == v) return false;
    const int n = u.n_blocks();
    for (int b = 0; b < n; ++b) {
        bool clear = true;
        for (int x = 0; x < n; ++x) {
            if (x != b && (u.above(x, b) || v.above(x, b))) clear = false;
        }
        if (!clear) continue;
        bool agree = true;
        for (int i = 0; i < u.size() && agree; ++i) {
            const auto p = PredicateId::from_index(n, i);
            if (p.a != b && p.b != b && u.get(i) != v.get(i)) agree = false;
        }
        if (agree) return true;
    }
    return false;
}

bool holds(const Inventory& inv, const Expression& e, const Configuration& c, const Configuration& current) {
    switch (e.op) {
        case Expression::Op::leaf: {
            const auto& t = inv.get(e.text).transformation;
            const int i = t.predicate.index(3);
            const bool satisfied = c.get(i) == t.target;
            return satisfied && !(c == current && current.get(i) == t.target);
        }
        case Expression::Op::and_: return holds(inv, e.children[0], c, current) && holds(inv, e.children[1], c, current);
        case Expression::Op::or_: return holds(inv, e.children[0], c, current) || holds(inv, e.children[1], c, current);
        case Expression::Op::not_: return !holds(inv, e.children[0], c, current);
    }
    return false;
}

// ----------------------------------------------------------------- criteria

Outcome dual_enumeration() {
    const auto t = Clock::now();
    ConfigSet brute;
    for (std::uint32_t w = 0; w < 512; ++w) {
        const Configuration c(3, w);
        if (is_valid(c)) brute.insert(c);
    }
    const auto grammar = enumerate_valid_configs(3);
    const double s = seconds_since(t);
    return {grammar == brute && s < 1.0, fmt::format("grammar {} vs brute force {} configurations, {:.3f} s",
                                                     grammar.size(), brute.size(), s)};
}

Outcome graph_oracle() {
    const auto t = Clock::now();
    const auto g = build_full_graph(3);
    int mismatches = 0, asymmetric = 0;
    const int n = static_cast<int>(g.size());
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const auto& adj = g.adjacent(i);
            const bool edge = std::binary_search(adj.begin(), adj.end(), j);
            mismatches += edge != one_move_apart(g.node(i), g.node(j));
            const auto& back = g.adjacent(j);
            asymmetric += edge != std::binary_search(back.begin(), back.end(), i);
        }
    }
    std::vector<char> seen(g.size(), 0);
    std::deque<int> queue{g.id(Configuration::zero(3))};
    seen[queue.front()] = 1;
    int reached = 1;
    while (!queue.empty()) {
        const int u = queue.front();
        queue.pop_front();
        for (int v : g.adjacent(u)) {
            if (!seen[v]) {
                seen[v] = 1;
                ++reached;
                queue.push_back(v);
            }
        }
    }
    const double s = seconds_since(t);
    return {mismatches == 0 && asymmetric == 0 && reached == n && s < 5.0,
            fmt::format("{} edges, {} mismatches, {} asymmetric, {}/{} reachable, {:.3f} s", g.edge_count(), mismatches,
                        asymmetric, reached, n, s)};
}

Outcome set_algebra() {
    const auto t = Clock::now();
    const auto inv = shared_inventory(3);
    const auto universe = enumerate_valid_configs(3);
    const std::vector<Configuration> nodes(universe.begin(), universe.end());
    const LeafGrounding oracle{inv.get(), nullptr};
    Rng rng(2024);
    int exact = 0, identities = 0;
    for (int i = 0; i < 1000; ++i) {
        const auto e = sample_expression(*inv, rng, 2);
        const auto current = nodes[rng.index(nodes.size())];
        ConfigSet discovered{current};
        for (const auto& c : nodes) {
            if (rng.bernoulli(0.7)) discovered.insert(c);
        }
        ConfigSet table;
        for (const auto& c : discovered) {
            if (holds(*inv, e, c, current)) table.insert(c);
        }
        exact += ground_expression(e, current, discovered, oracle) == table;

        const auto x = sample_expression(*inv, rng, 1);
        const auto y = sample_expression(*inv, rng, 1);
        const bool de_morgan =
            ground_expression(Expression::negate(Expression::all(x, y)), current, discovered, oracle) ==
            ground_expression(Expression::any(Expression::negate(x), Expression::negate(y)), current, discovered, oracle);
        const bool double_neg = ground_expression(Expression::negate(Expression::negate(x)), current, discovered, oracle) ==
                                ground_expression(x, current, discovered, oracle);
        identities += de_morgan && double_neg;
    }
    const double s = seconds_since(t);
    return {exact == 1000 && identities == 1000 && s < 10.0,
            fmt::format("{}/1000 exact, {}/1000 identity cases, {:.2f} s", exact, identities, s)};
}

Outcome induction_soundness() {
    const auto inv = shared_inventory(3);
    const auto g = shared_graph(3);
    const auto universe = enumerate_valid_configs(3);
    const std::vector<Configuration> nodes(universe.begin(), universe.end());
    Rng rng(77);
    GroundingTable table(3);
    int mismatches = 0;
    for (int fed = 1; fed <= 10000; ++fed) {
        const auto& before = nodes[rng.index(nodes.size())];
        const auto& next = g->adjacent(g->id(before));
        const auto& after = g->node(next[rng.index(next.size())]);
        std::vector<int> changed;
        for (int i = 0; i < after.size(); ++i) {
            if (before.get(i) != after.get(i)) changed.push_back(i);
        }
        const int pi = changed[rng.index(changed.size())];
        const auto options = inv->for_transformation({PredicateId::from_index(3, pi), after.get(pi)});
        table.induce(before, options[rng.index(options.size())]->text, after);
        if (fed % 500 == 0) {
            for (const auto& s : inv->sentences()) {
                if (const auto got = table.lookup(s.text)) mismatches += !(*got == s.transformation);
            }
        }
    }
    // held-out: grounding through the induced table equals the oracle
    int held_out = 0, agree = 0;
    Rng probe(78);
    for (int i = 0; i < 1000; ++i) {
        const auto& s = inv->sentences()[probe.index(inv->size())];
        if (!table.converged(s.text)) continue;
        const auto current = nodes[probe.index(nodes.size())];
        ++held_out;
        agree += ground_expression(Expression::leaf(s.text), current, universe, LeafGrounding{inv.get(), &table}) ==
                 ground_expression(Expression::leaf(s.text), current, universe, LeafGrounding{inv.get(), nullptr});
    }
    return {mismatches == 0 && held_out > 0 && agree == held_out,
            fmt::format("{}/{} converged, {} mismatches, held-out {}/{}", table.converged_count(), inv->size(),
                        mismatches, agree, held_out)};
}

std::vector<Snapshot> train_agents(const ExperimentConfig& base, std::uint64_t first_seed, int count) {
    std::vector<Snapshot> out(count);
    parallel_for(count, [&](int i) {
        auto c = base;
        c.seed = first_seed + static_cast<std::uint64_t>(i);
        c.output.clear();
        out[i] = run_training(c).snapshot;
    });
    return out;
}

Outcome table_shape() {
    const auto t = Clock::now();
    const int seeds = 20;
    const auto agents = train_agents(frozen("calibrated_n3.json"), 0, seeds);
    std::vector<double> t1(seeds), t5(seeds), e1(seeds), e5(seeds);
    parallel_for(seeds, [&](int i) {
        const auto seed = static_cast<std::uint64_t>(i);
        t1[i] = eval_transition(agents[i], 1, seed).rate;
        t5[i] = eval_transition(agents[i], 5, seed).rate;
        e1[i] = eval_expression(agents[i], 1, seed).rate;
        e5[i] = eval_expression(agents[i], 5, seed).rate;
    });
    const double mt1 = mean(t1), mt5 = mean(t5), me1 = mean(e1), me5 = mean(e5);
    const double s = seconds_since(t);
    const bool ok = mt1 >= 0.85 && mt1 <= 0.93 && mt5 >= mt1 + 0.04 && me1 <= mt1 - 0.05 && s < 600;
    return {ok, fmt::format("{} seeds: transition {:.3f} -> {:.3f}, expression {:.3f} -> {:.3f}, {:.0f} s", seeds, mt1,
                            mt5, me1, me5, s)};
}

Outcome sequence_setup() {
    const auto t = Clock::now();
    const int n = 200;
    const auto agents = train_agents(frozen("calibrated_n3.json"), 1000, n);
    std::vector<double> q(n);
    parallel_for(n, [&](int i) { q[i] = eval_transition(agents[i], 5, static_cast<std::uint64_t>(i)).rate; });
    const double qm = mean(q);
    const double closed = truncated_geometric_mean(qm, 20);
    const auto sim = eval_sequence(agents, 4242, 20, 1, 5);
    const double s = seconds_since(t);
    return {std::abs(sim.rate - closed) <= 0.2 * closed && s < 120,
            fmt::format("q = {:.4f}: simulated {:.2f} vs closed form {:.2f} over {} agents, {:.0f} s", qm, sim.rate,
                        closed, n, s)};
}

Outcome hme_benefit() {
    const auto t = Clock::now();
    const std::vector<double> grid{0.0, 0.1, 0.2, 0.5, 0.8, 1.0};
    const auto rows = sweep_beta(frozen("hme_hard_n3.json"), grid, 10);
    std::string table;
    for (const auto& r : rows) table += fmt::format(" b={}:{:.0f}+-{:.0f}({}c)", r.beta, r.mean, r.stderr_, r.censored);
    const auto& lo = rows.front();
    const auto& hi = rows.back();
    bool found = false;
    for (std::size_t i = 1; i + 1 < rows.size(); ++i) {
        const auto& r = rows[i];
        found |= r.mean + r.stderr_ < lo.mean - lo.stderr_ && r.mean + r.stderr_ < hi.mean - hi.stderr_;
    }
    const double s = seconds_since(t);
    return {found && s < 900, fmt::format("episodes to full discovery:{}; {:.0f} s", table, s)};
}

Outcome scene_ablation() {
    const auto t = Clock::now();
    const int seeds = 20;
    const auto rows = ablation_scene_setting(frozen("ablation_n3.json"),
                                             {SceneIntervention::random_scatter(), SceneIntervention::pre_stacked(2)}, seeds);
    const auto& scatter = rows[0].first_stack3;
    const auto& stacked = rows[1].first_stack3;
    int wins = 0, losses = 0;
    std::vector<double> a, b;
    for (int i = 0; i < seeds; ++i) {
        wins += stacked[i] < scatter[i];
        losses += stacked[i] > scatter[i];
        a.push_back(scatter[i]);
        b.push_back(stacked[i]);
    }
    const double p = sign_test_p(wins, losses);
    const double s = seconds_since(t);
    return {mean(b) < mean(a) && p < 0.05 && s < 300,
            fmt::format("first stack-of-3: pre-stacked {:.1f} vs scattered {:.1f}, {} wins / {} losses, p = {:.2g}, {:.0f} s",
                        mean(b), mean(a), wins, losses, p, s)};
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Outcome determinism() {
    const auto root = std::filesystem::temp_directory_path() / "taa_acceptance_determinism";
    std::filesystem::remove_all(root);
    std::vector<std::string> outputs;
    for (const auto* run : {"a", "b"}) {
        auto c = frozen("calibrated_n3.json");
        c.seed = 99;
        c.beta = 0.2;
        c.output = (root / run).string();
        run_training(c);
        outputs.push_back(slurp(root / run / "metrics.jsonl"));
    }
    std::filesystem::remove_all(root);
    return {!outputs[0].empty() && outputs[0] == outputs[1],
            fmt::format("two runs, {} bytes of metrics each, identical: {}", outputs[0].size(), outputs[0] == outputs[1])};
}

Outcome service_equivalence() {
    auto c = frozen("calibrated_n3.json");
    c.seed = 31;
    c.beta = 0.2;
    c.episodes = 100;
    c.output.clear();
    const auto offline = run_training(c);

    ServiceCore core;
    const auto created = core.handle("POST", "/sessions", to_json(c).dump());
    if (created.status != 201) return {false, "session creation failed: " + created.body.dump()};
    const std::string base = "/sessions/" + created.body["id"].get<std::string>();
    const auto stepped = core.handle("POST", base + "/episodes", R"({"mode":"scheduled","count":100})");
    const auto state = core.handle("GET", base + "/state", "");
    const bool same = stepped.status == 200 && state.body["learner"] == to_json(offline.snapshot.learner);
    return {same, fmt::format("100 scheduled episodes over REST, learner snapshot identical: {}", same)};
}

std::set<std::string> split(const std::string& csv) {
    std::set<std::string> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.insert(item);
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"acceptance criteria"};
    std::string only, known;
    app.add_option("--only", only, "comma-separated criteria to run");
    app.add_option("--known-failure", known, "comma-separated criteria whose failure does not fail the run");
    CLI11_PARSE(app, argc, argv);
    spdlog::set_level(spdlog::level::warn);

    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"dual_enumeration", dual_enumeration},
        {"graph_oracle", graph_oracle},
        {"set_algebra", set_algebra},
        {"induction_soundness", induction_soundness},
        {"table_shape", table_shape},
        {"sequence_setup", sequence_setup},
        {"hme_benefit", hme_benefit},
        {"scene_ablation", scene_ablation},
        {"determinism", determinism},
        {"service_equivalence", service_equivalence},
    };
    const auto selected = split(only);
    const auto tolerated = split(known);
    int failures = 0, tolerated_failures = 0;
    for (const auto& [name, fn] : criteria) {
        if (!selected.empty() && !selected.contains(name)) continue;
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        const bool known_failure = !o.pass && tolerated.contains(name);
        std::printf("%s %s: %s%s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str(),
                    known_failure ? " [known failure]" : "");
        std::fflush(stdout);
        if (!o.pass) (known_failure ? tolerated_failures : failures)++;
    }
    std::printf("%d failed, %d known failures\n", failures, tolerated_failures);
    return failures;
}
