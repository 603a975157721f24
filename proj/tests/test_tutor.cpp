#include <doctest.h>

#include "taa/tutor.hpp"

using namespace taa;

namespace {

std::shared_ptr<const GoalGraph> graph3() {
    static const auto g = std::make_shared<const GoalGraph>(build_full_graph(3));
    return g;
}

Configuration cfg(const char* bits) { return Configuration::from_bits(3, bits); }

}  // namespace

TEST_CASE("observe") {
    const auto zero = Configuration::zero(3);
    auto model = make_tutor(graph3(), 0.5, zero);
    const auto before = model;
    observe(model, EpisodeOutcome{});
    CHECK(model == before);

    EpisodeOutcome out;
    out.trajectory = {zero, cfg("100000000")};
    out.newly_discovered = {cfg("100000000")};
    observe(model, out);
    CHECK(model.believed_discovered.contains(cfg("100000000")));
    const auto once = model;
    observe(model, out);
    CHECK(model == once);

    CHECK_THROWS_AS(make_tutor(graph3(), 1.5, zero), Error);
}

TEST_CASE("propose_hme_goals") {
    const auto zero = Configuration::zero(3);
    Rng rng(1);
    auto model = make_tutor(graph3(), 1.0, zero);
    const auto p = propose_hme_goals(model, rng);
    REQUIRE(p);
    CHECK(p->frontier == zero);

    model.believed_discovered = enumerate_valid_configs(3);
    CHECK_FALSE(propose_hme_goals(model, rng));

    // random believed sets: the proposal is an edge leaving the set
    const auto& nodes = graph3()->nodes();
    for (int trial = 0; trial < 10000; ++trial) {
        model.believed_discovered.clear();
        for (const auto& c : nodes) {
            if (rng.bernoulli(0.4)) model.believed_discovered.insert(c);
        }
        const auto q = propose_hme_goals(model, rng);
        const bool complete = model.believed_discovered.size() == nodes.size();
        const bool empty = model.believed_discovered.empty();
        CHECK(bool(q) == !(complete || empty));
        if (!q) continue;
        CHECK(model.believed_discovered.contains(q->frontier));
        CHECK_FALSE(model.believed_discovered.contains(q->beyond));
        CHECK(neighbors(*graph3(), q->frontier).contains(q->beyond));
    }
}

TEST_CASE("schedule") {
    const auto zero = Configuration::zero(3);
    Rng rng(3);
    auto model = make_tutor(graph3(), 0.0, zero);
    for (int i = 0; i < 1000; ++i) CHECK(schedule(model, rng) == EpisodeMode::autotelic);
    model.beta = 1.0;
    for (int i = 0; i < 1000; ++i) CHECK(schedule(model, rng) == EpisodeMode::social);
    model.beta = 0.5;
    int social = 0;
    for (int i = 0; i < 10000; ++i) social += schedule(model, rng) == EpisodeMode::social;
    CHECK(std::abs(social / 10000.0 - 0.5) <= 0.02);
}

TEST_CASE("set_scene") {
    Rng rng(5);
    ConfigSet scattered, stacked;
    for (int i = 0; i < 500; ++i) {
        const auto c = extract_config(set_scene(SceneIntervention::random_scatter(), 3, rng));
        for (int p = 3; p < 9; ++p) CHECK_FALSE(c.get(p));
        scattered.insert(c);

        const auto s = set_scene(SceneIntervention::pre_stacked(2), 3, rng);
        const auto d = extract_config(s);
        int above = 0;
        for (int p = 3; p < 9; ++p) above += d.get(p);
        CHECK(above == 1);
        stacked.insert(d);
    }
    CHECK(scattered.size() == 5);  // set partitions of three blocks
    CHECK(stacked.size() == 12);   // six ordered pairs, third block near or far

    for (int i = 0; i < 50; ++i) {
        const auto c = extract_config(set_scene(SceneIntervention::pre_stacked(3), 3, rng));
        int above = 0;
        for (int p = 3; p < 9; ++p) above += c.get(p);
        CHECK(above == 3);
    }
    CHECK_THROWS_AS(set_scene(SceneIntervention::pre_stacked(4), 3, rng), Error);

    const auto goal = cfg("111110100");
    CHECK(extract_config(set_scene(SceneIntervention::near_goal(goal, 0), 3, rng, graph3().get())) == goal);
    for (int i = 0; i < 100; ++i) {
        const auto c = extract_config(set_scene(SceneIntervention::near_goal(goal, 1), 3, rng, graph3().get()));
        CHECK((c == goal || neighbors(*graph3(), goal).contains(c)));
    }
    try {
        set_scene(SceneIntervention::near_goal(cfg("000100100"), 1), 3, rng, graph3().get());
        FAIL("expected infeasible intervention");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::infeasible_intervention);
    }
}

TEST_CASE("intervention JSON") {
    for (const auto& iv : {SceneIntervention::random_scatter(), SceneIntervention::pre_stacked(3),
                           SceneIntervention::near_goal(cfg("100000000"), 2)}) {
        CHECK(intervention_from_json(3, to_json(iv)) == iv);
    }
    CHECK_THROWS_AS(intervention_from_json(3, {{"strategy", "juggle"}}), Error);
}

TEST_CASE("describe") {
    const auto inv = build_inventory(3);
    Rng rng(9);
    const auto zero = Configuration::zero(3);
    CHECK_FALSE(describe(zero, zero, inv, rng));
    for (int i = 0; i < 50; ++i) {
        const auto s = describe(zero, cfg("100000000"), inv, rng);
        REQUIRE(s);
        CHECK(s->transformation == Transformation{PredicateId::close(0, 1), true});
    }
    // every edge, described: the named predicate changed to the named value
    const auto& g = *graph3();
    for (int u = 0; u < static_cast<int>(g.size()); ++u) {
        for (int v : g.adjacent(u)) {
            const auto s = describe(g.node(u), g.node(v), inv, rng);
            REQUIRE(s);
            const int p = s->transformation.predicate.index(3);
            CHECK(g.node(u).get(p) != g.node(v).get(p));
            CHECK(g.node(v).get(p) == s->transformation.target);
        }
    }
}

TEST_CASE("social episodes") {
    const auto zero = Configuration::zero(3);
    const CompetenceModel perfect{1.0, 1.0, 1.0};
    const CompetenceModel hopeless{0.0, 0.0, 1.0};
    Rng rng(11);

    auto learner = make_learner(3, {0.0}, 1, zero);
    auto model = make_tutor(graph3(), 1.0, zero);
    const FrontierPair pair{zero, cfg("100000000")};
    const auto ep = run_social_episode(model, learner, pair, scattered_scene(3), perfect, 10, rng);
    CHECK(ep.frontier.success);
    REQUIRE(ep.beyond);
    CHECK(ep.beyond->success);
    CHECK(ep.internalized);
    CHECK(learner.discovered.contains(pair.beyond));
    CHECK(model.believed_discovered == learner.discovered);

    auto l2 = make_learner(3, {0.0}, 1, zero);
    auto m2 = make_tutor(graph3(), 1.0, zero);
    // frontier not where the learner stands and nothing succeeds
    const FrontierPair far{cfg("100000000"), cfg("110000000")};
    const auto fail = run_social_episode(m2, l2, far, scattered_scene(3), hopeless, 5, rng);
    CHECK_FALSE(fail.frontier.success);
    CHECK_FALSE(fail.beyond);
    CHECK_FALSE(fail.internalized);
    CHECK(l2.internalized.empty());
    CHECK(l2.discovered == ConfigSet{zero});
    CHECK(m2.believed_discovered == l2.discovered);
}

TEST_CASE("tutor model tracks the learner through mixed episodes") {
    const auto zero = Configuration::zero(3);
    const CompetenceModel comp{0.6, 0.95, 5.0};
    Rng rng(21);
    auto learner = make_learner(3, {0.2}, 1, zero);
    auto model = make_tutor(graph3(), 0.5, zero);
    for (int e = 0; e < 300; ++e) {
        const auto before = learner.discovered;
        const auto scene = set_scene(SceneIntervention::random_scatter(), 3, rng);
        if (schedule(model, rng) == EpisodeMode::social) {
            if (auto pair = propose_hme_goals(model, rng)) run_social_episode(model, learner, *pair, scene, comp, 8, rng);
        } else {
            const auto goal = sample_goal(learner, *graph3(), Curriculum::uniform, rng);
            observe(model, run_episode(learner, *graph3(), scene, goal, comp, 8, rng));
        }
        CHECK(std::includes(learner.discovered.begin(), learner.discovered.end(), before.begin(), before.end()));
        CHECK(model.believed_discovered == learner.discovered);
    }
}
