#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "taa/language.hpp"

using namespace taa;

namespace {

const GoalGraph& graph3() {
    static const GoalGraph g = build_full_graph(3);
    return g;
}

const Inventory& inventory3() {
    static const Inventory inv = build_inventory(3);
    return inv;
}

const ConfigSet& universe3() {
    static const ConfigSet u = enumerate_valid_configs(3);
    return u;
}

Configuration cfg(const char* bits) { return Configuration::from_bits(3, bits); }

// Truth-table evaluation of an expression at a single configuration.
bool holds(const Expression& e, const Configuration& c, const Configuration& current) {
    switch (e.op) {
        case Expression::Op::leaf: {
            const auto& t = inventory3().get(e.text).transformation;
            const int i = t.predicate.index(3);
            const bool satisfied = c.bits()[i] == (t.target ? '1' : '0');
            const bool current_excluded = c == current && current.bits()[i] == (t.target ? '1' : '0');
            return satisfied && !current_excluded;
        }
        case Expression::Op::and_: return holds(e.children[0], c, current) && holds(e.children[1], c, current);
        case Expression::Op::or_: return holds(e.children[0], c, current) || holds(e.children[1], c, current);
        case Expression::Op::not_: return !holds(e.children[0], c, current);
    }
    return false;
}

ConfigSet truth_table(const Expression& e, const Configuration& current, const ConfigSet& universe) {
    ConfigSet out;
    for (const auto& c : universe) {
        if (holds(e, c, current)) out.insert(c);
    }
    return out;
}

LeafGrounding oracle() { return {&inventory3(), nullptr}; }

}  // namespace

TEST_CASE("inventory for three blocks") {
    const auto& inv = inventory3();
    CHECK(inv.size() == 102);
    const auto* s = inv.find("get red above green");
    REQUIRE(s);
    CHECK(s->transformation == Transformation{PredicateId::above(0, 1), true});

    // every (predicate, shift) pair is expressible
    for (int i = 0; i < 9; ++i) {
        for (bool target : {false, true}) {
            CHECK_FALSE(inv.for_transformation({PredicateId::from_index(3, i), target}).empty());
        }
    }
    // the shipped table is the template expansion
    const auto generated = generate_sentences(3);
    REQUIRE(generated.size() == inv.size());
    for (std::size_t i = 0; i < generated.size(); ++i) {
        CHECK(generated[i].text == inv.at(i).text);
        CHECK(generated[i].transformation == inv.at(i).transformation);
    }
    CHECK(build_inventory(4).size() == generate_sentences(4).size());
}

TEST_CASE("unknown sentences report their nearest neighbours") {
    try {
        inventory3().get("get red abov green");
        FAIL("expected unknown sentence");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::unknown_sentence);
        CHECK(std::string(e.what()).find("get red above green") != std::string::npos);
    }
}

TEST_CASE("malformed sentence tables") {
    const auto dir = std::filesystem::temp_directory_path() / "taa_inventory_test";
    std::filesystem::create_directories(dir);
    auto write = [&](const std::string& body) {
        std::ofstream(dir / "sentences_n3.json") << body;
    };
    auto expect_load_error = [&] {
        try {
            build_inventory(3, dir);
            FAIL("expected inventory load error");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::inventory_load);
        }
    };
    write("[{\"text\": \"x\"}]");
    expect_load_error();
    write("not json");
    expect_load_error();
    write(R"J([{"text": "x", "predicate": "above(red,red)", "target": 1}])J");
    expect_load_error();
    write(R"J([{"text": "x", "predicate": "close(red,green)", "target": 1}, {"text": "x", "predicate": "close(red,blue)", "target": 1}])J");
    expect_load_error();
    std::filesystem::remove_all(dir);
    expect_load_error();  // missing file
}

TEST_CASE("oracle grounding") {
    const auto zero = Configuration::zero(3);
    const auto& t = inventory3().get("get red above green").transformation;
    const auto got = oracle_ground(t, zero, universe3());
    ConfigSet brute;
    for (const auto& c : universe3()) {
        if (c.bits()[3] == '1') brute.insert(c);
    }
    CHECK(got == brute);
    CHECK(got.size() == 6);  // red on green: 2 two-stacks, 3 three-stacks with red over green, 1 pyramid

    // demanding a bit that already holds, over {current} alone -> empty
    const auto close = cfg("100000000");
    const auto& t2 = inventory3().get("put red close to green").transformation;
    CHECK(oracle_ground(t2, close, {close}).empty());
    CHECK(oracle_ground(t2, close, {close}, false) == ConfigSet{close});

    // target 0 is the complement of target 1 within the universe, up to the current exclusion
    const auto& far = inventory3().get("put red far from green").transformation;
    auto ones = oracle_ground(t2, zero, universe3());
    auto zeros = oracle_ground(far, zero, universe3());
    zeros.insert(zero);  // zero already satisfies "far", so it was excluded
    ConfigSet both = ones;
    both.insert(zeros.begin(), zeros.end());
    CHECK(both == universe3());
    CHECK(ones.size() + zeros.size() == universe3().size());
}

TEST_CASE("oracle grounding depends only on the named predicate") {
    const auto current = cfg("100100000");
    for (const auto& s : inventory3().sentences()) {
        const auto members = oracle_ground(s.transformation, current, universe3());
        const int named = s.transformation.predicate.index(3);
        for (const auto& m : members) {
            for (int i = 0; i < 9; ++i) {
                if (i == named) continue;
                auto flipped = m;
                flipped.set(i, !m.get(i));
                if (universe3().contains(flipped) && flipped != current) CHECK(members.contains(flipped));
            }
        }
    }
}

TEST_CASE("induction") {
    GroundingTable table(3);
    const auto zero = Configuration::zero(3);
    CHECK_FALSE(table.converged("put red close to green"));
    CHECK(table.candidates("put red close to green").size() == 18);

    table.induce(zero, "put red close to green", cfg("100000000"));
    CHECK(table.converged("put red close to green"));
    CHECK(*table.lookup("put red close to green") == Transformation{PredicateId::close(0, 1), true});

    // two examples whose changes intersect only at the true meaning
    table.induce(zero, "get red above green", cfg("100100000"));  // close + above
    CHECK_FALSE(table.converged("get red above green"));
    table.induce(cfg("111000000"), "get red above green", cfg("111100000"));  // above only
    CHECK(*table.lookup("get red above green") == Transformation{PredicateId::above(0, 1), true});

    try {
        table.induce(zero, "put red close to green", cfg("010000000"));
        FAIL("expected inconsistent data");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::inconsistent_data);
    }
    CHECK_THROWS_AS(table.induce(zero, "put red close to green", zero), Error);
}

TEST_CASE("set algebra identities") {
    const auto zero = Configuration::zero(3);
    const auto a = Expression::leaf("get red above green");
    const auto b = Expression::leaf("get green above red");
    const auto ga = ground_expression(a, zero, universe3(), oracle());
    const auto gb = ground_expression(b, zero, universe3(), oracle());
    const auto gor = ground_expression(Expression::any(a, b), zero, universe3(), oracle());
    CHECK(gor.size() == ga.size() + gb.size());
    CHECK(ground_expression(Expression::all(a, b), zero, universe3(), oracle()).empty());
    CHECK(ground_expression(Expression::negate(Expression::negate(a)), zero, universe3(), oracle()) == ga);
}

TEST_CASE("random expressions equal truth-table evaluation, with de Morgan") {
    Rng rng(2024);
    const auto nodes = std::vector<Configuration>(universe3().begin(), universe3().end());
    for (int i = 0; i < 1000; ++i) {
        const auto e = sample_expression(inventory3(), rng, 2);
        CHECK(e.depth() <= 2);
        const auto current = nodes[rng.index(nodes.size())];
        // random discovered subset containing current
        ConfigSet discovered{current};
        for (const auto& c : nodes) {
            if (rng.bernoulli(0.7)) discovered.insert(c);
        }
        const auto got = ground_expression(e, current, discovered, oracle());
        CHECK(got == truth_table(e, current, discovered));

        const auto x = sample_expression(inventory3(), rng, 1);
        const auto y = sample_expression(inventory3(), rng, 1);
        CHECK(ground_expression(Expression::negate(Expression::all(x, y)), current, discovered, oracle()) ==
              ground_expression(Expression::any(Expression::negate(x), Expression::negate(y)), current, discovered,
                                oracle()));
        CHECK(ground_expression(Expression::negate(Expression::negate(x)), current, discovered, oracle()) ==
              ground_expression(x, current, discovered, oracle()));
    }
}

TEST_CASE("induced table grounding and unconverged leaves") {
    GroundingTable table(3);
    const LeafGrounding induced{&inventory3(), &table};
    const auto zero = Configuration::zero(3);
    const auto leaf = Expression::leaf("put red close to green");
    try {
        ground_expression(leaf, zero, universe3(), induced);
        FAIL("expected not-yet-grounded");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::not_yet_grounded);
    }
    table.induce(zero, "put red close to green", cfg("100000000"));
    CHECK(ground_expression(leaf, zero, universe3(), induced) == ground_expression(leaf, zero, universe3(), oracle()));
}

TEST_CASE("expression wire form") {
    const auto e = Expression::any(Expression::leaf("get red above green"),
                                   Expression::negate(Expression::leaf("put red close to green")));
    CHECK(expression_from_json(to_json(e)) == e);
    CHECK(expression_from_json(nlohmann::json("get red above green")) == Expression::leaf("get red above green"));
    CHECK_THROWS_AS(expression_from_json(nlohmann::json{{"op", "xor"}, {"children", nlohmann::json::array()}}), Error);
    CHECK_THROWS_AS(expression_from_json(nlohmann::json{{"op", "not"}, {"children", {"a", "b"}}}), Error);
}

TEST_CASE("select_goal") {
    const auto zero = Configuration::zero(3);
    auto learner = make_learner(3, {}, 1, zero);
    learner.discovered = universe3();
    const CompetenceModel p8{0.8, 0.8, 1.0};

    CHECK(select_goal({cfg("100000000")}, learner, graph3(), zero, p8).goal == cfg("100000000"));
    // one move (close) vs two moves (stack of three)
    const auto pick = select_goal({cfg("111110100"), cfg("010000000")}, learner, graph3(), zero, p8);
    CHECK(pick.goal == cfg("010000000"));
    CHECK(pick.competence == doctest::Approx(0.8));

    auto blind = make_learner(3, {}, 1, zero);
    const auto desperate = select_goal({cfg("111110100"), cfg("111110000")}, blind, graph3(), zero, p8);
    CHECK(desperate.desperate);
    CHECK(desperate.goal == cfg("111110000"));

    try {
        select_goal({}, learner, graph3(), zero, p8);
        FAIL("expected no compatible goal");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::no_compatible_goal);
    }
}

TEST_CASE("follow_instruction") {
    const auto zero = Configuration::zero(3);
    auto learner = make_learner(3, {0.0}, 1, zero);
    learner.discovered = universe3();
    const CompetenceModel perfect{1.0, 1.0, 1.0};
    Rng rng(8);

    const auto r = follow_instruction(Expression::leaf("get red above green"), learner, graph3(), scattered_scene(3),
                                      oracle(), perfect, {5, 10}, rng);
    CHECK(r.success);
    CHECK(r.attempts.size() == 1);
    CHECK(extract_config(r.final_scene).above(0, 1));

    // impossible: red above green and green above red
    const auto never = Expression::all(Expression::leaf("get red above green"), Expression::leaf("get green above red"));
    const auto r2 = follow_instruction(never, learner, graph3(), scattered_scene(3), oracle(), perfect, {5, 10}, rng);
    CHECK_FALSE(r2.success);
    CHECK(r2.attempts.size() == 5);
    for (const auto& a : r2.attempts) CHECK_FALSE(a.goal);
}

TEST_CASE("five attempts succeed whenever one attempt does (coupled streams)") {
    const auto zero = Configuration::zero(3);
    auto base = make_learner(3, {0.1}, 1, zero);
    base.discovered = universe3();
    const CompetenceModel weak{0.3, 0.3, 1.0};
    int one = 0, five = 0;
    for (std::uint64_t seed = 0; seed < 300; ++seed) {
        const auto& s = inventory3().at(seed % inventory3().size());
        auto l1 = base;
        auto l5 = base;
        Rng r1(seed), r5(seed);
        const bool ok1 =
            follow_instruction(Expression::leaf(s.text), l1, graph3(), scattered_scene(3), oracle(), weak, {1, 2}, r1).success;
        const bool ok5 =
            follow_instruction(Expression::leaf(s.text), l5, graph3(), scattered_scene(3), oracle(), weak, {5, 2}, r5).success;
        if (ok1) CHECK(ok5);
        one += ok1;
        five += ok5;
    }
    CHECK(five > one);
}

TEST_CASE("induction is sound on a stream of consistent examples") {
    Rng rng(77);
    GroundingTable table(3);
    const auto nodes = std::vector<Configuration>(universe3().begin(), universe3().end());
    int fed = 0;
    while (fed < 10000) {
        // a one-move transition described by one of its changed predicates
        const auto& before = nodes[rng.index(nodes.size())];
        const auto& next = graph3().adjacent(graph3().id(before));
        const auto& after = graph3().node(next[rng.index(next.size())]);
        std::vector<int> changed;
        for (int i = 0; i < 9; ++i) {
            if (before.get(i) != after.get(i)) changed.push_back(i);
        }
        const int pi = changed[rng.index(changed.size())];
        const auto options = inventory3().for_transformation({PredicateId::from_index(3, pi), after.get(pi)});
        table.induce(before, options[rng.index(options.size())]->text, after);
        ++fed;
        if (fed % 1000 == 0) {
            for (const auto& t : inventory3().sentences()) CHECK(table.candidates(t.text).contains(t.transformation));
        }
    }
    CHECK(table.converged_count() == inventory3().size());
    for (const auto& s : inventory3().sentences()) CHECK(*table.lookup(s.text) == s.transformation);
}

TEST_CASE("an instruction never accepts the configuration it starts from") {
    const auto zero = Configuration::zero(3);
    auto learner = make_learner(3, {0.0}, 1, zero);  // knows only where it stands
    Rng rng(4);
    const auto r = follow_instruction(Expression::negate(Expression::leaf("put red close to green")), learner, graph3(),
                                      scattered_scene(3), oracle(), {1.0, 1.0, 1.0}, {5, 10}, rng);
    CHECK_FALSE(r.success);
    REQUIRE(r.attempts.size() == 5);
    for (const auto& a : r.attempts) CHECK(a.compatible == 0);
    CHECK(to_json(r)["attempts"][0]["reason"] == "no compatible goal");
}
