#include <doctest.h>

#include <algorithm>
#include <set>

#include "taa/semantics.hpp"

using namespace taa;

namespace {

constexpr BlockId red = 0, green = 1, blue = 2;

Scene make_scene(int n, std::vector<std::vector<Structure>> clusters) {
    return canonical(Scene{n, std::move(clusters)});
}

// Bit-level statement of "the moved block b is the only thing that changed":
// all predicates not mentioning b agree.
bool agree_without(const Configuration& x, const Configuration& y, BlockId b) {
    for (int i = 0; i < x.size(); ++i) {
        const auto p = PredicateId::from_index(x.n_blocks(), i);
        if (p.a != b && p.b != b && x.get(i) != y.get(i)) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("predicate_count follows 3*C(n,2)") {
    CHECK(predicate_count(3) == 9);
    CHECK(predicate_count(2) == 3);
    CHECK(predicate_count(5) == 30);
    CHECK_THROWS_AS(predicate_count(1), Error);
    try {
        predicate_count(1);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::invalid_world);
    }
}

TEST_CASE("predicate indexing is a bijection in canonical order") {
    for (int n = 2; n <= 5; ++n) {
        for (int i = 0; i < predicate_count(n); ++i) {
            CHECK(PredicateId::from_index(n, i).index(n) == i);
        }
    }
    // close pairs first, then ordered above pairs, both lexicographic
    CHECK(PredicateId::close(red, green).index(3) == 0);
    CHECK(PredicateId::close(red, blue).index(3) == 1);
    CHECK(PredicateId::close(green, blue).index(3) == 2);
    CHECK(PredicateId::above(red, green).index(3) == 3);
    CHECK(PredicateId::above(red, blue).index(3) == 4);
    CHECK(PredicateId::above(green, red).index(3) == 5);
    CHECK(PredicateId::above(blue, green).index(3) == 8);
    CHECK(PredicateId::parse("above(red,green)") == PredicateId::above(red, green));
    CHECK(PredicateId::parse("close(blue,red)") == PredicateId::close(red, blue));
    CHECK(PredicateId::above(green, blue).name() == "above(green,blue)");
}

TEST_CASE("configuration bit strings and ordering") {
    const auto c = Configuration::from_bits(3, "111110100");
    CHECK(c.bits() == "111110100");
    CHECK(c.above(red, green));
    CHECK_FALSE(c.above(green, red));
    CHECK(Configuration::from_bits(3, "011000000") < Configuration::from_bits(3, "100000000"));
    CHECK_THROWS_AS(Configuration::from_bits(3, "1111"), Error);
    CHECK(config_from_json(3, to_json(c)) == c);
    CHECK(config_from_json(3, "111110100") == c);
}

TEST_CASE("extract_config on the reference scenes") {
    const auto two_stack =
        make_scene(3, {{Structure::stack({green, red})}, {Structure::single(blue)}});
    CHECK(extract_config(two_stack).bits() == "100100000");

    const auto three_stack = make_scene(3, {{Structure::stack({blue, green, red})}});
    CHECK(extract_config(three_stack).bits() == "111110100");

    const auto pyramid = make_scene(3, {{Structure::pyramid(red, green, blue)}});
    CHECK(extract_config(pyramid).bits() == "111110000");

    Scene broken{3, {{Structure::single(red), Structure::single(red)}, {Structure::single(blue)}}};
    CHECK_THROWS_AS(extract_config(broken), Error);
}

TEST_CASE("is_valid rejection rules") {
    CHECK(is_valid(Configuration::zero(3)));
    auto c = Configuration::zero(3);
    c.set(PredicateId::above(red, green), true);
    CHECK_FALSE(is_valid(c));  // above without close
    c.set(PredicateId::close(red, green), true);
    CHECK(is_valid(c));
    c.set(PredicateId::above(green, red), true);
    CHECK_FALSE(is_valid(c));  // antisymmetry

    try {
        is_valid(Configuration::zero(2), 3);
        FAIL("expected a dimension error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::dimension);
    }
}

TEST_CASE("every enumerated scene extracts to a valid configuration that realizes back") {
    for (int n = 2; n <= 4; ++n) {
        for (const auto& scene : enumerate_scenes(n)) {
            const auto c = extract_config(scene);
            REQUIRE(is_valid(c));
            CHECK(*realize(c) == scene);
        }
    }
}

TEST_CASE("n=2 valid set enumerated by hand") {
    // far, close, red on green, green on red
    const ConfigSet expected = {Configuration::from_bits(2, "000"), Configuration::from_bits(2, "100"),
                                Configuration::from_bits(2, "110"), Configuration::from_bits(2, "101")};
    CHECK(enumerate_valid_configs(2) == expected);
}

TEST_CASE("n=3 scene grammar equals brute-force filtering of all 512 patterns") {
    ConfigSet brute;
    for (std::uint32_t w = 0; w < 512; ++w) {
        const Configuration c(3, w);
        if (is_valid(c)) brute.insert(c);
    }
    const auto grammar = enumerate_valid_configs(3);
    CHECK(grammar == brute);
    CHECK(grammar.size() == 26);  // 5 all-single + 12 two-stack + 6 three-stack + 3 pyramid
    CHECK(grammar.contains(Configuration::from_bits(3, "111110100")));
    CHECK(grammar.contains(Configuration::from_bits(3, "111110000")));
}

TEST_CASE("unsupported world sizes") {
    CHECK_THROWS_AS(enumerate_valid_configs(6), Error);
    CHECK_THROWS_AS(enumerate_valid_configs(1), Error);
}

TEST_CASE("legal_moves on the reference scenes") {
    CHECK(legal_moves(scattered_scene(3)).size() == 12);

    const auto stack3 = make_scene(3, {{Structure::stack({blue, green, red})}});
    for (const auto& m : legal_moves(stack3)) CHECK(m.block == red);

    const auto pyramid = make_scene(3, {{Structure::pyramid(red, green, blue)}});
    const auto pm = legal_moves(pyramid);
    CHECK_FALSE(pm.empty());
    for (const auto& m : pm) CHECK(m.block == red);
}

TEST_CASE("apply_move examples") {
    const auto stack = make_scene(3, {{Structure::stack({green, red})}, {Structure::single(blue)}});
    const auto apart = apply_move(stack, Move::alone_far(red));
    CHECK(extract_config(apart) == Configuration::zero(3));

    const auto close_pair =
        make_scene(3, {{Structure::single(red), Structure::single(green)}, {Structure::single(blue)}});
    const auto pyr = apply_move(close_pair, Move::bridge(blue, red, green));
    REQUIRE(pyr.clusters.size() == 1);
    CHECK(pyr.clusters[0][0].kind == Structure::Kind::pyramid);
    CHECK(pyr.clusters[0][0].top() == blue);

    const auto stack3 = make_scene(3, {{Structure::stack({blue, green, red})}});
    try {
        apply_move(stack3, Move::alone_far(blue));
        FAIL("expected an illegal-move error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::illegal_move);
        CHECK(std::string(e.what()).find("not clear") != std::string::npos);
    }
    // No-op placement
    CHECK_THROWS_AS(apply_move(scattered_scene(3), Move::alone_far(red)), Error);
    // Stacking on a pyramid is not part of the grammar
    const auto pyr4 = make_scene(4, {{Structure::pyramid(red, green, blue)}, {Structure::single(3)}});
    CHECK_THROWS_AS(apply_move(pyr4, Move::on_top(3, red)), Error);
}

TEST_CASE("sliding a block from its support onto a neighbour is one move") {
    // red on green, blue next to them: red can bridge green and blue directly.
    const auto s = make_scene(3, {{Structure::stack({green, red}), Structure::single(blue)}});
    const auto moves = legal_moves(s);
    CHECK(std::find(moves.begin(), moves.end(), Move::bridge(red, green, blue)) != moves.end());
    CHECK(extract_config(apply_move(s, Move::bridge(red, green, blue))).bits() == "111110000");
    // and unstacking in place keeps the blocks together
    CHECK(std::find(moves.begin(), moves.end(), Move::join_cluster(red, 0)) != moves.end());
}

TEST_CASE("move properties hold exhaustively for n=3 and n=4") {
    for (int n = 3; n <= 4; ++n) {
        for (const auto& s : enumerate_scenes(n)) {
            const auto before = extract_config(s);
            for (const auto& m : legal_moves(s)) {
                const auto t = apply_move(s, m);
                REQUIRE_NOTHROW(validate(t));
                const auto after = extract_config(t);
                CHECK(is_valid(after));
                CHECK(after != before);
                CHECK(agree_without(before, after, m.block));
                // Reversibility: some move of the new scene restores the old configuration.
                bool restored = false;
                for (const auto& back : legal_moves(t)) {
                    if (extract_config(apply_move(t, back)) == before) {
                        restored = true;
                        break;
                    }
                }
                CHECK(restored);
            }
        }
    }
}

TEST_CASE("scene json round trip and validation") {
    const auto s = make_scene(3, {{Structure::pyramid(red, green, blue)}});
    CHECK(scene_from_json(3, to_json(s)) == s);

    const nlohmann::json twice = {
        {"structures", {{{"kind", "single"}, {"block", 0}}, {{"kind", "single"}, {"block", 0}}, {{"kind", "single"}, {"block", 2}}}},
        {"clusters", {{0}, {1}, {2}}}};
    try {
        scene_from_json(3, twice);
        FAIL("expected invariant violation");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::invariant_violation);
        CHECK(std::string(e.what()).find("more than once") != std::string::npos);
    }
}
