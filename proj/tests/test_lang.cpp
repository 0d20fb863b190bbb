#include <doctest.h>

#include "csg/errors.hpp"
#include "csg/grammar.hpp"
#include "csg/rng.hpp"
#include "csg/datagen.hpp"

using namespace csg;

namespace {
const char* kPaperProgram =
    "circle(32,32,28) square(32,40,24) circle(48,32,12) circle(24,32,16) "
    "union intersect subtract";
}

TEST_CASE("parse the reference 7-instruction program") {
    const auto cfg = GrammarConfig::defaults2d();
    const Program p = parse_program(kPaperProgram, cfg);
    REQUIRE(p.length() == 7);
    CHECK_FALSE(p.terminated);
    CHECK(p.instructions[0] == Instruction::primitive2d(PrimitiveKind::Circle, 32, 32, 28));
    CHECK(p.instructions[1] == Instruction::primitive2d(PrimitiveKind::Square, 32, 40, 24));
    CHECK(p.instructions[4] == Instruction::boolean(OpKind::Union));
    CHECK(p.instructions[5] == Instruction::boolean(OpKind::Intersect));
    CHECK(p.instructions[6] == Instruction::boolean(OpKind::Subtract));
    CHECK(format_program(p) == kPaperProgram);
}

TEST_CASE("parse edge cases") {
    const auto cfg = GrammarConfig::defaults2d();
    SUBCASE("empty input") {
        const Program p = parse_program("", cfg);
        CHECK(p.empty());
        CHECK_FALSE(p.terminated);
    }
    SUBCASE("off-grid radius") {
        CHECK_THROWS_AS(parse_program("circle(32,32,7)", cfg), RangeError);
    }
    SUBCASE("off-grid allowed when continuous") {
        const Program p = parse_program("circle(32,32,7.5)", cfg, true);
        CHECK(p.instructions[0].continuous);
    }
    SUBCASE("malformed tokens") {
        CHECK_THROWS_AS(parse_program("circl(32,32,8)", cfg), SyntaxError);
        CHECK_THROWS_AS(parse_program("circle(32,32)", cfg), SyntaxError);
        CHECK_THROWS_AS(parse_program("circle(32,32,8", cfg), SyntaxError);
        CHECK_THROWS_AS(parse_program("stop circle(32,32,8)", cfg), SyntaxError);
        CHECK_THROWS_AS(parse_program("sphere(32,32,32,8)", cfg), SyntaxError);
    }
    SUBCASE("stop terminates") {
        const Program p = parse_program("circle(32,32,8) stop", cfg);
        CHECK(p.terminated);
        CHECK(p.length() == 1);
        CHECK(format_program(p) == "circle(32,32,8) stop");
    }
}

TEST_CASE("format of empty and single-token programs") {
    CHECK(format_program(Program{}) == "");
    Program p;
    p.instructions.push_back(Instruction::primitive2d(PrimitiveKind::Circle, 32, 32, 28));
    CHECK(format_program(p) == "circle(32,32,28)");
}

TEST_CASE("vocabulary sizes") {
    SUBCASE("2D defaults") {
        const auto vocab = build_vocabulary(GrammarConfig::defaults2d());
        CHECK(vocab.size() == 3 * 7 * 7 * 7 + 3 + 1);  // 1033
        CHECK(vocab.at(vocab.stop_id()).is_stop());
    }
    SUBCASE("singleton grids") {
        auto cfg = GrammarConfig::defaults2d();
        cfg.primitive_kinds = {PrimitiveKind::Circle};
        cfg.location = {32, 8, 32};
        cfg.radius = {8, 4, 8};
        CHECK(build_vocabulary(cfg).size() == 1 + 3 + 1);
    }
    SUBCASE("3D defaults") {
        const auto vocab = build_vocabulary(GrammarConfig::defaults3d());
        // spheres + cubes: 2 * 7^3 * 7; cylinders: 7^3 * 7 * 7; ops; stop
        CHECK(vocab.size() == 2 * 343 * 7 + 343 * 7 * 7 + 3 + 1);  // 21613
    }
}

TEST_CASE("vocabulary determinism and id round trip") {
    const auto cfg = GrammarConfig::defaults2d();
    const auto v1 = build_vocabulary(cfg);
    const auto v2 = build_vocabulary(cfg);
    REQUIRE(v1.size() == v2.size());
    CHECK(v1.hash() == v2.hash());
    for (int i = 0; i < v1.size(); i += 37) {
        CHECK(v1.at(i) == v2.at(i));
        CHECK(v1.id_of(v1.at(i)) == i);
    }
    // no duplicates: every entry maps back to its own id
    for (int i = 0; i < v1.size(); ++i) REQUIRE(v1.id_of(v1.at(i)) == i);
}

TEST_CASE("validate") {
    const auto cfg = GrammarConfig::defaults2d();
    SUBCASE("paper program is valid") {
        CHECK(validate(parse_program(kPaperProgram, cfg), cfg).valid);
    }
    SUBCASE("two leaves without op") {
        const auto rep = validate(parse_program("circle(32,32,28) square(32,40,24)", cfg), cfg);
        CHECK_FALSE(rep.valid);
        CHECK(rep.failure == ValidityReport::Failure::NonSingletonFinal);
        CHECK(rep.final_count == 2);
    }
    SUBCASE("op on empty stack") {
        const auto rep = validate(parse_program("union", cfg), cfg);
        CHECK_FALSE(rep.valid);
        CHECK(rep.failure == ValidityReport::Failure::StackUnderflow);
        CHECK(rep.position == 0);
    }
    SUBCASE("empty program") {
        CHECK(validate(Program{}, cfg).failure == ValidityReport::Failure::Empty);
    }
    SUBCASE("too long") {
        auto cfg5 = cfg;
        cfg5.max_length = 5;
        Rng rng(1);
        const Program p = sample_program(7, rng, cfg);
        CHECK(validate(p, cfg5).failure == ValidityReport::Failure::TooLong);
    }
}

TEST_CASE("properties of random vocabulary programs") {
    const auto cfg = GrammarConfig::defaults2d();
    Rng rng(42);
    for (int trial = 0; trial < 200; ++trial) {
        const int length = 3 + 2 * rng.uniform_int(6);
        const Program p = sample_program(length, rng, cfg);
        // round trip
        CHECK(parse_program(format_program(p), cfg) == p);
        // odd length, (L+1)/2 primitives
        const auto nprim = std::count_if(p.instructions.begin(), p.instructions.end(),
                                         [](const Instruction& i) { return i.is_primitive(); });
        CHECK(int(p.length()) % 2 == 1);
        CHECK(nprim == (int(p.length()) + 1) / 2);
        // prefix monotonicity: every proper prefix has #primitives > #ops
        int prims = 0, ops = 0;
        for (const auto& instr : p.instructions) {
            instr.is_primitive() ? ++prims : ++ops;
            CHECK(prims > ops);
        }
        CHECK(validate(p, cfg).valid);
    }
}

TEST_CASE("grammar config round trip and invariants") {
    auto cfg = GrammarConfig::defaults3d();
    cfg.max_length = 7;
    cfg.containment_filter = true;
    const std::string path = "grammar_roundtrip.cfg";
    save_grammar(path, cfg);
    CHECK(load_grammar(path) == cfg);

    auto bad = GrammarConfig::defaults2d();
    bad.radius = {8, 4, 128};
    CHECK_THROWS_AS(bad.check(), std::invalid_argument);
    bad = GrammarConfig::defaults2d();
    bad.op_kinds.clear();
    CHECK_THROWS_AS(bad.check(), std::invalid_argument);
    bad = GrammarConfig::defaults2d();
    bad.max_length = 2;
    CHECK_THROWS_AS(bad.check(), std::invalid_argument);
}

TEST_CASE("containment filter keeps only in-canvas primitives") {
    auto cfg = GrammarConfig::defaults2d();
    cfg.containment_filter = true;
    const auto vocab = build_vocabulary(cfg);
    CHECK(vocab.size() < 1033);
    for (const auto& instr : vocab.entries()) {
        if (!instr.is_primitive()) continue;
        const auto bb = primitive_bbox(instr);
        CHECK(bb[0] >= 0);
        CHECK(bb[1] >= 0);
        CHECK(bb[3] <= 64);
        CHECK(bb[4] <= 64);
    }
}
