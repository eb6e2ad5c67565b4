#include <catch2/catch_amalgamated.hpp>
#include <memory>

#include "csteer/oracle.hpp"

using namespace csteer;

namespace {

const char* kStory =
    "The dog walked around the table while we played a game by the fireplace.";

ConceptInput story_concepts() { return ConceptInput{{"table", "dog", "game", "walk", "fireplace"}}; }

}  // namespace

TEST_CASE("oracle scores live in the unit interval") {
    CHECK_NOTHROW(OracleScore(0.0));
    CHECK_NOTHROW(OracleScore(1.0));
    CHECK_THROWS_AS(OracleScore(-0.1), ContractViolation);
    CHECK_THROWS_AS(OracleScore(1.1), ContractViolation);
}

TEST_CASE("lexical check accepts a sentence covering every constraint") {
    LexicalOracle lex;
    CHECK(lex.score(story_concepts(), kStory).value == 1.0);
    CHECK(lex.coverage(story_concepts(), kStory) == 1.0);
}

TEST_CASE("one missing constraint zeroes the check but not the ratio") {
    LexicalOracle lex;
    const char* partial = "The dog walked around the table while we played a game.";
    CHECK(lex.score(story_concepts(), partial).value == 0.0);
    CHECK(lex.coverage(story_concepts(), partial) == Catch::Approx(0.8).epsilon(1e-15));
}

TEST_CASE("coverage counts stem matches, not surface forms") {
    LexicalOracle lex;
    ConceptInput x{{"walking", "dogs"}};
    CHECK(lex.score(x, "the dog walked") .value == 1.0);
    CHECK(lex.coverage(x, "the dog sat") == Catch::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("a multi-word constraint needs every word stem present") {
    LexicalOracle lex;
    ConceptInput x{{"driving nails"}};
    CHECK(lex.score(x, "he was driving big nails today").value == 1.0);
    CHECK(lex.score(x, "he was driving home").value == 0.0);
}

TEST_CASE("empty constraint lists are vacuous for the check, invalid for the ratio") {
    LexicalOracle lex;
    ConceptInput none;
    CHECK(lex.score(none, "anything").value == 1.0);
    CHECK_THROWS_AS(lex.coverage(none, "anything"), InvalidInput);
}

TEST_CASE("adding covered text never lowers coverage") {
    LexicalOracle lex;
    ConceptInput x{{"dog", "table", "game"}};
    std::string text = "nothing here";
    double prev = lex.coverage(x, text);
    for (const char* extra : {"the dog", "a table", "some game"}) {
        text += " ";
        text += extra;
        double cur = lex.coverage(x, text);
        CHECK(cur >= prev);
        prev = cur;
    }
    CHECK(prev == 1.0);
}

TEST_CASE("joint score is the product of the check and the graded score") {
    auto lex = std::make_shared<LexicalOracle>();
    auto graded = std::make_shared<ConstantOracle>(0.45);
    JointOracle joint(lex, graded);
    ConceptInput x{{"dog"}};
    CHECK(joint.score(x, "the dog barked").value == Catch::Approx(0.45).epsilon(1e-15));
    CHECK(joint.score(x, "the cat purred").value == 0.0);
}

TEST_CASE("joint short-circuits the graded scorer when the check fails") {
    auto lex = std::make_shared<LexicalOracle>();
    auto called = std::make_shared<bool>(false);
    auto graded = std::make_shared<FunctionOracle>([called](const ConceptInput&, std::string_view) {
        *called = true;
        return 0.7;
    });
    JointOracle joint(lex, graded);
    ConceptInput x{{"zebra"}};
    CHECK(joint.score(x, "no stripes here").value == 0.0);
    CHECK_FALSE(*called);
    CHECK(joint.score(x, "a zebra grazes").value == Catch::Approx(0.7).epsilon(1e-15));
    CHECK(*called);
}

TEST_CASE("joint construction requires both parts") {
    CHECK_THROWS_AS(JointOracle(nullptr, std::make_shared<ConstantOracle>(1.0)), InvalidInput);
    CHECK_THROWS_AS(JointOracle(std::make_shared<LexicalOracle>(), nullptr), InvalidInput);
}

TEST_CASE("constant oracle validates its value once") {
    ConstantOracle half(0.5);
    CHECK(half.score(ConceptInput{}, "whatever").value == 0.5);
    CHECK_THROWS_AS(ConstantOracle(1.5), ContractViolation);
}

TEST_CASE("function oracle wraps a pure function and checks its range") {
    FunctionOracle fn([](const ConceptInput&, std::string_view text) {
        return text.empty() ? 0.0 : 1.0;
    });
    CHECK(fn.score(ConceptInput{}, "x").value == 1.0);
    CHECK(fn.score(ConceptInput{}, "").value == 0.0);
    FunctionOracle bad([](const ConceptInput&, std::string_view) { return 2.0; });
    CHECK_THROWS_AS(bad.score(ConceptInput{}, "x"), ContractViolation);
    CHECK_THROWS_AS(FunctionOracle(nullptr), InvalidInput);
}
