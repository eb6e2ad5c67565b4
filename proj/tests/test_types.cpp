#include <catch2/catch_amalgamated.hpp>

#include "csteer/types.hpp"

using namespace csteer;

namespace {

Vocabulary abc() { return Vocabulary({"<eos>", "a", "b"}, 0); }

}  // namespace

TEST_CASE("vocabulary maps tokens to ids and back") {
    auto v = abc();
    CHECK(v.size() == 3);
    CHECK(v.eos_id() == 0);
    CHECK(v.id("a") == 1);
    CHECK(v.token(2) == "b");
    CHECK(v.contains("b"));
    CHECK_FALSE(v.contains("z"));
}

TEST_CASE("vocabulary rejects invalid construction") {
    CHECK_THROWS_AS(Vocabulary({"x"}, 0), InvalidInput);
    CHECK_THROWS_AS(Vocabulary({"a", "a", "b"}, 0), InvalidInput);
    CHECK_THROWS_AS(Vocabulary({"a", "b"}, 2), InvalidInput);
    CHECK_THROWS_AS(Vocabulary({"a", "b"}, -1), InvalidInput);
    CHECK_THROWS_AS(Vocabulary({"a", ""}, 0), InvalidInput);
}

TEST_CASE("unknown token lookup fails loudly") {
    auto v = abc();
    CHECK_THROWS_AS(v.id("missing"), InvalidInput);
}

TEST_CASE("concept set hash ignores order and case") {
    ConceptInput x1{{"dog", "Table"}};
    ConceptInput x2{{"table", "DOG"}};
    ConceptInput x3{{"dog", "chair"}};
    CHECK(x1.set_hash() == x2.set_hash());
    CHECK(x1.set_hash() != x3.set_hash());
}

TEST_CASE("concept validation wants non-empty distinct stems") {
    Stemmer st = Stemmer::standard();
    CHECK_NOTHROW(validate_concepts(ConceptInput{{"dog", "fireplace"}}, st));
    CHECK_THROWS_AS(validate_concepts(ConceptInput{{}}, st), InvalidInput);
    CHECK_THROWS_AS(validate_concepts(ConceptInput{{"walk", "walking"}}, st), InvalidInput);
    CHECK_THROWS_AS(validate_concepts(ConceptInput{{"dog", ""}}, st), InvalidInput);
}

TEST_CASE("appended marks termination on eos") {
    Sequence y;
    y = y.appended(1, 0);
    CHECK(y.ids == std::vector<int32_t>{1});
    CHECK_FALSE(y.terminated);
    y = y.appended(0, 0);
    CHECK(y.terminated);
    CHECK(y.complete(10));
}

TEST_CASE("a sequence at max length is complete without eos") {
    Sequence y;
    y = y.appended(1, 0).appended(2, 0);
    CHECK_FALSE(y.terminated);
    CHECK(y.complete(2));
    CHECK_FALSE(y.complete(3));
}

TEST_CASE("sequence validation enforces the contract") {
    auto v = abc();
    Sequence ok;
    ok = ok.appended(1, 0).appended(0, 0);
    CHECK_NOTHROW(validate_sequence(ok, v, 5));

    Sequence mid_eos;
    mid_eos.ids = {1, 0, 2};
    CHECK_THROWS_AS(validate_sequence(mid_eos, v, 5), InvalidInput);

    Sequence wrong_flag;
    wrong_flag.ids = {1, 2};
    wrong_flag.terminated = true;
    CHECK_THROWS_AS(validate_sequence(wrong_flag, v, 5), InvalidInput);

    Sequence too_long;
    too_long.ids = {1, 2, 1, 2};
    CHECK_THROWS_AS(validate_sequence(too_long, v, 3), InvalidInput);

    Sequence bad_id;
    bad_id.ids = {7};
    CHECK_THROWS_AS(validate_sequence(bad_id, v, 5), InvalidInput);
}

TEST_CASE("render joins tokens and drops eos") {
    auto v = abc();
    Sequence y;
    y = y.appended(1, 0).appended(2, 0).appended(0, 0);
    CHECK(render(v, y) == "a b");
    CHECK(render(v, Sequence{}).empty());
}

TEST_CASE("step distribution checks non-negativity and total mass") {
    CHECK_NOTHROW(StepDistribution::checked({0.5, 0.5}));
    CHECK_NOTHROW(StepDistribution::checked({0.3, 0.7 + 5e-10}));
    CHECK_THROWS_AS(StepDistribution::checked({0.5, 0.5 + 1e-7}), InvalidInput);
    CHECK_THROWS_AS(StepDistribution::checked({-0.1, 1.1}), InvalidInput);
    CHECK_THROWS_AS(StepDistribution::checked({0.4, 0.4}), InvalidInput);
}
