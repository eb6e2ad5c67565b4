#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "csteer/embed.hpp"

using namespace csteer;

TEST_CASE("build_lexicon collects sorted unique stems") {
    auto lex = build_lexicon({"the dogs walked", "walking the dog"}, Stemmer::standard());
    CHECK(lex == std::vector<std::string>{"dog", "the", "walk"});
}

TEST_CASE("embedder vectors are L2-normalized stem counts") {
    BagOfStemsEmbedder emb({"x", "y", "z"});
    auto v = emb.embed("x x y");
    REQUIRE(v.size() == 3);
    const double n = std::sqrt(5.0);
    CHECK(v[0] == Catch::Approx(2.0 / n).epsilon(1e-12));
    CHECK(v[1] == Catch::Approx(1.0 / n).epsilon(1e-12));
    CHECK(v[2] == 0.0);
    double norm = 0.0;
    for (double e : v) norm += e * e;
    CHECK(norm == Catch::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("words outside the lexicon are dropped") {
    BagOfStemsEmbedder emb({"x", "y"});
    auto v = emb.embed("q r s");
    CHECK(v == std::vector<double>{0.0, 0.0});
}

TEST_CASE("embedding goes through the stemmer") {
    BagOfStemsEmbedder emb({"walk", "dog"});
    auto v = emb.embed("the dogs walked");
    CHECK(v[0] == Catch::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
    CHECK(v[1] == Catch::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
}

TEST_CASE("lexicon validation") {
    CHECK_THROWS_AS(BagOfStemsEmbedder({}), InvalidInput);
    CHECK_THROWS_AS(BagOfStemsEmbedder({"x", "x"}), InvalidInput);
    CHECK_THROWS_AS(BagOfStemsEmbedder({"x", ""}), InvalidInput);
}

TEST_CASE("cosine is clamped into the unit interval") {
    CHECK(cosine_clamped({1.0, 0.0}, {-1.0, 0.0}) == 0.0);
    CHECK(cosine_clamped({1.0, 0.0}, {1.0, 0.0}) == Catch::Approx(1.0).epsilon(1e-12));
    CHECK(cosine_clamped({1.0, 0.0}, {0.0, 1.0}) == 0.0);
}

TEST_CASE("the zero vector is dissimilar to everything") {
    CHECK(cosine_clamped({0.0, 0.0}, {1.0, 0.0}) == 0.0);
    CHECK(cosine_clamped({0.0, 0.0}, {0.0, 0.0}) == 0.0);
}

TEST_CASE("cosine requires matching dimensions") {
    CHECK_THROWS_AS(cosine_clamped({1.0}, {1.0, 0.0}), InvalidInput);
}

TEST_CASE("cosine of partially overlapping bags") {
    BagOfStemsEmbedder emb({"a", "bite", "person"});
    auto u = emb.embed("eat a telephone");
    auto w = emb.embed("bite a person");
    CHECK(cosine_clamped(u, w) == Catch::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-12));
}
