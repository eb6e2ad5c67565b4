#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "csteer/model.hpp"
#include "csteer/sampling.hpp"
#include "support/stats.hpp"

using namespace csteer;

namespace {

Vocabulary vocab3() { return Vocabulary({"<eos>", "a", "b"}, 0); }
Vocabulary vocab4() { return Vocabulary({"<eos>", "a", "b", "c"}, 0); }

ConceptInput topic() { return ConceptInput{{"topic"}}; }

ToyModel uniform_model(Vocabulary v) {
    // no fitted rows: every context is served the uniform distribution
    return ToyModel(std::move(v), 1, 0.01);
}

SamplerConfig plain(uint64_t seed, int32_t max_len = 4) {
    SamplerConfig cfg;
    cfg.seed = seed;
    cfg.max_len = max_len;
    return cfg;
}

}  // namespace

TEST_CASE("sampler config validation") {
    SamplerConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.temperature = 0.0;
    CHECK_THROWS_AS(cfg.validate(), InvalidInput);
    cfg = SamplerConfig{};
    cfg.top_p = 0.0;
    CHECK_THROWS_AS(cfg.validate(), InvalidInput);
    cfg = SamplerConfig{};
    cfg.top_p = 1.5;
    CHECK_THROWS_AS(cfg.validate(), InvalidInput);
    cfg = SamplerConfig{};
    cfg.top_k = -1;
    CHECK_THROWS_AS(cfg.validate(), InvalidInput);
    cfg = SamplerConfig{};
    cfg.max_len = 0;
    CHECK_THROWS_AS(cfg.validate(), InvalidInput);
}

TEST_CASE("near-zero temperature is argmax with lowest index on ties") {
    auto dist = StepDistribution::checked({0.4, 0.4, 0.2});
    SamplerConfig cfg;
    cfg.temperature = 1e-7;
    auto kept = filter_step(dist, cfg);
    REQUIRE(kept.size() == 1);
    CHECK(kept[0].first == 0);
    CHECK(kept[0].second == 1.0);
}

TEST_CASE("temperature below one sharpens the distribution") {
    auto dist = StepDistribution::checked({0.5, 0.25, 0.25});
    SamplerConfig cfg;
    cfg.temperature = 0.5;
    auto kept = filter_step(dist, cfg);
    REQUIRE(kept.size() == 3);
    CHECK(kept[0].first == 0);
    CHECK(kept[0].second == Catch::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(kept[1].second == Catch::Approx(1.0 / 6.0).epsilon(1e-12));
    CHECK(kept[2].second == Catch::Approx(1.0 / 6.0).epsilon(1e-12));
}

TEST_CASE("unit temperature leaves probabilities untouched") {
    auto dist = StepDistribution::checked({0.5, 0.3, 0.2});
    auto kept = filter_step(dist, SamplerConfig{});
    REQUIRE(kept.size() == 3);
    CHECK(kept[0].second == 0.5);
    CHECK(kept[1].second == 0.3);
    CHECK(kept[2].second == 0.2);
}

TEST_CASE("nucleus keeps the shortest prefix reaching top_p, tolerant at the boundary") {
    auto dist = StepDistribution::checked({0.5, 0.3, 0.2});
    SamplerConfig cfg;
    cfg.top_p = 0.8;  // 0.5 + 0.3 lands a hair under 0.8 in floating point
    auto kept = filter_step(dist, cfg);
    REQUIRE(kept.size() == 2);
    CHECK(kept[0].first == 0);
    CHECK(kept[1].first == 1);
    CHECK(kept[0].second == Catch::Approx(0.625).epsilon(1e-12));
    CHECK(kept[1].second == Catch::Approx(0.375).epsilon(1e-12));
}

TEST_CASE("a tiny top_p still keeps the best candidate") {
    auto dist = StepDistribution::checked({0.5, 0.3, 0.2});
    SamplerConfig cfg;
    cfg.top_p = 1e-9;
    auto kept = filter_step(dist, cfg);
    REQUIRE(kept.size() == 1);
    CHECK(kept[0].first == 0);
    CHECK(kept[0].second == 1.0);
}

TEST_CASE("top_k caps the candidate list after nucleus filtering") {
    auto dist = StepDistribution::checked({0.2, 0.5, 0.3});
    SamplerConfig cfg;
    cfg.top_k = 2;
    auto kept = filter_step(dist, cfg);
    REQUIRE(kept.size() == 2);
    CHECK(kept[0].first == 1);
    CHECK(kept[1].first == 2);
    CHECK(kept[0].second == Catch::Approx(0.625).epsilon(1e-12));
    CHECK(kept[1].second == Catch::Approx(0.375).epsilon(1e-12));

    cfg.top_k = 0;
    CHECK(filter_step(dist, cfg).size() == 3);
}

TEST_CASE("equal probabilities rank by ascending token id") {
    auto dist = StepDistribution::checked({0.25, 0.25, 0.25, 0.25});
    SamplerConfig cfg;
    cfg.top_k = 2;
    auto kept = filter_step(dist, cfg);
    REQUIRE(kept.size() == 2);
    CHECK(kept[0].first == 0);
    CHECK(kept[1].first == 1);
}

TEST_CASE("sampling is reproducible for a fixed seed") {
    auto model = uniform_model(vocab4());
    auto cfg = plain(99, 6);
    Xoshiro256ss r1(cfg.seed), r2(cfg.seed);
    for (int i = 0; i < 50; ++i) {
        auto y1 = sample_sequence(model, topic(), cfg, r1);
        auto y2 = sample_sequence(model, topic(), cfg, r2);
        CHECK(y1 == y2);
    }
}

TEST_CASE("generation stops at max_len without termination") {
    ToyModel m(vocab3(), 1, 0.0);
    m.set_counts(topic(), {}, {0.0, 1.0, 1.0});
    auto cfg = plain(5, 5);
    Xoshiro256ss rng(cfg.seed);
    auto y = sample_sequence(m, topic(), cfg, rng);
    CHECK(y.ids.size() == 5);
    CHECK_FALSE(y.terminated);
    CHECK(y.complete(cfg.max_len));
}

TEST_CASE("unfiltered sampling matches the model distribution") {
    auto model = uniform_model(vocab4());
    auto cfg = plain(2024, 1);
    Xoshiro256ss rng(cfg.seed);
    const size_t draws = 100000;
    std::vector<size_t> counts(4, 0);
    for (size_t i = 0; i < draws; ++i) {
        auto y = sample_sequence(model, topic(), cfg, rng);
        REQUIRE(y.ids.size() == 1);
        ++counts[static_cast<size_t>(y.ids[0])];
    }
    std::vector<double> probs(4, 0.25);
    double stat = teststats::chi_square_stat(counts, probs, draws);
    CHECK(teststats::chi_square_p(stat, 3) > 0.01);
}

TEST_CASE("enumeration lists every complete sequence with its exact probability") {
    auto model = uniform_model(vocab3());
    auto leaves = enumerate_sequences(model, topic(), 2);
    REQUIRE(leaves.size() == 7);

    CHECK(leaves[0].first.ids == std::vector<int32_t>{0});
    CHECK(leaves[0].first.terminated);
    CHECK(leaves[0].second == Catch::Approx(1.0 / 3.0).epsilon(1e-12));

    CHECK(leaves[1].first.ids == std::vector<int32_t>{1, 0});
    CHECK(leaves[2].first.ids == std::vector<int32_t>{1, 1});
    CHECK(leaves[3].first.ids == std::vector<int32_t>{1, 2});
    CHECK(leaves[4].first.ids == std::vector<int32_t>{2, 0});
    for (size_t i = 1; i < leaves.size(); ++i)
        CHECK(leaves[i].second == Catch::Approx(1.0 / 9.0).epsilon(1e-12));

    double mass = 0.0;
    for (const auto& [y, p] : leaves) mass += p;
    CHECK(mass == Catch::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("enumeration refuses work past its budget") {
    auto model = uniform_model(vocab4());
    CHECK_THROWS_AS(enumerate_sequences(model, topic(), 10), BudgetExceeded);
    CHECK_NOTHROW(enumerate_sequences(model, topic(), 9));
    CHECK_THROWS_AS(enumerate_sequences(model, topic(), 3, 63), BudgetExceeded);
}

TEST_CASE("sequence log probability of a uniform model") {
    auto model = uniform_model(vocab4());
    Sequence y;
    y = y.appended(1, 0).appended(2, 0).appended(0, 0);
    CHECK(sequence_log_prob(model, topic(), y) ==
          Catch::Approx(-4.1588830833596715).epsilon(1e-14));
}

TEST_CASE("perplexity of a memorized corpus approaches the smoothing floor") {
    std::vector<CorpusRecord> corpus = {{topic(), "a b"}};
    ToyModel m(vocab3(), 2, 0.01);
    m.fit(corpus);
    CHECK(perplexity(m, corpus) == Catch::Approx(1.03 / 1.01).epsilon(1e-12));
}

TEST_CASE("perplexity skips what the vocabulary cannot encode") {
    std::vector<CorpusRecord> corpus = {{topic(), "a b"}};
    ToyModel m(vocab3(), 2, 0.01);
    m.fit(corpus);
    std::vector<CorpusRecord> mixed = {{topic(), "a b"}, {topic(), "a z"}};
    CHECK(perplexity(m, mixed) == Catch::Approx(1.03 / 1.01).epsilon(1e-12));
    std::vector<CorpusRecord> alien = {{topic(), "z"}};
    CHECK_THROWS_AS(perplexity(m, alien), InvalidInput);
}
