#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <memory>

#include "csteer/metrics.hpp"
#include "csteer/model.hpp"

using namespace csteer;

namespace {

Benchmark tiny_bench() {
    Benchmark b;
    b.entries.push_back({ConceptInput{{"cat", "mat"}},
                         {"the cat is on the mat", "a cat sat on the mat"}});
    b.entries.push_back({ConceptInput{{"dog"}}, {}});
    return b;
}

OutputRow row_for(const Benchmark& b, size_t entry, std::string text) {
    OutputRow r;
    r.entry = entry;
    r.x = b.entries[entry].x;
    r.text = std::move(text);
    return r;
}

}  // namespace

TEST_CASE("an exact reference copy scores a perfect bleu") {
    CHECK(bleu4("the cat sat on the mat", {"the cat sat on the mat"}) ==
          Catch::Approx(1.0).epsilon(1e-12));
    CHECK(bleu4("the cat", {"the cat"}) == Catch::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("bleu of a near-miss candidate has a closed form") {
    // p1 = 5/6, p2 = 3/5, p3 = 1/4, p4 smoothed to 1/4, brevity penalty 1
    CHECK(bleu4("the cat sat on the mat", {"the cat is on the mat"}) ==
          Catch::Approx(std::pow(2.0, -1.25)).epsilon(1e-12));
}

TEST_CASE("a candidate sharing nothing with the references gets only smoothing mass") {
    double v = bleu4("a b c d e", {"f g h i j"});
    // every order zero-matched: the smoothing floors 1/6, 1/5, 1/4, 1/3
    CHECK(v == Catch::Approx(std::pow(1.0 / 360.0, 0.25)).epsilon(1e-12));
}

TEST_CASE("orders longer than the candidate are skipped") {
    // two tokens: only p1 and p2 exist; both perfect, shorter of the two
    // references ties the candidate length so no brevity penalty applies
    CHECK(bleu4("the cat", {"the cat sat", "the cat"}) == Catch::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("the brevity penalty uses the closest reference length") {
    // candidate length 2 against a lone reference of length 3
    double v = bleu4("the cat", {"the cat sat"});
    CHECK(v == Catch::Approx(std::exp(-0.5)).epsilon(1e-12));
}

TEST_CASE("reference length ties prefer the shorter reference") {
    // candidate length 3; references of lengths 2 and 4 tie, shorter wins, bp = 1
    double v = bleu4("a b c", {"a b", "a b c d"});
    CHECK(v == Catch::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("bleu is invariant to reference order") {
    std::vector<std::string> refs = {"the cat is on the mat", "a cat sat on a mat"};
    std::vector<std::string> flipped = {refs[1], refs[0]};
    CHECK(bleu4("the cat sat on the mat", refs) == bleu4("the cat sat on the mat", flipped));
}

TEST_CASE("empty candidates score zero, empty reference lists are invalid") {
    CHECK(bleu4("", {"the cat"}) == 0.0);
    CHECK(bleu4("  ...  ", {"the cat"}) == 0.0);
    CHECK_THROWS_AS(bleu4("the cat", {}), InvalidInput);
}

TEST_CASE("clipping caps repeated candidate n-grams at the reference count") {
    // three "the" in the candidate, only two in the reference
    double v = bleu4("the the the", {"the cat the"});
    // p1 = 2/3 clipped, p2 = 1/3 smoothed (no "the the" in the reference), p3 = 1/2 smoothed
    CHECK(v == Catch::Approx(std::exp((std::log(2.0 / 3.0) + std::log(1.0 / 3.0) +
                                       std::log(0.5)) / 4.0)).epsilon(1e-12));
}

TEST_CASE("benchmark validation and hashing") {
    Benchmark b = tiny_bench();
    CHECK_NOTHROW(b.validate());
    CHECK(b.hash() != 0);

    Benchmark empty;
    CHECK_THROWS_AS(empty.validate(), InvalidInput);

    Benchmark no_concepts;
    no_concepts.entries.push_back({ConceptInput{}, {}});
    CHECK_THROWS_AS(no_concepts.validate(), InvalidInput);

    Benchmark reworded = tiny_bench();
    reworded.entries[0].references[0] = "something else";
    CHECK(reworded.hash() != b.hash());
}

TEST_CASE("evaluation averages oracle, coverage and bleu over the outputs") {
    Benchmark bench = tiny_bench();
    LexicalOracle lex;
    ConstantOracle graded(0.75);

    std::vector<OutputRow> outputs = {
        row_for(bench, 0, "the cat is on the mat"),
        row_for(bench, 0, "a cat"),
        row_for(bench, 1, "the dog barked"),
    };
    auto result = evaluate_outputs(outputs, bench, graded, lex, "demo");

    REQUIRE(result.rows.size() == 3);
    CHECK(result.report.system == "demo");
    CHECK(result.report.sample_count == 3);
    CHECK(result.report.bench_hash == bench.hash());
    CHECK(result.report.mean_o == Catch::Approx(0.75).epsilon(1e-12));

    // coverage: 2/2, 1/2, 1/1
    CHECK(result.rows[0].coverage == 1.0);
    CHECK(result.rows[1].coverage == 0.5);
    CHECK(result.rows[2].coverage == 1.0);
    CHECK(result.report.mean_coverage == Catch::Approx((1.0 + 0.5 + 1.0) / 3.0).epsilon(1e-12));

    // bleu exists only for the referenced entry
    CHECK(result.rows[0].bleu.has_value());
    CHECK(result.rows[0].bleu.value() == Catch::Approx(1.0).epsilon(1e-12));
    CHECK(result.rows[1].bleu.has_value());
    CHECK_FALSE(result.rows[2].bleu.has_value());
    double expected_mean_bleu = (*result.rows[0].bleu + *result.rows[1].bleu) / 2.0;
    REQUIRE(result.report.mean_bleu.has_value());
    CHECK(*result.report.mean_bleu == Catch::Approx(expected_mean_bleu).epsilon(1e-12));
}

TEST_CASE("report means reconcile with the per-row dump") {
    Benchmark bench = tiny_bench();
    LexicalOracle lex;
    ConstantOracle graded(0.6);
    std::vector<OutputRow> outputs = {
        row_for(bench, 0, "the cat sat on the mat"),
        row_for(bench, 1, "a dog"),
    };
    auto result = evaluate_outputs(outputs, bench, graded, lex, "demo");
    double sum_o = 0.0, sum_cov = 0.0;
    for (const auto& r : result.rows) {
        sum_o += r.o_score;
        sum_cov += r.coverage;
    }
    CHECK(result.report.mean_o ==
          Catch::Approx(sum_o / static_cast<double>(result.rows.size())).epsilon(1e-12));
    CHECK(result.report.mean_coverage ==
          Catch::Approx(sum_cov / static_cast<double>(result.rows.size())).epsilon(1e-12));
}

TEST_CASE("evaluation rejects rows that disagree with the benchmark") {
    Benchmark bench = tiny_bench();
    LexicalOracle lex;
    ConstantOracle graded(1.0);

    std::vector<OutputRow> beyond = {row_for(bench, 0, "x")};
    beyond[0].entry = 5;
    CHECK_THROWS_AS(evaluate_outputs(beyond, bench, graded, lex, "demo"), InvalidInput);

    std::vector<OutputRow> mismatched = {row_for(bench, 0, "x")};
    mismatched[0].x = ConceptInput{{"unrelated"}};
    CHECK_THROWS_AS(evaluate_outputs(mismatched, bench, graded, lex, "demo"), InvalidInput);

    CHECK_THROWS_AS(evaluate_outputs({}, bench, graded, lex, "demo"), InvalidInput);
}

TEST_CASE("generate_outputs draws per-entry streams and tags rows") {
    Benchmark bench = tiny_bench();
    auto vocab = Vocabulary({"<eos>", "cat", "dog"}, 0);
    GenerationSystem sys;
    sys.name = "base";
    sys.model = std::make_shared<ToyModel>(vocab, 1, 0.01);
    sys.sampler.max_len = 3;
    sys.sampler.seed = 5;
    sys.samples_per_entry = 4;

    auto rows = generate_outputs(sys, bench);
    REQUIRE(rows.size() == 8);
    for (size_t i = 0; i < 4; ++i) CHECK(rows[i].entry == 0);
    for (size_t i = 4; i < 8; ++i) CHECK(rows[i].entry == 1);

    auto again = generate_outputs(sys, bench);
    for (size_t i = 0; i < rows.size(); ++i) {
        CHECK(rows[i].tokens == again[i].tokens);
        CHECK(rows[i].text == again[i].text);
    }
}

TEST_CASE("eval reports serialize and parse losslessly") {
    Benchmark bench = tiny_bench();
    LexicalOracle lex;
    ConstantOracle graded(0.5);
    auto result =
        evaluate_outputs({row_for(bench, 0, "the cat is on the mat")}, bench, graded, lex, "demo",
                         {{"temperature", 0.7}});
    auto j = result.report.to_json();
    auto parsed = EvalReport::from_json(j);
    CHECK(parsed.system == result.report.system);
    CHECK(parsed.bench_hash == result.report.bench_hash);
    CHECK(parsed.sample_count == result.report.sample_count);
    CHECK(parsed.mean_o == result.report.mean_o);
    CHECK(parsed.mean_coverage == result.report.mean_coverage);
    CHECK(parsed.mean_bleu == result.report.mean_bleu);
    CHECK(parsed.config_echo == result.report.config_echo);
    CHECK(parsed.to_json().dump() == j.dump());
}

TEST_CASE("a report without references has no bleu column") {
    Benchmark bench;
    bench.entries.push_back({ConceptInput{{"dog"}}, {}});
    LexicalOracle lex;
    ConstantOracle graded(0.5);
    auto result = evaluate_outputs({row_for(bench, 0, "a dog")}, bench, graded, lex, "demo");
    CHECK_FALSE(result.report.mean_bleu.has_value());
    auto j = result.report.to_json();
    CHECK(j.at("mean_bleu4").is_null());
    CHECK_FALSE(EvalReport::from_json(j).mean_bleu.has_value());
}

TEST_CASE("comparison reports deltas against the named baseline") {
    EvalReport base;
    base.system = "base";
    base.bench_hash = 42;
    base.mean_o = 0.514;
    base.mean_coverage = 0.5;

    EvalReport steered;
    steered.system = "steered";
    steered.bench_hash = 42;
    steered.mean_o = 0.615;
    steered.mean_coverage = 0.75;

    auto rows = compare({base, steered}, "base");
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].system == "base");
    CHECK(rows[0].o_delta_abs == Catch::Approx(0.0).margin(1e-15));
    CHECK(rows[1].o_delta_abs == Catch::Approx(0.101).epsilon(1e-12));
    CHECK(rows[1].o_delta_rel == Catch::Approx(0.19649805447470817).epsilon(1e-9));
    CHECK(rows[1].o_delta_rel > 0.10);
    CHECK(rows[1].coverage_delta_rel == Catch::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("comparison refuses mixed benchmarks and missing baselines") {
    EvalReport a;
    a.system = "base";
    a.bench_hash = 1;
    EvalReport b;
    b.system = "other";
    b.bench_hash = 2;
    CHECK_THROWS_AS(compare({a, b}, "base"), BenchmarkMismatch);
    CHECK_THROWS_AS(compare({a}, "base"), InvalidInput);
    b.bench_hash = 1;
    CHECK_THROWS_AS(compare({a, b}, "missing"), InvalidInput);
}
