#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "csteer/common.hpp"
#include "csteer/model.hpp"
#include "csteer/oracle.hpp"
#include "csteer/rng.hpp"
#include "csteer/sampling.hpp"
#include "csteer/text.hpp"
#include "csteer/types.hpp"

namespace csteer {

// Sentence-level BLEU with orders 1..4, uniform weights, brevity penalty
// against the closest reference length. An order with zero matches smooths
// to 1/(total+1); an order longer than the candidate contributes 1, so an
// exact reference copy scores exactly 1.0.
inline double bleu4(std::string_view candidate, const std::vector<std::string>& references) {
    if (references.empty()) throw InvalidInput("bleu4 needs at least one reference");
    auto cand = tokenize(candidate);
    if (cand.empty()) return 0.0;

    std::vector<std::vector<std::string>> refs;
    refs.reserve(references.size());
    for (const auto& r : references) refs.push_back(tokenize(r));

    double log_sum = 0.0;
    for (size_t n = 1; n <= 4; ++n) {
        if (cand.size() < n) continue;  // p_n = 1, contributes log 0
        std::map<std::vector<std::string>, size_t> cand_counts;
        for (size_t i = 0; i + n <= cand.size(); ++i)
            ++cand_counts[{cand.begin() + i, cand.begin() + i + n}];
        size_t total = cand.size() - n + 1;
        size_t matched = 0;
        for (const auto& [gram, count] : cand_counts) {
            size_t best = 0;
            for (const auto& ref : refs) {
                if (ref.size() < n) continue;
                size_t c = 0;
                for (size_t i = 0; i + n <= ref.size(); ++i)
                    if (std::equal(gram.begin(), gram.end(), ref.begin() + i)) ++c;
                best = std::max(best, c);
            }
            matched += std::min(count, best);
        }
        double p = matched > 0 ? static_cast<double>(matched) / static_cast<double>(total)
                               : 1.0 / static_cast<double>(total + 1);
        log_sum += 0.25 * std::log(p);
    }

    size_t closest = refs[0].size();
    for (const auto& ref : refs) {
        size_t d_new = ref.size() > cand.size() ? ref.size() - cand.size() : cand.size() - ref.size();
        size_t d_old = closest > cand.size() ? closest - cand.size() : cand.size() - closest;
        if (d_new < d_old || (d_new == d_old && ref.size() < closest)) closest = ref.size();
    }
    double bp = cand.size() >= closest
                    ? 1.0
                    : std::exp(1.0 - static_cast<double>(closest) / static_cast<double>(cand.size()));
    return bp * std::exp(log_sum);
}

struct BenchEntry {
    ConceptInput x;
    std::vector<std::string> references;  // may be empty
};

struct Benchmark {
    std::vector<BenchEntry> entries;

    void validate() const {
        if (entries.empty()) throw InvalidInput("benchmark is empty");
        for (const auto& e : entries)
            if (e.x.concepts.empty()) throw InvalidInput("benchmark entry without concepts");
    }

    uint64_t hash() const {
        uint64_t h = 0xcbf29ce484222325ull;
        for (const auto& e : entries) {
            h = fnv1a64_u64(e.x.set_hash(), h);
            for (const auto& r : e.references) h = fnv1a64(r, h);
            h = fnv1a64_u64(static_cast<uint64_t>(e.references.size()), h);
        }
        return h;
    }
};

// One generated sequence tied back to its benchmark entry.
struct OutputRow {
    size_t entry = 0;
    ConceptInput x;
    std::vector<std::string> tokens;  // vocabulary tokens, eos included when drawn
    std::string text;                 // rendered sentence used for scoring
};

struct EntryMetrics {
    size_t entry = 0;
    std::string text;
    double o_score = 0.0;
    double coverage = 0.0;
    std::optional<double> bleu;
};

struct EvalReport {
    std::string system;
    uint64_t bench_hash = 0;
    size_t sample_count = 0;
    double mean_o = 0.0;
    double mean_coverage = 0.0;
    std::optional<double> mean_bleu;
    nlohmann::json config_echo;

    nlohmann::json to_json() const {
        nlohmann::json j = {
            {"format", "csteer-eval-report"},
            {"version", 1},
            {"system", system},
            {"bench_hash", to_hex16(bench_hash)},
            {"sample_count", sample_count},
            {"mean_o", mean_o},
            {"mean_coverage", mean_coverage},
            {"mean_bleu4", nullptr},
            {"config", config_echo.is_null() ? nlohmann::json::object() : config_echo},
        };
        if (mean_bleu) j["mean_bleu4"] = *mean_bleu;
        return j;
    }

    static EvalReport from_json(const nlohmann::json& j) {
        if (!j.is_object() || j.value("format", "") != "csteer-eval-report")
            throw ParseError("not an eval report file");
        if (j.value("version", 0) != 1) throw ParseError("unsupported eval report version");
        EvalReport r;
        r.system = j.at("system").get<std::string>();
        r.bench_hash = std::stoull(j.at("bench_hash").get<std::string>(), nullptr, 16);
        r.sample_count = j.at("sample_count").get<size_t>();
        r.mean_o = j.at("mean_o").get<double>();
        r.mean_coverage = j.at("mean_coverage").get<double>();
        if (!j.at("mean_bleu4").is_null()) r.mean_bleu = j.at("mean_bleu4").get<double>();
        if (j.contains("config")) r.config_echo = j.at("config");
        return r;
    }
};

struct EvalResult {
    EvalReport report;
    std::vector<EntryMetrics> rows;
};

// Scores pre-generated outputs against a benchmark: the graded oracle gives
// the O column, the lexical oracle the coverage column, references (when an
// entry has them) the BLEU column.
inline EvalResult evaluate_outputs(const std::vector<OutputRow>& outputs, const Benchmark& bench,
                                   const SequenceOracle& graded, const LexicalOracle& lex,
                                   std::string system_name, nlohmann::json config_echo = {}) {
    bench.validate();
    if (outputs.empty()) throw InvalidInput("no outputs to evaluate");
    EvalResult result;
    result.report.system = std::move(system_name);
    result.report.bench_hash = bench.hash();
    result.report.config_echo = std::move(config_echo);

    double sum_o = 0.0, sum_cov = 0.0, sum_bleu = 0.0;
    size_t bleu_count = 0;
    for (const auto& row : outputs) {
        if (row.entry >= bench.entries.size())
            throw InvalidInput("output row references entry " + std::to_string(row.entry) +
                               " beyond the benchmark");
        const auto& entry = bench.entries[row.entry];
        if (row.x.set_hash() != entry.x.set_hash())
            throw InvalidInput("output row concepts disagree with benchmark entry " +
                               std::to_string(row.entry));
        EntryMetrics m;
        m.entry = row.entry;
        m.text = row.text;
        m.o_score = graded.score(entry.x, row.text).value;
        m.coverage = lex.coverage(entry.x, row.text);
        if (!entry.references.empty()) {
            m.bleu = bleu4(row.text, entry.references);
            sum_bleu += *m.bleu;
            ++bleu_count;
        }
        sum_o += m.o_score;
        sum_cov += m.coverage;
        result.rows.push_back(std::move(m));
    }
    result.report.sample_count = outputs.size();
    result.report.mean_o = sum_o / static_cast<double>(outputs.size());
    result.report.mean_coverage = sum_cov / static_cast<double>(outputs.size());
    if (bleu_count > 0) result.report.mean_bleu = sum_bleu / static_cast<double>(bleu_count);
    return result;
}

struct GenerationSystem {
    std::string name;
    std::shared_ptr<const AutoregressiveModel> model;
    SamplerConfig sampler;
    int32_t samples_per_entry = 1;
};

// Draws samples_per_entry sequences per benchmark entry (entry i uses RNG
// stream i of the sampler seed) and tags each with its entry index.
inline std::vector<OutputRow> generate_outputs(const GenerationSystem& system,
                                               const Benchmark& bench) {
    bench.validate();
    system.sampler.validate();
    if (!system.model) throw InvalidInput("generation system needs a model");
    if (system.samples_per_entry < 1) throw InvalidInput("samples_per_entry must be positive");
    std::vector<OutputRow> out;
    out.reserve(bench.entries.size() * static_cast<size_t>(system.samples_per_entry));
    const auto& vocab = system.model->vocab();
    for (size_t i = 0; i < bench.entries.size(); ++i) {
        Xoshiro256ss rng = Xoshiro256ss::stream(system.sampler.seed, static_cast<uint64_t>(i));
        for (int32_t n = 0; n < system.samples_per_entry; ++n) {
            OutputRow row;
            row.entry = i;
            row.x = bench.entries[i].x;
            Sequence y = sample_sequence(*system.model, row.x, system.sampler, rng);
            for (int32_t id : y.ids) row.tokens.push_back(vocab.token(id));
            row.text = render(vocab, y);
            out.push_back(std::move(row));
        }
    }
    return out;
}

// End-to-end: generate per entry, then score.
inline EvalResult evaluate_system(const GenerationSystem& system, const Benchmark& bench,
                                  const SequenceOracle& graded, const LexicalOracle& lex,
                                  nlohmann::json config_echo = {}) {
    return evaluate_outputs(generate_outputs(system, bench), bench, graded, lex, system.name,
                            std::move(config_echo));
}

struct DeltaRow {
    std::string system;
    double mean_o = 0.0;
    double o_delta_abs = 0.0;
    double o_delta_rel = 0.0;
    double mean_coverage = 0.0;
    double coverage_delta_abs = 0.0;
    double coverage_delta_rel = 0.0;
    std::optional<double> mean_bleu;
};

// Aligns reports over one benchmark against a named baseline with absolute
// and relative deltas. Reports over different benchmarks refuse to compare.
inline std::vector<DeltaRow> compare(const std::vector<EvalReport>& reports,
                                     const std::string& baseline_name) {
    if (reports.size() < 2) throw InvalidInput("compare needs at least two reports");
    const EvalReport* base = nullptr;
    for (const auto& r : reports)
        if (r.system == baseline_name) base = &r;
    if (!base) throw InvalidInput("baseline report not found: " + baseline_name);
    for (const auto& r : reports)
        if (r.bench_hash != base->bench_hash)
            throw BenchmarkMismatch("report " + r.system + " covers a different benchmark");

    auto rel = [](double delta, double b) {
        return b != 0.0 ? delta / b : std::numeric_limits<double>::quiet_NaN();
    };
    std::vector<DeltaRow> rows;
    for (const auto& r : reports) {
        DeltaRow row;
        row.system = r.system;
        row.mean_o = r.mean_o;
        row.o_delta_abs = r.mean_o - base->mean_o;
        row.o_delta_rel = rel(row.o_delta_abs, base->mean_o);
        row.mean_coverage = r.mean_coverage;
        row.coverage_delta_abs = r.mean_coverage - base->mean_coverage;
        row.coverage_delta_rel = rel(row.coverage_delta_abs, base->mean_coverage);
        row.mean_bleu = r.mean_bleu;
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace csteer
