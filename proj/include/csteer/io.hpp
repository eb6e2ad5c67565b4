#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "csteer/common.hpp"
#include "csteer/external.hpp"
#include "csteer/kb.hpp"
#include "csteer/metrics.hpp"
#include "csteer/model.hpp"
#include "csteer/scorer.hpp"
#include "csteer/text.hpp"
#include "csteer/training.hpp"
#include "csteer/tuple.hpp"
#include "csteer/types.hpp"

namespace csteer {

namespace io {

inline nlohmann::json parse_json(std::string_view text, std::string_view what) {
    try {
        return nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string(what) + ": " + e.what());
    }
}

template <typename T>
T field(const nlohmann::json& j, const char* name) {
    if (!j.is_object() || !j.contains(name))
        throw ParseError(std::string("missing field \"") + name + "\"");
    try {
        return j.at(name).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("bad field \"") + name + "\": " + e.what());
    }
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::string& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path);
    out << content;
    if (!out) throw IoError("write failed for " + path);
}

inline nlohmann::json read_json_file(const std::string& path) {
    return parse_json(read_file(path), path);
}

inline void write_json_file(const std::string& path, const nlohmann::json& j, int indent = 2) {
    write_file(path, j.dump(indent) + "\n");
}

// Line-delimited JSON with a leading schema line. Readers tolerate a missing
// schema line but refuse a wrong schema name or version.
inline void write_jsonl(const std::string& path, std::string_view schema,
                        const std::vector<nlohmann::json>& records) {
    std::ostringstream out;
    out << nlohmann::json{{"schema", std::string(schema)}, {"version", 1}}.dump() << "\n";
    for (const auto& rec : records) out << rec.dump() << "\n";
    write_file(path, out.str());
}

inline std::vector<nlohmann::json> read_jsonl(const std::string& path, std::string_view schema) {
    std::string content = read_file(path);
    std::vector<nlohmann::json> records;
    size_t start = 0;
    bool first = true;
    while (start <= content.size()) {
        size_t end = content.find('\n', start);
        if (end == std::string::npos) end = content.size();
        std::string_view line(content.data() + start, end - start);
        start = end + 1;
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.remove_suffix(1);
        if (line.empty()) continue;
        auto j = parse_json(line, path);
        if (first) {
            first = false;
            if (j.is_object() && j.contains("schema")) {
                if (j.at("schema").get<std::string>() != schema)
                    throw ParseError(path + ": schema is " + j.at("schema").get<std::string>() +
                                     ", expected " + std::string(schema));
                if (j.value("version", 0) != 1)
                    throw ParseError(path + ": unsupported schema version");
                continue;
            }
        }
        records.push_back(std::move(j));
    }
    return records;
}

}  // namespace io

inline constexpr const char* kCorpusSchema = "csteer-corpus";
inline constexpr const char* kBenchSchema = "csteer-bench";
inline constexpr const char* kSamplesSchema = "csteer-samples";
inline constexpr const char* kScoredSchema = "csteer-scored";
inline constexpr const char* kKbSchema = "csteer-kb";
inline constexpr const char* kGoldTuplesSchema = "csteer-gold-tuples";
inline constexpr const char* kReplaySchema = "csteer-replay";
inline constexpr const char* kSentencesSchema = "csteer-sentences";
inline constexpr const char* kTuplesSchema = "csteer-tuples";
inline constexpr const char* kEntryMetricsSchema = "csteer-entry-metrics";

inline void save_corpus(const std::string& path, const std::vector<CorpusRecord>& corpus) {
    std::vector<nlohmann::json> records;
    records.reserve(corpus.size());
    for (const auto& rec : corpus)
        records.push_back({{"concepts", rec.x.concepts}, {"text", rec.text}});
    io::write_jsonl(path, kCorpusSchema, records);
}

inline std::vector<CorpusRecord> load_corpus(const std::string& path) {
    std::vector<CorpusRecord> out;
    for (const auto& j : io::read_jsonl(path, kCorpusSchema)) {
        CorpusRecord rec;
        rec.x.concepts = io::field<std::vector<std::string>>(j, "concepts");
        rec.text = io::field<std::string>(j, "text");
        out.push_back(std::move(rec));
    }
    return out;
}

inline void save_benchmark(const std::string& path, const Benchmark& bench) {
    std::vector<nlohmann::json> records;
    records.reserve(bench.entries.size());
    for (const auto& e : bench.entries) {
        nlohmann::json j = {{"concepts", e.x.concepts}};
        if (!e.references.empty()) j["references"] = e.references;
        records.push_back(std::move(j));
    }
    io::write_jsonl(path, kBenchSchema, records);
}

inline Benchmark load_benchmark(const std::string& path) {
    Benchmark bench;
    for (const auto& j : io::read_jsonl(path, kBenchSchema)) {
        BenchEntry e;
        e.x.concepts = io::field<std::vector<std::string>>(j, "concepts");
        if (j.contains("references") && !j.at("references").is_null())
            e.references = io::field<std::vector<std::string>>(j, "references");
        bench.entries.push_back(std::move(e));
    }
    bench.validate();
    return bench;
}

inline void save_outputs(const std::string& path, const std::vector<OutputRow>& rows) {
    std::vector<nlohmann::json> records;
    records.reserve(rows.size());
    for (const auto& r : rows)
        records.push_back({{"entry", r.entry},
                           {"concepts", r.x.concepts},
                           {"tokens", r.tokens},
                           {"text", r.text}});
    io::write_jsonl(path, kSamplesSchema, records);
}

inline std::vector<OutputRow> load_outputs(const std::string& path) {
    std::vector<OutputRow> out;
    for (const auto& j : io::read_jsonl(path, kSamplesSchema)) {
        OutputRow r;
        r.entry = io::field<size_t>(j, "entry");
        r.x.concepts = io::field<std::vector<std::string>>(j, "concepts");
        r.tokens = io::field<std::vector<std::string>>(j, "tokens");
        r.text = io::field<std::string>(j, "text");
        out.push_back(std::move(r));
    }
    return out;
}

struct ScoredRow {
    OutputRow row;
    double o_score = 0.0;
};

inline void save_scored(const std::string& path, const std::vector<ScoredRow>& rows) {
    std::vector<nlohmann::json> records;
    records.reserve(rows.size());
    for (const auto& r : rows)
        records.push_back({{"entry", r.row.entry},
                           {"concepts", r.row.x.concepts},
                           {"tokens", r.row.tokens},
                           {"text", r.row.text},
                           {"o_score", r.o_score}});
    io::write_jsonl(path, kScoredSchema, records);
}

inline std::vector<ScoredRow> load_scored(const std::string& path) {
    std::vector<ScoredRow> out;
    for (const auto& j : io::read_jsonl(path, kScoredSchema)) {
        ScoredRow r;
        r.row.entry = j.value("entry", static_cast<size_t>(0));
        r.row.x.concepts = io::field<std::vector<std::string>>(j, "concepts");
        r.row.tokens = io::field<std::vector<std::string>>(j, "tokens");
        r.row.text = j.value("text", "");
        r.o_score = io::field<double>(j, "o_score");
        out.push_back(std::move(r));
    }
    return out;
}

inline void save_kb(const std::string& path, const std::vector<KbRecord>& records) {
    std::vector<nlohmann::json> out;
    out.reserve(records.size());
    for (const auto& r : records)
        out.push_back({{"head", r.head},
                       {"relation", relation_name(r.relation)},
                       {"tail", r.tail},
                       {"weight", r.weight}});
    io::write_jsonl(path, kKbSchema, out);
}

inline std::vector<KbRecord> load_kb(const std::string& path) {
    std::vector<KbRecord> out;
    for (const auto& j : io::read_jsonl(path, kKbSchema)) {
        KbRecord r;
        r.head = io::field<std::string>(j, "head");
        r.relation = relation_from_name(io::field<std::string>(j, "relation"));
        r.tail = io::field<std::string>(j, "tail");
        r.weight = j.value("weight", 1.0);
        out.push_back(std::move(r));
    }
    return out;
}

inline nlohmann::json tuple_to_json(const Tuple& t) {
    return {{"head", t.head}, {"relation", relation_name(t.relation)}, {"tail", t.tail}};
}

inline Tuple tuple_from_json(const nlohmann::json& j) {
    return Tuple(io::field<std::string>(j, "head"),
                 relation_from_name(io::field<std::string>(j, "relation")),
                 io::field<std::string>(j, "tail"));
}

inline void save_sentence_tuples(const std::string& path, const std::vector<SentenceTuples>& rows,
                                 std::string_view schema = kGoldTuplesSchema) {
    std::vector<nlohmann::json> records;
    records.reserve(rows.size());
    for (const auto& r : rows) {
        nlohmann::json tuples = nlohmann::json::array();
        for (const auto& t : r.tuples) tuples.push_back(tuple_to_json(t));
        records.push_back({{"sentence", r.sentence}, {"tuples", std::move(tuples)}});
    }
    io::write_jsonl(path, schema, records);
}

inline std::vector<SentenceTuples> load_sentence_tuples(const std::string& path,
                                                        std::string_view schema = kGoldTuplesSchema) {
    std::vector<SentenceTuples> out;
    for (const auto& j : io::read_jsonl(path, schema)) {
        SentenceTuples r;
        r.sentence = io::field<std::string>(j, "sentence");
        for (const auto& t : j.at("tuples")) r.tuples.push_back(tuple_from_json(t));
        out.push_back(std::move(r));
    }
    return out;
}

inline std::vector<std::string> load_sentences(const std::string& path) {
    std::vector<std::string> out;
    for (const auto& j : io::read_jsonl(path, kSentencesSchema))
        out.push_back(io::field<std::string>(j, "sentence"));
    return out;
}

inline void save_sentences(const std::string& path, const std::vector<std::string>& sentences) {
    std::vector<nlohmann::json> records;
    records.reserve(sentences.size());
    for (const auto& s : sentences) records.push_back({{"sentence", s}});
    io::write_jsonl(path, kSentencesSchema, records);
}

inline void save_replay(const std::string& path, const ReplayStore& store) {
    std::vector<nlohmann::json> records;
    for (const auto& e : store.entries())
        records.push_back({{"key", to_hex16(e.key)}, {"request", e.request}, {"response", e.response}});
    io::write_jsonl(path, kReplaySchema, records);
}

inline ReplayStore load_replay(const std::string& path) {
    ReplayStore store;
    for (const auto& j : io::read_jsonl(path, kReplaySchema)) {
        uint64_t key = std::stoull(io::field<std::string>(j, "key"), nullptr, 16);
        store.add_raw(key, j.value("request", ""), io::field<std::string>(j, "response"));
    }
    return store;
}

inline void save_entry_metrics(const std::string& path, const std::vector<EntryMetrics>& rows) {
    std::vector<nlohmann::json> records;
    records.reserve(rows.size());
    for (const auto& r : rows) {
        nlohmann::json j = {{"entry", r.entry},
                            {"text", r.text},
                            {"o_score", r.o_score},
                            {"coverage", r.coverage},
                            {"bleu4", nullptr}};
        if (r.bleu) j["bleu4"] = *r.bleu;
        records.push_back(std::move(j));
    }
    io::write_jsonl(path, kEntryMetricsSchema, records);
}

inline std::vector<EntryMetrics> load_entry_metrics(const std::string& path) {
    std::vector<EntryMetrics> out;
    for (const auto& j : io::read_jsonl(path, kEntryMetricsSchema)) {
        EntryMetrics m;
        m.entry = io::field<size_t>(j, "entry");
        m.text = io::field<std::string>(j, "text");
        m.o_score = io::field<double>(j, "o_score");
        m.coverage = io::field<double>(j, "coverage");
        if (j.contains("bleu4") && !j.at("bleu4").is_null()) m.bleu = j.at("bleu4").get<double>();
        out.push_back(std::move(m));
    }
    return out;
}

inline void save_lexicon(const std::string& path, const std::vector<std::string>& stems) {
    io::write_json_file(path, {{"format", "csteer-lexicon"}, {"version", 1}, {"stems", stems}});
}

inline std::vector<std::string> load_lexicon(const std::string& path) {
    auto j = io::read_json_file(path);
    if (j.value("format", "") != "csteer-lexicon") throw ParseError(path + ": not a lexicon file");
    if (j.value("version", 0) != 1) throw ParseError(path + ": unsupported lexicon version");
    return io::field<std::vector<std::string>>(j, "stems");
}

inline void save_stemmer(const std::string& path, const Stemmer& stemmer) {
    io::write_json_file(path, {{"format", "csteer-stemmer"},
                               {"version", 1},
                               {"suffixes", stemmer.suffixes()},
                               {"min_stem_length", stemmer.min_stem_length()},
                               {"tokenizer", {{"lowercase", true}, {"token_chars", "a-z0-9"}}}});
}

inline Stemmer load_stemmer(const std::string& path) {
    auto j = io::read_json_file(path);
    if (j.value("format", "") != "csteer-stemmer") throw ParseError(path + ": not a stemmer file");
    if (j.value("version", 0) != 1) throw ParseError(path + ": unsupported stemmer version");
    return Stemmer(io::field<std::vector<std::string>>(j, "suffixes"),
                   io::field<size_t>(j, "min_stem_length"));
}

// Rebuilds training examples from scored rows; tokens must be vocabulary
// words, and a row is terminated exactly when its last token is eos.
inline std::vector<TrainingExample> scored_to_examples(const std::vector<ScoredRow>& rows,
                                                       const Vocabulary& vocab) {
    std::vector<TrainingExample> out;
    out.reserve(rows.size());
    for (const auto& r : rows) {
        TrainingExample ex;
        ex.x = r.row.x;
        ex.label = r.o_score;
        for (const auto& tok : r.row.tokens) ex.y.ids.push_back(vocab.id(tok));
        if (!ex.y.ids.empty() && ex.y.ids.back() == vocab.eos_id()) ex.y.terminated = true;
        ex.validate(vocab.size());
        validate_sequence(ex.y, vocab, static_cast<int32_t>(ex.y.ids.size()));
        out.push_back(std::move(ex));
    }
    return out;
}

}  // namespace csteer
