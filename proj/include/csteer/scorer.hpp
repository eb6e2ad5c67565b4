#pragma once

#include <algorithm>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "csteer/common.hpp"
#include "csteer/embed.hpp"
#include "csteer/kb.hpp"
#include "csteer/oracle.hpp"
#include "csteer/text.hpp"
#include "csteer/tuple.hpp"

namespace csteer {

enum class AggregationMode { Min, Mean };

inline std::string aggregation_name(AggregationMode m) {
    return m == AggregationMode::Min ? "min" : "mean";
}

inline AggregationMode aggregation_from_name(std::string_view name) {
    if (name == "min") return AggregationMode::Min;
    if (name == "mean") return AggregationMode::Mean;
    throw ParseError("unknown aggregation mode: " + std::string(name));
}

struct ScorerConfig {
    int32_t beam_k = 8;  // candidate tails per query; raise for a full-scale kb
    AggregationMode aggregation = AggregationMode::Mean;
    double empty_tuple_score = 0.5;

    void validate() const {
        if (beam_k < 1) throw InvalidInput("beam_k must be >= 1");
        if (empty_tuple_score < 0.0 || empty_tuple_score > 1.0)
            throw InvalidInput("empty_tuple_score must be in [0,1]");
    }
};

struct CompatResult {
    double value = 0.0;
    bool no_candidates = false;
};

// Tuple-level compatibility: the clamped maximum cosine between the tuple
// tail embedding and each of at most k knowledge-base tails. A query with no
// candidates scores 0 and raises the diagnostic flag.
inline CompatResult tuple_compat(const Tuple& tuple, const KnowledgeBase& kb, const Embedder& emb,
                                 int32_t k) {
    if (k < 1) throw InvalidInput("compat needs k >= 1");
    auto candidates = kb.tails(tuple.head, tuple.relation, k);
    if (candidates.empty()) return {0.0, true};
    auto tail_vec = emb.embed(tuple.tail);
    double best = 0.0;
    for (const auto& cand : candidates)
        best = std::max(best, cosine_clamped(tail_vec, emb.embed(cand)));
    return {best, false};
}

struct SentenceScore {
    double value = 0.0;
    std::vector<Tuple> tuples;
    std::vector<double> compat_values;
    size_t no_candidate_queries = 0;
    bool empty = false;  // no tuples extracted; value is the configured default
};

// Reference-free sentence scorer: extract tuples, score each against the
// knowledge base, aggregate by min or mean.
class CommonsenseScorer : public SequenceOracle {
public:
    CommonsenseScorer(ScorerConfig cfg, std::shared_ptr<const TupleExtractor> extractor,
                      std::shared_ptr<const KnowledgeBase> kb, std::shared_ptr<const Embedder> emb)
        : cfg_(cfg), extractor_(std::move(extractor)), kb_(std::move(kb)), emb_(std::move(emb)) {
        cfg_.validate();
        if (!extractor_ || !kb_ || !emb_) throw InvalidInput("scorer needs extractor, kb, embedder");
    }

    const ScorerConfig& config() const { return cfg_; }

    SentenceScore score_sentence(std::string_view text) const {
        SentenceScore out;
        out.tuples = extractor_->extract(text);
        if (out.tuples.empty()) {
            out.value = cfg_.empty_tuple_score;
            out.empty = true;
            return out;
        }
        double sum = 0.0, mn = 1.0;
        for (const auto& t : out.tuples) {
            auto c = tuple_compat(t, *kb_, *emb_, cfg_.beam_k);
            out.compat_values.push_back(c.value);
            if (c.no_candidates) ++out.no_candidate_queries;
            sum += c.value;
            mn = std::min(mn, c.value);
        }
        out.value = cfg_.aggregation == AggregationMode::Min
                        ? mn
                        : sum / static_cast<double>(out.tuples.size());
        return out;
    }

    OracleScore score(const ConceptInput&, std::string_view text) const override {
        return OracleScore(score_sentence(text).value);
    }

private:
    ScorerConfig cfg_;
    std::shared_ptr<const TupleExtractor> extractor_;
    std::shared_ptr<const KnowledgeBase> kb_;
    std::shared_ptr<const Embedder> emb_;
};

namespace detail {

inline std::set<std::string> tuple_stems(const Tuple& t, const Stemmer& stemmer) {
    std::set<std::string> out;
    for (const auto& w : stemmer.stems(t.head)) out.insert(w);
    for (const auto& w : stemmer.stems(t.tail)) out.insert(w);
    return out;
}

}  // namespace detail

// Jaccard overlap of the unique head+tail stems of two tuples; the relation
// plays no part here.
inline double tuple_overlap(const Tuple& a, const Tuple& b, const Stemmer& stemmer) {
    auto sa = detail::tuple_stems(a, stemmer);
    auto sb = detail::tuple_stems(b, stemmer);
    if (sa.empty() && sb.empty()) return 0.0;
    size_t inter = 0;
    for (const auto& w : sa) inter += sb.count(w);
    size_t uni = sa.size() + sb.size() - inter;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

// Relations must agree exactly and the stem overlap must exceed one half.
inline bool tuple_match(const Tuple& predicted, const Tuple& gold, const Stemmer& stemmer) {
    if (predicted.relation != gold.relation) return false;
    return tuple_overlap(predicted, gold, stemmer) > 0.5;
}

struct SentenceTuples {
    std::string sentence;
    std::vector<Tuple> tuples;
};

struct PrCounts {
    size_t matched = 0;
    size_t predicted = 0;
    size_t gold = 0;

    double precision() const {
        if (predicted == 0) return gold == 0 ? 1.0 : 0.0;
        return static_cast<double>(matched) / static_cast<double>(predicted);
    }
    double recall() const {
        if (gold == 0) return predicted == 0 ? 1.0 : 0.0;
        return static_cast<double>(matched) / static_cast<double>(gold);
    }
    double f1() const {
        double p = precision(), r = recall();
        return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
    }
};

struct F1Report {
    std::map<RelationType, PrCounts> per_relation;
    PrCounts overall;  // micro: summed counts across relations
};

// Precision/recall/F1 by greedy one-to-one matching: candidate pairs that
// pass tuple_match are taken highest-overlap first, earlier tuples first on
// ties. Reported per relation plus micro-averaged overall.
inline F1Report extractor_f1(const TupleExtractor& extractor,
                             const std::vector<SentenceTuples>& gold_set, const Stemmer& stemmer) {
    if (gold_set.empty()) throw InvalidInput("extractor_f1 needs a non-empty gold set");
    F1Report report;
    for (RelationType r : kAllRelations) report.per_relation[r];

    for (const auto& rec : gold_set) {
        auto predicted = extractor.extract(rec.sentence);
        for (const auto& t : predicted) ++report.per_relation[t.relation].predicted;
        for (const auto& t : rec.tuples) ++report.per_relation[t.relation].gold;

        struct Pair {
            double overlap;
            size_t pi, gi;
        };
        std::vector<Pair> pairs;
        for (size_t pi = 0; pi < predicted.size(); ++pi)
            for (size_t gi = 0; gi < rec.tuples.size(); ++gi)
                if (tuple_match(predicted[pi], rec.tuples[gi], stemmer))
                    pairs.push_back({tuple_overlap(predicted[pi], rec.tuples[gi], stemmer), pi, gi});
        std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
            if (a.overlap != b.overlap) return a.overlap > b.overlap;
            if (a.pi != b.pi) return a.pi < b.pi;
            return a.gi < b.gi;
        });
        std::vector<bool> pred_used(predicted.size(), false), gold_used(rec.tuples.size(), false);
        for (const auto& pr : pairs) {
            if (pred_used[pr.pi] || gold_used[pr.gi]) continue;
            pred_used[pr.pi] = gold_used[pr.gi] = true;
            ++report.per_relation[predicted[pr.pi].relation].matched;
        }
    }
    for (const auto& [r, c] : report.per_relation) {
        report.overall.matched += c.matched;
        report.overall.predicted += c.predicted;
        report.overall.gold += c.gold;
    }
    return report;
}

}  // namespace csteer
