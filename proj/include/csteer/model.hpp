#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "csteer/common.hpp"
#include "csteer/text.hpp"
#include "csteer/types.hpp"

namespace csteer {

// Frozen conditional language model p(y_i | x, y_<i).
class AutoregressiveModel {
public:
    virtual ~AutoregressiveModel() = default;
    virtual const Vocabulary& vocab() const = 0;
    virtual StepDistribution next_token_probs(const ConceptInput& x,
                                              const std::vector<int32_t>& prefix) const = 0;
};

// Contract-checked step query: rejects prefixes that already contain eos and
// re-validates the returned distribution.
inline StepDistribution next_distribution(const AutoregressiveModel& model, const ConceptInput& x,
                                          const std::vector<int32_t>& prefix) {
    for (int32_t id : prefix)
        if (id == model.vocab().eos_id())
            throw ContractViolation("step query on a terminated prefix");
    auto dist = model.next_token_probs(x, prefix);
    if (dist.size() != model.vocab().size())
        throw ContractViolation("step distribution size does not match vocabulary");
    return StepDistribution::checked(std::move(dist.probs));
}

struct CorpusRecord {
    ConceptInput x;
    std::string text;
};

struct FitStats {
    size_t records_used = 0;
    size_t records_skipped = 0;
    size_t contexts = 0;
};

inline constexpr const char* kDefaultEosToken = "<eos>";

// Deterministic vocabulary over a corpus: eos token first, then the sorted
// distinct word tokens of every record.
inline Vocabulary build_vocabulary(const std::vector<CorpusRecord>& corpus,
                                   const std::string& eos_token = kDefaultEosToken) {
    std::set<std::string> words;
    for (const auto& rec : corpus)
        for (const auto& tok : tokenize(rec.text)) words.insert(tok);
    words.erase(eos_token);
    std::vector<std::string> tokens;
    tokens.reserve(words.size() + 1);
    tokens.push_back(eos_token);
    tokens.insert(tokens.end(), words.begin(), words.end());
    return Vocabulary(std::move(tokens), 0);
}

// Count-based n-gram model conditioned on the concept set. No backoff: a
// context row that was never observed yields the exact uniform distribution.
class ToyModel : public AutoregressiveModel {
public:
    ToyModel(Vocabulary vocab, int32_t order, double alpha = 0.01)
        : vocab_(std::move(vocab)), order_(order), alpha_(alpha) {
        if (order_ < 1 || order_ > 3) throw InvalidInput("model order must be 1, 2 or 3");
        if (alpha_ < 0.0) throw InvalidInput("smoothing alpha must be non-negative");
    }

    const Vocabulary& vocab() const override { return vocab_; }
    int32_t order() const { return order_; }
    double alpha() const { return alpha_; }
    size_t context_count() const { return tables_.size(); }

    FitStats fit(const std::vector<CorpusRecord>& corpus) {
        FitStats stats;
        for (const auto& rec : corpus) {
            auto words = tokenize(rec.text);
            std::vector<int32_t> ids;
            ids.reserve(words.size() + 1);
            bool ok = !words.empty() && !rec.x.concepts.empty();
            for (const auto& tok : words) {
                if (!ok) break;
                if (!vocab_.contains(tok) || vocab_.id(tok) == vocab_.eos_id()) {
                    ok = false;
                    break;
                }
                ids.push_back(vocab_.id(tok));
            }
            if (!ok) {
                ++stats.records_skipped;
                continue;
            }
            ids.push_back(vocab_.eos_id());
            uint64_t xh = rec.x.set_hash();
            std::vector<int32_t> prefix;
            for (int32_t id : ids) {
                bump(context_key(xh, prefix), id);
                prefix.push_back(id);
            }
            ++stats.records_used;
        }
        stats.contexts = tables_.size();
        return stats;
    }

    // Directly installs a count row; test fixtures build tiny exact models this way.
    void set_counts(const ConceptInput& x, const std::vector<int32_t>& context,
                    std::vector<double> counts) {
        if (static_cast<int32_t>(counts.size()) != vocab_.size())
            throw InvalidInput("count row size must match vocabulary");
        for (double c : counts)
            if (c < 0.0) throw InvalidInput("negative count");
        tables_[context_key(x.set_hash(), context)] = std::move(counts);
    }

    StepDistribution next_token_probs(const ConceptInput& x,
                                      const std::vector<int32_t>& prefix) const override {
        const int32_t v = vocab_.size();
        auto it = tables_.find(context_key(x.set_hash(), prefix));
        if (it == tables_.end()) return uniform(v);
        const auto& counts = it->second;
        double total = 0.0;
        for (double c : counts) total += c;
        double denom = total + alpha_ * v;
        if (denom <= 0.0) return uniform(v);
        std::vector<double> probs(static_cast<size_t>(v));
        for (int32_t i = 0; i < v; ++i)
            probs[static_cast<size_t>(i)] = (counts[static_cast<size_t>(i)] + alpha_) / denom;
        return StepDistribution::checked(std::move(probs));
    }

    nlohmann::json to_json() const {
        nlohmann::json tables = nlohmann::json::array();
        for (const auto& [key, counts] : tables_) {
            tables.push_back({{"key", to_hex16(key)}, {"counts", counts}});
        }
        return {
            {"format", "csteer-toy-model"},
            {"version", 1},
            {"order", order_},
            {"alpha", alpha_},
            {"vocab", {{"tokens", vocab_.tokens()}, {"eos_id", vocab_.eos_id()}}},
            {"tables", std::move(tables)},
        };
    }

    static ToyModel from_json(const nlohmann::json& j) {
        if (!j.is_object() || j.value("format", "") != "csteer-toy-model")
            throw ParseError("not a toy model file");
        if (j.value("version", 0) != 1) throw ParseError("unsupported toy model version");
        Vocabulary vocab(j.at("vocab").at("tokens").get<std::vector<std::string>>(),
                         j.at("vocab").at("eos_id").get<int32_t>());
        ToyModel model(std::move(vocab), j.at("order").get<int32_t>(), j.at("alpha").get<double>());
        for (const auto& row : j.at("tables")) {
            uint64_t key = std::stoull(row.at("key").get<std::string>(), nullptr, 16);
            auto counts = row.at("counts").get<std::vector<double>>();
            if (static_cast<int32_t>(counts.size()) != model.vocab_.size())
                throw ParseError("count row size mismatch in toy model file");
            model.tables_[key] = std::move(counts);
        }
        return model;
    }

private:
    uint64_t context_key(uint64_t set_hash, const std::vector<int32_t>& prefix) const {
        size_t keep = static_cast<size_t>(order_ - 1);
        size_t start = prefix.size() > keep ? prefix.size() - keep : 0;
        uint64_t h = fnv1a64_u64(set_hash, 0xcbf29ce484222325ull);
        h = fnv1a64_u64(static_cast<uint64_t>(prefix.size() - start), h);
        for (size_t i = start; i < prefix.size(); ++i)
            h = fnv1a64_u64(static_cast<uint64_t>(prefix[i]), h);
        return h;
    }

    void bump(uint64_t key, int32_t id) {
        auto& row = tables_[key];
        if (row.empty()) row.assign(static_cast<size_t>(vocab_.size()), 0.0);
        row[static_cast<size_t>(id)] += 1.0;
    }

    static StepDistribution uniform(int32_t v) {
        StepDistribution d;
        d.probs.assign(static_cast<size_t>(v), 1.0 / static_cast<double>(v));
        return d;
    }

    Vocabulary vocab_;
    int32_t order_;
    double alpha_;
    std::map<uint64_t, std::vector<double>> tables_;
};

}  // namespace csteer
