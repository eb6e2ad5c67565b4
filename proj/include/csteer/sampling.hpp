#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <utility>
#include <vector>

#include "csteer/common.hpp"
#include "csteer/model.hpp"
#include "csteer/rng.hpp"
#include "csteer/types.hpp"

namespace csteer {

inline constexpr uint64_t kDefaultEnumerationBudget = 1000000;

struct SamplerConfig {
    double temperature = 1.0;
    double top_p = 1.0;
    int32_t top_k = 0;  // 0 means "all": no cap
    int32_t max_len = 16;
    uint64_t seed = 0;

    void validate() const {
        if (temperature <= 0.0) throw InvalidInput("temperature must be positive");
        if (top_p <= 0.0 || top_p > 1.0) throw InvalidInput("top_p must be in (0, 1]");
        if (top_k < 0) throw InvalidInput("top_k must be non-negative");
        if (max_len < 1) throw InvalidInput("max_len must be positive");
    }
};

namespace detail {

inline constexpr double kArgmaxTemperature = 1e-6;
inline constexpr double kMassBoundarySlack = 1e-12;

// Candidate order everywhere: probability descending, index ascending on ties.
inline std::vector<int32_t> ranked_indices(const std::vector<double>& probs) {
    std::vector<int32_t> order(probs.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int32_t a, int32_t b) {
        return probs[static_cast<size_t>(a)] > probs[static_cast<size_t>(b)];
    });
    return order;
}

}  // namespace detail

// Filters a raw step distribution: temperature as probs^(1/T) renormalized,
// then nucleus (top_p) truncation, then the top_k cap, then renormalization.
// Returns (token id, probability) pairs, highest probability first.
inline std::vector<std::pair<int32_t, double>> filter_step(const StepDistribution& dist,
                                                           const SamplerConfig& cfg) {
    cfg.validate();
    std::vector<double> probs = dist.probs;

    if (cfg.temperature <= detail::kArgmaxTemperature) {
        int32_t best = 0;
        for (int32_t i = 1; i < dist.size(); ++i)
            if (probs[static_cast<size_t>(i)] > probs[static_cast<size_t>(best)]) best = i;
        return {{best, 1.0}};
    }
    if (cfg.temperature != 1.0) {
        double sum = 0.0;
        for (double& p : probs) {
            p = p > 0.0 ? std::pow(p, 1.0 / cfg.temperature) : 0.0;
            sum += p;
        }
        if (sum <= 0.0) throw ContractViolation("temperature transform lost all mass");
        for (double& p : probs) p /= sum;
    }

    auto order = detail::ranked_indices(probs);
    size_t keep = order.size();
    if (cfg.top_p < 1.0) {
        double cum = 0.0;
        for (size_t i = 0; i < order.size(); ++i) {
            cum += probs[static_cast<size_t>(order[i])];
            if (cum >= cfg.top_p - detail::kMassBoundarySlack) {
                keep = i + 1;
                break;
            }
        }
    }
    if (cfg.top_k > 0) keep = std::min(keep, static_cast<size_t>(cfg.top_k));

    std::vector<std::pair<int32_t, double>> kept;
    double mass = 0.0;
    for (size_t i = 0; i < keep; ++i) {
        double p = probs[static_cast<size_t>(order[i])];
        if (p <= 0.0) break;
        kept.emplace_back(order[i], p);
        mass += p;
    }
    if (kept.empty() || mass <= 0.0)
        throw ContractViolation("sampler filter kept no probability mass");
    for (auto& [id, p] : kept) p /= mass;
    return kept;
}

inline int32_t draw_from(const std::vector<std::pair<int32_t, double>>& kept, Xoshiro256ss& rng) {
    double u = rng.uniform01();
    double cum = 0.0;
    for (const auto& [id, p] : kept) {
        cum += p;
        if (u < cum) return id;
    }
    return kept.back().first;
}

// Draws one sequence. Generation stops at eos or once max_len tokens exist;
// in the latter case the sequence comes back unterminated but is still
// treated as complete for scoring.
inline Sequence sample_sequence(const AutoregressiveModel& model, const ConceptInput& x,
                                const SamplerConfig& cfg, Xoshiro256ss& rng) {
    cfg.validate();
    Sequence y;
    const int32_t eos = model.vocab().eos_id();
    while (static_cast<int32_t>(y.ids.size()) < cfg.max_len) {
        auto kept = filter_step(next_distribution(model, x, y.ids), cfg);
        int32_t id = draw_from(kept, rng);
        y.ids.push_back(id);
        if (id == eos) {
            y.terminated = true;
            break;
        }
    }
    return y;
}

// log p(y | x) under the unfiltered model, summed over every emitted token.
inline double sequence_log_prob(const AutoregressiveModel& model, const ConceptInput& x,
                                const Sequence& y) {
    double lp = 0.0;
    std::vector<int32_t> prefix;
    prefix.reserve(y.ids.size());
    for (int32_t id : y.ids) {
        auto dist = next_distribution(model, x, prefix);
        if (id < 0 || id >= dist.size()) throw InvalidInput("token id out of range");
        double p = dist.probs[static_cast<size_t>(id)];
        if (p <= 0.0) return -std::numeric_limits<double>::infinity();
        lp += std::log(p);
        prefix.push_back(id);
    }
    return lp;
}

namespace detail {

inline void check_enumeration_budget(int32_t vocab_size, int32_t max_len, uint64_t budget) {
    uint64_t leaves = 1;
    for (int32_t i = 0; i < max_len; ++i) {
        if (leaves > budget / static_cast<uint64_t>(vocab_size)) {
            throw BudgetExceeded("enumeration of " + std::to_string(vocab_size) + "^" +
                                 std::to_string(max_len) + " sequences exceeds budget " +
                                 std::to_string(budget));
        }
        leaves *= static_cast<uint64_t>(vocab_size);
    }
    if (leaves > budget)
        throw BudgetExceeded("enumeration exceeds budget " + std::to_string(budget));
}

}  // namespace detail

// Every complete sequence with its exact model probability. Depth-first,
// lexicographic by token id, so the output order is reproducible. Refuses
// upfront when |V|^max_len exceeds the budget.
inline std::vector<std::pair<Sequence, double>> enumerate_sequences(
    const AutoregressiveModel& model, const ConceptInput& x, int32_t max_len,
    uint64_t budget = kDefaultEnumerationBudget) {
    if (max_len < 1) throw InvalidInput("max_len must be positive");
    detail::check_enumeration_budget(model.vocab().size(), max_len, budget);

    std::vector<std::pair<Sequence, double>> out;
    const int32_t eos = model.vocab().eos_id();
    std::vector<int32_t> prefix;
    auto walk = [&](auto&& self, double mass) -> void {
        auto dist = next_distribution(model, x, prefix);
        for (int32_t v = 0; v < dist.size(); ++v) {
            double p = dist.probs[static_cast<size_t>(v)];
            if (p <= 0.0) continue;
            Sequence y;
            y.ids = prefix;
            y.ids.push_back(v);
            double m = mass * p;
            if (v == eos) {
                y.terminated = true;
                out.emplace_back(std::move(y), m);
            } else if (static_cast<int32_t>(y.ids.size()) >= max_len) {
                out.emplace_back(std::move(y), m);
            } else {
                prefix.push_back(v);
                self(self, m);
                prefix.pop_back();
            }
        }
    };
    walk(walk, 1.0);
    return out;
}

// exp of the mean negative log probability per emitted token (eos included),
// over the records the vocabulary can encode.
inline double perplexity(const AutoregressiveModel& model, const std::vector<CorpusRecord>& corpus) {
    double total_lp = 0.0;
    size_t total_tokens = 0;
    const auto& vocab = model.vocab();
    for (const auto& rec : corpus) {
        Sequence y;
        bool ok = true;
        for (const auto& tok : tokenize(rec.text)) {
            if (!vocab.contains(tok) || vocab.id(tok) == vocab.eos_id()) { ok = false; break; }
            y.ids.push_back(vocab.id(tok));
        }
        if (!ok || y.ids.empty()) continue;
        y.ids.push_back(vocab.eos_id());
        y.terminated = true;
        total_lp += sequence_log_prob(model, rec.x, y);
        total_tokens += y.ids.size();
    }
    if (total_tokens == 0) throw InvalidInput("perplexity over an empty encodable corpus");
    return std::exp(-total_lp / static_cast<double>(total_tokens));
}

}  // namespace csteer
