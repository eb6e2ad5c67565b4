#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <utility>
#include <vector>

#include "csteer/common.hpp"
#include "csteer/model.hpp"
#include "csteer/oracle.hpp"
#include "csteer/rng.hpp"
#include "csteer/sampling.hpp"
#include "csteer/types.hpp"

namespace csteer {

// Expected final oracle score, conditioned on the constraint and a prefix.
// r_values(x, prefix)[v] estimates the expectation after appending token v;
// r_empty(x) estimates it before any token is drawn. All outputs in [0,1].
class ScorePredictor {
public:
    virtual ~ScorePredictor() = default;
    virtual std::vector<double> r_values(const ConceptInput& x,
                                         const std::vector<int32_t>& prefix) const = 0;
    virtual double r_empty(const ConceptInput& x) const = 0;
};

// Exact expectation by full enumeration of completions under the base model.
class ExactPredictor : public ScorePredictor {
public:
    ExactPredictor(std::shared_ptr<const AutoregressiveModel> model,
                   std::shared_ptr<const SequenceOracle> oracle, int32_t max_len,
                   uint64_t budget = kDefaultEnumerationBudget)
        : model_(std::move(model)), oracle_(std::move(oracle)), max_len_(max_len), budget_(budget) {
        if (!model_ || !oracle_) throw InvalidInput("exact predictor needs a model and an oracle");
        if (max_len_ < 1) throw InvalidInput("max_len must be positive");
    }

    int32_t max_len() const { return max_len_; }

    double expected(const ConceptInput& x, const Sequence& y) const {
        int32_t remaining = max_len_ - static_cast<int32_t>(y.ids.size());
        if (!y.complete(max_len_))
            detail::check_enumeration_budget(model_->vocab().size(), remaining, budget_);
        Sequence walk = y;
        return expected_rec(x, walk);
    }

    std::vector<double> r_values(const ConceptInput& x,
                                 const std::vector<int32_t>& prefix) const override {
        Sequence base;
        base.ids = prefix;
        if (base.complete(max_len_) || contains_eos(prefix))
            throw ContractViolation("r_values on a complete prefix");
        std::vector<double> out(static_cast<size_t>(model_->vocab().size()));
        for (int32_t v = 0; v < model_->vocab().size(); ++v) {
            Sequence next = base.appended(v, model_->vocab().eos_id());
            out[static_cast<size_t>(v)] = expected(x, next);
        }
        return out;
    }

    double r_empty(const ConceptInput& x) const override { return expected(x, Sequence{}); }

private:
    bool contains_eos(const std::vector<int32_t>& prefix) const {
        for (int32_t id : prefix)
            if (id == model_->vocab().eos_id()) return true;
        return false;
    }

    double expected_rec(const ConceptInput& x, Sequence& y) const {
        if (y.complete(max_len_)) {
            double v = oracle_->score(x, render(model_->vocab(), y)).value;
            if (!(v >= 0.0 && v <= 1.0)) throw ContractViolation("oracle score outside [0,1]");
            return v;
        }
        auto dist = next_distribution(*model_, x, y.ids);
        double acc = 0.0;
        const int32_t eos = model_->vocab().eos_id();
        for (int32_t v = 0; v < dist.size(); ++v) {
            double p = dist.probs[static_cast<size_t>(v)];
            if (p <= 0.0) continue;
            y.ids.push_back(v);
            bool was_terminated = y.terminated;
            if (v == eos) y.terminated = true;
            acc += p * expected_rec(x, y);
            y.terminated = was_terminated;
            y.ids.pop_back();
        }
        return acc;
    }

    std::shared_ptr<const AutoregressiveModel> model_;
    std::shared_ptr<const SequenceOracle> oracle_;
    int32_t max_len_;
    uint64_t budget_;
};

// Expected oracle score of the base model itself, by plain enumeration.
// Kept independent of ExactPredictor so the two can cross-check each other.
inline double expected_oracle(const AutoregressiveModel& model, const SequenceOracle& oracle,
                              const ConceptInput& x, int32_t max_len,
                              uint64_t budget = kDefaultEnumerationBudget) {
    double acc = 0.0;
    for (const auto& [y, p] : enumerate_sequences(model, x, max_len, budget))
        acc += p * oracle.score(x, render(model.vocab(), y)).value;
    return acc;
}

// One guided step: q(v) proportional to r_next[v] * p(v), renormalized.
// r_prev would be the closed form's constant factor; it cancels under
// normalization and is accepted only so callers can pass it for validation.
// Zero total mass falls back to p itself and reports via fell_back.
inline StepDistribution guided_distribution(const StepDistribution& p_dist,
                                            const std::vector<double>& r_next, double r_prev,
                                            bool* fell_back = nullptr) {
    if (static_cast<int32_t>(r_next.size()) != p_dist.size())
        throw InvalidInput("r_next size does not match the step distribution");
    if (!std::isnan(r_prev) && !(r_prev >= 0.0 && r_prev <= 1.0))
        throw InvalidInput("r_prev outside [0,1]");
    std::vector<double> w(r_next.size());
    double z = 0.0;
    for (size_t v = 0; v < r_next.size(); ++v) {
        if (!(r_next[v] >= 0.0 && r_next[v] <= 1.0)) throw InvalidInput("r_next entry outside [0,1]");
        w[v] = r_next[v] * p_dist.probs[v];
        z += w[v];
    }
    if (fell_back) *fell_back = false;
    if (z <= 0.0) {
        if (fell_back) *fell_back = true;
        return p_dist;
    }
    for (double& e : w) e /= z;
    return StepDistribution::checked(std::move(w));
}

// The steered model q: per-step reweighting of the base distribution by the
// predictor. Satisfies the same contract as any other model.
class GuidedModel : public AutoregressiveModel {
public:
    GuidedModel(std::shared_ptr<const AutoregressiveModel> base,
                std::shared_ptr<const ScorePredictor> predictor, bool fallback_to_base = true)
        : base_(std::move(base)), predictor_(std::move(predictor)),
          fallback_to_base_(fallback_to_base) {
        if (!base_ || !predictor_) throw InvalidInput("guided model needs a base and a predictor");
    }

    const Vocabulary& vocab() const override { return base_->vocab(); }
    uint64_t fallback_count() const { return fallback_count_.load(); }

    StepDistribution next_token_probs(const ConceptInput& x,
                                      const std::vector<int32_t>& prefix) const override {
        auto p = next_distribution(*base_, x, prefix);
        auto r = predictor_->r_values(x, prefix);
        bool fell_back = false;
        auto q = guided_distribution(p, r, std::numeric_limits<double>::quiet_NaN(), &fell_back);
        if (fell_back) {
            if (!fallback_to_base_)
                throw ContractViolation("guided step has zero mass and fallback is disabled");
            fallback_count_.fetch_add(1);
        }
        return q;
    }

private:
    std::shared_ptr<const AutoregressiveModel> base_;
    std::shared_ptr<const ScorePredictor> predictor_;
    bool fallback_to_base_;
    mutable std::atomic<uint64_t> fallback_count_{0};
};

// Sampling from the guided model; the per-step distribution already folds in
// the predictor, so the plain sampler applies unchanged.
inline Sequence guided_sample(const GuidedModel& guided, const ConceptInput& x,
                              const SamplerConfig& cfg, Xoshiro256ss& rng) {
    return sample_sequence(guided, x, cfg, rng);
}

}  // namespace csteer
