#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "csteer/common.hpp"
#include "csteer/guided.hpp"
#include "csteer/model.hpp"
#include "csteer/neural.hpp"
#include "csteer/oracle.hpp"
#include "csteer/rng.hpp"
#include "csteer/sampling.hpp"
#include "csteer/types.hpp"

namespace csteer {

struct TrainingExample {
    ConceptInput x;
    Sequence y;
    double label = 0.0;  // sequence-level oracle score, applied at every step

    void validate(int32_t vocab_size) const {
        if (y.ids.empty()) throw InvalidInput("training example with an empty sequence");
        if (!(label >= 0.0 && label <= 1.0)) throw InvalidInput("label outside [0,1]");
        for (int32_t id : y.ids)
            if (id < 0 || id >= vocab_size) throw InvalidInput("token id out of range");
    }
};

struct TrainConfig {
    double lambda = 0.5;
    double learning_rate = 1e-2;  // desk-scale default; config-exposed for other regimes
    int32_t epochs = 10;
    int32_t samples_per_input = 16;
    uint64_t seed = 0;

    void validate() const {
        if (lambda < 0.0) throw InvalidInput("lambda must be >= 0");
        if (learning_rate < 0.0) throw InvalidInput("learning_rate must be >= 0");
        if (epochs < 1) throw InvalidInput("epochs must be positive");
        if (samples_per_input < 1) throw InvalidInput("samples_per_input must be positive");
    }
};

struct GeneratedSet {
    std::vector<TrainingExample> examples;
    size_t dropped = 0;  // samples whose oracle call failed
};

// Self-sampled training data: every sequence comes from the base model, each
// labeled with the oracle score of its rendered text. Input index i draws
// from its own RNG stream, so results do not depend on evaluation order.
inline GeneratedSet generate_training_set(const AutoregressiveModel& model,
                                          const SequenceOracle& oracle,
                                          const std::vector<ConceptInput>& inputs,
                                          const TrainConfig& cfg, const SamplerConfig& sampler) {
    cfg.validate();
    sampler.validate();
    GeneratedSet out;
    out.examples.reserve(inputs.size() * static_cast<size_t>(cfg.samples_per_input));
    for (size_t i = 0; i < inputs.size(); ++i) {
        Xoshiro256ss rng = Xoshiro256ss::stream(sampler.seed, static_cast<uint64_t>(i));
        for (int32_t n = 0; n < cfg.samples_per_input; ++n) {
            Sequence y = sample_sequence(model, inputs[i], sampler, rng);
            TrainingExample ex;
            ex.x = inputs[i];
            ex.y = std::move(y);
            try {
                ex.label = oracle.score(ex.x, render(model.vocab(), ex.y)).value;
            } catch (const Error&) {
                ++out.dropped;
                continue;
            }
            out.examples.push_back(std::move(ex));
        }
    }
    return out;
}

namespace detail {

inline double bce(double p, double label) {
    double a = p > 0.0 ? std::log(p) : -std::numeric_limits<double>::infinity();
    double b = p < 1.0 ? std::log(1.0 - p) : -std::numeric_limits<double>::infinity();
    return -(label * a + (1.0 - label) * b);
}

inline double bce_dp(double p, double label) {
    return -label / p + (1.0 - label) / (1.0 - p);
}

inline double kl_term(double p, double q) {
    if (p <= 0.0) return 0.0;
    if (q <= 0.0) return std::numeric_limits<double>::infinity();
    return p * std::log(p / q);
}

inline double bernoulli_kl(double a, double b) {
    return std::max(0.0, kl_term(a, b) + kl_term(1.0 - a, 1.0 - b));
}

inline double kl_da(double a, double b) { return std::log(a / b) - std::log((1.0 - a) / (1.0 - b)); }
inline double kl_db(double a, double b) { return -a / b + (1.0 - a) / (1.0 - b); }

}  // namespace detail

// Per-step binary cross entropy between each realized-step prediction and
// the sequence-level label: steps 0 (empty prefix) through T.
inline double ce_loss(const ScorePredictor& r, const TrainingExample& ex) {
    double loss = detail::bce(r.r_empty(ex.x), ex.label);
    std::vector<int32_t> prefix;
    for (int32_t id : ex.y.ids) {
        auto vals = r.r_values(ex.x, prefix);
        loss += detail::bce(vals[static_cast<size_t>(id)], ex.label);
        prefix.push_back(id);
    }
    return loss;
}

// Per-step Bernoulli KL between the aggregated next-step prediction and the
// previous step's prediction: steps 1 through T. Zero exactly when the
// expectation-consistency identity holds at every step.
inline double reg_loss(const ScorePredictor& r, const AutoregressiveModel& model,
                       const TrainingExample& ex) {
    double loss = 0.0;
    double prev = r.r_empty(ex.x);
    std::vector<int32_t> prefix;
    for (int32_t id : ex.y.ids) {
        auto vals = r.r_values(ex.x, prefix);
        auto p = next_distribution(model, ex.x, prefix);
        double agg = 0.0;
        for (size_t v = 0; v < vals.size(); ++v) agg += vals[v] * p.probs[v];
        loss += detail::bernoulli_kl(agg, prev);
        prev = vals[static_cast<size_t>(id)];
        prefix.push_back(id);
    }
    return loss;
}

struct ExampleLoss {
    double ce = 0.0;
    double reg = 0.0;
    double total(double lambda) const { return ce + lambda * reg; }
};

// Loss of one example under the learned predictor, with d(ce + lambda*reg)/
// d(params) accumulated into grad when it is non-null.
inline ExampleLoss example_loss(const MlpPredictor& r, const AutoregressiveModel& model,
                                const TrainingExample& ex, double lambda,
                                std::vector<double>* grad = nullptr) {
    ex.validate(r.vocab().size());
    const size_t T = ex.y.ids.size();
    const size_t V = static_cast<size_t>(r.vocab().size());

    std::vector<MlpPredictor::Forward> fws;
    fws.reserve(T);
    std::vector<std::vector<double>> pdists;
    pdists.reserve(T);
    std::vector<int32_t> prefix;
    for (size_t k = 0; k < T; ++k) {
        fws.push_back(r.run_forward(ex.x, prefix));
        pdists.push_back(next_distribution(model, ex.x, prefix).probs);
        prefix.push_back(ex.y.ids[k]);
    }

    // P[i] = prediction for step i; P[0] sits on forward 0's extra unit,
    // P[i>=1] on forward i-1's unit for the realized token.
    std::vector<double> P(T + 1);
    P[0] = fws[0].out[V];
    for (size_t i = 1; i <= T; ++i) P[i] = fws[i - 1].out[static_cast<size_t>(ex.y.ids[i - 1])];

    ExampleLoss loss;
    for (size_t i = 0; i <= T; ++i) loss.ce += detail::bce(P[i], ex.label);

    std::vector<double> agg(T + 1, 0.0);
    for (size_t i = 1; i <= T; ++i) {
        for (size_t v = 0; v < V; ++v) agg[i] += fws[i - 1].out[v] * pdists[i - 1][v];
        loss.reg += detail::bernoulli_kl(agg[i], P[i - 1]);
    }

    if (grad) {
        std::vector<std::vector<double>> douts(T, std::vector<double>(V + 1, 0.0));
        douts[0][V] += detail::bce_dp(P[0], ex.label);
        for (size_t i = 1; i <= T; ++i)
            douts[i - 1][static_cast<size_t>(ex.y.ids[i - 1])] += detail::bce_dp(P[i], ex.label);
        if (lambda > 0.0) {
            for (size_t i = 1; i <= T; ++i) {
                double da = lambda * detail::kl_da(agg[i], P[i - 1]);
                double db = lambda * detail::kl_db(agg[i], P[i - 1]);
                for (size_t v = 0; v < V; ++v) douts[i - 1][v] += da * pdists[i - 1][v];
                if (i == 1)
                    douts[0][V] += db;
                else
                    douts[i - 2][static_cast<size_t>(ex.y.ids[i - 2])] += db;
            }
        }
        for (size_t k = 0; k < T; ++k) r.backward(fws[k], douts[k], *grad);
    }
    return loss;
}

struct DatasetLoss {
    double ce = 0.0;
    double reg = 0.0;
    double total(double lambda) const { return ce + lambda * reg; }
};

// Summed (not averaged) loss and gradient over a dataset, so duplicating an
// example contributes twice.
inline DatasetLoss dataset_loss(const MlpPredictor& r, const AutoregressiveModel& model,
                                const std::vector<TrainingExample>& dataset, double lambda,
                                std::vector<double>* grad = nullptr) {
    DatasetLoss out;
    for (const auto& ex : dataset) {
        auto l = example_loss(r, model, ex, lambda, grad);
        out.ce += l.ce;
        out.reg += l.reg;
    }
    return out;
}

struct TrainResult {
    std::vector<double> loss_trace;  // mean total loss per epoch, before that epoch's update
    double final_ce = 0.0;           // mean over the dataset after the last update
    double final_reg = 0.0;
};

// Full-batch gradient descent with a fixed step. Deterministic given the
// dataset order and the predictor's initial parameters.
inline TrainResult train(MlpPredictor& r, const std::vector<TrainingExample>& dataset,
                         const AutoregressiveModel& model, const TrainConfig& cfg) {
    cfg.validate();
    if (dataset.empty()) throw InvalidInput("training needs a non-empty dataset");
    const double n = static_cast<double>(dataset.size());
    TrainResult result;
    std::vector<double> grad(r.param_count());
    for (int32_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::fill(grad.begin(), grad.end(), 0.0);
        auto loss = dataset_loss(r, model, dataset, cfg.lambda, &grad);
        double mean_total = loss.total(cfg.lambda) / n;
        if (!std::isfinite(mean_total))
            throw TrainingDiverged("non-finite loss at epoch " + std::to_string(epoch));
        result.loss_trace.push_back(mean_total);
        double step = cfg.learning_rate / n;
        auto& params = r.params();
        for (size_t i = 0; i < params.size(); ++i) params[i] -= step * grad[i];
    }
    auto final_loss = dataset_loss(r, model, dataset, cfg.lambda);
    result.final_ce = final_loss.ce / n;
    result.final_reg = final_loss.reg / n;
    if (!std::isfinite(result.final_ce + result.final_reg))
        throw TrainingDiverged("non-finite loss after training");
    return result;
}

// Central finite differences on a random parameter subset against the
// analytic gradient; returns the maximum relative error.
inline double grad_check(MlpPredictor& r, const TrainingExample& ex,
                         const AutoregressiveModel& model, double lambda, size_t param_samples = 50,
                         double h = 1e-5, uint64_t seed = 1234) {
    std::vector<double> grad(r.param_count(), 0.0);
    example_loss(r, model, ex, lambda, &grad);

    std::set<size_t> picked;
    Xoshiro256ss rng(seed);
    size_t want = std::min(param_samples, r.param_count());
    while (picked.size() < want) picked.insert(static_cast<size_t>(rng.below(r.param_count())));

    double worst = 0.0;
    auto& params = r.params();
    for (size_t idx : picked) {
        double saved = params[idx];
        params[idx] = saved + h;
        double up = example_loss(r, model, ex, lambda).total(lambda);
        params[idx] = saved - h;
        double down = example_loss(r, model, ex, lambda).total(lambda);
        params[idx] = saved;
        double numeric = (up - down) / (2.0 * h);
        double denom = std::max(1e-4, std::abs(grad[idx]) + std::abs(numeric));
        worst = std::max(worst, std::abs(grad[idx] - numeric) / denom);
    }
    return worst;
}

}  // namespace csteer
