#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "csteer/common.hpp"
#include "csteer/guided.hpp"
#include "csteer/rng.hpp"
#include "csteer/text.hpp"
#include "csteer/types.hpp"

namespace csteer {

// Input encoding for the learned predictor: which lexicon stems the
// constraint mentions, prefix token counts, the last two tokens, and the
// prefix length scaled by max_len.
struct FeatureSpec {
    std::vector<std::string> lexicon;
    int32_t max_len = 16;

    void validate() const {
        if (lexicon.empty()) throw InvalidInput("feature lexicon is empty");
        if (max_len < 1) throw InvalidInput("feature max_len must be positive");
    }
};

// Feedforward approximator of the expected-score function: two tanh hidden
// layers, a sigmoid unit per vocabulary token for r_values, plus one extra
// sigmoid unit that serves the empty-prefix estimate. Gradients are manual.
class MlpPredictor : public ScorePredictor {
public:
    MlpPredictor(Vocabulary vocab, FeatureSpec spec, int32_t hidden1, int32_t hidden2,
                 uint64_t seed, Stemmer stemmer = Stemmer::standard())
        : vocab_(std::move(vocab)), spec_(std::move(spec)), stemmer_(std::move(stemmer)),
          h1_(hidden1), h2_(hidden2) {
        spec_.validate();
        if (h1_ < 1 || h2_ < 1) throw InvalidInput("hidden sizes must be positive");
        for (size_t i = 0; i < spec_.lexicon.size(); ++i)
            if (!lex_index_.emplace(spec_.lexicon[i], i).second)
                throw InvalidInput("duplicate lexicon entry: " + spec_.lexicon[i]);
        init_params(seed);
    }

    const Vocabulary& vocab() const { return vocab_; }
    const FeatureSpec& spec() const { return spec_; }
    const Stemmer& stemmer() const { return stemmer_; }
    int32_t hidden1() const { return h1_; }
    int32_t hidden2() const { return h2_; }

    size_t feature_dim() const {
        size_t v = static_cast<size_t>(vocab_.size());
        return spec_.lexicon.size() + v + 2 * (v + 1) + 1;
    }
    size_t output_dim() const { return static_cast<size_t>(vocab_.size()) + 1; }
    size_t param_count() const { return params_.size(); }
    std::vector<double>& params() { return params_; }
    const std::vector<double>& params() const { return params_; }

    std::vector<double> features(const ConceptInput& x, const std::vector<int32_t>& prefix) const {
        const size_t L = spec_.lexicon.size();
        const size_t v = static_cast<size_t>(vocab_.size());
        std::vector<double> f(feature_dim(), 0.0);
        for (const auto& c : x.concepts)
            for (const auto& stem : stemmer_.stems(c)) {
                auto it = lex_index_.find(stem);
                if (it != lex_index_.end()) f[it->second] = 1.0;
            }
        for (int32_t id : prefix) {
            if (id < 0 || id >= vocab_.size()) throw InvalidInput("token id out of range");
            f[L + static_cast<size_t>(id)] += 1.0;
        }
        size_t last = prefix.empty() ? v : static_cast<size_t>(prefix.back());
        f[L + v + last] = 1.0;
        size_t prev = prefix.size() < 2 ? v : static_cast<size_t>(prefix[prefix.size() - 2]);
        f[L + v + (v + 1) + prev] = 1.0;
        f[L + v + 2 * (v + 1)] =
            static_cast<double>(prefix.size()) / static_cast<double>(spec_.max_len);
        return f;
    }

    struct Forward {
        std::vector<double> f, a1, a2, out;
    };

    Forward run_forward(const ConceptInput& x, const std::vector<int32_t>& prefix) const {
        Forward fw;
        fw.f = features(x, prefix);
        const size_t D = fw.f.size();
        const size_t H1 = static_cast<size_t>(h1_), H2 = static_cast<size_t>(h2_);
        const size_t O = output_dim();
        const double* w1 = params_.data() + off_w1_;
        const double* b1 = params_.data() + off_b1_;
        const double* w2 = params_.data() + off_w2_;
        const double* b2 = params_.data() + off_b2_;
        const double* w3 = params_.data() + off_w3_;
        const double* b3 = params_.data() + off_b3_;

        fw.a1.resize(H1);
        for (size_t i = 0; i < H1; ++i) {
            double z = b1[i];
            const double* row = w1 + i * D;
            for (size_t j = 0; j < D; ++j) z += row[j] * fw.f[j];
            fw.a1[i] = std::tanh(z);
        }
        fw.a2.resize(H2);
        for (size_t i = 0; i < H2; ++i) {
            double z = b2[i];
            const double* row = w2 + i * H1;
            for (size_t j = 0; j < H1; ++j) z += row[j] * fw.a1[j];
            fw.a2[i] = std::tanh(z);
        }
        fw.out.resize(O);
        for (size_t i = 0; i < O; ++i) {
            double z = b3[i];
            const double* row = w3 + i * H2;
            for (size_t j = 0; j < H2; ++j) z += row[j] * fw.a2[j];
            fw.out[i] = 1.0 / (1.0 + std::exp(-z));
        }
        return fw;
    }

    // Accumulates d(loss)/d(params) into grad, given d(loss)/d(out).
    void backward(const Forward& fw, const std::vector<double>& dout,
                  std::vector<double>& grad) const {
        if (dout.size() != output_dim()) throw InvalidInput("dout size mismatch");
        if (grad.size() != params_.size()) throw InvalidInput("grad buffer size mismatch");
        const size_t D = fw.f.size();
        const size_t H1 = static_cast<size_t>(h1_), H2 = static_cast<size_t>(h2_);
        const size_t O = output_dim();
        const double* w2 = params_.data() + off_w2_;
        const double* w3 = params_.data() + off_w3_;

        std::vector<double> dz3(O);
        for (size_t i = 0; i < O; ++i) dz3[i] = dout[i] * fw.out[i] * (1.0 - fw.out[i]);

        std::vector<double> da2(H2, 0.0);
        for (size_t i = 0; i < O; ++i) {
            if (dz3[i] == 0.0) continue;
            double* grow = grad.data() + off_w3_ + i * H2;
            const double* row = w3 + i * H2;
            for (size_t j = 0; j < H2; ++j) {
                grow[j] += dz3[i] * fw.a2[j];
                da2[j] += dz3[i] * row[j];
            }
            grad[off_b3_ + i] += dz3[i];
        }

        std::vector<double> da1(H1, 0.0);
        for (size_t i = 0; i < H2; ++i) {
            double dz2 = da2[i] * (1.0 - fw.a2[i] * fw.a2[i]);
            if (dz2 == 0.0) continue;
            double* grow = grad.data() + off_w2_ + i * H1;
            const double* row = w2 + i * H1;
            for (size_t j = 0; j < H1; ++j) {
                grow[j] += dz2 * fw.a1[j];
                da1[j] += dz2 * row[j];
            }
            grad[off_b2_ + i] += dz2;
        }

        for (size_t i = 0; i < H1; ++i) {
            double dz1 = da1[i] * (1.0 - fw.a1[i] * fw.a1[i]);
            if (dz1 == 0.0) continue;
            double* grow = grad.data() + off_w1_ + i * D;
            for (size_t j = 0; j < D; ++j) grow[j] += dz1 * fw.f[j];
            grad[off_b1_ + i] += dz1;
        }
    }

    std::vector<double> r_values(const ConceptInput& x,
                                 const std::vector<int32_t>& prefix) const override {
        auto fw = run_forward(x, prefix);
        return {fw.out.begin(), fw.out.begin() + vocab_.size()};
    }

    double r_empty(const ConceptInput& x) const override {
        return run_forward(x, {}).out.back();
    }

    void set_train_echo(nlohmann::json echo) { train_echo_ = std::move(echo); }
    const nlohmann::json& train_echo() const { return train_echo_; }

    nlohmann::json to_json() const {
        return {
            {"format", "csteer-predictor"},
            {"version", 1},
            {"vocab", {{"tokens", vocab_.tokens()}, {"eos_id", vocab_.eos_id()}}},
            {"features",
             {{"lexicon", spec_.lexicon},
              {"max_len", spec_.max_len},
              {"stemmer",
               {{"suffixes", stemmer_.suffixes()}, {"min_stem_length", stemmer_.min_stem_length()}}}}},
            {"hidden1", h1_},
            {"hidden2", h2_},
            {"params", params_},
            {"train_echo", train_echo_},
        };
    }

    static MlpPredictor from_json(const nlohmann::json& j) {
        if (!j.is_object() || j.value("format", "") != "csteer-predictor")
            throw ParseError("not a predictor file");
        if (j.value("version", 0) != 1) throw ParseError("unsupported predictor version");
        Vocabulary vocab(j.at("vocab").at("tokens").get<std::vector<std::string>>(),
                         j.at("vocab").at("eos_id").get<int32_t>());
        FeatureSpec spec;
        spec.lexicon = j.at("features").at("lexicon").get<std::vector<std::string>>();
        spec.max_len = j.at("features").at("max_len").get<int32_t>();
        Stemmer stemmer(
            j.at("features").at("stemmer").at("suffixes").get<std::vector<std::string>>(),
            j.at("features").at("stemmer").at("min_stem_length").get<size_t>());
        MlpPredictor p(std::move(vocab), std::move(spec), j.at("hidden1").get<int32_t>(),
                       j.at("hidden2").get<int32_t>(), 0, std::move(stemmer));
        auto params = j.at("params").get<std::vector<double>>();
        if (params.size() != p.params_.size())
            throw ParseError("predictor parameter count mismatch");
        p.params_ = std::move(params);
        if (j.contains("train_echo")) p.train_echo_ = j.at("train_echo");
        return p;
    }

private:
    void init_params(uint64_t seed) {
        const size_t D = feature_dim();
        const size_t H1 = static_cast<size_t>(h1_), H2 = static_cast<size_t>(h2_);
        const size_t O = output_dim();
        off_w1_ = 0;
        off_b1_ = off_w1_ + H1 * D;
        off_w2_ = off_b1_ + H1;
        off_b2_ = off_w2_ + H2 * H1;
        off_w3_ = off_b2_ + H2;
        off_b3_ = off_w3_ + O * H2;
        params_.assign(off_b3_ + O, 0.0);

        Xoshiro256ss rng(seed);
        auto fill = [&](size_t off, size_t count, size_t fan_in) {
            double s = 1.0 / std::sqrt(static_cast<double>(fan_in));
            for (size_t i = 0; i < count; ++i)
                params_[off + i] = (2.0 * rng.uniform01() - 1.0) * s;
        };
        fill(off_w1_, H1 * D, D);
        fill(off_w2_, H2 * H1, H1);
        fill(off_w3_, O * H2, H2);
    }

    Vocabulary vocab_;
    FeatureSpec spec_;
    Stemmer stemmer_;
    int32_t h1_, h2_;
    std::unordered_map<std::string, size_t> lex_index_;
    std::vector<double> params_;
    size_t off_w1_ = 0, off_b1_ = 0, off_w2_ = 0, off_b2_ = 0, off_w3_ = 0, off_b3_ = 0;
    nlohmann::json train_echo_;
};

}  // namespace csteer
