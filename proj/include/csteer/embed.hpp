#pragma once

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "csteer/common.hpp"
#include "csteer/text.hpp"

namespace csteer {

// Fixed-dimension text embedding; pure.
class Embedder {
public:
    virtual ~Embedder() = default;
    virtual size_t dimension() const = 0;
    virtual std::vector<double> embed(std::string_view text) const = 0;
};

// cos(a, b) clamped into [0,1]; a zero vector has similarity 0 to everything.
inline double cosine_clamped(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw InvalidInput("cosine over mismatched dimensions");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na <= 0.0 || nb <= 0.0) return 0.0;
    double c = dot / (std::sqrt(na) * std::sqrt(nb));
    return std::clamp(c, 0.0, 1.0);
}

// Sorted unique stems over a pile of texts; the canonical way to build an
// embedding lexicon.
inline std::vector<std::string> build_lexicon(const std::vector<std::string>& texts,
                                              const Stemmer& stemmer) {
    std::set<std::string> stems;
    for (const auto& text : texts)
        for (const auto& tok : tokenize(text)) stems.insert(stemmer.stem(tok));
    return {stems.begin(), stems.end()};
}

// Stem-count vector over a fixed lexicon, L2-normalized. Stems outside the
// lexicon are dropped; an all-out-of-lexicon text embeds to the zero vector.
class BagOfStemsEmbedder : public Embedder {
public:
    BagOfStemsEmbedder(std::vector<std::string> lexicon, Stemmer stemmer = Stemmer::standard())
        : lexicon_(std::move(lexicon)), stemmer_(std::move(stemmer)) {
        if (lexicon_.empty()) throw InvalidInput("embedding lexicon is empty");
        for (size_t i = 0; i < lexicon_.size(); ++i) {
            if (lexicon_[i].empty()) throw InvalidInput("empty lexicon entry");
            if (!index_.emplace(lexicon_[i], i).second)
                throw InvalidInput("duplicate lexicon entry: " + lexicon_[i]);
        }
    }

    size_t dimension() const override { return lexicon_.size(); }
    const std::vector<std::string>& lexicon() const { return lexicon_; }
    const Stemmer& stemmer() const { return stemmer_; }

    std::vector<double> embed(std::string_view text) const override {
        std::vector<double> v(lexicon_.size(), 0.0);
        for (const auto& tok : tokenize(text)) {
            auto it = index_.find(stemmer_.stem(tok));
            if (it != index_.end()) v[it->second] += 1.0;
        }
        double norm = 0.0;
        for (double e : v) norm += e * e;
        if (norm > 0.0) {
            norm = std::sqrt(norm);
            for (double& e : v) e /= norm;
        }
        return v;
    }

private:
    std::vector<std::string> lexicon_;
    Stemmer stemmer_;
    std::unordered_map<std::string, size_t> index_;
};

}  // namespace csteer
