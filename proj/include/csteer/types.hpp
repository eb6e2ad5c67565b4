#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "csteer/common.hpp"
#include "csteer/text.hpp"

namespace csteer {

inline constexpr double kProbTolerance = 1e-9;

class Vocabulary {
public:
    Vocabulary(std::vector<std::string> tokens, int32_t eos_id)
        : tokens_(std::move(tokens)), eos_id_(eos_id) {
        if (tokens_.size() < 2) throw InvalidInput("vocabulary needs at least 2 tokens");
        if (eos_id_ < 0 || static_cast<size_t>(eos_id_) >= tokens_.size())
            throw InvalidInput("eos_id out of range");
        for (int32_t i = 0; i < static_cast<int32_t>(tokens_.size()); ++i) {
            if (tokens_[i].empty()) throw InvalidInput("empty token in vocabulary");
            if (!index_.emplace(tokens_[i], i).second)
                throw InvalidInput("duplicate token in vocabulary: " + tokens_[i]);
        }
    }

    int32_t size() const { return static_cast<int32_t>(tokens_.size()); }
    int32_t eos_id() const { return eos_id_; }
    const std::vector<std::string>& tokens() const { return tokens_; }
    const std::string& token(int32_t id) const { return tokens_.at(static_cast<size_t>(id)); }

    int32_t id(std::string_view token) const {
        auto it = index_.find(std::string(token));
        if (it == index_.end()) throw InvalidInput("token not in vocabulary: " + std::string(token));
        return it->second;
    }

    bool contains(std::string_view token) const {
        return index_.count(std::string(token)) > 0;
    }

    bool operator==(const Vocabulary& other) const {
        return tokens_ == other.tokens_ && eos_id_ == other.eos_id_;
    }

private:
    std::vector<std::string> tokens_;
    int32_t eos_id_;
    std::unordered_map<std::string, int32_t> index_;
};

// The constraint: an ordered list of concept strings, each one or more words.
struct ConceptInput {
    std::vector<std::string> concepts;

    // Order-insensitive fingerprint; conditioning and file keys use this so
    // shuffling the concepts never changes behavior.
    uint64_t set_hash() const {
        std::vector<std::string> folded;
        folded.reserve(concepts.size());
        for (const auto& c : concepts) folded.push_back(fold_case(c));
        std::sort(folded.begin(), folded.end());
        uint64_t h = 0xcbf29ce484222325ull;
        for (const auto& c : folded) {
            h = fnv1a64(c, h);
            h = fnv1a64("\x1f", h);
        }
        return h;
    }
};

// Throws unless the input has >= 1 concepts, all non-empty, with no two
// concepts identical after stemming.
inline void validate_concepts(const ConceptInput& x, const Stemmer& stemmer) {
    if (x.concepts.empty()) throw InvalidInput("concept list is empty");
    std::set<std::vector<std::string>> seen;
    for (const auto& c : x.concepts) {
        if (tokenize(c).empty()) throw InvalidInput("empty concept");
        auto key = stemmer.stems(c);
        if (!seen.insert(key).second)
            throw InvalidInput("duplicate concept after stemming: " + c);
    }
}

struct Sequence {
    std::vector<int32_t> ids;
    bool terminated = false;

    size_t size() const { return ids.size(); }
    bool empty() const { return ids.empty(); }

    // Complete for oracle scoring: eos-terminated, or force-terminated at max_len.
    bool complete(int32_t max_len) const {
        return terminated || static_cast<int32_t>(ids.size()) >= max_len;
    }

    Sequence appended(int32_t id, int32_t eos_id) const {
        Sequence out = *this;
        out.ids.push_back(id);
        if (id == eos_id) out.terminated = true;
        return out;
    }

    bool operator==(const Sequence& other) const {
        return ids == other.ids && terminated == other.terminated;
    }
};

inline void validate_sequence(const Sequence& y, const Vocabulary& vocab, int32_t max_len) {
    if (static_cast<int32_t>(y.ids.size()) > max_len)
        throw InvalidInput("sequence longer than max_len");
    int eos_count = 0;
    for (int32_t id : y.ids) {
        if (id < 0 || id >= vocab.size()) throw InvalidInput("token id out of range");
        if (id == vocab.eos_id()) ++eos_count;
    }
    if (y.terminated) {
        if (eos_count != 1 || y.ids.empty() || y.ids.back() != vocab.eos_id())
            throw InvalidInput("terminated sequence must end with its only eos");
    } else if (eos_count != 0) {
        throw InvalidInput("eos inside an unterminated sequence");
    }
}

// Tokens joined by single spaces, eos dropped.
inline std::string render(const Vocabulary& vocab, const Sequence& y) {
    std::string out;
    for (int32_t id : y.ids) {
        if (id == vocab.eos_id()) continue;
        if (!out.empty()) out.push_back(' ');
        out += vocab.token(id);
    }
    return out;
}

struct StepDistribution {
    std::vector<double> probs;

    // Validates the distribution invariants: entries >= 0, total mass 1 +- 1e-9.
    static StepDistribution checked(std::vector<double> probs) {
        double sum = 0.0;
        for (double p : probs) {
            if (!(p >= 0.0)) throw InvalidInput("negative probability in step distribution");
            sum += p;
        }
        if (std::abs(sum - 1.0) > kProbTolerance)
            throw InvalidInput("step distribution mass " + std::to_string(sum) + " != 1");
        StepDistribution d;
        d.probs = std::move(probs);
        return d;
    }

    int32_t size() const { return static_cast<int32_t>(probs.size()); }
};

}  // namespace csteer
