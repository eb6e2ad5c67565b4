#pragma once

#include <functional>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "csteer/common.hpp"
#include "csteer/text.hpp"
#include "csteer/types.hpp"

namespace csteer {

struct OracleScore {
    double value = 0.0;

    OracleScore() = default;
    explicit OracleScore(double v) : value(v) {
        if (!(v >= 0.0 && v <= 1.0))
            throw ContractViolation("oracle score " + std::to_string(v) + " outside [0,1]");
    }
};

// Sequence-level scorer: a pure function of the constraint set and the
// rendered text of a complete sequence.
class SequenceOracle {
public:
    virtual ~SequenceOracle() = default;
    virtual OracleScore score(const ConceptInput& x, std::string_view text) const = 0;
};

namespace detail {

inline std::set<std::string> stem_set(std::string_view text, const Stemmer& stemmer) {
    std::set<std::string> out;
    for (const auto& tok : tokenize(text)) out.insert(stemmer.stem(tok));
    return out;
}

// A multi-word concept counts as covered only when every one of its word
// stems appears in the text.
inline bool concept_covered(const std::string& constraint, const std::set<std::string>& text_stems,
                            const Stemmer& stemmer) {
    auto words = tokenize(constraint);
    if (words.empty()) return false;
    for (const auto& w : words)
        if (text_stems.count(stemmer.stem(w)) == 0) return false;
    return true;
}

}  // namespace detail

// 1 iff every constraint is stem-covered by the text; an empty constraint
// list is vacuously satisfied.
inline int lexical_score(const ConceptInput& x, std::string_view text, const Stemmer& stemmer) {
    auto text_stems = detail::stem_set(text, stemmer);
    for (const auto& c : x.concepts)
        if (!detail::concept_covered(c, text_stems, stemmer)) return 0;
    return 1;
}

// Fraction of constraints stem-covered by the text.
inline double coverage_ratio(const ConceptInput& x, std::string_view text, const Stemmer& stemmer) {
    if (x.concepts.empty()) throw InvalidInput("coverage_ratio over an empty constraint list");
    size_t covered = 0;
    auto text_stems = detail::stem_set(text, stemmer);
    for (const auto& c : x.concepts)
        if (detail::concept_covered(c, text_stems, stemmer)) ++covered;
    return static_cast<double>(covered) / static_cast<double>(x.concepts.size());
}

class LexicalOracle : public SequenceOracle {
public:
    explicit LexicalOracle(Stemmer stemmer = Stemmer::standard()) : stemmer_(std::move(stemmer)) {}

    const Stemmer& stemmer() const { return stemmer_; }

    OracleScore score(const ConceptInput& x, std::string_view text) const override {
        return OracleScore(static_cast<double>(lexical_score(x, text, stemmer_)));
    }

    double coverage(const ConceptInput& x, std::string_view text) const {
        return coverage_ratio(x, text, stemmer_);
    }

private:
    Stemmer stemmer_;
};

// Product of the Boolean lexical check and a graded scorer.
class JointOracle : public SequenceOracle {
public:
    JointOracle(std::shared_ptr<const LexicalOracle> lex, std::shared_ptr<const SequenceOracle> cs)
        : lex_(std::move(lex)), cs_(std::move(cs)) {
        if (!lex_ || !cs_) throw InvalidInput("joint oracle needs both parts");
    }

    OracleScore score(const ConceptInput& x, std::string_view text) const override {
        double l = lex_->score(x, text).value;
        if (l == 0.0) return OracleScore(0.0);
        return OracleScore(l * cs_->score(x, text).value);
    }

private:
    std::shared_ptr<const LexicalOracle> lex_;
    std::shared_ptr<const SequenceOracle> cs_;
};

class ConstantOracle : public SequenceOracle {
public:
    explicit ConstantOracle(double value) : value_(OracleScore(value)) {}
    OracleScore score(const ConceptInput&, std::string_view) const override { return value_; }

private:
    OracleScore value_;
};

// Adapts an arbitrary pure function; test code builds table-driven oracles
// out of this.
class FunctionOracle : public SequenceOracle {
public:
    using Fn = std::function<double(const ConceptInput&, std::string_view)>;
    explicit FunctionOracle(Fn fn) : fn_(std::move(fn)) {
        if (!fn_) throw InvalidInput("function oracle needs a callable");
    }

    OracleScore score(const ConceptInput& x, std::string_view text) const override {
        return OracleScore(fn_(x, text));
    }

private:
    Fn fn_;
};

}  // namespace csteer
