#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "csteer/common.hpp"
#include "csteer/text.hpp"

namespace csteer {

enum class RelationType { AtLocation, UsedFor, CapableOf, PartOf };

inline constexpr RelationType kAllRelations[] = {
    RelationType::AtLocation, RelationType::UsedFor, RelationType::CapableOf, RelationType::PartOf};

inline std::string relation_name(RelationType r) {
    switch (r) {
        case RelationType::AtLocation: return "AtLocation";
        case RelationType::UsedFor: return "UsedFor";
        case RelationType::CapableOf: return "CapableOf";
        case RelationType::PartOf: return "PartOf";
    }
    throw ContractViolation("unknown relation");
}

inline RelationType relation_from_name(std::string_view name) {
    if (name == "AtLocation") return RelationType::AtLocation;
    if (name == "UsedFor") return RelationType::UsedFor;
    if (name == "CapableOf") return RelationType::CapableOf;
    if (name == "PartOf") return RelationType::PartOf;
    throw ParseError("unknown relation name: " + std::string(name));
}

struct Tuple {
    std::string head;
    RelationType relation = RelationType::AtLocation;
    std::string tail;

    Tuple() = default;
    Tuple(std::string h, RelationType r, std::string t)
        : head(std::move(h)), relation(r), tail(std::move(t)) {
        if (head.empty() || tail.empty()) throw InvalidInput("tuple head and tail must be non-empty");
    }

    bool operator==(const Tuple& other) const {
        return head == other.head && relation == other.relation && tail == other.tail;
    }
};

class TupleExtractor {
public:
    virtual ~TupleExtractor() = default;
    // Tuples in sentence order; empty when nothing matches.
    virtual std::vector<Tuple> extract(std::string_view sentence) const = 0;
};

// Pattern grammar over the toy clause templates. Clauses are token runs
// separated by the word "and"; each clause matches at most one pattern:
//   the H can T...            -> CapableOf(H, T)
//   the H is used for T...    -> UsedFor(H, T)
//   the H is in the T...      -> AtLocation(H, T)
//   the H is part of the T... -> PartOf(H, T)
class RuleBasedExtractor : public TupleExtractor {
public:
    std::vector<Tuple> extract(std::string_view sentence) const override {
        if (sentence.empty()) throw InvalidInput("cannot extract from an empty sentence");
        std::vector<Tuple> out;
        auto tokens = tokenize(sentence);
        size_t start = 0;
        for (size_t i = 0; i <= tokens.size(); ++i) {
            if (i == tokens.size() || tokens[i] == "and") {
                parse_clause(tokens, start, i, out);
                start = i + 1;
            }
        }
        return out;
    }

private:
    static std::string join(const std::vector<std::string>& tokens, size_t from, size_t to) {
        std::string s;
        for (size_t i = from; i < to; ++i) {
            if (!s.empty()) s.push_back(' ');
            s += tokens[i];
        }
        return s;
    }

    static void parse_clause(const std::vector<std::string>& t, size_t b, size_t e,
                             std::vector<Tuple>& out) {
        size_t n = e > b ? e - b : 0;
        if (n < 4 || t[b] != "the") return;
        const std::string& head = t[b + 1];
        if (t[b + 2] == "can") {
            out.emplace_back(head, RelationType::CapableOf, join(t, b + 3, e));
            return;
        }
        if (t[b + 2] != "is") return;
        if (n >= 6 && t[b + 3] == "used" && t[b + 4] == "for") {
            out.emplace_back(head, RelationType::UsedFor, join(t, b + 5, e));
        } else if (n >= 6 && t[b + 3] == "in" && t[b + 4] == "the") {
            out.emplace_back(head, RelationType::AtLocation, join(t, b + 5, e));
        } else if (n >= 7 && t[b + 3] == "part" && t[b + 4] == "of" && t[b + 5] == "the") {
            out.emplace_back(head, RelationType::PartOf, join(t, b + 6, e));
        }
    }
};

}  // namespace csteer
