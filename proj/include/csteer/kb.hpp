#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "csteer/common.hpp"
#include "csteer/text.hpp"
#include "csteer/tuple.hpp"

namespace csteer {

// Generative knowledge store: ranked candidate tails for a (head, relation) query.
class KnowledgeBase {
public:
    virtual ~KnowledgeBase() = default;
    // At most k tails, best first, deterministic order.
    virtual std::vector<std::string> tails(std::string_view head, RelationType relation,
                                           int32_t k) const = 0;
};

struct KbRecord {
    std::string head;
    RelationType relation = RelationType::AtLocation;
    std::string tail;
    double weight = 1.0;
};

// Weighted tuple store. Tails rank by weight descending with lexicographic
// tie-break; duplicate (head, relation, tail) entries collapse to the one
// with the highest weight. Heads are matched case-insensitively.
class StaticKB : public KnowledgeBase {
public:
    StaticKB() = default;

    explicit StaticKB(const std::vector<KbRecord>& records) {
        for (const auto& rec : records) add(rec);
    }

    void add(const KbRecord& rec) {
        if (rec.head.empty() || rec.tail.empty())
            throw InvalidInput("kb record head and tail must be non-empty");
        auto& row = rows_[{fold_case(rec.head), rec.relation}];
        for (auto& [tail, weight] : row) {
            if (tail == rec.tail) {
                weight = std::max(weight, rec.weight);
                return;
            }
        }
        row.emplace_back(rec.tail, rec.weight);
    }

    std::vector<std::string> tails(std::string_view head, RelationType relation,
                                   int32_t k) const override {
        if (k < 1) throw InvalidInput("kb query needs k >= 1");
        auto it = rows_.find({fold_case(head), relation});
        if (it == rows_.end()) return {};
        auto row = it->second;
        std::sort(row.begin(), row.end(), [](const auto& a, const auto& b) {
            if (a.second != b.second) return a.second > b.second;
            return a.first < b.first;
        });
        std::vector<std::string> out;
        out.reserve(std::min(row.size(), static_cast<size_t>(k)));
        for (const auto& [tail, weight] : row) {
            if (static_cast<int32_t>(out.size()) >= k) break;
            out.push_back(tail);
        }
        return out;
    }

    std::vector<KbRecord> records() const {
        std::vector<KbRecord> out;
        for (const auto& [key, row] : rows_)
            for (const auto& [tail, weight] : row)
                out.push_back({key.first, key.second, tail, weight});
        return out;
    }

    size_t size() const {
        size_t n = 0;
        for (const auto& [key, row] : rows_) n += row.size();
        return n;
    }

private:
    std::map<std::pair<std::string, RelationType>, std::vector<std::pair<std::string, double>>> rows_;
};

}  // namespace csteer
