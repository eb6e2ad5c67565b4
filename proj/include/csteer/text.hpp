#pragma once

#include <algorithm>
#include <cctype>
#include <string>
#include <string_view>
#include <vector>

#include "csteer/common.hpp"

namespace csteer {

// Tokens are maximal runs of [a-z0-9] after lower-casing; everything else
// separates. Stemmer configs saved by the tools assume this rule.
inline std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string cur;
    for (char raw : text) {
        unsigned char c = static_cast<unsigned char>(raw);
        char lc = static_cast<char>(std::tolower(c));
        if ((lc >= 'a' && lc <= 'z') || (lc >= '0' && lc <= '9')) {
            cur.push_back(lc);
        } else if (!cur.empty()) {
            tokens.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) tokens.push_back(std::move(cur));
    return tokens;
}

inline std::string fold_case(std::string_view word) {
    std::string out(word);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

// Rule-listed suffix stemmer. Suffixes are tried in order, first match wins,
// applied once; a strip is rejected if the remaining stem would be shorter
// than min_stem_length. The order puts "s" before "es" so that plain plurals
// keep their final e ("fireplaces" -> "fireplace").
class Stemmer {
public:
    Stemmer(std::vector<std::string> suffixes, size_t min_stem_length)
        : suffixes_(std::move(suffixes)), min_stem_(min_stem_length) {}

    static Stemmer standard() {
        return Stemmer({"ing", "ed", "ly", "s", "es"}, 3);
    }

    const std::vector<std::string>& suffixes() const { return suffixes_; }
    size_t min_stem_length() const { return min_stem_; }

    std::string stem(std::string_view word) const {
        for (const auto& suf : suffixes_) {
            if (word.size() > suf.size() && word.size() - suf.size() >= min_stem_ &&
                word.substr(word.size() - suf.size()) == suf) {
                return std::string(word.substr(0, word.size() - suf.size()));
            }
        }
        return std::string(word);
    }

    std::vector<std::string> stems(std::string_view text) const {
        std::vector<std::string> out;
        for (const auto& tok : tokenize(text)) out.push_back(stem(tok));
        return out;
    }

private:
    std::vector<std::string> suffixes_;
    size_t min_stem_;
};

}  // namespace csteer
