#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "csteer/common.hpp"
#include "csteer/embed.hpp"
#include "csteer/kb.hpp"
#include "csteer/metrics.hpp"
#include "csteer/model.hpp"
#include "csteer/rng.hpp"
#include "csteer/scorer.hpp"
#include "csteer/text.hpp"
#include "csteer/tuple.hpp"
#include "csteer/types.hpp"

namespace csteer {

// A synthetic concept-to-sentence world: a fixed fact table says which
// tuples are sensical; the generated corpus mixes faithful sentences with
// corrupted and partial ones, so a model fit on it produces a controllable
// blend of sense, nonsense, and dropped constraints.
struct ToyWorldConfig {
    uint64_t seed = 7;
    size_t scenes = 100;
    size_t sentences_per_scene = 30;
    size_t bench_entries = 48;
    size_t bench_with_refs = 40;
    size_t gold_scenes = 20;
    int32_t max_len = 20;

    void validate() const {
        if (scenes < 1 || sentences_per_scene < 12) throw InvalidInput("toy world too small");
        if (bench_entries > scenes) throw InvalidInput("more bench entries than scenes");
        if (bench_with_refs > bench_entries) throw InvalidInput("more ref entries than bench entries");
        if (gold_scenes > scenes) throw InvalidInput("more gold scenes than scenes");
    }
};

struct ToyWorld {
    std::vector<CorpusRecord> corpus;
    std::vector<KbRecord> kb;
    Benchmark bench;
    std::vector<SentenceTuples> gold;
    std::vector<std::string> lexicon;  // content stems for embedding and features
    int32_t max_len = 20;
};

namespace toyworld_detail {

struct Fact {
    const char* head;
    RelationType relation;
    const char* tail;
};

inline const std::vector<Fact>& fact_table() {
    static const std::vector<Fact> facts = {
        {"dog", RelationType::CapableOf, "bark at strangers"},
        {"dog", RelationType::CapableOf, "fetch the stick"},
        {"cat", RelationType::CapableOf, "chase the mouse"},
        {"cat", RelationType::CapableOf, "climb the tree"},
        {"ant", RelationType::CapableOf, "carry heavy loads"},
        {"ant", RelationType::CapableOf, "crawl on the ground"},
        {"fox", RelationType::CapableOf, "hunt in the forest"},
        {"fox", RelationType::CapableOf, "jump over the fence"},
        {"bird", RelationType::CapableOf, "sing in the morning"},
        {"bird", RelationType::CapableOf, "fly over the lake"},
        {"fish", RelationType::CapableOf, "swim in the river"},
        {"horse", RelationType::CapableOf, "pull the cart"},
        {"horse", RelationType::CapableOf, "run in the field"},
        {"sheep", RelationType::CapableOf, "graze in the meadow"},
        {"hammer", RelationType::UsedFor, "driving nails"},
        {"hammer", RelationType::UsedFor, "building the shed"},
        {"broom", RelationType::UsedFor, "sweeping the floor"},
        {"kettle", RelationType::UsedFor, "boiling water"},
        {"spoon", RelationType::UsedFor, "stirring the soup"},
        {"saw", RelationType::UsedFor, "cutting wood"},
        {"needle", RelationType::UsedFor, "mending clothes"},
        {"dog", RelationType::AtLocation, "kennel"},
        {"dog", RelationType::AtLocation, "garden"},
        {"cat", RelationType::AtLocation, "barn"},
        {"hammer", RelationType::AtLocation, "toolbox"},
        {"kettle", RelationType::AtLocation, "kitchen"},
        {"horse", RelationType::AtLocation, "stable"},
        {"fish", RelationType::AtLocation, "pond"},
        {"broom", RelationType::AtLocation, "closet"},
        {"wheel", RelationType::PartOf, "wagon"},
        {"handle", RelationType::PartOf, "broom"},
        {"blade", RelationType::PartOf, "saw"},
        {"roof", RelationType::PartOf, "barn"},
        {"door", RelationType::PartOf, "kennel"},
    };
    return facts;
}

inline const std::set<std::string>& function_words() {
    static const std::set<std::string> words = {"the", "a",   "an",  "in",   "on",  "at", "of",
                                                "for", "to",  "is",  "can",  "and", "used",
                                                "over", "with"};
    return words;
}

inline std::string clause_text(const std::string& head, RelationType relation,
                               const std::string& tail) {
    switch (relation) {
        case RelationType::CapableOf: return "the " + head + " can " + tail;
        case RelationType::UsedFor: return "the " + head + " is used for " + tail;
        case RelationType::AtLocation: return "the " + head + " is in the " + tail;
        case RelationType::PartOf: return "the " + head + " is part of the " + tail;
    }
    throw ContractViolation("unknown relation");
}

inline std::string concept_key(const std::string& tail) {
    auto words = tokenize(tail);
    return words.back();
}

struct Clause {
    std::string head;
    RelationType relation;
    std::string tail;
    bool sensical = true;

    std::string text() const { return clause_text(head, relation, tail); }
    Tuple tuple() const { return Tuple(head, relation, tail); }
};

struct Scene {
    Clause a, b;               // the two sensical facts
    ConceptInput concepts;     // {head_a, key_a, head_b, key_b}
};

}  // namespace toyworld_detail

inline ToyWorld make_toy_world(const ToyWorldConfig& cfg = {}) {
    using namespace toyworld_detail;
    cfg.validate();
    const auto& facts = fact_table();
    const Stemmer stemmer = Stemmer::standard();
    Xoshiro256ss rng(cfg.seed);

    ToyWorld world;
    world.max_len = cfg.max_len;
    for (const auto& f : facts) world.kb.push_back({f.head, f.relation, f.tail, 1.0});

    std::set<std::string> lex;
    for (const auto& f : facts) {
        for (const auto& w : tokenize(f.head))
            if (!function_words().count(w)) lex.insert(stemmer.stem(w));
        for (const auto& w : tokenize(f.tail))
            if (!function_words().count(w)) lex.insert(stemmer.stem(w));
    }
    world.lexicon.assign(lex.begin(), lex.end());

    auto clause_stems = [&](const Clause& c) {
        std::set<std::string> out;
        for (const auto& w : tokenize(c.text()))
            if (!function_words().count(w)) out.insert(stemmer.stem(w));
        return out;
    };

    // Scene = two facts with distinct heads whose concept words stay inside
    // their own clause, so partial sentences have exact coverage.
    auto try_scene = [&](size_t i, size_t j, Scene& out) -> bool {
        const auto& fa = facts[i];
        const auto& fb = facts[j];
        if (std::string(fa.head) == fb.head) return false;
        Clause a{fa.head, fa.relation, fa.tail, true};
        Clause b{fb.head, fb.relation, fb.tail, true};
        std::vector<std::string> concepts = {a.head, concept_key(a.tail), b.head,
                                             concept_key(b.tail)};
        std::set<std::string> seen;
        for (const auto& c : concepts)
            if (!seen.insert(stemmer.stem(c)).second) return false;
        auto sa = clause_stems(a);
        auto sb = clause_stems(b);
        if (sb.count(stemmer.stem(concepts[0])) || sb.count(stemmer.stem(concepts[1]))) return false;
        if (sa.count(stemmer.stem(concepts[2])) || sa.count(stemmer.stem(concepts[3]))) return false;
        out.a = a;
        out.b = b;
        out.concepts.concepts = concepts;
        return true;
    };

    std::vector<Scene> scenes;
    std::set<std::pair<size_t, size_t>> used_pairs;
    size_t guard = 0;
    while (scenes.size() < cfg.scenes) {
        if (++guard > cfg.scenes * 1000) throw ContractViolation("scene sampling stalled");
        size_t i = static_cast<size_t>(rng.below(facts.size()));
        size_t j = static_cast<size_t>(rng.below(facts.size()));
        if (i == j || used_pairs.count({i, j})) continue;
        Scene s;
        if (!try_scene(i, j, s)) continue;
        used_pairs.insert({i, j});
        scenes.push_back(std::move(s));
    }

    // Corrupted clause: same head and relation, a tail stolen from another
    // head, chosen so the displaced concept word really disappears.
    auto corrupt = [&](const Clause& c, const std::string& own_key) -> Clause {
        std::string key_stem = stemmer.stem(own_key);
        for (size_t tries = 0; tries < 1000; ++tries) {
            const auto& f = facts[static_cast<size_t>(rng.below(facts.size()))];
            if (f.relation != c.relation || std::string(f.head) == c.head) continue;
            bool clashes = false;
            for (const auto& w : tokenize(f.tail))
                if (stemmer.stem(w) == key_stem) clashes = true;
            if (clashes) continue;
            return {c.head, c.relation, f.tail, false};
        }
        throw ContractViolation("no corruption candidate found");
    };

    auto sentence = [](const Clause& first, const Clause* second) {
        std::string text = first.text();
        if (second) text += " and " + second->text();
        return text;
    };

    for (size_t si = 0; si < scenes.size(); ++si) {
        const Scene& sc = scenes[si];
        const std::string key_a = concept_key(sc.a.tail);
        const std::string key_b = concept_key(sc.b.tail);
        std::vector<std::pair<std::string, std::vector<Tuple>>> generated;
        for (size_t t = 0; t < cfg.sentences_per_scene; ++t) {
            size_t kind = t * 30 / cfg.sentences_per_scene;
            Clause first = sc.a, second = sc.b;
            bool two_clauses = true;
            if (kind < 5) {
                // faithful, clause order a,b
            } else if (kind < 8) {
                first = sc.b;
                second = sc.a;
            } else if (kind < 10) {
                two_clauses = false;
            } else if (kind < 12) {
                first = sc.b;
                two_clauses = false;
            } else if (kind < 18) {
                second = corrupt(sc.b, key_b);
            } else if (kind < 24) {
                first = corrupt(sc.a, key_a);
            } else {
                first = corrupt(sc.a, key_a);
                second = corrupt(sc.b, key_b);
            }
            std::vector<Tuple> tuples = {first.tuple()};
            if (two_clauses) tuples.push_back(second.tuple());
            generated.emplace_back(sentence(first, two_clauses ? &second : nullptr),
                                   std::move(tuples));
        }

        for (auto& [text, tuples] : generated) {
            CorpusRecord rec;
            rec.x = sc.concepts;
            rec.text = text;
            world.corpus.push_back(std::move(rec));
        }
        if (si < cfg.gold_scenes) {
            for (size_t t : {size_t{0}, size_t{8}, size_t{12}}) {
                SentenceTuples g;
                g.sentence = generated[t].first;
                g.tuples = generated[t].second;
                world.gold.push_back(std::move(g));
            }
        }
        if (si < cfg.bench_entries) {
            BenchEntry entry;
            entry.x = sc.concepts;
            if (si < cfg.bench_with_refs) {
                entry.references.push_back(sentence(sc.a, &sc.b));
                entry.references.push_back(sentence(sc.b, &sc.a));
            }
            world.bench.entries.push_back(std::move(entry));
        }
    }
    world.bench.validate();
    return world;
}

}  // namespace csteer
