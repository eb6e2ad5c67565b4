#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "csteer/common.hpp"
#include "csteer/kb.hpp"
#include "csteer/tuple.hpp"

namespace csteer {

// A request/response channel to an external text service. Implementations
// may hit a network, replay recorded fixtures, or wrap a fake.
using Transport = std::function<std::string(std::string_view request)>;

// Recorded request/response fixtures keyed by the 64-bit request hash.
class ReplayStore {
public:
    struct Entry {
        uint64_t key;
        std::string request;  // kept for inspection; the key alone drives lookup
        std::string response;
    };

    static uint64_t key_of(std::string_view request) { return fnv1a64(request); }

    void add(std::string_view request, std::string_view response) {
        entries_[key_of(request)] = {key_of(request), std::string(request), std::string(response)};
    }

    void add_raw(uint64_t key, std::string request, std::string response) {
        entries_[key] = {key, std::move(request), std::move(response)};
    }

    std::optional<std::string> response_for(std::string_view request) const {
        auto it = entries_.find(key_of(request));
        if (it == entries_.end()) return std::nullopt;
        return it->second.response;
    }

    size_t size() const { return entries_.size(); }

    std::vector<Entry> entries() const {
        std::vector<Entry> out;
        out.reserve(entries_.size());
        for (const auto& [k, e] : entries_) out.push_back(e);
        return out;
    }

private:
    std::map<uint64_t, Entry> entries_;
};

// Serves recorded responses only; an unrecorded request is a transport
// failure (retryable against a live service, not against a fixture file).
inline Transport make_replay_transport(std::shared_ptr<const ReplayStore> store) {
    if (!store) throw InvalidInput("replay transport needs a store");
    return [store](std::string_view request) -> std::string {
        auto response = store->response_for(request);
        if (!response)
            throw TransportError("no recorded response for request key " +
                                 to_hex16(ReplayStore::key_of(request)));
        return *response;
    };
}

// Passes requests through and records every exchange for later replay.
inline Transport make_recording_transport(Transport inner, std::shared_ptr<ReplayStore> store) {
    if (!inner || !store) throw InvalidInput("recording transport needs an inner transport and store");
    return [inner = std::move(inner), store](std::string_view request) -> std::string {
        std::string response = inner(request);
        store->add(request, response);
        return response;
    };
}

// Few-shot instruction block sent ahead of every extraction request. The
// service answers with one labeled line per relation, "None" or a list of
// "(head, tail)" pairs.
inline constexpr const char* kTupleExtractionPrompt =
    "<-- Instruction: -->\n"
    "Extract tuples (A, B) from the sentence for the relations based on the description below.\n"
    "Do not infer anything. Only extract tuples that explicitly mentioned in the sentence.\n"
    "Put None if there are no tuples to extract.\n"
    "\n"
    "IsUsedFor: A (an object) is used to do B (a goal).\n"
    "AtLocation: A is at the location or larger area B.\n"
    "CapableOf: A (a living) is capable of doing B (an event)\n"
    "PartOf: A is part of B.\n"
    "\n"
    "\n"
    "<-- Examples: -->\n"
    "The runner ran because he wanted to win the car race.\n"
    "IsUsedFor: None\n"
    "AtLocation: None\n"
    "CapableOf: (runner, run), (runner, win the car race)\n"
    "PartOf: None\n"
    "\n"
    "The small plates add dimension and depth to this dish of baked zucchinis and carrots.\n"
    "IsUsedFor: (small plates, adding dimension to this dish)\n"
    "AtLocation: None\n"
    "CapableOf: None\n"
    "PartOf: (baked zucchini, dish), (carrot, dish)\n"
    "\n"
    "The grinning boy put his foot into the sock to dress himself.\n"
    "IsUsedFor: None\n"
    "AtLocation: (foot, sock)\n"
    "CapableOf: (boy, grin), (grinning boy, put his foot into the sock)\n"
    "PartOf: (foot, grinning boy)\n"
    "\n"
    "The judges give high scores to the woman wearing a long dress who sings beautifully into a "
    "microphone on the stage.\n"
    "IsUsedFor: (microphone, singing)\n"
    "AtLocation: (woman, stage), (microphone, stage), (long dress, stage)\n"
    "CapableOf: (judges, give high scores), (woman, wear a long dress), (woman, sing beautifully)\n"
    "PartOf: None\n"
    "\n"
    "A man is kicking a soccer ball with his head.\n"
    "IsUsedFor: None\n"
    "AtLocation: None\n"
    "CapableOf: (man, kick a soccer ball with his head)\n"
    "PartOf: (head, man)\n"
    "\n"
    "I used a chisel and hammer to carve a piece of wood.\n"
    "IsUsedFor: (chisel, carving a piece of wood), (hammer, carving a piece of wood)\n"
    "AtLocation: None\n"
    "CapableOf: (I, carve a piece of wood), (I, use chisel), (I, use hammer)\n"
    "PartOf: None\n"
    "\n"
    "Spewing volcano with waterfalls flowing results in an idyllic uncontaminated environment at "
    "summer in the mountains.\n"
    "IsUsedFor: None\n"
    "AtLocation: (volcano, mountains), (waterfalls, mountains)\n"
    "CapableOf: (volcano, spew), (waterfall, flow)\n"
    "PartOf: (waterfall, spewing volcano), (idyllic uncontaminated environment, mountains)\n"
    "\n"
    "A fan argues with stewards after being told to leave the pitch.\n"
    "IsUsedFor: None\n"
    "AtLocation: (fan, pitch), (stewards, pitch)\n"
    "CapableOf: (fan, argue with stewards), (stewards, tell fans to leave pitch)\n"
    "PartOf: None\n"
    "\n"
    "The soldier is driving the smiling tank across the bridge to save people.\n"
    "IsUsedFor: (tank, driving)\n"
    "AtLocation: (soldier, across the bridge), (tank, across the bridge)\n"
    "CapableOf: (soldier, drive the tank), (tank, smile)\n"
    "PartOf: None\n";

inline std::string build_extraction_request(std::string_view sentence) {
    if (sentence.empty()) throw InvalidInput("cannot extract from an empty sentence");
    std::string req(kTupleExtractionPrompt);
    req += "\n";
    req += sentence;
    req += "\n";
    return req;
}

namespace detail {

struct ResponseLabel {
    const char* label;
    RelationType relation;
};

inline constexpr ResponseLabel kResponseLabels[] = {
    {"IsUsedFor", RelationType::UsedFor},
    {"AtLocation", RelationType::AtLocation},
    {"CapableOf", RelationType::CapableOf},
    {"PartOf", RelationType::PartOf},
};

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline void parse_pair_list(std::string_view body, RelationType relation, std::vector<Tuple>& out) {
    size_t pos = 0;
    while ((pos = body.find('(', pos)) != std::string_view::npos) {
        size_t close = body.find(')', pos);
        if (close == std::string_view::npos)
            throw ParseError("unclosed tuple pair in extraction response");
        std::string_view inner = body.substr(pos + 1, close - pos - 1);
        size_t comma = inner.find(',');
        if (comma == std::string_view::npos)
            throw ParseError("tuple pair without a comma in extraction response");
        std::string head(trim(inner.substr(0, comma)));
        std::string tail(trim(inner.substr(comma + 1)));
        if (head.empty() || tail.empty())
            throw ParseError("empty head or tail in extraction response");
        out.emplace_back(std::move(head), relation, std::move(tail));
        pos = close + 1;
    }
}

}  // namespace detail

// Parses the four labeled relation lines; tuples come back in label order,
// left to right within a line. Every relation line must be present.
inline std::vector<Tuple> parse_extraction_response(std::string_view response) {
    std::map<std::string, std::string> found;
    size_t start = 0;
    while (start <= response.size()) {
        size_t end = response.find('\n', start);
        if (end == std::string_view::npos) end = response.size();
        std::string_view line = detail::trim(response.substr(start, end - start));
        start = end + 1;
        size_t colon = line.find(':');
        if (colon == std::string_view::npos) continue;
        std::string label(detail::trim(line.substr(0, colon)));
        for (const auto& rl : detail::kResponseLabels) {
            if (label == rl.label) {
                if (found.count(label))
                    throw ParseError("duplicate relation line in extraction response: " + label);
                found[label] = std::string(detail::trim(line.substr(colon + 1)));
            }
        }
    }
    std::vector<Tuple> out;
    for (const auto& rl : detail::kResponseLabels) {
        auto it = found.find(rl.label);
        if (it == found.end())
            throw ParseError(std::string("extraction response is missing the ") + rl.label + " line");
        if (it->second != "None") detail::parse_pair_list(it->second, rl.relation, out);
    }
    return out;
}

// Tuple extraction over a transport; request = few-shot prompt + sentence.
class ExternalExtractorClient : public TupleExtractor {
public:
    explicit ExternalExtractorClient(Transport transport) : transport_(std::move(transport)) {
        if (!transport_) throw InvalidInput("extractor client needs a transport");
    }

    std::vector<Tuple> extract(std::string_view sentence) const override {
        return parse_extraction_response(transport_(build_extraction_request(sentence)));
    }

private:
    Transport transport_;
};

inline std::string build_kb_request(std::string_view head, RelationType relation, int32_t k) {
    if (k < 1) throw InvalidInput("kb query needs k >= 1");
    nlohmann::json j = {{"head", std::string(head)}, {"k", k}, {"relation", relation_name(relation)}};
    return j.dump();
}

// Knowledge-base queries over a transport; response is a JSON array of at
// most k tail strings, best first.
class ExternalKbClient : public KnowledgeBase {
public:
    explicit ExternalKbClient(Transport transport) : transport_(std::move(transport)) {
        if (!transport_) throw InvalidInput("kb client needs a transport");
    }

    std::vector<std::string> tails(std::string_view head, RelationType relation,
                                   int32_t k) const override {
        std::string response = transport_(build_kb_request(head, relation, k));
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(response);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(std::string("bad kb response: ") + e.what());
        }
        if (!j.is_array()) throw ParseError("kb response must be a JSON array");
        if (static_cast<int32_t>(j.size()) > k)
            throw ParseError("kb response has more tails than requested");
        std::vector<std::string> out;
        for (const auto& e : j) {
            if (!e.is_string()) throw ParseError("kb response tails must be strings");
            out.push_back(e.get<std::string>());
        }
        return out;
    }

private:
    Transport transport_;
};

}  // namespace csteer
