#include <cstdint>
#include <iostream>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include <nlohmann/json.hpp>

#include "csteer/common.hpp"
#include "csteer/embed.hpp"
#include "csteer/external.hpp"
#include "csteer/guided.hpp"
#include "csteer/io.hpp"
#include "csteer/kb.hpp"
#include "csteer/metrics.hpp"
#include "csteer/model.hpp"
#include "csteer/neural.hpp"
#include "csteer/oracle.hpp"
#include "csteer/sampling.hpp"
#include "csteer/scorer.hpp"
#include "csteer/text.hpp"
#include "csteer/training.hpp"
#include "csteer/tuple.hpp"
#include "csteer/types.hpp"

namespace {

using namespace csteer;
using nlohmann::json;

// Layers config-file values under explicit command-line flags and rejects
// keys no flag claims.
class KeyedConfig {
public:
    void load(const std::string& path) {
        file_ = io::read_json_file(path);
        if (!file_.is_object()) throw InvalidInput("config file must hold a JSON object");
        loaded_ = true;
    }

    template <typename T>
    bool apply(const std::string& key, const CLI::Option* opt, T* slot) {
        known_.insert(key);
        bool on_cli = opt != nullptr && opt->count() > 0;
        bool in_file = loaded_ && file_.contains(key);
        if (!on_cli && in_file) {
            try {
                *slot = file_.at(key).get<T>();
            } catch (const json::exception&) {
                throw InvalidInput("config key '" + key + "' has the wrong type");
            }
        }
        return on_cli || in_file;
    }

    void finish() const {
        if (!loaded_) return;
        for (const auto& item : file_.items())
            if (!known_.count(item.key()))
                throw InvalidInput("unknown config key '" + item.key() + "'");
    }

private:
    json file_;
    bool loaded_ = false;
    std::set<std::string> known_;
};

void write_sidecar(const std::string& out_path, const json& resolved) {
    io::write_json_file(out_path + ".config.json", resolved);
}

struct SamplerFlags {
    double temperature = 1.0;
    double top_p = 1.0;
    int32_t top_k = 0;
    int32_t max_len = 16;
    int32_t n = 1;
    uint64_t seed = 0;
    CLI::Option* o_temperature = nullptr;
    CLI::Option* o_top_p = nullptr;
    CLI::Option* o_top_k = nullptr;
    CLI::Option* o_max_len = nullptr;
    CLI::Option* o_n = nullptr;
    CLI::Option* o_seed = nullptr;

    void add(CLI::App* cmd, int32_t default_n) {
        n = default_n;
        o_temperature = cmd->add_option("--temperature", temperature, "softmax temperature");
        o_top_p = cmd->add_option("--top-p", top_p, "nucleus probability mass");
        o_top_k = cmd->add_option("--top-k", top_k, "keep at most k tokens (0 keeps all)");
        o_max_len = cmd->add_option("--max-len", max_len, "maximum sequence length");
        o_n = cmd->add_option("--n", n, "samples per benchmark entry");
        o_seed = cmd->add_option("--seed", seed, "rng seed (required)");
    }

    void merge(KeyedConfig& c) {
        c.apply("temperature", o_temperature, &temperature);
        c.apply("top_p", o_top_p, &top_p);
        c.apply("top_k", o_top_k, &top_k);
        c.apply("max_len", o_max_len, &max_len);
        c.apply("n", o_n, &n);
        if (!c.apply("seed", o_seed, &seed))
            throw InvalidInput("--seed is required for this command");
        if (n < 1) throw InvalidInput("--n must be positive");
    }

    SamplerConfig config() const {
        SamplerConfig cfg{temperature, top_p, top_k, max_len, seed};
        cfg.validate();
        return cfg;
    }

    void echo(json& j) const {
        j["temperature"] = temperature;
        j["top_p"] = top_p;
        j["top_k"] = top_k;
        j["max_len"] = max_len;
        j["n"] = n;
        j["seed"] = seed;
    }
};

struct BuiltScorer {
    Stemmer stemmer = Stemmer::standard();
    std::shared_ptr<const CommonsenseScorer> cs;
    std::shared_ptr<const LexicalOracle> lex;
    std::shared_ptr<const SequenceOracle> graded;
};

struct ScorerFlags {
    std::string oracle = "cs";
    std::string kb_path;
    std::string kb_replay;
    std::string lexicon_path;
    std::string stemmer_path;
    std::string extractor = "rule";
    std::string extractor_replay;
    int32_t beam_k = 8;
    std::string aggregation = "mean";
    double empty_score = 0.5;
    CLI::Option* o_oracle = nullptr;
    CLI::Option* o_kb = nullptr;
    CLI::Option* o_kb_replay = nullptr;
    CLI::Option* o_lexicon = nullptr;
    CLI::Option* o_stemmer = nullptr;
    CLI::Option* o_extractor = nullptr;
    CLI::Option* o_extractor_replay = nullptr;
    CLI::Option* o_beam_k = nullptr;
    CLI::Option* o_aggregation = nullptr;
    CLI::Option* o_empty_score = nullptr;

    void add(CLI::App* cmd) {
        o_oracle = cmd->add_option("--oracle", oracle,
                                   "scoring oracle: cs, joint, lexical, const1");
        o_kb = cmd->add_option("--kb", kb_path, "knowledge base file");
        o_kb_replay = cmd->add_option("--kb-replay", kb_replay,
                                      "recorded kb client fixture file");
        o_lexicon = cmd->add_option("--lexicon", lexicon_path, "embedding lexicon file");
        o_stemmer = cmd->add_option("--stemmer", stemmer_path, "stemmer config file");
        o_extractor = cmd->add_option("--extractor", extractor, "tuple extractor: rule, replay");
        o_extractor_replay = cmd->add_option("--extractor-replay", extractor_replay,
                                             "recorded extractor fixture file");
        o_beam_k = cmd->add_option("--beam-k", beam_k, "kb tails per compat query");
        o_aggregation = cmd->add_option("--aggregation", aggregation,
                                        "tuple aggregation: min, mean");
        o_empty_score = cmd->add_option("--empty-score", empty_score,
                                        "score for sentences with no tuples");
    }

    void merge(KeyedConfig& c) {
        c.apply("oracle", o_oracle, &oracle);
        c.apply("kb", o_kb, &kb_path);
        c.apply("kb_replay", o_kb_replay, &kb_replay);
        c.apply("lexicon", o_lexicon, &lexicon_path);
        c.apply("stemmer", o_stemmer, &stemmer_path);
        c.apply("extractor", o_extractor, &extractor);
        c.apply("extractor_replay", o_extractor_replay, &extractor_replay);
        c.apply("beam_k", o_beam_k, &beam_k);
        c.apply("aggregation", o_aggregation, &aggregation);
        c.apply("empty_score", o_empty_score, &empty_score);
    }

    void echo(json& j) const {
        j["oracle"] = oracle;
        j["kb"] = kb_path;
        j["kb_replay"] = kb_replay;
        j["lexicon"] = lexicon_path;
        j["stemmer"] = stemmer_path;
        j["extractor"] = extractor;
        j["extractor_replay"] = extractor_replay;
        j["beam_k"] = beam_k;
        j["aggregation"] = aggregation;
        j["empty_score"] = empty_score;
    }

    BuiltScorer build() const {
        BuiltScorer out;
        if (!stemmer_path.empty()) out.stemmer = load_stemmer(stemmer_path);
        out.lex = std::make_shared<LexicalOracle>(out.stemmer);
        if (oracle == "lexical") {
            out.graded = out.lex;
            return out;
        }
        if (oracle == "const1") {
            out.graded = std::make_shared<ConstantOracle>(1.0);
            return out;
        }
        if (oracle != "cs" && oracle != "joint")
            throw InvalidInput("unknown oracle '" + oracle + "'");

        std::shared_ptr<const TupleExtractor> ext;
        if (extractor == "rule") {
            ext = std::make_shared<RuleBasedExtractor>();
        } else if (extractor == "replay") {
            if (extractor_replay.empty())
                throw InvalidInput("--extractor replay needs --extractor-replay");
            auto store = std::make_shared<ReplayStore>(load_replay(extractor_replay));
            ext = std::make_shared<ExternalExtractorClient>(make_replay_transport(store));
        } else {
            throw InvalidInput("unknown extractor '" + extractor + "'");
        }

        std::shared_ptr<const KnowledgeBase> kb;
        std::vector<KbRecord> kb_records;
        if (!kb_replay.empty()) {
            auto store = std::make_shared<ReplayStore>(load_replay(kb_replay));
            kb = std::make_shared<ExternalKbClient>(make_replay_transport(store));
        } else {
            if (kb_path.empty()) throw InvalidInput("scoring needs --kb or --kb-replay");
            kb_records = load_kb(kb_path);
            auto stat = std::make_shared<StaticKB>();
            for (const auto& r : kb_records) stat->add(r);
            kb = stat;
        }

        std::vector<std::string> lexicon;
        if (!lexicon_path.empty()) {
            lexicon = load_lexicon(lexicon_path);
        } else {
            if (kb_records.empty())
                throw InvalidInput("a replayed kb needs an explicit --lexicon");
            std::vector<std::string> texts;
            for (const auto& r : kb_records) {
                texts.push_back(r.head);
                texts.push_back(r.tail);
            }
            lexicon = build_lexicon(texts, out.stemmer);
        }
        auto emb = std::make_shared<BagOfStemsEmbedder>(lexicon, out.stemmer);

        ScorerConfig cfg;
        cfg.beam_k = beam_k;
        cfg.aggregation = aggregation_from_name(aggregation);
        cfg.empty_tuple_score = empty_score;
        out.cs = std::make_shared<CommonsenseScorer>(cfg, ext, kb, emb);
        out.graded = oracle == "joint"
                         ? std::shared_ptr<const SequenceOracle>(
                               std::make_shared<JointOracle>(out.lex, out.cs))
                         : out.cs;
        return out;
    }
};

// A predictor that returns the same value everywhere; guided sampling with it
// reproduces the base model exactly.
class ConstantPredictor : public ScorePredictor {
public:
    explicit ConstantPredictor(size_t vocab_size, double value = 1.0)
        : vocab_size_(vocab_size), value_(value) {}

    std::vector<double> r_values(const ConceptInput&, const std::vector<int32_t>&) const override {
        return std::vector<double>(vocab_size_, value_);
    }

    double r_empty(const ConceptInput&) const override { return value_; }

private:
    size_t vocab_size_;
    double value_;
};

std::shared_ptr<ToyModel> load_model(const std::string& path) {
    return std::make_shared<ToyModel>(ToyModel::from_json(io::read_json_file(path)));
}

int run_fit_toy(CLI::App* cmd) {
    struct FitOpts {
        std::string corpus, out, config, eos = kDefaultEosToken;
        int32_t order = 2;
        double alpha = 0.01;
        CLI::Option *o_corpus, *o_out, *o_order, *o_alpha, *o_eos;
    };
    auto opt = std::make_shared<FitOpts>();
    opt->o_corpus = cmd->add_option("--corpus", opt->corpus, "training corpus file");
    opt->o_out = cmd->add_option("--out", opt->out, "model output path");
    opt->o_order = cmd->add_option("--order", opt->order, "n-gram order (1, 2, or 3)");
    opt->o_alpha = cmd->add_option("--alpha", opt->alpha, "additive smoothing");
    opt->o_eos = cmd->add_option("--eos", opt->eos, "end-of-sequence token");
    cmd->add_option("--config", opt->config, "config file");

    cmd->callback([opt] {
        KeyedConfig kc;
        if (!opt->config.empty()) kc.load(opt->config);
        if (!kc.apply("corpus", opt->o_corpus, &opt->corpus)) throw InvalidInput("--corpus is required");
        if (!kc.apply("out", opt->o_out, &opt->out)) throw InvalidInput("--out is required");
        kc.apply("order", opt->o_order, &opt->order);
        kc.apply("alpha", opt->o_alpha, &opt->alpha);
        kc.apply("eos", opt->o_eos, &opt->eos);
        kc.finish();

        auto corpus = load_corpus(opt->corpus);
        if (corpus.empty()) throw InvalidInput("corpus is empty");
        Vocabulary vocab = build_vocabulary(corpus, opt->eos);
        ToyModel model(vocab, opt->order, opt->alpha);
        FitStats stats = model.fit(corpus);
        io::write_json_file(opt->out, model.to_json());
        std::cerr << "fit " << stats.records_used << " records, skipped " << stats.records_skipped
                  << ", contexts " << stats.contexts << "\n";

        double ppl = perplexity(model, corpus);
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.12g", ppl);
        std::cout << "vocabulary_size " << vocab.size() << "\n";
        std::cout << "perplexity " << buf << "\n";

        json resolved = {{"command", "fit-toy"}, {"corpus", opt->corpus}, {"out", opt->out},
                         {"order", opt->order},  {"alpha", opt->alpha},  {"eos", opt->eos}};
        write_sidecar(opt->out, resolved);
    });
    return 0;
}

int run_sample(CLI::App* cmd) {
    struct SampleOpts {
        std::string model, bench, out, config;
        SamplerFlags sampler;
        CLI::Option *o_model, *o_bench, *o_out;
    };
    auto opt = std::make_shared<SampleOpts>();
    opt->o_model = cmd->add_option("--model", opt->model, "model file");
    opt->o_bench = cmd->add_option("--bench", opt->bench, "benchmark file");
    opt->o_out = cmd->add_option("--out", opt->out, "samples output path");
    opt->sampler.add(cmd, 16);
    cmd->add_option("--config", opt->config, "config file");

    cmd->callback([opt] {
        KeyedConfig kc;
        if (!opt->config.empty()) kc.load(opt->config);
        if (!kc.apply("model", opt->o_model, &opt->model)) throw InvalidInput("--model is required");
        if (!kc.apply("bench", opt->o_bench, &opt->bench)) throw InvalidInput("--bench is required");
        if (!kc.apply("out", opt->o_out, &opt->out)) throw InvalidInput("--out is required");
        opt->sampler.merge(kc);
        kc.finish();

        GenerationSystem system;
        system.name = "base";
        system.model = load_model(opt->model);
        system.sampler = opt->sampler.config();
        system.samples_per_entry = opt->sampler.n;
        Benchmark bench = load_benchmark(opt->bench);
        auto rows = generate_outputs(system, bench);
        save_outputs(opt->out, rows);
        std::cerr << "wrote " << rows.size() << " samples\n";

        json resolved = {{"command", "sample"}, {"model", opt->model},
                         {"bench", opt->bench}, {"out", opt->out}};
        opt->sampler.echo(resolved);
        write_sidecar(opt->out, resolved);
    });
    return 0;
}

int run_score(CLI::App* cmd) {
    struct ScoreOpts {
        std::string in, out, config;
        ScorerFlags scorer;
        CLI::Option *o_in, *o_out;
    };
    auto opt = std::make_shared<ScoreOpts>();
    opt->o_in = cmd->add_option("--in", opt->in, "samples file");
    opt->o_out = cmd->add_option("--out", opt->out, "scored output path");
    opt->scorer.add(cmd);
    cmd->add_option("--config", opt->config, "config file");

    cmd->callback([opt] {
        KeyedConfig kc;
        if (!opt->config.empty()) kc.load(opt->config);
        if (!kc.apply("in", opt->o_in, &opt->in)) throw InvalidInput("--in is required");
        if (!kc.apply("out", opt->o_out, &opt->out)) throw InvalidInput("--out is required");
        opt->scorer.merge(kc);
        kc.finish();

        BuiltScorer built = opt->scorer.build();
        auto rows = load_outputs(opt->in);
        std::vector<ScoredRow> scored;
        scored.reserve(rows.size());
        for (auto& row : rows) {
            ScoredRow s;
            s.o_score = built.graded->score(row.x, row.text).value;
            s.row = std::move(row);
            scored.push_back(std::move(s));
        }
        save_scored(opt->out, scored);
        std::cerr << "scored " << scored.size() << " rows\n";

        json resolved = {{"command", "score"}, {"in", opt->in}, {"out", opt->out}};
        opt->scorer.echo(resolved);
        write_sidecar(opt->out, resolved);
    });
    return 0;
}

int run_train(CLI::App* cmd) {
    struct TrainOpts {
        std::string in, model, out, lexicon, stemmer, config;
        double lambda = 0.5, lr = 0.01;
        int32_t epochs = 10, hidden1 = 32, hidden2 = 24, max_len = 16;
        uint64_t seed = 0;
        CLI::Option *o_in, *o_model, *o_out, *o_lexicon, *o_stemmer;
        CLI::Option *o_lambda, *o_lr, *o_epochs, *o_hidden1, *o_hidden2, *o_max_len, *o_seed;
    };
    auto opt = std::make_shared<TrainOpts>();
    opt->o_in = cmd->add_option("--in", opt->in, "scored samples file");
    opt->o_model = cmd->add_option("--model", opt->model, "base model file");
    opt->o_out = cmd->add_option("--out", opt->out, "predictor output path");
    opt->o_lambda = cmd->add_option("--lambda", opt->lambda, "consistency loss weight");
    opt->o_lr = cmd->add_option("--lr", opt->lr, "learning rate");
    opt->o_epochs = cmd->add_option("--epochs", opt->epochs, "training epochs");
    opt->o_hidden1 = cmd->add_option("--hidden1", opt->hidden1, "first hidden width");
    opt->o_hidden2 = cmd->add_option("--hidden2", opt->hidden2, "second hidden width");
    opt->o_max_len = cmd->add_option("--max-len", opt->max_len, "length scale for features");
    opt->o_lexicon = cmd->add_option("--lexicon", opt->lexicon, "feature lexicon file");
    opt->o_stemmer = cmd->add_option("--stemmer", opt->stemmer, "stemmer config file");
    opt->o_seed = cmd->add_option("--seed", opt->seed, "init seed (required)");
    cmd->add_option("--config", opt->config, "config file");

    cmd->callback([opt] {
        KeyedConfig kc;
        if (!opt->config.empty()) kc.load(opt->config);
        if (!kc.apply("in", opt->o_in, &opt->in)) throw InvalidInput("--in is required");
        if (!kc.apply("model", opt->o_model, &opt->model)) throw InvalidInput("--model is required");
        if (!kc.apply("out", opt->o_out, &opt->out)) throw InvalidInput("--out is required");
        kc.apply("lambda", opt->o_lambda, &opt->lambda);
        kc.apply("lr", opt->o_lr, &opt->lr);
        kc.apply("epochs", opt->o_epochs, &opt->epochs);
        kc.apply("hidden1", opt->o_hidden1, &opt->hidden1);
        kc.apply("hidden2", opt->o_hidden2, &opt->hidden2);
        kc.apply("max_len", opt->o_max_len, &opt->max_len);
        kc.apply("lexicon", opt->o_lexicon, &opt->lexicon);
        kc.apply("stemmer", opt->o_stemmer, &opt->stemmer);
        if (!kc.apply("seed", opt->o_seed, &opt->seed))
            throw InvalidInput("--seed is required for this command");
        kc.finish();

        auto model = load_model(opt->model);
        auto scored = load_scored(opt->in);
        auto examples = scored_to_examples(scored, model->vocab());

        Stemmer stemmer = opt->stemmer.empty() ? Stemmer::standard()
                                               : load_stemmer(opt->stemmer);
        FeatureSpec spec;
        spec.max_len = opt->max_len;
        if (!opt->lexicon.empty()) {
            spec.lexicon = load_lexicon(opt->lexicon);
        } else {
            std::vector<std::string> texts;
            for (const auto& s : scored)
                for (const auto& c : s.row.x.concepts) texts.push_back(c);
            spec.lexicon = build_lexicon(texts, stemmer);
        }

        MlpPredictor predictor(model->vocab(), spec, opt->hidden1, opt->hidden2, opt->seed,
                               stemmer);
        TrainConfig cfg;
        cfg.lambda = opt->lambda;
        cfg.learning_rate = opt->lr;
        cfg.epochs = opt->epochs;
        cfg.seed = opt->seed;

        json resolved = {{"command", "train"},   {"in", opt->in},
                         {"model", opt->model},  {"out", opt->out},
                         {"lambda", opt->lambda}, {"lr", opt->lr},
                         {"epochs", opt->epochs}, {"hidden1", opt->hidden1},
                         {"hidden2", opt->hidden2}, {"max_len", opt->max_len},
                         {"lexicon", opt->lexicon}, {"stemmer", opt->stemmer},
                         {"seed", opt->seed}};

        TrainResult result = train(predictor, examples, *model, cfg);
        for (size_t e = 0; e < result.loss_trace.size(); ++e)
            std::cerr << "epoch " << e << " mean_loss " << result.loss_trace[e] << "\n";
        // The echo records how the predictor was trained; the output path is
        // not part of that, and keeping it out makes reruns byte-identical
        // regardless of destination.
        nlohmann::json echo = resolved;
        echo.erase("out");
        predictor.set_train_echo(echo);
        io::write_json_file(opt->out, predictor.to_json());

        char ce[64], reg[64];
        std::snprintf(ce, sizeof(ce), "%.12g", result.final_ce);
        std::snprintf(reg, sizeof(reg), "%.12g", result.final_reg);
        std::cout << "examples " << examples.size() << "\n";
        std::cout << "final_ce " << ce << "\n";
        std::cout << "final_reg " << reg << "\n";
        write_sidecar(opt->out, resolved);
    });
    return 0;
}

int run_decode(CLI::App* cmd) {
    struct DecodeOpts {
        std::string model, predictor, bench, out, config;
        uint64_t budget = kDefaultEnumerationBudget;
        SamplerFlags sampler;
        ScorerFlags scorer;
        CLI::Option *o_model, *o_predictor, *o_bench, *o_out, *o_budget;
    };
    auto opt = std::make_shared<DecodeOpts>();
    opt->o_model = cmd->add_option("--model", opt->model, "base model file");
    opt->o_predictor = cmd->add_option("--predictor", opt->predictor,
                                       "predictor file, or 'exact' / 'const'");
    opt->o_bench = cmd->add_option("--bench", opt->bench, "benchmark file");
    opt->o_out = cmd->add_option("--out", opt->out, "decoded output path");
    opt->o_budget = cmd->add_option("--budget", opt->budget,
                                    "enumeration budget for the exact predictor");
    opt->sampler.add(cmd, 1);
    opt->scorer.add(cmd);
    cmd->add_option("--config", opt->config, "config file");

    cmd->callback([opt] {
        KeyedConfig kc;
        if (!opt->config.empty()) kc.load(opt->config);
        if (!kc.apply("model", opt->o_model, &opt->model)) throw InvalidInput("--model is required");
        if (!kc.apply("predictor", opt->o_predictor, &opt->predictor))
            throw InvalidInput("--predictor is required");
        if (!kc.apply("bench", opt->o_bench, &opt->bench)) throw InvalidInput("--bench is required");
        if (!kc.apply("out", opt->o_out, &opt->out)) throw InvalidInput("--out is required");
        kc.apply("budget", opt->o_budget, &opt->budget);
        opt->sampler.merge(kc);
        opt->scorer.merge(kc);
        kc.finish();

        auto model = load_model(opt->model);
        std::shared_ptr<const ScorePredictor> predictor;
        if (opt->predictor == "exact") {
            BuiltScorer built = opt->scorer.build();
            predictor = std::make_shared<ExactPredictor>(model, built.graded,
                                                         opt->sampler.max_len, opt->budget);
        } else if (opt->predictor == "const") {
            predictor = std::make_shared<ConstantPredictor>(model->vocab().size());
        } else {
            predictor = std::make_shared<MlpPredictor>(
                MlpPredictor::from_json(io::read_json_file(opt->predictor)));
        }
        auto guided = std::make_shared<GuidedModel>(model, predictor);

        GenerationSystem system;
        system.name = "guided";
        system.model = guided;
        system.sampler = opt->sampler.config();
        system.samples_per_entry = opt->sampler.n;
        Benchmark bench = load_benchmark(opt->bench);
        auto rows = generate_outputs(system, bench);
        save_outputs(opt->out, rows);
        std::cerr << "wrote " << rows.size() << " sequences, base fallback on "
                  << guided->fallback_count() << " steps\n";

        json resolved = {{"command", "decode"},       {"model", opt->model},
                         {"predictor", opt->predictor}, {"bench", opt->bench},
                         {"out", opt->out},           {"budget", opt->budget}};
        opt->sampler.echo(resolved);
        opt->scorer.echo(resolved);
        write_sidecar(opt->out, resolved);
    });
    return 0;
}

int run_eval(CLI::App* cmd) {
    struct EvalOpts {
        std::string in, bench, out, system = "system", config;
        ScorerFlags scorer;
        CLI::Option *o_in, *o_bench, *o_out, *o_system;
    };
    auto opt = std::make_shared<EvalOpts>();
    opt->o_in = cmd->add_option("--in", opt->in, "generated outputs file");
    opt->o_bench = cmd->add_option("--bench", opt->bench, "benchmark file");
    opt->o_out = cmd->add_option("--out", opt->out, "report output path");
    opt->o_system = cmd->add_option("--system", opt->system, "system name for the report");
    opt->scorer.add(cmd);
    cmd->add_option("--config", opt->config, "config file");

    cmd->callback([opt] {
        KeyedConfig kc;
        if (!opt->config.empty()) kc.load(opt->config);
        if (!kc.apply("in", opt->o_in, &opt->in)) throw InvalidInput("--in is required");
        if (!kc.apply("bench", opt->o_bench, &opt->bench)) throw InvalidInput("--bench is required");
        if (!kc.apply("out", opt->o_out, &opt->out)) throw InvalidInput("--out is required");
        kc.apply("system", opt->o_system, &opt->system);
        opt->scorer.merge(kc);
        kc.finish();

        json resolved = {{"command", "eval"},
                         {"in", opt->in},
                         {"bench", opt->bench},
                         {"out", opt->out},
                         {"system", opt->system}};
        opt->scorer.echo(resolved);

        BuiltScorer built = opt->scorer.build();
        Benchmark bench = load_benchmark(opt->bench);
        auto rows = load_outputs(opt->in);
        EvalResult result = evaluate_outputs(rows, bench, *built.graded, *built.lex, opt->system,
                                             resolved);
        io::write_json_file(opt->out, result.report.to_json());
        save_entry_metrics(opt->out + ".entries.jsonl", result.rows);
        std::cerr << "evaluated " << result.rows.size() << " outputs\n";

        char mo[64], mc[64];
        std::snprintf(mo, sizeof(mo), "%.12g", result.report.mean_o);
        std::snprintf(mc, sizeof(mc), "%.12g", result.report.mean_coverage);
        std::cout << "mean_o " << mo << "\n";
        std::cout << "mean_coverage " << mc << "\n";
        if (result.report.mean_bleu) {
            char mb[64];
            std::snprintf(mb, sizeof(mb), "%.12g", *result.report.mean_bleu);
            std::cout << "mean_bleu4 " << mb << "\n";
        }
        write_sidecar(opt->out, resolved);
    });
    return 0;
}

int run_extract(CLI::App* cmd) {
    struct ExtractOpts {
        std::string sentence, in, out, extractor = "rule", extractor_replay, config;
        CLI::Option *o_sentence, *o_in, *o_out, *o_extractor, *o_replay;
    };
    auto opt = std::make_shared<ExtractOpts>();
    opt->o_sentence = cmd->add_option("--sentence", opt->sentence, "single sentence to extract");
    opt->o_in = cmd->add_option("--in", opt->in, "sentences file");
    opt->o_out = cmd->add_option("--out", opt->out, "tuples output path (stdout when absent)");
    opt->o_extractor = cmd->add_option("--extractor", opt->extractor,
                                       "tuple extractor: rule, replay");
    opt->o_replay = cmd->add_option("--extractor-replay", opt->extractor_replay,
                                    "recorded extractor fixture file");
    cmd->add_option("--config", opt->config, "config file");

    cmd->callback([opt] {
        KeyedConfig kc;
        if (!opt->config.empty()) kc.load(opt->config);
        kc.apply("sentence", opt->o_sentence, &opt->sentence);
        kc.apply("in", opt->o_in, &opt->in);
        kc.apply("out", opt->o_out, &opt->out);
        kc.apply("extractor", opt->o_extractor, &opt->extractor);
        kc.apply("extractor_replay", opt->o_replay, &opt->extractor_replay);
        kc.finish();

        std::vector<std::string> sentences;
        if (!opt->sentence.empty()) sentences.push_back(opt->sentence);
        if (!opt->in.empty())
            for (auto& s : load_sentences(opt->in)) sentences.push_back(std::move(s));
        if (sentences.empty()) throw InvalidInput("extract needs --sentence or --in");

        std::shared_ptr<const TupleExtractor> ext;
        if (opt->extractor == "rule") {
            ext = std::make_shared<RuleBasedExtractor>();
        } else if (opt->extractor == "replay") {
            if (opt->extractor_replay.empty())
                throw InvalidInput("--extractor replay needs --extractor-replay");
            auto store = std::make_shared<ReplayStore>(load_replay(opt->extractor_replay));
            ext = std::make_shared<ExternalExtractorClient>(make_replay_transport(store));
        } else {
            throw InvalidInput("unknown extractor '" + opt->extractor + "'");
        }

        std::vector<SentenceTuples> rows;
        for (const auto& s : sentences) {
            SentenceTuples row;
            row.sentence = s;
            row.tuples = ext->extract(s);
            rows.push_back(std::move(row));
        }

        if (opt->out.empty()) {
            for (const auto& row : rows) {
                json j = {{"sentence", row.sentence}, {"tuples", json::array()}};
                for (const auto& t : row.tuples) j["tuples"].push_back(tuple_to_json(t));
                std::cout << j.dump() << "\n";
            }
        } else {
            save_sentence_tuples(opt->out, rows, kTuplesSchema);
            std::cerr << "wrote " << rows.size() << " rows\n";
            json resolved = {{"command", "extract"},
                             {"sentence", opt->sentence},
                             {"in", opt->in},
                             {"out", opt->out},
                             {"extractor", opt->extractor},
                             {"extractor_replay", opt->extractor_replay}};
            write_sidecar(opt->out, resolved);
        }
    });
    return 0;
}

int run_kb_query(CLI::App* cmd) {
    struct KbQueryOpts {
        std::string head, relation, kb, kb_replay, out, config;
        int32_t k = 8;
        CLI::Option *o_head, *o_relation, *o_kb, *o_kb_replay, *o_out, *o_k;
    };
    auto opt = std::make_shared<KbQueryOpts>();
    opt->o_head = cmd->add_option("--head", opt->head, "query head");
    opt->o_relation = cmd->add_option("--relation", opt->relation, "query relation");
    opt->o_k = cmd->add_option("--k", opt->k, "max tails");
    opt->o_kb = cmd->add_option("--kb", opt->kb, "knowledge base file");
    opt->o_kb_replay = cmd->add_option("--kb-replay", opt->kb_replay,
                                       "recorded kb client fixture file");
    opt->o_out = cmd->add_option("--out", opt->out, "result output path (stdout when absent)");
    cmd->add_option("--config", opt->config, "config file");

    cmd->callback([opt] {
        KeyedConfig kc;
        if (!opt->config.empty()) kc.load(opt->config);
        if (!kc.apply("head", opt->o_head, &opt->head)) throw InvalidInput("--head is required");
        if (!kc.apply("relation", opt->o_relation, &opt->relation))
            throw InvalidInput("--relation is required");
        kc.apply("k", opt->o_k, &opt->k);
        kc.apply("kb", opt->o_kb, &opt->kb);
        kc.apply("kb_replay", opt->o_kb_replay, &opt->kb_replay);
        kc.apply("out", opt->o_out, &opt->out);
        kc.finish();

        std::shared_ptr<const KnowledgeBase> kb;
        if (!opt->kb_replay.empty()) {
            auto store = std::make_shared<ReplayStore>(load_replay(opt->kb_replay));
            kb = std::make_shared<ExternalKbClient>(make_replay_transport(store));
        } else {
            if (opt->kb.empty()) throw InvalidInput("kb-query needs --kb or --kb-replay");
            auto stat = std::make_shared<StaticKB>();
            for (const auto& r : load_kb(opt->kb)) stat->add(r);
            kb = stat;
        }

        RelationType rel = relation_from_name(opt->relation);
        auto tails = kb->tails(opt->head, rel, opt->k);
        json j = {{"schema", "csteer-kb-result"},
                  {"version", 1},
                  {"head", opt->head},
                  {"relation", relation_name(rel)},
                  {"k", opt->k},
                  {"tails", tails}};
        if (opt->out.empty()) {
            std::cout << j.dump() << "\n";
        } else {
            io::write_json_file(opt->out, j);
            json resolved = {{"command", "kb-query"}, {"head", opt->head},
                             {"relation", opt->relation}, {"k", opt->k},
                             {"kb", opt->kb},           {"kb_replay", opt->kb_replay},
                             {"out", opt->out}};
            write_sidecar(opt->out, resolved);
        }
    });
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"controllable generation pipeline: fit, sample, score, train, decode, evaluate"};
    app.require_subcommand(1);

    run_fit_toy(app.add_subcommand("fit-toy", "fit an n-gram toy model on a corpus"));
    run_sample(app.add_subcommand("sample", "draw base-model samples for a benchmark"));
    run_score(app.add_subcommand("score", "attach oracle scores to samples"));
    run_train(app.add_subcommand("train", "train an expected-score predictor on scored samples"));
    run_decode(app.add_subcommand("decode", "sample from the predictor-guided model"));
    run_eval(app.add_subcommand("eval", "score generated outputs against a benchmark"));
    run_extract(app.add_subcommand("extract", "extract relation tuples from sentences"));
    run_kb_query(app.add_subcommand("kb-query", "look up knowledge-base tails"));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const csteer::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
