#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "csteer/io.hpp"
#include "csteer/text.hpp"
#include "csteer/toyworld.hpp"

int main(int argc, char** argv) {
    CLI::App app{"generate the synthetic concept-to-sentence world"};
    std::string out_dir = "toyworld";
    csteer::ToyWorldConfig cfg;
    app.add_option("--out-dir", out_dir, "output directory");
    app.add_option("--seed", cfg.seed, "world seed");
    app.add_option("--scenes", cfg.scenes, "number of concept sets");
    app.add_option("--sentences-per-scene", cfg.sentences_per_scene, "corpus sentences per set");

    try {
        app.parse(argc, argv);
        std::filesystem::create_directories(out_dir);
        csteer::ToyWorld world = csteer::make_toy_world(cfg);
        
        csteer::save_corpus(out_dir + "/corpus.jsonl", world.corpus);
        csteer::save_kb(out_dir + "/kb.jsonl", world.kb);
        csteer::save_benchmark(out_dir + "/bench.jsonl", world.bench);
        csteer::save_sentence_tuples(out_dir + "/gold_tuples.jsonl", world.gold);
        csteer::save_lexicon(out_dir + "/lexicon.json", world.lexicon);
        csteer::save_stemmer(out_dir + "/stemmer.json", csteer::Stemmer::standard());
        std::cerr << "corpus " << world.corpus.size() << " sentences, kb " << world.kb.size()
                  << " facts, bench " << world.bench.entries.size() << " entries, gold "
                  << world.gold.size() << " sentences\n";
        std::cout << "max_len " << world.max_len << "\n";
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
