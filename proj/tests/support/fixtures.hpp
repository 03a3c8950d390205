#pragma once

#include <map>
#include <string>
#include <vector>

#include "gsamr/config.hpp"
#include "gsamr/corpus.hpp"
#include "gsamr/penman.hpp"
#include "gsamr/vocab.hpp"

namespace gsamr::testsupport {

inline VocabBundle tiny_bundle() {
  VocabBundle b;
  std::map<std::string, int> lemmas{{"boy", 5}, {"girl", 4}, {"want", 3}, {"go", 3},
                                    {"dog", 2},  {"see", 2},  {"not", 2},  {"the", 6}};
  std::map<std::string, int> pos{{"NN", 10}, {"VB", 8}, {"DT", 6}, {"RB", 2}};
  std::map<std::string, int> ner{{"O", 20}, {"PERSON", 2}};
  std::map<std::string, int> concepts{{"boy", 5},  {"girl", 4}, {"want", 3}, {"go", 3},
                                      {"dog", 2},  {"see", 2},  {"-", 2},    {"2", 1},
                                      {"alpha", 1}, {"beta", 1}};
  std::map<std::string, int> chars;
  for (const auto& [w, c] : lemmas) {
    for (char ch : w) chars[std::string(1, ch)] += c;
  }
  chars["-"] += 2;
  chars["2"] += 1;
  std::map<std::string, int> edge_labels{{"ARG0", 8},    {"ARG1", 6},  {"polarity", 2},
                                         {"quant", 1},   {"mod", 3},   {"ARG0-of", 2},
                                         {"ARG1-of", 1}, {"mod-of", 1}};
  b.lemmas = Vocabulary::build(lemmas);
  b.pos = Vocabulary::build(pos);
  b.ner = Vocabulary::build(ner);
  b.concepts = Vocabulary::build(concepts);
  b.chars = Vocabulary::build(chars);
  b.edge_labels = Vocabulary::build(edge_labels);
  std::vector<AmrGraph> sense_corpus = {parse_penman("(g / go-02 :ARG0 (w / want-01))"),
                                        parse_penman("(g / go-02)")};
  b.senses = build_sense_table(sense_corpus);
  for (const auto& [l, c] : edge_labels) {
    for (int i = 0; i < c; ++i) b.relation_freq.observe(l);
  }
  return b;
}

// Width-8 model for gradient checks; every head width stays >= 4.
inline RunConfig micro_config() {
  RunConfig c = RunConfig::defaults(Profile::Desk);
  c.lemma_dim = 4;
  c.pos_dim = 2;
  c.ner_dim = 2;
  c.concept_dim = 4;
  c.char_dim = 3;
  c.cnn_filters = 4;
  c.cnn_ngram = 3;
  c.cnn_out = 3;
  c.d_model = 8;
  c.snt_layers = 1;
  c.graph_layers = 1;
  c.heads = 2;
  c.ffn_hidden = 16;
  c.max_positions = 32;
  c.concept_ffn_hidden = 16;
  c.rel_heads = 2;
  c.rel_ffn_hidden = 16;
  c.biaffine_hidden = 5;
  c.dropout = 0.0;
  return c;
}

inline CorpusRecord tiny_record() {
  CorpusRecord r;
  r.id = "t0";
  r.tokens = {"the", "boy", "wants", "to", "go"};
  r.lemmas = {"the", "boy", "want", "to", "go"};
  r.pos = {"DT", "NN", "VB", "DT", "VB"};
  r.ner = {"O", "O", "O", "O", "O"};
  r.graph = "(w / want :ARG0 (b / boy) :ARG1 (g / go :ARG0 b))";
  return r;
}

}  // namespace gsamr::testsupport
