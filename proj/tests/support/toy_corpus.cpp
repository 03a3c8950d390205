#include "support/toy_corpus.hpp"

#include <string>

namespace gsamr::testsupport {

namespace {

struct Noun {
  const char* surface;
  const char* lemma;
};

struct Verb {
  const char* third;   // third-person singular surface
  const char* lemma;
  const char* sense;   // gold concept with sense suffix
};

const Noun kSubjects[] = {{"boy", "boy"}, {"girl", "girl"}, {"dog", "dog"},
                          {"man", "man"}, {"woman", "woman"}};
const Noun kObjects[] = {{"house", "house"}, {"city", "city"}, {"ball", "ball"}};
const Verb kIntransitive[] = {{"goes", "go", "go-02"},
                              {"sleeps", "sleep", "sleep-01"},
                              {"runs", "run", "run-02"}};
const Verb kTransitive[] = {{"sees", "see", "see-01"}, {"finds", "find", "find-01"}};

CorpusRecord make(int index, std::vector<std::string> tokens, std::vector<std::string> lemmas,
                  std::vector<std::string> pos, std::vector<std::string> ner, std::string graph) {
  CorpusRecord r;
  r.id = "toy-" + std::to_string(index);
  r.tokens = std::move(tokens);
  r.lemmas = std::move(lemmas);
  r.pos = std::move(pos);
  r.ner = std::move(ner);
  r.graph = std::move(graph);
  return r;
}

}  // namespace

std::vector<CorpusRecord> toy_corpus() {
  std::vector<CorpusRecord> out;
  int id = 0;

  // "the S V" -> (v / verb :ARG0 (s / S))
  for (const Noun& s : kSubjects) {
    for (const Verb& v : kIntransitive) {
      out.push_back(make(id++, {"the", s.surface, v.third}, {"the", s.lemma, v.lemma},
                         {"DT", "NN", "VBZ"}, {"O", "O", "O"},
                         std::string("(v / ") + v.sense + " :ARG0 (s / " + s.lemma + "))"));
    }
  }

  // "the S does not go" -> polarity attribute
  for (const Noun& s : kSubjects) {
    out.push_back(make(id++, {"the", s.surface, "does", "not", "go"},
                       {"the", s.lemma, "do", "not", "go"}, {"DT", "NN", "VBZ", "RB", "VB"},
                       {"O", "O", "O", "O", "O"},
                       std::string("(v / go-02 :polarity - :ARG0 (s / ") + s.lemma + "))"));
  }

  // "the S wants to go" -> control verb with a reentrant subject
  for (const Noun& s : kSubjects) {
    out.push_back(make(id++, {"the", s.surface, "wants", "to", "go"},
                       {"the", s.lemma, "want", "to", "go"}, {"DT", "NN", "VBZ", "TO", "VB"},
                       {"O", "O", "O", "O", "O"},
                       std::string("(w / want-01 :ARG0 (s / ") + s.lemma +
                           ") :ARG1 (v / go-02 :ARG0 s))"));
  }

  // "the S sees 2 dogs" -> numeric quantifier attribute
  for (const Noun& s : kSubjects) {
    out.push_back(make(id++, {"the", s.surface, "sees", "2", "dogs"},
                       {"the", s.lemma, "see", "2", "dog"}, {"DT", "NN", "VBZ", "CD", "NNS"},
                       {"O", "O", "O", "O", "O"},
                       std::string("(v / see-01 :ARG0 (s / ") + s.lemma +
                           ") :ARG1 (d / dog :quant 2))"));
  }

  // named entity via surface copy
  out.push_back(make(id++, {"Alta", "sees", "the", "dog"}, {"Alta", "see", "the", "dog"},
                     {"NNP", "VBZ", "DT", "NN"}, {"PERSON", "O", "O", "O"},
                     "(v / see-01 :ARG0 (p / person :name (n / name :op1 \"Alta\")) "
                     ":ARG1 (d / dog))"));
  out.push_back(make(id++, {"Alta", "wants", "to", "go"}, {"Alta", "want", "to", "go"},
                     {"NNP", "VBZ", "TO", "VB"}, {"PERSON", "O", "O", "O"},
                     "(w / want-01 :ARG0 (p / person :name (n / name :op1 \"Alta\")) "
                     ":ARG1 (v / go-02 :ARG0 p))"));

  // "the S V the O" -> (v / verb :ARG0 s :ARG1 o)
  for (const Noun& s : kSubjects) {
    for (const Verb& v : kTransitive) {
      for (const Noun& o : kObjects) {
        out.push_back(make(id++, {"the", s.surface, v.third, "the", o.surface},
                           {"the", s.lemma, v.lemma, "the", o.lemma},
                           {"DT", "NN", "VBZ", "DT", "NN"}, {"O", "O", "O", "O", "O"},
                           std::string("(v / ") + v.sense + " :ARG0 (s / " + s.lemma +
                               ") :ARG1 (o / " + o.lemma + "))"));
      }
    }
  }

  out.resize(50);
  return out;
}

}  // namespace gsamr::testsupport
