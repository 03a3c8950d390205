#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gsamr/amr.hpp"

namespace gsamr {

// Triple view of a graph with variables abstracted to indices. Instance
// triples cover non-attribute nodes, attribute triples cover edges into
// constants plus a synthetic TOP marker on the root, relation triples cover
// the rest.
struct TripleSet {
  struct Instance { int var; std::string label; };
  struct Relation { std::string label; int src; int tgt; };
  struct Attribute { std::string label; int var; std::string value; };

  std::vector<Instance> instances;
  std::vector<Relation> relations;
  std::vector<Attribute> attributes;
  int var_count = 0;

  static TripleSet from_graph(const AmrGraph& g);
  int total() const {
    return static_cast<int>(instances.size() + relations.size() + attributes.size());
  }
};

struct MatchResult {
  int matched = 0;
  int total_left = 0;
  int total_right = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::vector<int> mapping;  // left var index -> right var index or -1
};

// Greedy hill-climbing over one-to-one variable mappings with random
// restarts; the first restart is seeded by concept-label matching. The
// returned result is deterministic given (restarts, seed).
MatchResult smatch(const AmrGraph& left, const AmrGraph& right, int restarts = 4,
                   std::uint64_t seed = 1);

// Exhaustive search over injective mappings; provably optimal. Bounded to
// min(|vars|) <= 8, throws UsageError beyond that.
MatchResult smatch_exact(const AmrGraph& left, const AmrGraph& right);

struct FineGrained {
  MatchResult smatch_score;
  MatchResult unlabeled;  // every edge label rewritten to a single label
  MatchResult no_wsd;     // sense suffixes removed on both sides
  double concept_precision = 0.0;
  double concept_recall = 0.0;
  double concept_f1 = 0.0;
};

// Corpus-level micro-averaged scores; corpora must be aligned and equal in
// length.
FineGrained fine_grained(const std::vector<AmrGraph>& pred, const std::vector<AmrGraph>& gold,
                         int restarts = 4, std::uint64_t seed = 1);

MatchResult smatch_corpus(const std::vector<AmrGraph>& pred, const std::vector<AmrGraph>& gold,
                          int restarts = 4, std::uint64_t seed = 1);

}  // namespace gsamr
