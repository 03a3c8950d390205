#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "gsamr/amr.hpp"

namespace gsamr {

// Sentinel strings shared between vocabularies and the oracle.
inline constexpr const char* kUnkToken = "<UNK>";
inline constexpr const char* kBosToken = "<BOS>";
inline constexpr const char* kBogToken = "<BOG>";
inline constexpr const char* kEogToken = "<EOG>";

// One teacher-forcing record. `sources` pairs an already-inserted node
// (by insertion index) with the edge label seen from that node towards the
// new one; edges whose gold direction runs from the new node back to an
// earlier one carry the inverse "-of" label. The terminal step holds the EOG
// sentinel and no sources.
struct OracleStep {
  std::string label;
  bool attribute = false;
  std::vector<std::pair<int, std::string>> sources;
  int step_index = 0;
};

// Relation-label frequencies over a training corpus, persisted as
// label<TAB>count lines. Inverse directions count towards the canonical
// label.
class RelationFrequency {
 public:
  void observe(const std::string& label) { ++counts_[label]; }
  int count(const std::string& label) const;
  void add_corpus(const std::vector<AmrGraph>& graphs);
  std::string serialize() const;
  static RelationFrequency deserialize(const std::string& text);
  const std::map<std::string, int>& counts() const { return counts_; }

 private:
  std::map<std::string, int> counts_;
};

enum class SiblingOrder { Random, FrequencySorted };

// Breadth-first linearization starting at the AMR root. Sibling expansion
// order is either uniformly random (seeded) or sorted by descending relation
// frequency with deterministic tie-breaking; the frequency table is required
// for the sorted policy. Throws DataError on disconnected graphs.
std::vector<OracleStep> bfs_order(const AmrGraph& graph, SiblingOrder order,
                                  const RelationFrequency* freq, std::uint64_t seed = 0);

// Rebuilds a graph from oracle steps ("-of" labels are normalized back to
// forward edges). The EOG step, if present, is ignored.
AmrGraph graph_from_steps(const std::vector<OracleStep>& steps);

}  // namespace gsamr
