#pragma once

#include <map>
#include <string>
#include <vector>

#include "gsamr/amr.hpp"

namespace gsamr {

// PropBank-style sense suffixes: exactly "-NN" at the end of a concept label.
bool has_sense_suffix(const std::string& label);
std::string strip_sense(const std::string& label);

// Removes sense suffixes from concept labels; attributes are untouched.
// Idempotent.
AmrGraph remove_senses(const AmrGraph& g);

// Most-frequent-sense table: maps a sense-stripped lemma to its most common
// full form in the training corpus, ties broken lexicographically.
class SenseTable {
 public:
  void observe(const std::string& full_concept);
  // Most frequent full form, or the input unchanged when unseen.
  std::string restore(const std::string& stripped) const;
  std::size_t size() const { return best_.size(); }
  const std::map<std::string, std::pair<std::string, int>>& entries() const { return best_; }

  std::string serialize() const;  // stripped<TAB>full<TAB>count lines
  static SenseTable deserialize(const std::string& text);

 private:
  // stripped -> (best full form, its count); counts_ keeps all observations.
  std::map<std::string, std::pair<std::string, int>> best_;
  std::map<std::string, int> counts_;  // keyed by full form
};

SenseTable build_sense_table(const std::vector<AmrGraph>& gold_corpus);
AmrGraph restore_senses(const AmrGraph& g, const SenseTable& table);

// Drops :wiki attribute edges together with their constant nodes. Idempotent.
AmrGraph strip_wiki(const AmrGraph& g);

}  // namespace gsamr
