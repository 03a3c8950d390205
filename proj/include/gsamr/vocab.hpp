#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "gsamr/oracle.hpp"
#include "gsamr/senses.hpp"

namespace gsamr {

// Closed vocabulary with UNK fallback. The four sentinels occupy fixed
// indices 0..3 in every vocabulary; remaining entries are sorted by count
// (descending) then lexicographically, which makes construction
// deterministic.
class Vocabulary {
 public:
  static constexpr int kUnk = 0;
  static constexpr int kBos = 1;
  static constexpr int kBog = 2;
  static constexpr int kEog = 3;

  Vocabulary();
  static Vocabulary build(const std::map<std::string, int>& counts);

  int id(const std::string& entry) const;  // UNK when missing
  bool contains(const std::string& entry) const { return index_.count(entry) != 0; }
  const std::string& entry(int id) const { return entries_[static_cast<std::size_t>(id)]; }
  int size() const { return static_cast<int>(entries_.size()); }

  std::string serialize() const;  // entry<TAB>count lines (sentinels included)
  static Vocabulary deserialize(const std::string& text);

  std::uint64_t fnv_hash() const;

 private:
  std::vector<std::string> entries_;
  std::vector<int> counts_;
  std::unordered_map<std::string, int> index_;
};

// All vocabularies, the sense table and the relation frequencies produced by
// preprocessing; the model embeds a copy into every checkpoint.
struct VocabBundle {
  Vocabulary lemmas;
  Vocabulary pos;
  Vocabulary ner;
  Vocabulary concepts;
  Vocabulary chars;
  Vocabulary edge_labels;
  SenseTable senses;
  RelationFrequency relation_freq;

  std::uint64_t hash() const;
  std::string serialize() const;  // JSON
  static VocabBundle deserialize(const std::string& text);

  // Character ids for a word, UNK-mapped per UTF-8 byte; sentinel words map
  // to their dedicated single pseudo-character.
  std::vector<int> char_ids(const std::string& word) const;
};

std::uint64_t fnv1a64(const std::string& data);

}  // namespace gsamr
