#include "gsamr/vocab.hpp"

#include <algorithm>
#include <sstream>

#include "gsamr/error.hpp"
#include "json.hpp"

namespace gsamr {

Vocabulary::Vocabulary() {
  for (const char* s : {kUnkToken, kBosToken, kBogToken, kEogToken}) {
    index_[s] = static_cast<int>(entries_.size());
    entries_.push_back(s);
    counts_.push_back(0);
  }
}

Vocabulary Vocabulary::build(const std::map<std::string, int>& counts) {
  Vocabulary v;
  std::vector<std::pair<std::string, int>> items;
  items.reserve(counts.size());
  for (const auto& [entry, count] : counts) {
    if (v.index_.count(entry)) continue;  // sentinels stay at their slots
    if (count <= 0) throw DataError("vocabulary count must be positive: " + entry);
    items.emplace_back(entry, count);
  }
  std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  for (auto& [entry, count] : items) {
    v.index_[entry] = static_cast<int>(v.entries_.size());
    v.entries_.push_back(entry);
    v.counts_.push_back(count);
  }
  return v;
}

int Vocabulary::id(const std::string& entry) const {
  auto it = index_.find(entry);
  return it == index_.end() ? kUnk : it->second;
}

std::string Vocabulary::serialize() const {
  std::ostringstream os;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    os << entries_[i] << "\t" << counts_[i] << "\n";
  }
  return os.str();
}

Vocabulary Vocabulary::deserialize(const std::string& text) {
  Vocabulary v;
  std::istringstream is(text);
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos) {
      throw DataError("vocabulary line " + std::to_string(line_no) + ": missing count");
    }
    const std::string entry = line.substr(0, tab);
    const int count = std::stoi(line.substr(tab + 1));
    if (line_no <= 4) {
      if (entry != v.entries_[static_cast<std::size_t>(line_no - 1)]) {
        throw DataError("vocabulary line " + std::to_string(line_no) + ": sentinel order broken");
      }
      continue;
    }
    if (v.index_.count(entry)) {
      throw DataError("vocabulary line " + std::to_string(line_no) + ": duplicate entry " + entry);
    }
    v.index_[entry] = static_cast<int>(v.entries_.size());
    v.entries_.push_back(entry);
    v.counts_.push_back(count);
  }
  return v;
}

std::uint64_t fnv1a64(const std::string& data) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::uint64_t Vocabulary::fnv_hash() const { return fnv1a64(serialize()); }

std::uint64_t VocabBundle::hash() const {
  std::string all = lemmas.serialize() + "\x1e" + pos.serialize() + "\x1e" + ner.serialize() +
                    "\x1e" + concepts.serialize() + "\x1e" + chars.serialize() + "\x1e" +
                    edge_labels.serialize() + "\x1e" + senses.serialize() + "\x1e" +
                    relation_freq.serialize();
  return fnv1a64(all);
}

std::string VocabBundle::serialize() const {
  nlohmann::json j;
  j["lemmas"] = lemmas.serialize();
  j["pos"] = pos.serialize();
  j["ner"] = ner.serialize();
  j["concepts"] = concepts.serialize();
  j["chars"] = chars.serialize();
  j["edge_labels"] = edge_labels.serialize();
  j["senses"] = senses.serialize();
  j["relation_freq"] = relation_freq.serialize();
  j["hash"] = std::to_string(hash());
  return j.dump(2);
}

VocabBundle VocabBundle::deserialize(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const std::exception& e) {
    throw DataError(std::string("vocabulary bundle: invalid JSON: ") + e.what());
  }
  VocabBundle b;
  try {
    b.lemmas = Vocabulary::deserialize(j.at("lemmas").get<std::string>());
    b.pos = Vocabulary::deserialize(j.at("pos").get<std::string>());
    b.ner = Vocabulary::deserialize(j.at("ner").get<std::string>());
    b.concepts = Vocabulary::deserialize(j.at("concepts").get<std::string>());
    b.chars = Vocabulary::deserialize(j.at("chars").get<std::string>());
    b.edge_labels = Vocabulary::deserialize(j.at("edge_labels").get<std::string>());
    b.senses = SenseTable::deserialize(j.at("senses").get<std::string>());
    b.relation_freq = RelationFrequency::deserialize(j.at("relation_freq").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("vocabulary bundle: missing field: ") + e.what());
  }
  if (j.count("hash") && j["hash"].get<std::string>() != std::to_string(b.hash())) {
    throw DataError("vocabulary bundle: content hash mismatch");
  }
  return b;
}

std::vector<int> VocabBundle::char_ids(const std::string& word) const {
  if (word == kBosToken || word == kBogToken || word == kEogToken || word == kUnkToken) {
    return {chars.id(word)};
  }
  std::vector<int> ids;
  ids.reserve(word.size());
  for (char c : word) ids.push_back(chars.id(std::string(1, c)));
  return ids;
}

}  // namespace gsamr
