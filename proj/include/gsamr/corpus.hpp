#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace gsamr {

// One input sentence with its precomputed token features and, when gold data
// is available, the Penman string of its graph. Records are stored one JSON
// object per line.
struct CorpusRecord {
  std::string id;
  std::vector<std::string> tokens;
  std::vector<std::string> lemmas;
  std::vector<std::string> pos;
  std::vector<std::string> ner;
  std::string graph;   // Penman, empty when absent
  std::string ctx_ref; // sentence id in the contextual-embedding sidecar

  int size() const { return static_cast<int>(tokens.size()); }
};

std::vector<CorpusRecord> load_corpus(const std::string& path);
std::vector<CorpusRecord> parse_corpus(const std::string& text, const std::string& origin);
void save_corpus(const std::string& path, const std::vector<CorpusRecord>& records);
std::string render_corpus(const std::vector<CorpusRecord>& records);

// Contextual-embedding sidecar: binary records of
//   u32 id-length, id bytes, u32 token count, u32 width, f32 row-major data.
class ContextVectors {
 public:
  void add(const std::string& id, int tokens, int width, const std::vector<float>& data);
  bool has(const std::string& id) const { return rows_.count(id) != 0; }
  // Row-major [tokens, width] as doubles; throws DataError on missing id or
  // width mismatch.
  const std::pair<std::pair<int, int>, std::vector<double>>& get(const std::string& id) const;

  void save(const std::string& path) const;
  static ContextVectors load(const std::string& path);

 private:
  std::map<std::string, std::pair<std::pair<int, int>, std::vector<double>>> rows_;
};

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace gsamr
