#include "gsamr/corpus.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "gsamr/error.hpp"
#include "json.hpp"

namespace gsamr {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write file: " + path);
  out << content;
  if (!out) throw DataError("write failed: " + path);
}

namespace {

std::vector<std::string> string_array(const nlohmann::json& j, const char* field,
                                      const std::string& where) {
  if (!j.count(field)) throw DataError(where + ": missing field '" + field + "'");
  if (!j[field].is_array()) throw DataError(where + ": field '" + field + "' must be an array");
  std::vector<std::string> out;
  for (const auto& item : j[field]) {
    if (!item.is_string()) throw DataError(where + ": field '" + field + "' must hold strings");
    out.push_back(item.get<std::string>());
  }
  return out;
}

}  // namespace

std::vector<CorpusRecord> parse_corpus(const std::string& text, const std::string& origin) {
  std::vector<CorpusRecord> records;
  std::set<std::string> seen_ids;
  std::istringstream is(text);
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = origin + ":" + std::to_string(line_no);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const std::exception& e) {
      throw DataError(where + ": invalid JSON: " + e.what());
    }
    CorpusRecord r;
    if (!j.count("id") || !j["id"].is_string()) throw DataError(where + ": missing string 'id'");
    r.id = j["id"].get<std::string>();
    if (!seen_ids.insert(r.id).second) throw DataError(where + ": duplicate id '" + r.id + "'");
    r.tokens = string_array(j, "tokens", where);
    r.lemmas = string_array(j, "lemmas", where);
    r.pos = string_array(j, "pos", where);
    r.ner = string_array(j, "ner", where);
    if (r.tokens.empty()) throw DataError(where + ": empty token list");
    if (r.lemmas.size() != r.tokens.size() || r.pos.size() != r.tokens.size() ||
        r.ner.size() != r.tokens.size()) {
      throw DataError(where + ": tokens/lemmas/pos/ner lengths differ");
    }
    for (const auto& t : r.tokens) {
      if (t.empty()) throw DataError(where + ": empty token");
    }
    if (j.count("graph")) {
      if (!j["graph"].is_string()) throw DataError(where + ": 'graph' must be a string");
      r.graph = j["graph"].get<std::string>();
      if (r.graph.find_first_not_of(" \t") == std::string::npos) {
        throw DataError(where + ": 'graph' present but empty");
      }
    }
    if (j.count("ctx_ref")) {
      if (!j["ctx_ref"].is_string()) throw DataError(where + ": 'ctx_ref' must be a string");
      r.ctx_ref = j["ctx_ref"].get<std::string>();
    }
    records.push_back(std::move(r));
  }
  return records;
}

std::vector<CorpusRecord> load_corpus(const std::string& path) {
  return parse_corpus(read_file(path), path);
}

std::string render_corpus(const std::vector<CorpusRecord>& records) {
  std::ostringstream os;
  for (const CorpusRecord& r : records) {
    nlohmann::json j;
    j["id"] = r.id;
    j["tokens"] = r.tokens;
    j["lemmas"] = r.lemmas;
    j["pos"] = r.pos;
    j["ner"] = r.ner;
    if (!r.graph.empty()) j["graph"] = r.graph;
    if (!r.ctx_ref.empty()) j["ctx_ref"] = r.ctx_ref;
    os << j.dump() << "\n";
  }
  return os.str();
}

void save_corpus(const std::string& path, const std::vector<CorpusRecord>& records) {
  write_file(path, render_corpus(records));
}

void ContextVectors::add(const std::string& id, int tokens, int width,
                         const std::vector<float>& data) {
  if (static_cast<std::size_t>(tokens) * static_cast<std::size_t>(width) != data.size()) {
    throw DataError("context vectors: size mismatch for " + id);
  }
  std::vector<double> d(data.begin(), data.end());
  rows_[id] = {{tokens, width}, std::move(d)};
}

const std::pair<std::pair<int, int>, std::vector<double>>& ContextVectors::get(
    const std::string& id) const {
  auto it = rows_.find(id);
  if (it == rows_.end()) throw DataError("context vectors: no record for id '" + id + "'");
  return it->second;
}

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  char buf[4];
  std::memcpy(buf, &v, 4);
  out.append(buf, 4);
}

std::uint32_t take_u32(const std::string& in, std::size_t& pos, const char* what) {
  if (pos + 4 > in.size()) throw DataError(std::string("context vectors: truncated ") + what);
  std::uint32_t v;
  std::memcpy(&v, in.data() + pos, 4);
  pos += 4;
  return v;
}

}  // namespace

void ContextVectors::save(const std::string& path) const {
  std::string out;
  for (const auto& [id, entry] : rows_) {
    put_u32(out, static_cast<std::uint32_t>(id.size()));
    out += id;
    put_u32(out, static_cast<std::uint32_t>(entry.first.first));
    put_u32(out, static_cast<std::uint32_t>(entry.first.second));
    for (double v : entry.second) {
      const float f = static_cast<float>(v);
      char buf[4];
      std::memcpy(buf, &f, 4);
      out.append(buf, 4);
    }
  }
  write_file(path, out);
}

ContextVectors ContextVectors::load(const std::string& path) {
  const std::string in = read_file(path);
  ContextVectors cv;
  std::size_t pos = 0;
  while (pos < in.size()) {
    const std::uint32_t id_len = take_u32(in, pos, "id length");
    if (pos + id_len > in.size()) throw DataError("context vectors: truncated id");
    const std::string id = in.substr(pos, id_len);
    pos += id_len;
    const std::uint32_t tokens = take_u32(in, pos, "token count");
    const std::uint32_t width = take_u32(in, pos, "width");
    const std::size_t count = static_cast<std::size_t>(tokens) * width;
    std::vector<float> data(count);
    if (pos + count * 4 > in.size()) throw DataError("context vectors: truncated payload");
    std::memcpy(data.data(), in.data() + pos, count * 4);
    pos += count * 4;
    cv.add(id, static_cast<int>(tokens), static_cast<int>(width), data);
  }
  return cv;
}

}  // namespace gsamr
