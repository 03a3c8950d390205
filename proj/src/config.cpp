#include "gsamr/config.hpp"

#include <sstream>

#include "gsamr/error.hpp"

namespace gsamr {

RunConfig RunConfig::defaults(Profile p) {
  RunConfig c;
  if (p == Profile::Paper) {
    c.profile = "paper";
    c.lemma_dim = 300;
    c.pos_dim = 32;
    c.ner_dim = 16;
    c.concept_dim = 300;
    c.char_dim = 32;
    c.cnn_filters = 256;
    c.cnn_ngram = 3;
    c.cnn_out = 128;
    c.d_model = 512;
    c.snt_layers = 4;
    c.graph_layers = 2;
    c.heads = 8;
    c.ffn_hidden = 1024;
    c.max_positions = 512;
    c.concept_ffn_hidden = 1024;
    c.rel_heads = 8;
    c.rel_ffn_hidden = 1024;
    c.biaffine_hidden = 100;
  } else {
    c.profile = "desk";
    c.lemma_dim = 64;
    c.pos_dim = 16;
    c.ner_dim = 8;
    c.concept_dim = 64;
    c.char_dim = 16;
    c.cnn_filters = 64;
    c.cnn_ngram = 3;
    c.cnn_out = 48;
    c.d_model = 128;
    c.snt_layers = 2;
    c.graph_layers = 1;
    c.heads = 4;
    c.ffn_hidden = 256;
    c.max_positions = 160;
    c.concept_ffn_hidden = 256;
    c.rel_heads = 4;
    c.rel_ffn_hidden = 256;
    c.biaffine_hidden = 50;
  }
  return c;
}

void RunConfig::validate() const {
  if (d_model <= 0 || heads <= 0 || d_model % heads) {
    throw UsageError("config: heads must divide d_model");
  }
  if (rel_heads <= 0 || d_model % rel_heads) {
    throw UsageError("config: rel_heads must divide d_model");
  }
  if (inference_steps < 1) throw UsageError("config: inference_steps must be >= 1");
  if (beam_size < 1) throw UsageError("config: beam_size must be >= 1");
  if (dropout < 0.0 || dropout >= 1.0) throw UsageError("config: dropout must be in [0,1)");
  if (cnn_ngram < 1) throw UsageError("config: cnn_ngram must be >= 1");
  if (snt_layers < 0 || graph_layers < 0) throw UsageError("config: negative layer count");
  if (max_positions < 4) throw UsageError("config: max_positions too small");
}

namespace {

std::string fmt_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

int to_int(const std::map<std::string, std::string>& kv, const std::string& key, int fallback) {
  auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  try {
    return std::stoi(it->second);
  } catch (...) {
    throw UsageError("config: bad integer for " + key + ": " + it->second);
  }
}

double to_double(const std::map<std::string, std::string>& kv, const std::string& key,
                 double fallback) {
  auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  try {
    return std::stod(it->second);
  } catch (...) {
    throw UsageError("config: bad number for " + key + ": " + it->second);
  }
}

bool to_bool(const std::map<std::string, std::string>& kv, const std::string& key, bool fallback) {
  auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  if (it->second == "true" || it->second == "1") return true;
  if (it->second == "false" || it->second == "0") return false;
  throw UsageError("config: bad boolean for " + key + ": " + it->second);
}

}  // namespace

std::map<std::string, std::string> RunConfig::to_map() const {
  std::map<std::string, std::string> kv;
  kv["profile"] = profile;
  kv["lemma_dim"] = std::to_string(lemma_dim);
  kv["pos_dim"] = std::to_string(pos_dim);
  kv["ner_dim"] = std::to_string(ner_dim);
  kv["concept_dim"] = std::to_string(concept_dim);
  kv["char_dim"] = std::to_string(char_dim);
  kv["cnn_filters"] = std::to_string(cnn_filters);
  kv["cnn_ngram"] = std::to_string(cnn_ngram);
  kv["cnn_out"] = std::to_string(cnn_out);
  kv["d_model"] = std::to_string(d_model);
  kv["snt_layers"] = std::to_string(snt_layers);
  kv["graph_layers"] = std::to_string(graph_layers);
  kv["heads"] = std::to_string(heads);
  kv["ffn_hidden"] = std::to_string(ffn_hidden);
  kv["max_positions"] = std::to_string(max_positions);
  kv["concept_ffn_hidden"] = std::to_string(concept_ffn_hidden);
  kv["rel_heads"] = std::to_string(rel_heads);
  kv["rel_ffn_hidden"] = std::to_string(rel_ffn_hidden);
  kv["biaffine_hidden"] = std::to_string(biaffine_hidden);
  kv["inference_steps"] = std::to_string(inference_steps);
  kv["beam_size"] = std::to_string(beam_size);
  kv["dropout"] = fmt_double(dropout);
  kv["ctx_dim"] = std::to_string(ctx_dim);
  kv["source_attn_include_bos"] = source_attn_include_bos ? "true" : "false";
  kv["state_ffn_residual"] = state_ffn_residual ? "true" : "false";
  kv["seed"] = std::to_string(seed);
  return kv;
}

RunConfig RunConfig::from_map(const std::map<std::string, std::string>& kv) {
  Profile p = Profile::Desk;
  auto it = kv.find("profile");
  if (it != kv.end()) {
    if (it->second == "paper") p = Profile::Paper;
    else if (it->second == "desk") p = Profile::Desk;
    else throw UsageError("config: unknown profile '" + it->second + "'");
  }
  RunConfig c = defaults(p);
  c.lemma_dim = to_int(kv, "lemma_dim", c.lemma_dim);
  c.pos_dim = to_int(kv, "pos_dim", c.pos_dim);
  c.ner_dim = to_int(kv, "ner_dim", c.ner_dim);
  c.concept_dim = to_int(kv, "concept_dim", c.concept_dim);
  c.char_dim = to_int(kv, "char_dim", c.char_dim);
  c.cnn_filters = to_int(kv, "cnn_filters", c.cnn_filters);
  c.cnn_ngram = to_int(kv, "cnn_ngram", c.cnn_ngram);
  c.cnn_out = to_int(kv, "cnn_out", c.cnn_out);
  c.d_model = to_int(kv, "d_model", c.d_model);
  c.snt_layers = to_int(kv, "snt_layers", c.snt_layers);
  c.graph_layers = to_int(kv, "graph_layers", c.graph_layers);
  c.heads = to_int(kv, "heads", c.heads);
  c.ffn_hidden = to_int(kv, "ffn_hidden", c.ffn_hidden);
  c.max_positions = to_int(kv, "max_positions", c.max_positions);
  c.concept_ffn_hidden = to_int(kv, "concept_ffn_hidden", c.concept_ffn_hidden);
  c.rel_heads = to_int(kv, "rel_heads", c.rel_heads);
  c.rel_ffn_hidden = to_int(kv, "rel_ffn_hidden", c.rel_ffn_hidden);
  c.biaffine_hidden = to_int(kv, "biaffine_hidden", c.biaffine_hidden);
  c.inference_steps = to_int(kv, "inference_steps", c.inference_steps);
  c.beam_size = to_int(kv, "beam_size", c.beam_size);
  c.dropout = to_double(kv, "dropout", c.dropout);
  c.ctx_dim = to_int(kv, "ctx_dim", c.ctx_dim);
  c.source_attn_include_bos = to_bool(kv, "source_attn_include_bos", c.source_attn_include_bos);
  c.state_ffn_residual = to_bool(kv, "state_ffn_residual", c.state_ffn_residual);
  c.seed = static_cast<std::uint64_t>(to_int(kv, "seed", static_cast<int>(c.seed)));
  c.validate();
  return c;
}

std::map<std::string, std::string> RunConfig::parse_kv_file(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream is(text);
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    const std::size_t eq = line.find('=');
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (eq == std::string::npos) {
      throw UsageError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw UsageError("config line " + std::to_string(line_no) + ": empty key");
    kv[key] = value;
  }
  return kv;
}

std::string RunConfig::render_kv(const std::map<std::string, std::string>& kv) {
  std::ostringstream os;
  for (const auto& [k, v] : kv) os << k << " = " << v << "\n";
  return os.str();
}

}  // namespace gsamr
