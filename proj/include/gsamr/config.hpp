#pragma once

#include <cstdint>
#include <map>
#include <string>

namespace gsamr {

enum class Profile { Paper, Desk };

// Model and decoding hyperparameters. The paper profile carries the full
// published settings; the desk profile shrinks widths so the test pipeline
// runs in minutes. Every run echoes the resolved values into logs and
// checkpoints.
struct RunConfig {
  std::string profile = "desk";

  // embeddings
  int lemma_dim = 0;
  int pos_dim = 0;
  int ner_dim = 0;
  int concept_dim = 0;
  int char_dim = 0;

  // char-level cnn
  int cnn_filters = 0;
  int cnn_ngram = 3;
  int cnn_out = 0;

  // encoders
  int d_model = 0;
  int snt_layers = 0;
  int graph_layers = 0;
  int heads = 0;
  int ffn_hidden = 0;
  int max_positions = 0;

  // solvers
  int concept_ffn_hidden = 0;  // state update feeding the concept solver
  int rel_heads = 0;
  int rel_ffn_hidden = 0;  // state update feeding the relation solver
  int biaffine_hidden = 0;

  // iterative inference and decoding
  int inference_steps = 4;
  int beam_size = 8;

  // regularization
  double dropout = 0.2;

  // optional contextual-embedding channel (sidecar file), 0 disables
  int ctx_dim = 0;
  bool source_attn_include_bos = true;
  bool state_ffn_residual = false;

  std::uint64_t seed = 42;

  static RunConfig defaults(Profile p);
  void validate() const;  // throws UsageError on inconsistent settings

  // Flat key=value form used by config files, logs and checkpoint metadata.
  std::map<std::string, std::string> to_map() const;
  static RunConfig from_map(const std::map<std::string, std::string>& kv);

  static std::map<std::string, std::string> parse_kv_file(const std::string& text);
  static std::string render_kv(const std::map<std::string, std::string>& kv);
};

}  // namespace gsamr
