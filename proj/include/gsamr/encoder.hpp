#pragma once

#include <memory>
#include <string>
#include <vector>

#include "gsamr/config.hpp"
#include "gsamr/corpus.hpp"
#include "gsamr/nn.hpp"
#include "gsamr/vocab.hpp"

namespace gsamr {

// Per-token features after vocabulary lookup and optional masking.
struct TokenFeatures {
  std::string surface;
  int lemma_id = 0;
  int pos_id = 0;
  int ner_id = 0;
  std::vector<int> char_ids;
  std::vector<double> ctx;  // empty unless the contextual channel is active
};

// Output of the sequence encoder: states[0] is the BOS vector, states[i]
// the i-th token. Copy-channel candidates need the raw strings alongside.
struct TextMemory {
  Tensor states;  // [n+1, d]
  std::vector<std::string> surfaces;
  std::vector<std::string> lemmas;
  int tokens() const { return static_cast<int>(surfaces.size()); }
};

class SequenceEncoder {
 public:
  SequenceEncoder() = default;
  SequenceEncoder(ParameterStore& store, const RunConfig& cfg, const VocabBundle& vocab, Rng& rng);

  std::vector<TokenFeatures> featurize(const CorpusRecord& record,
                                       const ContextVectors* ctx) const;
  // Pre-projection feature concatenation for one token.
  Tensor embed_token(const TokenFeatures& tf) const;
  TextMemory encode(const CorpusRecord& record, const std::vector<TokenFeatures>& features,
                    const Runtime& rt) const;

 private:
  const VocabBundle* vocab_ = nullptr;
  int d_ = 0, ctx_dim_ = 0, max_positions_ = 0;
  double dropout_ = 0.0;
  Embedding lemma_emb_, pos_emb_, ner_emb_, position_emb_;
  CharCnn char_cnn_;
  Linear input_proj_;
  std::vector<TransformerLayer> layers_;
};

// Immutable snapshot of the graph encoder state. Appending returns a new
// handle; per-layer key/value caches and the projected text memory are
// shared between snapshots, so beams can extend divergent branches safely.
struct GraphMemory {
  Tensor states;  // [m+1, d], row 0 = BOG
  int length = 0;
  std::vector<Tensor> self_k, self_v;                      // per layer [m+1, d]
  std::shared_ptr<const std::vector<std::pair<Tensor, Tensor>>> src_kv;  // per layer
};

class GraphEncoder {
 public:
  GraphEncoder() = default;
  GraphEncoder(ParameterStore& store, const RunConfig& cfg, const VocabBundle& vocab, Rng& rng);

  // Pre-projection concat of char-cnn features and concept embedding.
  Tensor embed_concept(const std::string& label) const;

  // Batch form over the whole concept sequence with a causal mask; used in
  // training where gradients are required.
  Tensor encode_full(const std::vector<std::string>& concepts, const TextMemory& text,
                     const Runtime& rt) const;

  // Incremental form used during parsing (no gradients): start from the BOG
  // state and append one concept at a time.
  GraphMemory init_memory(const TextMemory& text) const;
  GraphMemory append(const GraphMemory& mem, const std::string& label) const;

 private:
  Tensor input_row(const std::string& label, int position) const;
  Tensor run_incremental_row(GraphMemory& mem, const Tensor& x0) const;

  const VocabBundle* vocab_ = nullptr;
  int d_ = 0, max_positions_ = 0;
  bool include_bos_ = true;
  double dropout_ = 0.0;
  Embedding concept_emb_, position_emb_;
  CharCnn char_cnn_;
  Linear input_proj_;
  std::vector<TransformerLayer> layers_;
};

}  // namespace gsamr
