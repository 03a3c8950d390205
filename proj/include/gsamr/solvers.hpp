#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "gsamr/config.hpp"
#include "gsamr/encoder.hpp"
#include "gsamr/nn.hpp"
#include "gsamr/vocab.hpp"

namespace gsamr {

// Candidate inventory for concept prediction over one sentence: the concept
// vocabulary (EOG included) extended with the sentence's lemmas and surface
// strings. A string that exists in several channels is a single candidate
// whose channel masses add up.
struct CandidateSet {
  std::vector<std::string> names;              // [0, vocab_size) are vocab entries
  std::unordered_map<std::string, int> index;  // name -> candidate id
  int vocab_size = 0;
  // token positions (0-based) contributing copy mass per candidate
  std::vector<std::vector<int>> lemma_positions;
  std::vector<std::vector<int>> surface_positions;

  static CandidateSet build(const Vocabulary& concepts, const std::vector<std::string>& lemmas,
                            const std::vector<std::string>& surfaces);
  int id(const std::string& name) const;  // -1 when absent
};

// Everything the concept solver produces for one reasoning round.
struct ConceptPrediction {
  Tensor alpha;        // [n] attention over tokens (BOS excluded)
  Tensor switch_probs; // [3] vocab / lemma-copy / surface-copy
  Tensor vocab_probs;  // [Vc]
  Tensor combined;     // [C] over the candidate set
};

class ConceptSolver {
 public:
  ConceptSolver() = default;
  ConceptSolver(ParameterStore& store, const RunConfig& cfg, int concept_vocab, Rng& rng);

  // alpha_t = softmax((Wq y)^T Wk h_{1:n} / sqrt(d)); single head, BOS
  // excluded from the keys.
  Tensor attention(const Tensor& state, const TextMemory& text) const;

  // Mixture over the candidate set from the state, attention weights and the
  // value-projected text memory (shared with the relation-side state update).
  ConceptPrediction predict(const Tensor& state, const Tensor& alpha, const TextMemory& text,
                            const Tensor& text_values, const CandidateSet& candidates) const;

 private:
  Linear wq_, wk_;
  Linear w_vocab_;   // with bias
  Linear w_switch_;  // no bias
  int d_ = 0;
};

// Per-head pointing distributions over graph nodes (dummy at index 0) and
// their elementwise max.
struct EdgeScores {
  Tensor per_head;  // [H, m+1]
  Tensor combined;  // [m+1]
  int nodes() const { return combined.shape()[0]; }
};

class RelationSolver {
 public:
  RelationSolver() = default;
  RelationSolver(ParameterStore& store, const RunConfig& cfg, Rng& rng);

  EdgeScores attention(const Tensor& state, const Tensor& graph_states) const;
  // sum_h (graph_states Wv_h^T)^T beta_h -> [d]; feeds the concept-side
  // state update.
  Tensor value_readout(const EdgeScores& scores, const Tensor& graph_states) const;
  int heads() const { return heads_; }

 private:
  std::vector<Linear> wq_, wk_, wv_;
  int heads_ = 0, dk_ = 0, d_ = 0;
};

// Per-head argmax decoding: drop heads that point at the dummy node,
// deduplicate, and for non-root expansions fall back to the best non-dummy
// node when every head pointed at the dummy (keeps the graph connected).
std::vector<int> extract_edges(const EdgeScores& scores, bool first_node);

class BiaffineLabeler {
 public:
  BiaffineLabeler() = default;
  BiaffineLabeler(ParameterStore& store, const RunConfig& cfg, int label_count, Rng& rng);

  // log P(label | new-node state, source-node state): biaffine bilinear term
  // plus a linear term over the concatenated projections.
  Tensor log_probs(const Tensor& head_state, const Tensor& dep_state) const;
  int label_count() const { return labels_; }

 private:
  Linear head_proj_, dep_proj_;
  Tensor bilinear_;  // [L*hidden, hidden]
  Linear linear_;    // [2*hidden -> L] with bias
  int labels_ = 0, hidden_ = 0;
};

}  // namespace gsamr
