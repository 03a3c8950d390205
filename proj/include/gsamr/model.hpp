#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "gsamr/checkpoint.hpp"
#include "gsamr/config.hpp"
#include "gsamr/encoder.hpp"
#include "gsamr/nn.hpp"
#include "gsamr/solvers.hpp"
#include "gsamr/vocab.hpp"

namespace gsamr {

// Counters for the decoding-identity checks: one call per attention
// invocation of each solver.
struct ParseStats {
  long long concept_solver_calls = 0;
  long long relation_solver_calls = 0;
  long long expansions = 0;
};

// Outputs of one run of iterative inference. The final round's decisions
// drive decoding; the full per-round history backs diagnostics and the
// round-supervised training loss.
struct IterationResult {
  Tensor alpha;          // [n] final concept attention
  EdgeScores edges;      // final relation attention
  Tensor concept_query;  // state handed to the concept solver in the last round
  Tensor graph_query;    // state after the last round; feeds the edge labeler
  std::vector<Tensor> round_alphas;
  std::vector<EdgeScores> round_edges;
  std::vector<Tensor> round_concept_queries;
  std::vector<Tensor> round_graph_queries;
};

// The full parser: both encoders, both solvers, the state-update networks
// and the edge labeler, assembled over a shared parameter store.
//
// One reasoning round runs
//   edge_scores = relation_attention(graph_query, s_0..s_m)
//   concept_query = FFN_c(graph_query + sum_h (W_vh s) beta_h)
//   alpha = concept_attention(concept_query, h_1..h_n)
//   graph_query = FFN_r(concept_query + (W_v h) alpha)
// with graph_query initialized to h_0. The printed update equations pair
// each feed-forward with the opposite readout but reference attention
// weights that do not exist yet under the stated x0-first chain; this wiring
// keeps every formula intact while both solvers consume the state carrying
// the other side's latest decision.
class ParserModel {
 public:
  ParserModel(const RunConfig& cfg, const VocabBundle& vocab);

  const RunConfig& config() const { return cfg_; }
  const VocabBundle& vocab() const { return vocab_; }
  ParameterStore& store() { return store_; }
  const ParameterStore& store() const { return store_; }
  std::int64_t parameter_count() const { return store_.parameter_count(); }

  const SequenceEncoder& sequence_encoder() const { return seq_enc_; }
  const GraphEncoder& graph_encoder() const { return graph_enc_; }
  const ConceptSolver& concept_solver() const { return concept_solver_; }
  const RelationSolver& relation_solver() const { return relation_solver_; }
  const BiaffineLabeler& labeler() const { return labeler_; }

  TextMemory encode_sentence(const CorpusRecord& record, const ContextVectors* ctx,
                             const Runtime& rt) const;
  // (W_v h_{1:n}): value-projected token states, shared by the concept
  // solver's MLP and the relation-side state update.
  Tensor text_value_matrix(const TextMemory& text) const;

  IterationResult iterate(const TextMemory& text, const Tensor& text_values,
                          const Tensor& graph_states, int rounds, const Runtime& rt,
                          ParseStats* stats = nullptr) const;

  Checkpoint to_checkpoint(std::map<std::string, std::string> extra_meta = {}) const;
  static std::unique_ptr<ParserModel> from_checkpoint(const Checkpoint& ck);
  void load_parameters(const Checkpoint& ck);

 private:
  RunConfig cfg_;
  VocabBundle vocab_;
  ParameterStore store_;
  SequenceEncoder seq_enc_;
  GraphEncoder graph_enc_;
  ConceptSolver concept_solver_;
  RelationSolver relation_solver_;
  BiaffineLabeler labeler_;
  Linear text_value_;
  FeedForward concept_state_ffn_;   // graph readout -> concept-solver query
  FeedForward relation_state_ffn_;  // text readout -> relation-solver query
};

}  // namespace gsamr
