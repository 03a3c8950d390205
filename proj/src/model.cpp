#include "gsamr/model.hpp"

#include "gsamr/error.hpp"

namespace gsamr {

ParserModel::ParserModel(const RunConfig& cfg, const VocabBundle& vocab)
    : cfg_(cfg), vocab_(vocab) {
  cfg_.validate();
  Rng rng(cfg_.seed);
  seq_enc_ = SequenceEncoder(store_, cfg_, vocab_, rng);
  graph_enc_ = GraphEncoder(store_, cfg_, vocab_, rng);
  concept_solver_ = ConceptSolver(store_, cfg_, vocab_.concepts.size(), rng);
  relation_solver_ = RelationSolver(store_, cfg_, rng);
  labeler_ = BiaffineLabeler(store_, cfg_, vocab_.edge_labels.size(), rng);
  text_value_ = Linear(store_, "shared.text_value", cfg_.d_model, cfg_.d_model, false, rng);
  concept_state_ffn_ = FeedForward(store_, "state.concept_ffn", cfg_.d_model,
                                   cfg_.concept_ffn_hidden, cfg_.dropout,
                                   cfg_.state_ffn_residual, rng);
  relation_state_ffn_ = FeedForward(store_, "state.relation_ffn", cfg_.d_model,
                                    cfg_.rel_ffn_hidden, cfg_.dropout, cfg_.state_ffn_residual,
                                    rng);
}

TextMemory ParserModel::encode_sentence(const CorpusRecord& record, const ContextVectors* ctx,
                                        const Runtime& rt) const {
  return seq_enc_.encode(record, seq_enc_.featurize(record, ctx), rt);
}

Tensor ParserModel::text_value_matrix(const TextMemory& text) const {
  return text_value_.apply(slice_rows(text.states, 1, text.tokens()));
}

IterationResult ParserModel::iterate(const TextMemory& text, const Tensor& text_values,
                                     const Tensor& graph_states, int rounds, const Runtime& rt,
                                     ParseStats* stats) const {
  if (rounds < 1) throw UsageError("iterate: rounds must be >= 1");
  IterationResult out;
  Tensor graph_query = row(text.states, 0);  // x_0 = h_0
  for (int t = 0; t < rounds; ++t) {
    out.edges = relation_solver_.attention(graph_query, graph_states);
    if (stats) ++stats->relation_solver_calls;
    Tensor graph_readout = relation_solver_.value_readout(out.edges, graph_states);
    out.concept_query = concept_state_ffn_.apply(add(graph_query, graph_readout), rt);

    out.alpha = concept_solver_.attention(out.concept_query, text);
    if (stats) ++stats->concept_solver_calls;
    Tensor text_readout = vecmat(out.alpha, text_values);
    graph_query = relation_state_ffn_.apply(add(out.concept_query, text_readout), rt);

    out.round_alphas.push_back(out.alpha);
    out.round_edges.push_back(out.edges);
    out.round_concept_queries.push_back(out.concept_query);
    out.round_graph_queries.push_back(graph_query);
  }
  out.graph_query = graph_query;
  return out;
}

Checkpoint ParserModel::to_checkpoint(std::map<std::string, std::string> extra_meta) const {
  Checkpoint ck;
  ck.meta = cfg_.to_map();
  ck.meta["vocab_hash"] = std::to_string(vocab_.hash());
  for (auto& [k, v] : extra_meta) ck.meta[k] = v;
  ck.vocab_json = vocab_.serialize();
  for (const auto& [name, t] : store_.all()) {
    ck.params[name] = {t.shape(), t.values()};
  }
  return ck;
}

std::unique_ptr<ParserModel> ParserModel::from_checkpoint(const Checkpoint& ck) {
  const RunConfig cfg = RunConfig::from_map(ck.meta);
  const VocabBundle vocab = VocabBundle::deserialize(ck.vocab_json);
  auto model = std::make_unique<ParserModel>(cfg, vocab);
  model->load_parameters(ck);
  return model;
}

void ParserModel::load_parameters(const Checkpoint& ck) {
  for (const auto& [name, t] : store_.all()) {
    if (!ck.params.count(name)) throw DataError("checkpoint missing parameter: " + name);
    (void)t;
  }
  for (const auto& [name, entry] : ck.params) {
    store_.load_values(name, entry.first, entry.second);
  }
}

}  // namespace gsamr
