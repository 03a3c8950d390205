#include "gsamr/encoder.hpp"

#include "gsamr/error.hpp"

namespace gsamr {

SequenceEncoder::SequenceEncoder(ParameterStore& store, const RunConfig& cfg,
                                 const VocabBundle& vocab, Rng& rng)
    : vocab_(&vocab),
      d_(cfg.d_model),
      ctx_dim_(cfg.ctx_dim),
      max_positions_(cfg.max_positions),
      dropout_(cfg.dropout) {
  lemma_emb_ = Embedding(store, "seq.lemma", vocab.lemmas.size(), cfg.lemma_dim, rng);
  pos_emb_ = Embedding(store, "seq.pos", vocab.pos.size(), cfg.pos_dim, rng);
  ner_emb_ = Embedding(store, "seq.ner", vocab.ner.size(), cfg.ner_dim, rng);
  position_emb_ = Embedding(store, "seq.position", cfg.max_positions, cfg.d_model, rng);
  char_cnn_ = CharCnn(store, "seq.charcnn", vocab.chars.size(), cfg.char_dim, cfg.cnn_filters,
                      cfg.cnn_ngram, cfg.cnn_out, rng);
  const int feat = cfg.cnn_out + cfg.lemma_dim + cfg.pos_dim + cfg.ner_dim + cfg.ctx_dim;
  input_proj_ = Linear(store, "seq.input_proj", feat, cfg.d_model, true, rng);
  for (int l = 0; l < cfg.snt_layers; ++l) {
    layers_.emplace_back(store, "seq.layer" + std::to_string(l), cfg.d_model, cfg.heads,
                         cfg.ffn_hidden, cfg.dropout, false, rng);
  }
}

std::vector<TokenFeatures> SequenceEncoder::featurize(const CorpusRecord& record,
                                                      const ContextVectors* ctx) const {
  std::vector<TokenFeatures> out;
  out.reserve(record.tokens.size() + 1);

  const std::pair<std::pair<int, int>, std::vector<double>>* ctx_entry = nullptr;
  if (ctx_dim_ > 0) {
    if (!ctx) throw DataError("contextual channel enabled but no sidecar provided");
    const std::string& key = record.ctx_ref.empty() ? record.id : record.ctx_ref;
    ctx_entry = &ctx->get(key);
    if (ctx_entry->first.first != record.size() || ctx_entry->first.second != ctx_dim_) {
      throw DataError("contextual vectors for '" + key + "' do not match tokens x width");
    }
  }

  TokenFeatures bos;
  bos.surface = kBosToken;
  bos.lemma_id = Vocabulary::kBos;
  bos.pos_id = Vocabulary::kBos;
  bos.ner_id = Vocabulary::kBos;
  bos.char_ids = vocab_->char_ids(kBosToken);
  if (ctx_dim_ > 0) bos.ctx.assign(static_cast<std::size_t>(ctx_dim_), 0.0);
  out.push_back(std::move(bos));

  for (int i = 0; i < record.size(); ++i) {
    TokenFeatures tf;
    tf.surface = record.tokens[static_cast<std::size_t>(i)];
    tf.lemma_id = vocab_->lemmas.id(record.lemmas[static_cast<std::size_t>(i)]);
    tf.pos_id = vocab_->pos.id(record.pos[static_cast<std::size_t>(i)]);
    tf.ner_id = vocab_->ner.id(record.ner[static_cast<std::size_t>(i)]);
    tf.char_ids = vocab_->char_ids(tf.surface);
    if (ctx_entry) {
      const auto& [dims, data] = *ctx_entry;
      tf.ctx.assign(data.begin() + static_cast<std::size_t>(i) * dims.second,
                    data.begin() + static_cast<std::size_t>(i + 1) * dims.second);
    }
    out.push_back(std::move(tf));
  }
  return out;
}

Tensor SequenceEncoder::embed_token(const TokenFeatures& tf) const {
  std::vector<Tensor> parts;
  parts.push_back(char_cnn_.apply(tf.char_ids, Vocabulary::kUnk));
  parts.push_back(lemma_emb_.one(tf.lemma_id));
  parts.push_back(pos_emb_.one(tf.pos_id));
  parts.push_back(ner_emb_.one(tf.ner_id));
  if (ctx_dim_ > 0) {
    parts.push_back(Tensor::from_values({ctx_dim_}, tf.ctx));
  }
  return concat_cols(parts);
}

TextMemory SequenceEncoder::encode(const CorpusRecord& record,
                                   const std::vector<TokenFeatures>& features,
                                   const Runtime& rt) const {
  if (features.empty()) throw DataError("encode: empty feature sequence");
  const int len = static_cast<int>(features.size());
  if (len > max_positions_) {
    throw DataError("sentence '" + record.id + "' exceeds max positions (" +
                    std::to_string(max_positions_) + ")");
  }
  std::vector<Tensor> rows;
  rows.reserve(static_cast<std::size_t>(len));
  for (const TokenFeatures& tf : features) rows.push_back(embed_token(tf));
  Tensor x = input_proj_.apply(stack_rows(rows));  // [len, d]

  std::vector<int> positions(static_cast<std::size_t>(len));
  for (int i = 0; i < len; ++i) positions[static_cast<std::size_t>(i)] = i;
  x = add(x, position_emb_.rows(positions));
  x = dropout(x, dropout_, rt.training, rt.rng);
  for (const TransformerLayer& layer : layers_) {
    x = layer.apply(x, nullptr, nullptr, rt);
  }

  TextMemory mem;
  mem.states = x;
  mem.surfaces = record.tokens;
  mem.lemmas = record.lemmas;
  return mem;
}

GraphEncoder::GraphEncoder(ParameterStore& store, const RunConfig& cfg, const VocabBundle& vocab,
                           Rng& rng)
    : vocab_(&vocab),
      d_(cfg.d_model),
      max_positions_(cfg.max_positions),
      include_bos_(cfg.source_attn_include_bos),
      dropout_(cfg.dropout) {
  concept_emb_ = Embedding(store, "graph.concept", vocab.concepts.size(), cfg.concept_dim, rng);
  position_emb_ = Embedding(store, "graph.position", cfg.max_positions, cfg.d_model, rng);
  char_cnn_ = CharCnn(store, "graph.charcnn", vocab.chars.size(), cfg.char_dim, cfg.cnn_filters,
                      cfg.cnn_ngram, cfg.cnn_out, rng);
  input_proj_ =
      Linear(store, "graph.input_proj", cfg.cnn_out + cfg.concept_dim, cfg.d_model, true, rng);
  for (int l = 0; l < cfg.graph_layers; ++l) {
    layers_.emplace_back(store, "graph.layer" + std::to_string(l), cfg.d_model, cfg.heads,
                         cfg.ffn_hidden, cfg.dropout, true, rng);
  }
}

Tensor GraphEncoder::embed_concept(const std::string& label) const {
  std::vector<Tensor> parts;
  parts.push_back(char_cnn_.apply(vocab_->char_ids(label), Vocabulary::kUnk));
  parts.push_back(concept_emb_.one(vocab_->concepts.id(label)));
  return concat_cols(parts);
}

Tensor GraphEncoder::input_row(const std::string& label, int position) const {
  if (position >= max_positions_) {
    throw DataError("graph exceeds max positions (" + std::to_string(max_positions_) + ")");
  }
  Tensor x = input_proj_.apply(reshape(embed_concept(label), Shape{1, input_proj_.in_dim()}));
  return add(x, position_emb_.rows({position}));
}

namespace {

// The graph encoder attends over the text memory; whether the BOS state is
// part of the keys is configuration-dependent.
Tensor source_view(const TextMemory& text, bool include_bos) {
  if (include_bos) return text.states;
  return slice_rows(text.states, 1, text.tokens());
}

}  // namespace

Tensor GraphEncoder::encode_full(const std::vector<std::string>& concepts, const TextMemory& text,
                                 const Runtime& rt) const {
  const int len = static_cast<int>(concepts.size()) + 1;
  std::vector<Tensor> rows;
  rows.reserve(static_cast<std::size_t>(len));
  rows.push_back(input_row(kBogToken, 0));
  for (int i = 0; i < len - 1; ++i) {
    rows.push_back(input_row(concepts[static_cast<std::size_t>(i)], i + 1));
  }
  Tensor x = len == 1 ? rows[0] : concat_rows(rows);
  x = dropout(x, dropout_, rt.training, rt.rng);

  std::vector<std::uint8_t> causal(static_cast<std::size_t>(len) * len, 0);
  for (int i = 0; i < len; ++i) {
    for (int j = 0; j <= i; ++j) causal[static_cast<std::size_t>(i) * len + j] = 1;
  }
  Tensor memory = source_view(text, include_bos_);
  for (const TransformerLayer& layer : layers_) {
    x = layer.apply(x, &causal, &memory, rt);
  }
  return x;
}

GraphMemory GraphEncoder::init_memory(const TextMemory& text) const {
  NoGradGuard ng;
  Runtime rt;  // evaluation mode
  GraphMemory mem;
  mem.self_k.resize(layers_.size());
  mem.self_v.resize(layers_.size());
  auto kv = std::make_shared<std::vector<std::pair<Tensor, Tensor>>>();
  Tensor memory = source_view(text, include_bos_);
  for (const TransformerLayer& layer : layers_) kv->push_back(layer.project_memory(memory));
  mem.src_kv = kv;

  Tensor x0 = input_row(kBogToken, 0);
  mem.states = run_incremental_row(mem, x0);
  mem.length = 1;
  return mem;
}

GraphMemory GraphEncoder::append(const GraphMemory& mem, const std::string& label) const {
  NoGradGuard ng;
  GraphMemory next = mem;  // caches are tensors (shared handles): cheap copy
  Tensor x = input_row(label, mem.length);
  Tensor s_new = run_incremental_row(next, x);
  next.states = concat_rows({mem.states, s_new});
  next.length = mem.length + 1;
  return next;
}

// Runs one position through all layers, extending the per-layer caches that
// live in `mem` and returning the top-layer state row.
Tensor GraphEncoder::run_incremental_row(GraphMemory& mem, const Tensor& x0) const {
  Runtime rt;  // evaluation mode only
  Tensor x = x0;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& [mk, mv] = (*mem.src_kv)[l];
    x = layers_[l].apply_incremental(x, mem.self_k[l], mem.self_v[l], &mk, &mv, rt);
  }
  return x;
}

}  // namespace gsamr
