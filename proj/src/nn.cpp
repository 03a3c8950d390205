#include "gsamr/nn.hpp"

#include <cmath>

#include "gsamr/error.hpp"

namespace gsamr {

namespace {

std::vector<double> init_values(const Shape& shape, Init init, Rng& rng) {
  std::int64_t n = 1;
  for (int d : shape) n *= d;
  std::vector<double> v(static_cast<std::size_t>(n));
  switch (init) {
    case Init::Zeros:
      break;
    case Init::Ones:
      std::fill(v.begin(), v.end(), 1.0);
      break;
    case Init::XavierUniform: {
      // fan_in/fan_out from the two trailing dims; rank-1 falls back to size.
      const int fan_in = shape.size() >= 2 ? shape[shape.size() - 2] : shape[0];
      const int fan_out = shape[shape.size() - 1];
      const double bound = std::sqrt(6.0 / (fan_in + fan_out));
      for (auto& x : v) x = rng.uniform_range(-bound, bound);
      break;
    }
    case Init::NormalScaled: {
      const double std_dev = 1.0 / std::sqrt(static_cast<double>(shape[shape.size() - 1]));
      for (auto& x : v) x = rng.normal() * std_dev;
      break;
    }
  }
  return v;
}

}  // namespace

Tensor ParameterStore::create(const std::string& name, const Shape& shape, Init init, Rng& rng) {
  if (params_.count(name)) throw NumericError("duplicate parameter name: " + name);
  Tensor t = Tensor::leaf(shape, init_values(shape, init, rng), true);
  params_.emplace(name, t);
  return t;
}

const Tensor& ParameterStore::get(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw NumericError("unknown parameter: " + name);
  return it->second;
}

std::int64_t ParameterStore::parameter_count() const {
  std::int64_t n = 0;
  for (const auto& [name, t] : params_) n += t.numel();
  return n;
}

void ParameterStore::zero_grads() {
  for (auto& [name, t] : params_) t.zero_grad();
}

void ParameterStore::load_values(const std::string& name, const Shape& shape,
                                 const std::vector<double>& values) {
  auto it = params_.find(name);
  if (it == params_.end()) throw DataError("checkpoint parameter not in model: " + name);
  if (it->second.shape() != shape) {
    throw DataError("checkpoint shape mismatch for " + name + ": model " +
                    shape_str(it->second.shape()) + " vs file " + shape_str(shape));
  }
  it->second.leaf_values() = values;
}

Linear::Linear(ParameterStore& store, const std::string& prefix, int in, int out, bool bias,
               Rng& rng)
    : in_(in), out_(out), has_bias_(bias) {
  w_ = store.create(prefix + ".weight", Shape{in, out}, Init::XavierUniform, rng);
  if (bias) b_ = store.create(prefix + ".bias", Shape{out}, Init::Zeros, rng);
}

Tensor Linear::apply(const Tensor& x) const {
  const bool vec = x.shape().size() == 1;
  Tensor x2 = vec ? reshape(x, Shape{1, x.shape()[0]}) : x;
  Tensor y = matmul(x2, w_);
  if (has_bias_) y = add(y, b_);
  return vec ? reshape(y, Shape{out_}) : y;
}

LayerNorm::LayerNorm(ParameterStore& store, const std::string& prefix, int dim, Rng& rng) {
  gain_ = store.create(prefix + ".gain", Shape{dim}, Init::Ones, rng);
  bias_ = store.create(prefix + ".bias", Shape{dim}, Init::Zeros, rng);
}

Tensor LayerNorm::apply(const Tensor& x) const { return layer_norm_rows(x, gain_, bias_); }

Embedding::Embedding(ParameterStore& store, const std::string& name, int count, int dim, Rng& rng)
    : count_(count), dim_(dim) {
  table_ = store.create(name, Shape{count, dim}, Init::NormalScaled, rng);
}

Tensor Embedding::rows(const std::vector<int>& ids) const { return embed_rows(table_, ids); }

Tensor Embedding::one(int id) const { return reshape(embed_rows(table_, {id}), Shape{dim_}); }

FeedForward::FeedForward(ParameterStore& store, const std::string& prefix, int dim, int hidden,
                         double dropout_rate, bool residual, Rng& rng)
    : dropout_rate_(dropout_rate), residual_(residual) {
  lin1_ = Linear(store, prefix + ".lin1", dim, hidden, true, rng);
  lin2_ = Linear(store, prefix + ".lin2", hidden, dim, true, rng);
}

Tensor FeedForward::apply(const Tensor& x, const Runtime& rt) const {
  Tensor h = relu(lin1_.apply(x));
  h = dropout(h, dropout_rate_, rt.training, rt.rng);
  Tensor y = lin2_.apply(h);
  return residual_ ? add(y, x) : y;
}

AttentionOutput scaled_dot_attention(const Tensor& q, const Tensor& k, const Tensor& v, int heads,
                                     const std::vector<std::uint8_t>* mask) {
  if (q.shape().size() != 2 || k.shape().size() != 2 || v.shape().size() != 2) {
    throw NumericError("scaled_dot_attention: rank-2 inputs required");
  }
  const int lq = q.shape()[0], lk = k.shape()[0];
  if (k.shape()[0] != v.shape()[0]) throw NumericError("scaled_dot_attention: key/value length mismatch");
  if (heads <= 0 || q.shape()[1] % heads || k.shape()[1] % heads || v.shape()[1] % heads) {
    throw NumericError("scaled_dot_attention: head count must divide projection widths");
  }
  if (q.shape()[1] != k.shape()[1]) throw NumericError("scaled_dot_attention: query/key width mismatch");
  const int dk = q.shape()[1] / heads;
  const int dv = v.shape()[1] / heads;
  const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(dk));

  std::vector<Tensor> ctx_parts, weight_parts;
  ctx_parts.reserve(heads);
  weight_parts.reserve(heads);
  for (int h = 0; h < heads; ++h) {
    Tensor qh = heads == 1 ? q : slice_cols(q, h * dk, dk);
    Tensor kh = heads == 1 ? k : slice_cols(k, h * dk, dk);
    Tensor vh = heads == 1 ? v : slice_cols(v, h * dv, dv);
    Tensor scores = scale(matmul(qh, transpose(kh)), inv_sqrt_dk);  // [lq, lk]
    Tensor w = mask ? softmax_rows_masked(scores, *mask) : softmax_rows(scores);
    ctx_parts.push_back(matmul(w, vh));
    weight_parts.push_back(w);
  }
  AttentionOutput out;
  out.context = heads == 1 ? ctx_parts[0] : concat_cols(ctx_parts);
  out.weights = heads == 1 ? weight_parts[0] : concat_rows(weight_parts);
  (void)lq;
  (void)lk;
  return out;
}

TransformerLayer::TransformerLayer(ParameterStore& store, const std::string& prefix, int dim,
                                   int heads, int ffn_hidden, double dropout_rate,
                                   bool with_source_attention, Rng& rng)
    : with_source_(with_source_attention), dim_(dim), heads_(heads), dropout_rate_(dropout_rate) {
  if (dim % heads) throw NumericError("TransformerLayer: heads must divide dim");
  self_wq_ = Linear(store, prefix + ".self.wq", dim, dim, true, rng);
  self_wk_ = Linear(store, prefix + ".self.wk", dim, dim, true, rng);
  self_wv_ = Linear(store, prefix + ".self.wv", dim, dim, true, rng);
  self_wo_ = Linear(store, prefix + ".self.wo", dim, dim, true, rng);
  ln_self_ = LayerNorm(store, prefix + ".self.ln", dim, rng);
  if (with_source_) {
    src_wq_ = Linear(store, prefix + ".src.wq", dim, dim, true, rng);
    src_wk_ = Linear(store, prefix + ".src.wk", dim, dim, true, rng);
    src_wv_ = Linear(store, prefix + ".src.wv", dim, dim, true, rng);
    src_wo_ = Linear(store, prefix + ".src.wo", dim, dim, true, rng);
    ln_src_ = LayerNorm(store, prefix + ".src.ln", dim, rng);
  }
  ffn_ = FeedForward(store, prefix + ".ffn", dim, ffn_hidden, dropout_rate, false, rng);
  ln_ffn_ = LayerNorm(store, prefix + ".ffn.ln", dim, rng);
}

Tensor TransformerLayer::apply(const Tensor& x, const std::vector<std::uint8_t>* self_mask,
                               const Tensor* memory, const Runtime& rt) const {
  AttentionOutput self = scaled_dot_attention(self_wq_.apply(x), self_wk_.apply(x),
                                              self_wv_.apply(x), heads_, self_mask);
  Tensor y = ln_self_.apply(add(x, dropout(self_wo_.apply(self.context), dropout_rate_,
                                           rt.training, rt.rng)));
  if (with_source_) {
    if (!memory) throw NumericError("TransformerLayer: source memory required");
    AttentionOutput src = scaled_dot_attention(src_wq_.apply(y), src_wk_.apply(*memory),
                                               src_wv_.apply(*memory), heads_, nullptr);
    y = ln_src_.apply(add(y, dropout(src_wo_.apply(src.context), dropout_rate_, rt.training,
                                     rt.rng)));
  }
  return ln_ffn_.apply(add(y, dropout(ffn_.apply(y, rt), dropout_rate_, rt.training, rt.rng)));
}

std::pair<Tensor, Tensor> TransformerLayer::project_memory(const Tensor& memory) const {
  if (!with_source_) throw NumericError("project_memory on layer without source attention");
  return {src_wk_.apply(memory), src_wv_.apply(memory)};
}

Tensor TransformerLayer::apply_incremental(const Tensor& x_new, Tensor& cache_k, Tensor& cache_v,
                                           const Tensor* memory_k, const Tensor* memory_v,
                                           const Runtime& rt) const {
  // x_new: [1, dim]. The causal mask is implicit: keys cover positions
  // 0..current only.
  Tensor k_new = self_wk_.apply(x_new);
  Tensor v_new = self_wv_.apply(x_new);
  Tensor k_all = cache_k.defined() ? concat_rows({cache_k, k_new}) : k_new;
  Tensor v_all = cache_v.defined() ? concat_rows({cache_v, v_new}) : v_new;
  cache_k = k_all;
  cache_v = v_all;

  AttentionOutput self =
      scaled_dot_attention(self_wq_.apply(x_new), k_all, v_all, heads_, nullptr);
  Tensor y = ln_self_.apply(add(x_new, dropout(self_wo_.apply(self.context), dropout_rate_,
                                               rt.training, rt.rng)));
  if (with_source_) {
    if (!memory_k || !memory_v) throw NumericError("apply_incremental: projected memory required");
    AttentionOutput src =
        scaled_dot_attention(src_wq_.apply(y), *memory_k, *memory_v, heads_, nullptr);
    y = ln_src_.apply(add(y, dropout(src_wo_.apply(src.context), dropout_rate_, rt.training,
                                     rt.rng)));
  }
  return ln_ffn_.apply(add(y, dropout(ffn_.apply(y, rt), dropout_rate_, rt.training, rt.rng)));
}

CharCnn::CharCnn(ParameterStore& store, const std::string& prefix, int char_vocab, int char_dim,
                 int filters, int ngram, int out_dim, Rng& rng)
    : ngram_(ngram), out_dim_(out_dim) {
  char_emb_ = Embedding(store, prefix + ".chars", char_vocab, char_dim, rng);
  conv_ = Linear(store, prefix + ".conv", ngram * char_dim, filters, true, rng);
  proj_ = Linear(store, prefix + ".proj", filters, out_dim, true, rng);
}

Tensor CharCnn::apply(const std::vector<int>& char_ids, int pad_id) const {
  std::vector<int> padded = char_ids;
  while (static_cast<int>(padded.size()) < ngram_) padded.push_back(pad_id);
  Tensor emb = char_emb_.rows(padded);                 // [L, char_dim]
  Tensor windows = unfold_rows(emb, ngram_);           // [L-n+1, n*char_dim]
  Tensor features = relu(conv_.apply(windows));        // [L-n+1, filters]
  Tensor pooled = max_over_rows(features);             // [filters]
  return proj_.apply(pooled);                          // [out_dim]
}

}  // namespace gsamr
