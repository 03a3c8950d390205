#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "gsamr/tensor.hpp"

namespace gsamr {

// Runtime flags threaded through forward passes. Evaluation mode is the
// default: no dropout, no randomness, bit-deterministic outputs.
struct Runtime {
  bool training = false;
  Rng* rng = nullptr;
};

enum class Init { XavierUniform, NormalScaled, Zeros, Ones };

// Flat registry of named parameters. Every learnable tensor in a model is
// created through the store, which gives checkpointing, counting and the
// optimizer a single deterministic view (keys are sorted).
class ParameterStore {
 public:
  Tensor create(const std::string& name, const Shape& shape, Init init, Rng& rng);
  const Tensor& get(const std::string& name) const;
  bool has(const std::string& name) const { return params_.count(name) != 0; }
  std::int64_t parameter_count() const;
  void zero_grads();
  const std::map<std::string, Tensor>& all() const { return params_; }
  // Overwrites values of an existing parameter (checkpoint restore).
  void load_values(const std::string& name, const Shape& shape, const std::vector<double>& values);

 private:
  std::map<std::string, Tensor> params_;
};

class Linear {
 public:
  Linear() = default;
  Linear(ParameterStore& store, const std::string& prefix, int in, int out, bool bias, Rng& rng);
  // x: [*, in] -> [*, out]; rank-1 input gives rank-1 output.
  Tensor apply(const Tensor& x) const;
  int in_dim() const { return in_; }
  int out_dim() const { return out_; }

 private:
  Tensor w_;  // [in, out]
  Tensor b_;  // [out], optional
  int in_ = 0, out_ = 0;
  bool has_bias_ = false;
};

class LayerNorm {
 public:
  LayerNorm() = default;
  LayerNorm(ParameterStore& store, const std::string& prefix, int dim, Rng& rng);
  Tensor apply(const Tensor& x) const;

 private:
  Tensor gain_, bias_;
};

class Embedding {
 public:
  Embedding() = default;
  Embedding(ParameterStore& store, const std::string& name, int count, int dim, Rng& rng);
  Tensor rows(const std::vector<int>& ids) const;  // [n, dim]
  Tensor one(int id) const;                        // [dim]
  int dim() const { return dim_; }
  int count() const { return count_; }

 private:
  Tensor table_;
  int count_ = 0, dim_ = 0;
};

// Two-layer position-wise feed-forward with ReLU. `residual` optionally adds
// the input back before returning (the state-update networks keep it off).
class FeedForward {
 public:
  FeedForward() = default;
  FeedForward(ParameterStore& store, const std::string& prefix, int dim, int hidden,
              double dropout_rate, bool residual, Rng& rng);
  Tensor apply(const Tensor& x, const Runtime& rt) const;

 private:
  Linear lin1_, lin2_;
  double dropout_rate_ = 0.0;
  bool residual_ = false;
};

struct AttentionOutput {
  Tensor context;  // [Lq, d_v_total]
  Tensor weights;  // [H * Lq, Lk], head-major blocks; each row sums to 1
};

// Scaled dot-product attention over pre-projected inputs. Splits q/k/v into
// `heads` equal column blocks, applies softmax(q k^T / sqrt(d_k)) per head
// with an optional [Lq, Lk] byte mask, and concatenates the per-head
// contexts. Masked positions get exactly zero weight; a fully masked row
// raises NumericError.
AttentionOutput scaled_dot_attention(const Tensor& q, const Tensor& k, const Tensor& v, int heads,
                                     const std::vector<std::uint8_t>* mask);

// Post-layer-norm Transformer layer: self-attention, optional source
// attention over an external memory, then feed-forward, each wrapped in
// residual + LayerNorm with dropout on the sublayer output. The incremental
// path shares the same projections and produces bitwise-compatible states
// for causal inputs.
class TransformerLayer {
 public:
  TransformerLayer() = default;
  TransformerLayer(ParameterStore& store, const std::string& prefix, int dim, int heads,
                   int ffn_hidden, double dropout_rate, bool with_source_attention, Rng& rng);

  Tensor apply(const Tensor& x, const std::vector<std::uint8_t>* self_mask, const Tensor* memory,
               const Runtime& rt) const;

  // Runs one new position. cache_k/cache_v hold the projected self-attention
  // keys/values of all previous positions (undefined tensors when empty) and
  // are replaced with extended copies; existing rows are never mutated.
  Tensor apply_incremental(const Tensor& x_new, Tensor& cache_k, Tensor& cache_v,
                           const Tensor* memory_k, const Tensor* memory_v,
                           const Runtime& rt) const;

  // Projects an external memory once so incremental steps can reuse it.
  std::pair<Tensor, Tensor> project_memory(const Tensor& memory) const;

 private:
  Linear self_wq_, self_wk_, self_wv_, self_wo_;
  LayerNorm ln_self_;
  bool with_source_ = false;
  Linear src_wq_, src_wk_, src_wv_, src_wo_;
  LayerNorm ln_src_;
  FeedForward ffn_;
  LayerNorm ln_ffn_;
  int dim_ = 0, heads_ = 0;
  double dropout_rate_ = 0.0;
};

// Character-level CNN: embeds characters, convolves every `ngram` window
// through a single filter bank, max-pools over time and projects to the
// output size. Words shorter than the window are padded with `pad_id`.
class CharCnn {
 public:
  CharCnn() = default;
  CharCnn(ParameterStore& store, const std::string& prefix, int char_vocab, int char_dim,
          int filters, int ngram, int out_dim, Rng& rng);
  Tensor apply(const std::vector<int>& char_ids, int pad_id) const;  // -> [out_dim]
  int out_dim() const { return out_dim_; }

 private:
  Embedding char_emb_;
  Linear conv_, proj_;
  int ngram_ = 3;
  int out_dim_ = 0;
};

}  // namespace gsamr
