#include "gsamr/solvers.hpp"

#include <algorithm>
#include <cmath>

#include "gsamr/error.hpp"

namespace gsamr {

CandidateSet CandidateSet::build(const Vocabulary& concepts,
                                 const std::vector<std::string>& lemmas,
                                 const std::vector<std::string>& surfaces) {
  if (lemmas.size() != surfaces.size()) throw DataError("candidate set: length mismatch");
  CandidateSet cs;
  cs.vocab_size = concepts.size();
  cs.names.reserve(static_cast<std::size_t>(concepts.size()) + 2 * lemmas.size());
  for (int i = 0; i < concepts.size(); ++i) {
    cs.names.push_back(concepts.entry(i));
    cs.index[concepts.entry(i)] = i;
  }
  auto intern = [&cs](const std::string& name) {
    auto it = cs.index.find(name);
    if (it != cs.index.end()) return it->second;
    const int id = static_cast<int>(cs.names.size());
    cs.names.push_back(name);
    cs.index[name] = id;
    return id;
  };
  cs.lemma_positions.resize(cs.names.size());
  cs.surface_positions.resize(cs.names.size());
  auto grow = [&cs](std::size_t n) {
    cs.lemma_positions.resize(n);
    cs.surface_positions.resize(n);
  };
  for (std::size_t i = 0; i < lemmas.size(); ++i) {
    const int lid = intern(lemmas[i]);
    grow(cs.names.size());
    cs.lemma_positions[static_cast<std::size_t>(lid)].push_back(static_cast<int>(i));
    const int sid = intern(surfaces[i]);
    grow(cs.names.size());
    cs.surface_positions[static_cast<std::size_t>(sid)].push_back(static_cast<int>(i));
  }
  return cs;
}

int CandidateSet::id(const std::string& name) const {
  auto it = index.find(name);
  return it == index.end() ? -1 : it->second;
}

ConceptSolver::ConceptSolver(ParameterStore& store, const RunConfig& cfg, int concept_vocab,
                             Rng& rng)
    : d_(cfg.d_model) {
  wq_ = Linear(store, "concept.wq", cfg.d_model, cfg.d_model, false, rng);
  wk_ = Linear(store, "concept.wk", cfg.d_model, cfg.d_model, false, rng);
  w_vocab_ = Linear(store, "concept.vocab", cfg.d_model, concept_vocab, true, rng);
  w_switch_ = Linear(store, "concept.switch", cfg.d_model, 3, false, rng);
}

Tensor ConceptSolver::attention(const Tensor& state, const TextMemory& text) const {
  const int n = text.tokens();
  Tensor tokens = slice_rows(text.states, 1, n);  // exclude BOS
  Tensor q = wq_.apply(state);                    // [d]
  Tensor keys = wk_.apply(tokens);                // [n, d]
  Tensor scores = scale(matvec(keys, q), 1.0 / std::sqrt(static_cast<double>(d_)));
  return reshape(softmax_rows(reshape(scores, Shape{1, n})), Shape{n});
}

ConceptPrediction ConceptSolver::predict(const Tensor& state, const Tensor& alpha,
                                         const TextMemory& text, const Tensor& text_values,
                                         const CandidateSet& candidates) const {
  (void)text;
  ConceptPrediction out;
  out.alpha = alpha;
  // MLP(alpha) = (W_v h_{1:n}) alpha + y
  Tensor ctx = add(vecmat(alpha, text_values), state);  // [d]
  out.vocab_probs = reshape(softmax_rows(reshape(w_vocab_.apply(ctx), Shape{1, w_vocab_.out_dim()})),
                            Shape{w_vocab_.out_dim()});
  out.switch_probs = reshape(softmax_rows(reshape(w_switch_.apply(ctx), Shape{1, 3})), Shape{3});

  // Combined mass per candidate:
  //   P(c) = p0 * Pvocab(c) + p1 * sum_{i in L(c)} alpha[i]
  //        + p2 * sum_{i in T(c)} alpha[i]
  const int total = static_cast<int>(candidates.names.size());
  const int vc = candidates.vocab_size;
  std::vector<double> combined(static_cast<std::size_t>(total), 0.0);
  const auto& pv = out.vocab_probs.values();
  const auto& sw = out.switch_probs.values();
  const auto& al = alpha.values();
  for (int c = 0; c < vc; ++c) combined[static_cast<std::size_t>(c)] = sw[0] * pv[static_cast<std::size_t>(c)];
  for (int c = 0; c < total; ++c) {
    for (int i : candidates.lemma_positions[static_cast<std::size_t>(c)]) {
      combined[static_cast<std::size_t>(c)] += sw[1] * al[static_cast<std::size_t>(i)];
    }
    for (int i : candidates.surface_positions[static_cast<std::size_t>(c)]) {
      combined[static_cast<std::size_t>(c)] += sw[2] * al[static_cast<std::size_t>(i)];
    }
  }

  // Custom op: routes gradients to the vocab distribution, the switch and
  // the attention weights.
  out.combined = make_op_result(
      Shape{total}, std::move(combined), {out.vocab_probs, out.switch_probs, alpha},
      [vn = out.vocab_probs.node(), sn = out.switch_probs.node(), an = alpha.node(), vc, total,
       lemma_pos = candidates.lemma_positions,
       surface_pos = candidates.surface_positions](detail::Node& n) {
        const auto& g = n.grad;
        if (vn->requires_grad) {
          for (int c = 0; c < vc; ++c) {
            vn->grad[static_cast<std::size_t>(c)] += g[static_cast<std::size_t>(c)] * sn->val[0];
          }
        }
        if (sn->requires_grad) {
          for (int c = 0; c < vc; ++c) {
            sn->grad[0] += g[static_cast<std::size_t>(c)] * vn->val[static_cast<std::size_t>(c)];
          }
          for (int c = 0; c < total; ++c) {
            double lsum = 0.0, tsum = 0.0;
            for (int i : lemma_pos[static_cast<std::size_t>(c)]) lsum += an->val[static_cast<std::size_t>(i)];
            for (int i : surface_pos[static_cast<std::size_t>(c)]) tsum += an->val[static_cast<std::size_t>(i)];
            sn->grad[1] += g[static_cast<std::size_t>(c)] * lsum;
            sn->grad[2] += g[static_cast<std::size_t>(c)] * tsum;
          }
        }
        if (an->requires_grad) {
          for (int c = 0; c < total; ++c) {
            for (int i : lemma_pos[static_cast<std::size_t>(c)]) {
              an->grad[static_cast<std::size_t>(i)] += g[static_cast<std::size_t>(c)] * sn->val[1];
            }
            for (int i : surface_pos[static_cast<std::size_t>(c)]) {
              an->grad[static_cast<std::size_t>(i)] += g[static_cast<std::size_t>(c)] * sn->val[2];
            }
          }
        }
      },
      "concept_mixture");
  return out;
}

RelationSolver::RelationSolver(ParameterStore& store, const RunConfig& cfg, Rng& rng)
    : heads_(cfg.rel_heads), dk_(cfg.d_model / cfg.rel_heads), d_(cfg.d_model) {
  for (int h = 0; h < heads_; ++h) {
    const std::string p = "relation.head" + std::to_string(h);
    wq_.emplace_back(store, p + ".wq", d_, dk_, false, rng);
    wk_.emplace_back(store, p + ".wk", d_, dk_, false, rng);
    wv_.emplace_back(store, p + ".wv", d_, d_, false, rng);
  }
}

EdgeScores RelationSolver::attention(const Tensor& state, const Tensor& graph_states) const {
  const int m1 = graph_states.shape()[0];
  const double inv = 1.0 / std::sqrt(static_cast<double>(dk_));
  std::vector<Tensor> rows;
  rows.reserve(static_cast<std::size_t>(heads_));
  for (int h = 0; h < heads_; ++h) {
    Tensor q = wq_[static_cast<std::size_t>(h)].apply(state);            // [dk]
    Tensor keys = wk_[static_cast<std::size_t>(h)].apply(graph_states);  // [m+1, dk]
    Tensor scores = scale(matvec(keys, q), inv);
    rows.push_back(softmax_rows(reshape(scores, Shape{1, m1})));
  }
  EdgeScores out;
  out.per_head = heads_ == 1 ? rows[0] : concat_rows(rows);  // [H, m+1]
  out.combined = max_over_rows(out.per_head);                // [m+1]
  return out;
}

Tensor RelationSolver::value_readout(const EdgeScores& scores, const Tensor& graph_states) const {
  Tensor sum;
  for (int h = 0; h < heads_; ++h) {
    Tensor values = wv_[static_cast<std::size_t>(h)].apply(graph_states);  // [m+1, d]
    Tensor beta_h = row(scores.per_head, h);                               // [m+1]
    Tensor term = vecmat(beta_h, values);                                  // [d]
    sum = sum.defined() ? add(sum, term) : term;
  }
  return sum;
}

std::vector<int> extract_edges(const EdgeScores& scores, bool first_node) {
  if (first_node) return {};
  const int m1 = scores.nodes();
  const int heads = scores.per_head.shape()[0];
  const auto& w = scores.per_head.values();
  std::vector<int> picks;
  for (int h = 0; h < heads; ++h) {
    int arg = 0;
    double best = -1.0;
    for (int i = 0; i < m1; ++i) {
      const double x = w[static_cast<std::size_t>(h) * m1 + i];
      if (x > best) {
        best = x;
        arg = i;
      }
    }
    if (arg != 0) picks.push_back(arg);
  }
  std::sort(picks.begin(), picks.end());
  picks.erase(std::unique(picks.begin(), picks.end()), picks.end());
  if (picks.empty()) {
    // every head pointed at the dummy: attach to the strongest real node
    const auto& c = scores.combined.values();
    int arg = 1;
    double best = -1.0;
    for (int i = 1; i < m1; ++i) {
      if (c[static_cast<std::size_t>(i)] > best) {
        best = c[static_cast<std::size_t>(i)];
        arg = i;
      }
    }
    picks.push_back(arg);
  }
  return picks;
}

BiaffineLabeler::BiaffineLabeler(ParameterStore& store, const RunConfig& cfg, int label_count,
                                 Rng& rng)
    : labels_(label_count), hidden_(cfg.biaffine_hidden) {
  head_proj_ = Linear(store, "labeler.head", cfg.d_model, hidden_, true, rng);
  dep_proj_ = Linear(store, "labeler.dep", cfg.d_model, hidden_, true, rng);
  bilinear_ = store.create("labeler.bilinear", Shape{labels_ * hidden_, hidden_},
                           Init::XavierUniform, rng);
  linear_ = Linear(store, "labeler.linear", 2 * hidden_, labels_, true, rng);
}

Tensor BiaffineLabeler::log_probs(const Tensor& head_state, const Tensor& dep_state) const {
  Tensor f = relu(head_proj_.apply(head_state));  // [hidden]
  Tensor g = relu(dep_proj_.apply(dep_state));    // [hidden]
  // score_l = f^T U_l g + u_l^T [f; g] + b_l
  Tensor ug = matvec(bilinear_, g);                       // [L*hidden]
  Tensor bilin = matvec(reshape(ug, Shape{labels_, hidden_}), f);  // [L]
  Tensor lin = linear_.apply(concat_cols({f, g}));        // [L]
  return log_softmax_vec(add(bilin, lin));
}

}  // namespace gsamr
