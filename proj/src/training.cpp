#include "gsamr/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>

#include "gsamr/error.hpp"
#include "gsamr/penman.hpp"
#include "gsamr/senses.hpp"
#include "gsamr/smatch.hpp"
#include "json.hpp"

namespace gsamr {

void TrainConfig::validate() const {
  if (max_steps < 1) throw UsageError("train: max_steps must be >= 1");
  if (switch_step > max_steps) throw UsageError("train: switch_step must be <= max_steps");
  if (warmup < 1) throw UsageError("train: warmup must be >= 1");
  if (feature_mask_rate < 0.0 || feature_mask_rate > 1.0) {
    throw UsageError("train: feature_mask_rate must be in [0,1]");
  }
  if (batch_size < 1) throw UsageError("train: batch_size must be >= 1");
  if (eval_interval < 1) throw UsageError("train: eval_interval must be >= 1");
  if (patience < 1) throw UsageError("train: patience must be >= 1");
  if (edge_negative_weight < 0.0) throw UsageError("train: edge_negative_weight must be >= 0");
}

namespace {

std::string fmt17(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

std::map<std::string, std::string> TrainConfig::to_map() const {
  std::map<std::string, std::string> kv;
  kv["max_steps"] = std::to_string(max_steps);
  kv["switch_step"] = std::to_string(switch_step);
  kv["warmup"] = std::to_string(warmup);
  kv["lr_factor"] = fmt17(lr_factor);
  kv["adam_beta1"] = fmt17(adam_beta1);
  kv["adam_beta2"] = fmt17(adam_beta2);
  kv["adam_eps"] = fmt17(adam_eps);
  kv["clip_norm"] = fmt17(clip_norm);
  kv["feature_mask_rate"] = fmt17(feature_mask_rate);
  kv["batch_size"] = std::to_string(batch_size);
  kv["train_seed"] = std::to_string(seed);
  kv["eval_interval"] = std::to_string(eval_interval);
  kv["patience"] = std::to_string(patience);
  kv["stop_score"] = fmt17(stop_score);
  kv["edge_negative_weight"] = fmt17(edge_negative_weight);
  kv["round_supervision"] = round_supervision ? "true" : "false";
  return kv;
}

TrainConfig TrainConfig::from_map(const std::map<std::string, std::string>& kv) {
  TrainConfig c;
  auto geti = [&](const char* k, int fallback) {
    auto it = kv.find(k);
    return it == kv.end() ? fallback : std::stoi(it->second);
  };
  auto getd = [&](const char* k, double fallback) {
    auto it = kv.find(k);
    return it == kv.end() ? fallback : std::stod(it->second);
  };
  c.max_steps = geti("max_steps", c.max_steps);
  c.switch_step = geti("switch_step", c.switch_step);
  c.warmup = geti("warmup", c.warmup);
  c.lr_factor = getd("lr_factor", c.lr_factor);
  c.adam_beta1 = getd("adam_beta1", c.adam_beta1);
  c.adam_beta2 = getd("adam_beta2", c.adam_beta2);
  c.adam_eps = getd("adam_eps", c.adam_eps);
  c.clip_norm = getd("clip_norm", c.clip_norm);
  c.feature_mask_rate = getd("feature_mask_rate", c.feature_mask_rate);
  c.batch_size = geti("batch_size", c.batch_size);
  auto it = kv.find("train_seed");
  if (it != kv.end()) c.seed = std::stoull(it->second);
  c.eval_interval = geti("eval_interval", c.eval_interval);
  c.patience = geti("patience", c.patience);
  c.stop_score = getd("stop_score", c.stop_score);
  c.edge_negative_weight = getd("edge_negative_weight", c.edge_negative_weight);
  auto rs = kv.find("round_supervision");
  if (rs != kv.end()) c.round_supervision = rs->second == "true" || rs->second == "1";
  c.validate();
  return c;
}

double lr_schedule(long long step, int warmup, int d_model, double factor) {
  if (step < 1) throw UsageError("lr_schedule: step must be >= 1");
  const double s = static_cast<double>(step);
  const double w = static_cast<double>(warmup);
  return factor * std::pow(static_cast<double>(d_model), -0.5) *
         std::min(std::pow(s, -0.5), s * std::pow(w, -1.5));
}

CorpusRecord mask_features(const CorpusRecord& record, double rate, Rng& rng) {
  CorpusRecord out = record;
  if (rate <= 0.0) return out;
  for (std::size_t i = 0; i < out.tokens.size(); ++i) {
    if (rng.uniform() < rate) out.lemmas[i] = kUnkToken;
    if (rng.uniform() < rate) out.pos[i] = kUnkToken;
    if (rng.uniform() < rate) out.ner[i] = kUnkToken;
  }
  return out;
}

std::vector<OracleStep> make_oracle(const AmrGraph& graph, OraclePhase phase,
                                    const RelationFrequency& freq, Rng& rng) {
  if (phase == OraclePhase::Mixed && rng.coin()) {
    return bfs_order(graph, SiblingOrder::Random, &freq, rng.next_u64());
  }
  return bfs_order(graph, SiblingOrder::FrequencySorted, &freq, 0);
}

namespace {

constexpr double kProbFloor = 1e-12;

Tensor nll_of_probability(const Tensor& probs, int index) {
  return neg(log_of(clamp_min(at(probs, index), kProbFloor)));
}

}  // namespace

namespace {

// Pointing loss for one round: gold sources carry high max-over-heads mass
// (the dummy stands in when the step has none), non-sources are pushed down
// through the weighted complement.
Tensor edge_round_loss(const EdgeScores& edges, const std::vector<int>& gold_nodes,
                       double negative_weight) {
  const Tensor& beta = edges.combined;
  const int m1 = beta.shape()[0];
  std::vector<char> is_gold(static_cast<std::size_t>(m1), 0);
  for (int gi : gold_nodes) is_gold[static_cast<std::size_t>(gi)] = 1;

  Tensor log_beta = log_of(clamp_min(beta, kProbFloor));
  Tensor term =
      neg(gather_sum(log_beta, gold_nodes.empty() ? std::vector<int>{0} : gold_nodes));
  if (negative_weight > 0.0) {
    std::vector<int> negatives;
    for (int i = 1; i < m1; ++i) {
      if (!is_gold[static_cast<std::size_t>(i)]) negatives.push_back(i);
    }
    if (!negatives.empty()) {
      Tensor log_comp = log_of(clamp_min(sub(Tensor::constant({m1}, 1.0), beta), kProbFloor));
      term = add(term, scale(neg(gather_sum(log_comp, negatives)), negative_weight));
    }
  }
  return term;
}

}  // namespace

StepLoss step_loss(const ParserModel& model, const CorpusRecord& record,
                   const CorpusRecord& encode_record, const ContextVectors* ctx,
                   const std::vector<OracleStep>& oracle, const Runtime& rt,
                   double edge_negative_weight, bool round_supervision) {
  if (oracle.empty()) throw DataError("step_loss: empty oracle");
  StepLoss out;

  TextMemory text = model.encode_sentence(encode_record, ctx, rt);
  Tensor text_values = model.text_value_matrix(text);
  const CandidateSet candidates =
      CandidateSet::build(model.vocab().concepts, record.lemmas, record.tokens);

  // Teacher forcing: the gold concept sequence feeds the graph encoder once;
  // the causal mask makes every prefix slice identical to an incremental
  // encoding.
  std::vector<std::string> concepts;
  for (const OracleStep& s : oracle) {
    if (s.label != kEogToken) concepts.push_back(s.label);
  }
  Tensor graph_full = model.graph_encoder().encode_full(concepts, text, rt);
  const int rounds = model.config().inference_steps;
  const Vocabulary& labels = model.vocab().edge_labels;

  Tensor total;
  auto accumulate = [&total](const Tensor& t) { total = total.defined() ? add(total, t) : t; };

  for (std::size_t si = 0; si < oracle.size(); ++si) {
    const OracleStep& step = oracle[si];
    Tensor graph_view = slice_rows(graph_full, 0, static_cast<int>(si) + 1);
    IterationResult it = model.iterate(text, text_values, graph_view, rounds, rt);
    const int gold_id = candidates.id(step.label);
    std::vector<int> gold_nodes;
    for (const auto& [src, label] : step.sources) gold_nodes.push_back(src + 1);

    const int first_round = round_supervision ? 0 : rounds - 1;
    const double round_scale = 1.0 / (rounds - first_round);

    Tensor concept_term, edge_term, label_term;
    for (int t = first_round; t < rounds; ++t) {
      ConceptPrediction pred = model.concept_solver().predict(
          it.round_concept_queries[static_cast<std::size_t>(t)],
          it.round_alphas[static_cast<std::size_t>(t)], text, text_values, candidates);
      Tensor c = gold_id >= 0 ? nll_of_probability(pred.combined, gold_id)
                              : Tensor::constant({1}, -std::log(kProbFloor));
      concept_term = concept_term.defined() ? add(concept_term, c) : c;

      Tensor e = edge_round_loss(it.round_edges[static_cast<std::size_t>(t)], gold_nodes,
                                 edge_negative_weight);
      edge_term = edge_term.defined() ? add(edge_term, e) : e;

      // edge labels via the biaffine classifier on the round's closing state
      for (const auto& [src, label] : step.sources) {
        Tensor lp = model.labeler().log_probs(it.round_graph_queries[static_cast<std::size_t>(t)],
                                              row(graph_view, src + 1));
        Tensor l = neg(at(lp, labels.id(label)));
        label_term = label_term.defined() ? add(label_term, l) : l;
      }
    }
    concept_term = scale(concept_term, round_scale);
    edge_term = scale(edge_term, round_scale);
    out.concept_part += concept_term.scalar();
    out.edge_part += edge_term.scalar();
    accumulate(concept_term);
    accumulate(edge_term);
    if (label_term.defined()) {
      label_term = scale(label_term, round_scale);
      out.label_part += label_term.scalar();
      accumulate(label_term);
    }
  }
  out.total = total;
  if (!std::isfinite(out.total.scalar())) throw NumericError("step_loss: non-finite loss");
  return out;
}

void Adam::update(ParameterStore& store, TrainState& state, const TrainConfig& cfg, double lr) {
  // global-norm clipping first
  double sq = 0.0;
  for (const auto& [name, t] : store.all()) {
    for (double g : t.grad()) sq += g * g;
  }
  const double norm = std::sqrt(sq);
  const double clip_scale =
      (cfg.clip_norm > 0.0 && norm > cfg.clip_norm) ? cfg.clip_norm / norm : 1.0;

  const double b1 = cfg.adam_beta1, b2 = cfg.adam_beta2;
  const double bias1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double bias2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  for (const auto& [name, param] : store.all()) {
    Tensor t = param;  // shared handle; leaf values are mutable through it
    auto& [m, v] = state.moments[name];
    const std::vector<double>& grad = t.grad();
    if (m.size() != grad.size()) {
      m.assign(grad.size(), 0.0);
      v.assign(grad.size(), 0.0);
    }
    std::vector<double>& values = t.leaf_values();
    for (std::size_t i = 0; i < grad.size(); ++i) {
      const double g = grad[i] * clip_scale;
      m[i] = b1 * m[i] + (1.0 - b1) * g;
      v[i] = b2 * v[i] + (1.0 - b2) * g * g;
      const double mhat = m[i] / bias1;
      const double vhat = v[i] / bias2;
      values[i] -= lr * mhat / (std::sqrt(vhat) + cfg.adam_eps);
    }
  }
}

// --- train state serialization ---------------------------------------------

namespace {

void put_u64(std::string& out, std::uint64_t v) {
  char buf[8];
  std::memcpy(buf, &v, 8);
  out.append(buf, 8);
}

void put_f64(std::string& out, double v) {
  char buf[8];
  std::memcpy(buf, &v, 8);
  out.append(buf, 8);
}

void put_str(std::string& out, const std::string& s) {
  put_u64(out, s.size());
  out += s;
}

std::uint64_t take_u64(const std::string& in, std::size_t& pos) {
  if (pos + 8 > in.size()) throw DataError("train state: truncated");
  std::uint64_t v;
  std::memcpy(&v, in.data() + pos, 8);
  pos += 8;
  return v;
}

double take_f64(const std::string& in, std::size_t& pos) {
  if (pos + 8 > in.size()) throw DataError("train state: truncated");
  double v;
  std::memcpy(&v, in.data() + pos, 8);
  pos += 8;
  return v;
}

std::string take_str(const std::string& in, std::size_t& pos) {
  const std::uint64_t n = take_u64(in, pos);
  if (pos + n > in.size()) throw DataError("train state: truncated");
  std::string s = in.substr(pos, n);
  pos += n;
  return s;
}

void put_vec(std::string& out, const std::vector<double>& v) {
  put_u64(out, v.size());
  const std::size_t off = out.size();
  out.resize(off + v.size() * 8);
  std::memcpy(out.data() + off, v.data(), v.size() * 8);
}

std::vector<double> take_vec(const std::string& in, std::size_t& pos) {
  const std::uint64_t n = take_u64(in, pos);
  if (pos + n * 8 > in.size()) throw DataError("train state: truncated");
  std::vector<double> v(n);
  std::memcpy(v.data(), in.data() + pos, n * 8);
  pos += n * 8;
  return v;
}

}  // namespace

std::string TrainState::serialize() const {
  std::string out = "GSAMRTS1";
  put_u64(out, static_cast<std::uint64_t>(step));
  put_f64(out, best_dev);
  put_u64(out, static_cast<std::uint64_t>(best_step + 1));
  put_u64(out, static_cast<std::uint64_t>(evals_since_best));
  put_str(out, rng.serialize());
  put_u64(out, perm.size());
  for (int p : perm) put_u64(out, static_cast<std::uint64_t>(p));
  put_u64(out, cursor);
  put_u64(out, moments.size());
  for (const auto& [name, mv] : moments) {
    put_str(out, name);
    put_vec(out, mv.first);
    put_vec(out, mv.second);
  }
  return out;
}

TrainState TrainState::deserialize(const std::string& bytes) {
  if (bytes.size() < 8 || bytes.compare(0, 8, "GSAMRTS1") != 0) {
    throw DataError("train state: bad magic");
  }
  std::size_t pos = 8;
  TrainState st;
  st.step = static_cast<long long>(take_u64(bytes, pos));
  st.best_dev = take_f64(bytes, pos);
  st.best_step = static_cast<long long>(take_u64(bytes, pos)) - 1;
  st.evals_since_best = static_cast<int>(take_u64(bytes, pos));
  st.rng.deserialize(take_str(bytes, pos));
  const std::uint64_t perm_size = take_u64(bytes, pos);
  st.perm.resize(perm_size);
  for (auto& p : st.perm) p = static_cast<int>(take_u64(bytes, pos));
  st.cursor = static_cast<std::size_t>(take_u64(bytes, pos));
  const std::uint64_t count = take_u64(bytes, pos);
  for (std::uint64_t i = 0; i < count; ++i) {
    std::string name = take_str(bytes, pos);
    auto m = take_vec(bytes, pos);
    auto v = take_vec(bytes, pos);
    st.moments[name] = {std::move(m), std::move(v)};
  }
  return st;
}

// --- training loop ----------------------------------------------------------

namespace {

struct GoldExample {
  const CorpusRecord* record;
  AmrGraph graph;
};

std::vector<GoldExample> parse_gold(const std::vector<CorpusRecord>& records) {
  std::vector<GoldExample> out;
  out.reserve(records.size());
  for (const CorpusRecord& r : records) {
    if (r.graph.empty()) throw DataError("record '" + r.id + "' has no gold graph");
    try {
      out.push_back({&r, parse_penman(r.graph)});
    } catch (const DataError& e) {
      throw DataError("record '" + r.id + "': " + e.what());
    }
  }
  return out;
}

double dev_smatch(const ParserModel& model, const std::vector<GoldExample>& dev,
                  const ContextVectors* ctx) {
  std::vector<AmrGraph> pred, gold;
  ParseOptions opts;
  opts.restore_senses = false;  // dev gold is preprocessed; compare like with like
  for (const GoldExample& ex : dev) {
    ParseResult r = parse_greedy(model, *ex.record, ctx, opts);
    pred.push_back(r.graph.empty() ? AmrGraph() : r.graph);
    gold.push_back(ex.graph);
  }
  // empty parses score zero against their gold
  long long matched = 0, left = 0, right = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const TripleSet gt = TripleSet::from_graph(gold[i]);
    right += gt.total();
    if (pred[i].empty()) continue;
    MatchResult m = smatch(pred[i], gold[i]);
    matched += m.matched;
    left += m.total_left;
  }
  const long long denom = left + right;
  return denom ? 2.0 * static_cast<double>(matched) / static_cast<double>(denom) : 1.0;
}

}  // namespace

TrainResult train(ParserModel& model, const std::vector<CorpusRecord>& train_set,
                  const std::vector<CorpusRecord>& dev_set, const ContextVectors* ctx,
                  const TrainConfig& cfg, const TrainLogger& log, TrainState* resume_state) {
  cfg.validate();
  if (train_set.empty()) throw DataError("train: empty training corpus");
  if (dev_set.empty()) throw DataError("train: empty dev corpus");
  const std::vector<GoldExample> train_gold = parse_gold(train_set);
  const std::vector<GoldExample> dev_gold = parse_gold(dev_set);
  const RelationFrequency& freq = model.vocab().relation_freq;

  TrainState local;
  TrainState& st = resume_state ? *resume_state : local;
  if (!resume_state) {
    st.rng = Rng(cfg.seed);
    st.perm.resize(train_gold.size());
    for (std::size_t i = 0; i < st.perm.size(); ++i) st.perm[i] = static_cast<int>(i);
    st.rng.shuffle(st.perm);
    st.cursor = 0;
  }

  TrainResult result;
  Checkpoint best_ck;
  bool have_best = false;

  auto emit = [&](const nlohmann::json& j) {
    if (log) log(j.dump());
  };

  while (st.step < cfg.max_steps) {
    ++st.step;
    const OraclePhase phase =
        st.step <= cfg.switch_step ? OraclePhase::Mixed : OraclePhase::Deterministic;

    model.store().zero_grads();
    double loss_sum = 0.0, concept_sum = 0.0, edge_sum = 0.0, label_sum = 0.0;
    Tensor batch_total;
    Runtime rt;
    rt.training = true;
    rt.rng = &st.rng;
    for (int b = 0; b < cfg.batch_size; ++b) {
      if (st.cursor >= st.perm.size()) {
        st.rng.shuffle(st.perm);
        st.cursor = 0;
      }
      const GoldExample& ex = train_gold[static_cast<std::size_t>(st.perm[st.cursor])];
      ++st.cursor;

      const CorpusRecord masked = mask_features(*ex.record, cfg.feature_mask_rate, st.rng);
      const std::vector<OracleStep> oracle = make_oracle(ex.graph, phase, freq, st.rng);
      StepLoss sl = step_loss(model, *ex.record, masked, ctx, oracle, rt,
                              cfg.edge_negative_weight, cfg.round_supervision);
      batch_total = batch_total.defined() ? add(batch_total, sl.total) : sl.total;
      loss_sum += sl.total.scalar();
      concept_sum += sl.concept_part;
      edge_sum += sl.edge_part;
      label_sum += sl.label_part;
    }
    Tensor objective = scale(batch_total, 1.0 / cfg.batch_size);
    objective.backward();
    const double lr = lr_schedule(st.step, cfg.warmup, model.config().d_model, cfg.lr_factor);
    Adam::update(model.store(), st, cfg, lr);

    emit({{"event", "step"},
          {"step", st.step},
          {"lr", lr},
          {"loss", loss_sum / cfg.batch_size},
          {"concept_loss", concept_sum / cfg.batch_size},
          {"edge_loss", edge_sum / cfg.batch_size},
          {"label_loss", label_sum / cfg.batch_size},
          {"phase", phase == OraclePhase::Mixed ? "mixed" : "deterministic"}});

    if (st.step % cfg.eval_interval == 0 || st.step == cfg.max_steps) {
      const double score = dev_smatch(model, dev_gold, ctx);
      emit({{"event", "dev"}, {"step", st.step}, {"dev_smatch", score}});
      if (score > st.best_dev) {
        st.best_dev = score;
        st.best_step = st.step;
        st.evals_since_best = 0;
        best_ck = model.to_checkpoint({{"step", std::to_string(st.step)},
                                       {"dev_smatch", fmt17(score)}});
        have_best = true;
      } else {
        ++st.evals_since_best;
      }
      if (st.best_dev >= cfg.stop_score || st.evals_since_best >= cfg.patience) break;
    }
  }

  result.last = model.to_checkpoint({{"step", std::to_string(st.step)},
                                     {"dev_smatch", fmt17(st.best_dev)}});
  if (!have_best) {
    best_ck = result.last;
    st.best_step = st.step;
    st.best_dev = dev_smatch(model, dev_gold, ctx);
  }
  result.best = best_ck;
  result.best_dev = st.best_dev;
  result.best_step = st.best_step;
  result.steps_run = st.step;
  result.final_state = st.serialize();
  emit({{"event", "done"},
        {"steps", st.step},
        {"best_step", st.best_step},
        {"best_dev", st.best_dev}});
  return result;
}

}  // namespace gsamr
