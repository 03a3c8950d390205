#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gsamr/corpus.hpp"
#include "gsamr/inference.hpp"
#include "gsamr/model.hpp"
#include "gsamr/oracle.hpp"

namespace gsamr {

struct TrainConfig {
  int max_steps = 60000;
  int switch_step = 50000;  // mixed sibling order up to here, deterministic after
  int warmup = 2000;
  double lr_factor = 1.0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double clip_norm = 1.0;
  double feature_mask_rate = 0.33;
  int batch_size = 8;
  std::uint64_t seed = 42;
  int eval_interval = 200;  // steps between dev evaluations
  int patience = 20;        // dev evaluations without improvement
  double stop_score = 1.0;  // stop once dev smatch reaches this
  // Weight of the complement term that pushes max-over-heads mass away from
  // non-source nodes; without it, heads that never win a gold source are
  // unconstrained and per-head argmax decoding emits spurious edges.
  double edge_negative_weight = 1.0;
  // Supervise concept and edge likelihoods at every reasoning round (mean
  // over rounds) instead of the final round only. With final-round-only
  // supervision the relation attention can park on the dummy node in early
  // rounds, the concept solver loses its view of the graph, and training
  // settles at a prefix-blind distribution that decodes to garbage.
  bool round_supervision = true;

  void validate() const;
  std::map<std::string, std::string> to_map() const;
  static TrainConfig from_map(const std::map<std::string, std::string>& kv);
};

// Optimizer moments, RNG and data-order position; serializable so that a
// resumed run reproduces the exact updates of an uninterrupted one.
struct TrainState {
  long long step = 0;
  double best_dev = -1.0;
  long long best_step = -1;
  int evals_since_best = 0;
  Rng rng;
  std::vector<int> perm;
  std::size_t cursor = 0;
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> moments;

  std::string serialize() const;
  static TrainState deserialize(const std::string& bytes);
};

// Inverse-square-root schedule with linear warm-up.
double lr_schedule(long long step, int warmup, int d_model, double factor = 1.0);

// Replaces lemma, POS and NER strings independently with the UNK sentinel at
// the given rate; surfaces and characters are untouched, so the copy
// channels still see the real text.
CorpusRecord mask_features(const CorpusRecord& record, double rate, Rng& rng);

enum class OraclePhase { Mixed, Deterministic };

// Mixed phase flips a fair coin per example between the random and the
// frequency-sorted sibling order; the deterministic phase always sorts.
std::vector<OracleStep> make_oracle(const AmrGraph& graph, OraclePhase phase,
                                    const RelationFrequency& freq, Rng& rng);

struct StepLoss {
  Tensor total;
  double concept_part = 0.0;
  double edge_part = 0.0;
  double label_part = 0.0;
};

// Teacher-forced loss over all oracle steps of one sentence. Gold concepts
// populate the graph encoder; edge labels are always scored at the final
// round, concept and edge identification at every round when
// round_supervision is set. `encode_record` may carry masked features while
// `record` supplies the copy channels.
StepLoss step_loss(const ParserModel& model, const CorpusRecord& record,
                   const CorpusRecord& encode_record, const ContextVectors* ctx,
                   const std::vector<OracleStep>& oracle, const Runtime& rt,
                   double edge_negative_weight, bool round_supervision = true);

class Adam {
 public:
  // Applies one update with global-norm clipping; moments live in `state`.
  static void update(ParameterStore& store, TrainState& state, const TrainConfig& cfg, double lr);
};

struct TrainResult {
  Checkpoint best;
  Checkpoint last;
  double best_dev = -1.0;
  long long best_step = -1;
  long long steps_run = 0;
  std::string final_state;  // serialized TrainState for resumption
};

using TrainLogger = std::function<void(const std::string& json_line)>;

// Full training loop: shuffled batches, ADAM with warm-up schedule, periodic
// greedy-decoding dev evaluation, early stopping on the dev score. Gold
// graphs come from the records' Penman strings (already preprocessed).
TrainResult train(ParserModel& model, const std::vector<CorpusRecord>& train_set,
                  const std::vector<CorpusRecord>& dev_set, const ContextVectors* ctx,
                  const TrainConfig& cfg, const TrainLogger& log,
                  TrainState* resume_state = nullptr);

}  // namespace gsamr
