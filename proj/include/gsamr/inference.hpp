#pragma once

#include <optional>
#include <string>
#include <vector>

#include "gsamr/amr.hpp"
#include "gsamr/model.hpp"

namespace gsamr {

struct ParseOptions {
  int beam = 1;
  int rounds = 0;     // 0: use the checkpoint's inference_steps
  int max_nodes = 0;  // 0: 2 * tokens + 10
  bool diagnostics = false;
  bool restore_senses = true;
};

// One committed expansion, before graph assembly.
struct CommittedStep {
  std::string label;
  std::vector<std::pair<int, std::string>> sources;  // (earlier node index, edge label)
  double log_prob = 0.0;
};

struct StepDiagnostics {
  int step = 0;
  std::vector<std::vector<double>> alpha_rounds;
  std::vector<std::vector<double>> beta_rounds;
  std::vector<std::pair<std::string, double>> top_candidates;
  std::string chosen;
};

struct ParseResult {
  AmrGraph graph;
  bool empty_parse = false;  // EOG predicted before any node
  bool truncated = false;    // node cap reached
  double score = 0.0;        // cumulative step log-likelihood
  ParseStats stats;
  std::vector<StepDiagnostics> diagnostics;
};

// Deterministic candidate ranking shared by greedy and beam decoding:
// probability descending, then candidate string ascending; the UNK/BOS/BOG
// sentinels are never produced.
std::vector<std::pair<int, double>> top_candidates(const Tensor& combined,
                                                   const CandidateSet& candidates, int k);

ParseResult parse_greedy(const ParserModel& model, const CorpusRecord& record,
                         const ContextVectors* ctx, const ParseOptions& opts);

// Beam search over concept choices; edges and labels are taken greedily per
// expansion. Finished hypotheses retire at EOG; the best finished hypothesis
// wins (no length normalization). beam = 1 reproduces greedy decoding
// bitwise.
ParseResult parse_beam(const ParserModel& model, const CorpusRecord& record,
                       const ContextVectors* ctx, const ParseOptions& opts);

}  // namespace gsamr
