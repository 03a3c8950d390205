#include "gsamr/inference.hpp"

#include <algorithm>
#include <cmath>

#include "gsamr/error.hpp"
#include "gsamr/senses.hpp"

namespace gsamr {

namespace {

constexpr double kLogFloor = 1e-12;

double safe_log(double p) { return std::log(std::max(p, kLogFloor)); }

struct PendingEdgeChoice {
  std::vector<std::pair<int, std::string>> sources;
  double log_prob = 0.0;  // edge pointing + labeling log-likelihood
};

// Edge and label decisions for one expansion. They depend only on the
// iteration result, not on which concept a beam branch commits.
PendingEdgeChoice decide_edges(const ParserModel& model, const IterationResult& it,
                               const Tensor& graph_states, bool first_node) {
  PendingEdgeChoice out;
  const auto& beta = it.edges.combined.values();
  if (first_node) {
    // The root has no parent by construction; the step's pointing
    // likelihood is the dummy mass.
    out.log_prob = safe_log(beta[0]);
    return out;
  }
  const Vocabulary& labels = model.vocab().edge_labels;
  for (int node_pos : extract_edges(it.edges, false)) {
    Tensor lp = model.labeler().log_probs(it.graph_query, row(graph_states, node_pos));
    const auto& lv = lp.values();
    int best = 0;
    for (int l = 1; l < static_cast<int>(lv.size()); ++l) {
      if (lv[static_cast<std::size_t>(l)] > lv[static_cast<std::size_t>(best)]) best = l;
    }
    out.sources.emplace_back(node_pos - 1, labels.entry(best));
    out.log_prob += safe_log(beta[static_cast<std::size_t>(node_pos)]) + lv[static_cast<std::size_t>(best)];
  }
  return out;
}

AmrGraph assemble_graph(const std::vector<CommittedStep>& steps) {
  // First pass: which committed nodes look like attributes, and which of
  // them the model nevertheless used as a source or as the root? Those are
  // promoted to plain concepts so the graph always satisfies the attribute
  // invariants, whatever an (undertrained) model predicts.
  std::vector<char> attr(steps.size(), 0);
  for (std::size_t i = 0; i < steps.size(); ++i) {
    attr[i] = looks_like_attribute(steps[i].label);
  }
  if (!steps.empty()) attr[0] = 0;  // the root carries a variable
  for (const CommittedStep& step : steps) {
    for (const auto& [src, label] : step.sources) {
      (void)label;
      attr[static_cast<std::size_t>(src)] = 0;
    }
  }

  AmrGraph g;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const CommittedStep& step = steps[i];
    const int idx = g.add_node("", step.label, attr[i] != 0);
    for (const auto& [src, label] : step.sources) {
      const bool inverse = label.size() > 3 && label.compare(label.size() - 3, 3, "-of") == 0;
      if (inverse && !attr[i]) {
        g.add_edge(idx, src, label.substr(0, label.size() - 3));
      } else if (inverse) {
        // an attribute cannot be a source; keep the edge forward instead
        g.add_edge(src, idx, label.substr(0, label.size() - 3));
      } else {
        g.add_edge(src, idx, label);
      }
    }
  }
  if (!g.empty()) g.set_root(0);
  return g;
}

int resolve_rounds(const ParserModel& model, const ParseOptions& opts) {
  const int rounds = opts.rounds > 0 ? opts.rounds : model.config().inference_steps;
  if (rounds < 1) throw UsageError("parse: inference rounds must be >= 1");
  return rounds;
}

int resolve_cap(const CorpusRecord& record, const ParseOptions& opts) {
  return opts.max_nodes > 0 ? opts.max_nodes : 2 * record.size() + 10;
}

ParseResult finalize(const ParserModel& model, std::vector<CommittedStep> steps, double score,
                     bool empty_parse, bool truncated, ParseStats stats,
                     std::vector<StepDiagnostics> diagnostics, bool restore) {
  ParseResult res;
  res.graph = assemble_graph(steps);
  if (restore && !res.graph.empty()) res.graph = restore_senses(res.graph, model.vocab().senses);
  res.empty_parse = empty_parse;
  res.truncated = truncated;
  res.score = score;
  res.stats = stats;
  res.diagnostics = std::move(diagnostics);
  return res;
}

}  // namespace

std::vector<std::pair<int, double>> top_candidates(const Tensor& combined,
                                                   const CandidateSet& candidates, int k) {
  const auto& p = combined.values();
  std::vector<std::pair<int, double>> order;
  order.reserve(p.size());
  for (int c = 0; c < static_cast<int>(p.size()); ++c) {
    if (c == Vocabulary::kUnk || c == Vocabulary::kBos || c == Vocabulary::kBog) continue;
    order.emplace_back(c, p[static_cast<std::size_t>(c)]);
  }
  std::stable_sort(order.begin(), order.end(), [&](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return candidates.names[static_cast<std::size_t>(a.first)] <
           candidates.names[static_cast<std::size_t>(b.first)];
  });
  if (static_cast<int>(order.size()) > k) order.resize(static_cast<std::size_t>(k));
  return order;
}

ParseResult parse_greedy(const ParserModel& model, const CorpusRecord& record,
                         const ContextVectors* ctx, const ParseOptions& opts) {
  NoGradGuard ng;
  Runtime rt;  // evaluation mode
  const int rounds = resolve_rounds(model, opts);
  const int cap = resolve_cap(record, opts);

  ParseStats stats;
  TextMemory text = model.encode_sentence(record, ctx, rt);
  Tensor text_values = model.text_value_matrix(text);
  const CandidateSet candidates =
      CandidateSet::build(model.vocab().concepts, record.lemmas, record.tokens);

  GraphMemory gm = model.graph_encoder().init_memory(text);
  std::vector<CommittedStep> steps;
  std::vector<StepDiagnostics> diagnostics;
  double score = 0.0;
  bool empty_parse = false, truncated = false;

  for (;;) {
    IterationResult it = model.iterate(text, text_values, gm.states, rounds, rt, &stats);
    ++stats.expansions;
    ConceptPrediction pred =
        model.concept_solver().predict(it.concept_query, it.alpha, text, text_values, candidates);
    const auto top = top_candidates(pred.combined, candidates, 1);
    const std::string& chosen = candidates.names[static_cast<std::size_t>(top[0].first)];

    if (opts.diagnostics) {
      StepDiagnostics d;
      d.step = static_cast<int>(steps.size());
      for (const Tensor& a : it.round_alphas) d.alpha_rounds.push_back(a.values());
      for (const EdgeScores& e : it.round_edges) d.beta_rounds.push_back(e.combined.values());
      for (const auto& [cid, p] : top_candidates(pred.combined, candidates, 5)) {
        d.top_candidates.emplace_back(candidates.names[static_cast<std::size_t>(cid)], p);
      }
      d.chosen = chosen;
      diagnostics.push_back(std::move(d));
    }

    if (chosen == kEogToken) {
      score += safe_log(top[0].second) + safe_log(it.edges.combined.values()[0]);
      empty_parse = steps.empty();
      break;
    }
    const PendingEdgeChoice edges = decide_edges(model, it, gm.states, steps.empty());
    CommittedStep step;
    step.label = chosen;
    step.sources = edges.sources;
    step.log_prob = safe_log(top[0].second) + edges.log_prob;
    score += step.log_prob;
    steps.push_back(step);
    if (static_cast<int>(steps.size()) >= cap) {
      truncated = true;
      break;
    }
    gm = model.graph_encoder().append(gm, chosen);
  }
  return finalize(model, std::move(steps), score, empty_parse, truncated, stats,
                  std::move(diagnostics), opts.restore_senses);
}

namespace {

struct BeamItem {
  std::vector<CommittedStep> steps;
  GraphMemory gm;
  double score = 0.0;
  bool finished = false;
  bool empty_parse = false;
  long long order = 0;  // stable tie-break: earlier branches first
};

}  // namespace

ParseResult parse_beam(const ParserModel& model, const CorpusRecord& record,
                       const ContextVectors* ctx, const ParseOptions& opts) {
  NoGradGuard ng;
  Runtime rt;
  const int k = std::max(opts.beam, 1);
  const int rounds = resolve_rounds(model, opts);
  const int cap = resolve_cap(record, opts);

  ParseStats stats;
  TextMemory text = model.encode_sentence(record, ctx, rt);
  Tensor text_values = model.text_value_matrix(text);
  const CandidateSet candidates =
      CandidateSet::build(model.vocab().concepts, record.lemmas, record.tokens);

  std::vector<BeamItem> live(1);
  live[0].gm = model.graph_encoder().init_memory(text);
  std::optional<BeamItem> best_finished;
  long long order_counter = 0;

  auto better = [](const BeamItem& a, const BeamItem& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.order < b.order;
  };

  // All live items carry the same number of committed nodes (depth): each
  // round either extends a hypothesis by one node or retires it at EOG.
  for (int depth = 0; !live.empty() && depth < cap; ++depth) {
    std::vector<BeamItem> branches;
    for (BeamItem& item : live) {
      IterationResult it =
          model.iterate(text, text_values, item.gm.states, rounds, rt, &stats);
      ++stats.expansions;
      ConceptPrediction pred = model.concept_solver().predict(it.concept_query, it.alpha, text,
                                                              text_values, candidates);
      const PendingEdgeChoice edges =
          decide_edges(model, it, item.gm.states, item.steps.empty());
      for (const auto& [cid, p] : top_candidates(pred.combined, candidates, k)) {
        const std::string& chosen = candidates.names[static_cast<std::size_t>(cid)];
        BeamItem next;
        next.steps = item.steps;
        next.order = order_counter++;
        if (chosen == kEogToken) {
          next.score = item.score + safe_log(p) + safe_log(it.edges.combined.values()[0]);
          next.finished = true;
          next.empty_parse = item.steps.empty();
          // graph memory no longer needed for finished items
          if (!best_finished || better(next, *best_finished)) best_finished = next;
          continue;
        }
        CommittedStep step;
        step.label = chosen;
        step.sources = edges.sources;
        step.log_prob = safe_log(p) + edges.log_prob;
        next.score = item.score + step.log_prob;
        next.steps.push_back(std::move(step));
        next.gm = model.graph_encoder().append(item.gm, chosen);
        branches.push_back(std::move(next));
      }
    }
    std::sort(branches.begin(), branches.end(), better);
    if (static_cast<int>(branches.size()) > k) branches.resize(static_cast<std::size_t>(k));
    // Step log-likelihoods are non-positive, so any hypothesis that does not
    // beat the best finished score never will.
    if (best_finished) {
      branches.erase(std::remove_if(branches.begin(), branches.end(),
                                    [&](const BeamItem& b) {
                                      return !better(b, *best_finished);
                                    }),
                     branches.end());
    }
    live = std::move(branches);
  }

  // Any surviving live hypothesis strictly beats the best finished one but
  // hit the node cap; it wins with the truncated flag, matching greedy.
  if (!live.empty()) {
    BeamItem* best = &live[0];
    for (BeamItem& item : live) {
      if (better(item, *best)) best = &item;
    }
    return finalize(model, std::move(best->steps), best->score, false, true, stats, {},
                    opts.restore_senses);
  }
  if (!best_finished) throw NumericError("beam search lost all hypotheses");
  return finalize(model, std::move(best_finished->steps), best_finished->score,
                  best_finished->empty_parse, false, stats, {}, opts.restore_senses);
}

}  // namespace gsamr
