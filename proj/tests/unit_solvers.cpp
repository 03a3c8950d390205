#include <cmath>
#include <numeric>

#include "doctest.h"
#include "gsamr/gradcheck.hpp"
#include "gsamr/inference.hpp"
#include "gsamr/model.hpp"
#include "support/fixtures.hpp"

using namespace gsamr;
using namespace gsamr::testsupport;

namespace {

double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

struct Ctx {
  ParserModel model;
  Runtime rt;
  TextMemory text;
  Tensor text_values;
  CandidateSet candidates;

  explicit Ctx(const RunConfig& cfg = micro_config(), const CorpusRecord& rec = tiny_record())
      : model(cfg, tiny_bundle()),
        text(model.encode_sentence(rec, nullptr, rt)),
        text_values(model.text_value_matrix(text)),
        candidates(CandidateSet::build(model.vocab().concepts, rec.lemmas, rec.tokens)) {}
};

}  // namespace

TEST_CASE("concept attention excludes BOS, sums to one, single token is certain") {
  Ctx c;
  Tensor y = row(c.text.states, 0);
  Tensor alpha = c.model.concept_solver().attention(y, c.text);
  CHECK(alpha.shape() == Shape{5});
  CHECK(sum(alpha.values()) == doctest::Approx(1.0).epsilon(1e-9));

  CorpusRecord one;
  one.id = "one";
  one.tokens = {"boy"};
  one.lemmas = {"boy"};
  one.pos = {"NN"};
  one.ner = {"O"};
  Ctx c1(micro_config(), one);
  Tensor a1 = c1.model.concept_solver().attention(row(c1.text.states, 0), c1.text);
  CHECK(a1.shape() == Shape{1});
  CHECK(a1.values()[0] == doctest::Approx(1.0));
}

TEST_CASE("concept attention matches a hand-rolled single-head computation") {
  Ctx c;
  ParameterStore& store = c.model.store();
  Tensor y = row(c.text.states, 2);
  Tensor alpha = c.model.concept_solver().attention(y, c.text);

  // independent computation from the raw parameters
  const auto& wq = store.get("concept.wq.weight").values();  // [d, d] (in x out)
  const auto& wk = store.get("concept.wk.weight").values();
  const auto& h = c.text.states.values();
  const int d = 8, n = 5;
  std::vector<double> q(d, 0.0);
  for (int i = 0; i < d; ++i) {
    for (int o = 0; o < d; ++o) q[o] += y.values()[static_cast<std::size_t>(i)] * wq[static_cast<std::size_t>(i) * d + o];
  }
  std::vector<double> scores(n, 0.0);
  for (int t = 0; t < n; ++t) {
    std::vector<double> k(d, 0.0);
    for (int i = 0; i < d; ++i) {
      for (int o = 0; o < d; ++o) {
        k[static_cast<std::size_t>(o)] +=
            h[static_cast<std::size_t>(t + 1) * d + i] * wk[static_cast<std::size_t>(i) * d + o];
      }
    }
    for (int o = 0; o < d; ++o) scores[static_cast<std::size_t>(t)] += q[static_cast<std::size_t>(o)] * k[static_cast<std::size_t>(o)];
    scores[static_cast<std::size_t>(t)] /= std::sqrt(8.0);
  }
  double mx = *std::max_element(scores.begin(), scores.end());
  double denom = 0.0;
  for (double s : scores) denom += std::exp(s - mx);
  for (int t = 0; t < n; ++t) {
    CHECK(alpha.values()[static_cast<std::size_t>(t)] ==
          doctest::Approx(std::exp(scores[static_cast<std::size_t>(t)] - mx) / denom).epsilon(1e-10));
  }
}

TEST_CASE("switch probabilities and candidate mixture are normalized") {
  Ctx c;
  Tensor y = row(c.text.states, 1);
  Tensor alpha = c.model.concept_solver().attention(y, c.text);
  ConceptPrediction pred =
      c.model.concept_solver().predict(y, alpha, c.text, c.text_values, c.candidates);
  CHECK(sum(pred.switch_probs.values()) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(sum(pred.vocab_probs.values()) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(sum(pred.combined.values()) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("copy channels route attention mass to lemma and surface candidates") {
  Ctx c;
  // alpha concentrated on token 1 ("boy"): candidate "boy" must receive at
  // least the lemma and surface switch mass
  Tensor alpha = Tensor::from_values({5}, {0.0, 1.0, 0.0, 0.0, 0.0});
  Tensor y = row(c.text.states, 1);
  ConceptPrediction pred =
      c.model.concept_solver().predict(y, alpha, c.text, c.text_values, c.candidates);
  const int boy = c.candidates.id("boy");
  REQUIRE(boy >= 0);
  const auto& sw = pred.switch_probs.values();
  const double expected = sw[0] * pred.vocab_probs.values()[static_cast<std::size_t>(boy)] +
                          sw[1] + sw[2];
  CHECK(pred.combined.values()[static_cast<std::size_t>(boy)] ==
        doctest::Approx(expected).epsilon(1e-12));

  // duplicated lemma at two positions sums its alpha mass
  CorpusRecord r = tiny_record();
  r.tokens[3] = "boy";
  r.lemmas[3] = "boy";
  Ctx c2(micro_config(), r);
  Tensor alpha2 = Tensor::from_values({5}, {0.1, 0.3, 0.1, 0.4, 0.1});
  Tensor y2 = row(c2.text.states, 1);
  ConceptPrediction p2 =
      c2.model.concept_solver().predict(y2, alpha2, c2.text, c2.text_values, c2.candidates);
  const auto& sw2 = p2.switch_probs.values();
  const int boy2 = c2.candidates.id("boy");
  const double expect2 = sw2[0] * p2.vocab_probs.values()[static_cast<std::size_t>(boy2)] +
                         (sw2[1] + sw2[2]) * (0.3 + 0.4);
  CHECK(p2.combined.values()[static_cast<std::size_t>(boy2)] ==
        doctest::Approx(expect2).epsilon(1e-12));
}

TEST_CASE("a label absent from vocabulary and sentence has zero probability") {
  Ctx c;
  Tensor y = row(c.text.states, 1);
  Tensor alpha = c.model.concept_solver().attention(y, c.text);
  ConceptPrediction pred =
      c.model.concept_solver().predict(y, alpha, c.text, c.text_values, c.candidates);
  CHECK(c.candidates.id("zzzz") == -1);
  // every candidate mass is accounted for; absent strings simply are not
  // candidates, so their probability is zero by construction
  CHECK(sum(pred.combined.values()) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("relation attention rows sum to one and max dominates per head") {
  Ctx c;
  NoGradGuard ng;
  GraphMemory gm = c.model.graph_encoder().init_memory(c.text);
  gm = c.model.graph_encoder().append(gm, "want");
  gm = c.model.graph_encoder().append(gm, "boy");
  Tensor x = row(c.text.states, 0);
  EdgeScores scores = c.model.relation_solver().attention(x, gm.states);
  CHECK(scores.per_head.shape() == Shape{2, 3});
  for (int h = 0; h < 2; ++h) {
    double s = 0.0;
    for (int i = 0; i < 3; ++i) s += scores.per_head.values()[static_cast<std::size_t>(h) * 3 + i];
    CHECK(s == doctest::Approx(1.0).epsilon(1e-9));
  }
  bool some_equal = false;
  for (int i = 0; i < 3; ++i) {
    double mx = 0.0;
    for (int h = 0; h < 2; ++h) {
      const double b = scores.per_head.values()[static_cast<std::size_t>(h) * 3 + i];
      CHECK(scores.combined.values()[static_cast<std::size_t>(i)] >= b);
      mx = std::max(mx, b);
    }
    some_equal = some_equal || scores.combined.values()[static_cast<std::size_t>(i)] == mx;
    CHECK(scores.combined.values()[static_cast<std::size_t>(i)] == mx);
  }
  CHECK(some_equal);
}

TEST_CASE("relation attention on a dummy-only graph is certain") {
  Ctx c;
  NoGradGuard ng;
  GraphMemory gm = c.model.graph_encoder().init_memory(c.text);
  Tensor x = row(c.text.states, 0);
  EdgeScores scores = c.model.relation_solver().attention(x, gm.states);
  for (double v : scores.per_head.values()) CHECK(v == doctest::Approx(1.0));
}

TEST_CASE("edge extraction: dedupe, dummy drop, root and fallback rules") {
  auto scores_from = [](std::vector<std::vector<double>> rows) {
    EdgeScores s;
    std::vector<Tensor> stacked;
    for (auto& r : rows) stacked.push_back(Tensor::from_values({static_cast<int>(r.size())}, r));
    s.per_head = stack_rows(stacked);
    s.combined = max_over_rows(s.per_head);
    return s;
  };
  // heads argmax {1, 1, 0, 3} -> {1, 3}
  EdgeScores s = scores_from({{0.1, 0.8, 0.05, 0.05},
                              {0.2, 0.6, 0.1, 0.1},
                              {0.7, 0.1, 0.1, 0.1},
                              {0.05, 0.05, 0.1, 0.8}});
  CHECK(extract_edges(s, false) == std::vector<int>{1, 3});
  // first concept ignores pointing entirely
  CHECK(extract_edges(s, true).empty());
  // all heads on dummy: non-root falls back to the best real node
  EdgeScores d = scores_from({{0.9, 0.02, 0.03, 0.05}, {0.8, 0.05, 0.1, 0.05}});
  CHECK(extract_edges(d, false) == std::vector<int>{2});
  // reentrancy: two heads picking two distinct parents yields two edges
  EdgeScores r = scores_from({{0.1, 0.8, 0.1, 0.0}, {0.0, 0.1, 0.8, 0.1}});
  CHECK(extract_edges(r, false) == std::vector<int>{1, 2});
}

TEST_CASE("biaffine label distribution normalizes and its gradient checks out") {
  Ctx c;
  Tensor head = row(c.text.states, 0);
  Tensor dep = row(c.text.states, 1);
  Tensor lp = c.model.labeler().log_probs(head, dep);
  double total = 0.0;
  for (double v : lp.values()) total += std::exp(v);
  CHECK(total == doctest::Approx(1.0).epsilon(1e-9));

  std::vector<Tensor> params = {c.model.store().get("labeler.bilinear"),
                                c.model.store().get("labeler.head.weight"),
                                c.model.store().get("labeler.linear.weight"),
                                c.model.store().get("labeler.linear.bias")};
  double err = grad_check_params(
      [&] {
        Tensor out = c.model.labeler().log_probs(head, dep);
        return neg(at(out, 2));
      },
      params);
  CHECK(err <= 1e-4);
}

TEST_CASE("zero biaffine weights give a uniform label distribution") {
  Ctx c;
  ParameterStore& store = c.model.store();
  for (const char* name : {"labeler.bilinear", "labeler.linear.weight", "labeler.linear.bias"}) {
    Tensor t = store.get(name);
    std::fill(t.leaf_values().begin(), t.leaf_values().end(), 0.0);
  }
  Tensor lp = c.model.labeler().log_probs(row(c.text.states, 0), row(c.text.states, 1));
  const double expect = -std::log(static_cast<double>(c.model.vocab().edge_labels.size()));
  for (double v : lp.values()) CHECK(v == doctest::Approx(expect).epsilon(1e-9));
}

TEST_CASE("state updates follow the residual-readout forms") {
  Ctx c;
  // one-hot attention reads exactly one value-projected token state
  Tensor alpha = Tensor::from_values({5}, {0.0, 0.0, 1.0, 0.0, 0.0});
  Tensor picked = vecmat(alpha, c.text_values);
  for (int j = 0; j < 8; ++j) {
    CHECK(picked.values()[static_cast<std::size_t>(j)] ==
          doctest::Approx(c.text_values.values()[static_cast<std::size_t>(2) * 8 + j]));
  }
  // dummy-only graph: every head's readout is its value projection of s_0
  NoGradGuard ng;
  GraphMemory gm = c.model.graph_encoder().init_memory(c.text);
  Tensor x = row(c.text.states, 0);
  EdgeScores scores = c.model.relation_solver().attention(x, gm.states);
  Tensor readout = c.model.relation_solver().value_readout(scores, gm.states);
  Tensor expected;
  for (int h = 0; h < 2; ++h) {
    const Tensor& wv = c.model.store().get("relation.head" + std::to_string(h) + ".wv.weight");
    Tensor term = vecmat(row(gm.states, 0), wv);
    expected = expected.defined() ? add(expected, term) : term;
  }
  for (int j = 0; j < 8; ++j) {
    CHECK(readout.values()[static_cast<std::size_t>(j)] ==
          doctest::Approx(expected.values()[static_cast<std::size_t>(j)]).epsilon(1e-12));
  }
}
