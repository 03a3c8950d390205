#include <cmath>

#include "doctest.h"
#include "gsamr/inference.hpp"
#include "gsamr/penman.hpp"
#include "gsamr/smatch.hpp"
#include "support/fixtures.hpp"

using namespace gsamr;
using namespace gsamr::testsupport;

TEST_CASE("iterate is deterministic in eval mode and counts solver calls") {
  ParserModel model(micro_config(), tiny_bundle());
  Runtime rt;
  TextMemory text = model.encode_sentence(tiny_record(), nullptr, rt);
  Tensor tv = model.text_value_matrix(text);
  NoGradGuard ng;
  GraphMemory gm = model.graph_encoder().init_memory(text);
  ParseStats stats;
  IterationResult a = model.iterate(text, tv, gm.states, 4, rt, &stats);
  IterationResult b = model.iterate(text, tv, gm.states, 4, rt);
  CHECK(stats.concept_solver_calls == 4);
  CHECK(stats.relation_solver_calls == 4);
  CHECK(a.alpha.values() == b.alpha.values());
  CHECK(a.graph_query.values() == b.graph_query.values());
  CHECK(a.edges.combined.values() == b.edges.combined.values());
}

TEST_CASE("more rounds change the decision states but not the parameter count") {
  ParserModel model(micro_config(), tiny_bundle());
  Runtime rt;
  TextMemory text = model.encode_sentence(tiny_record(), nullptr, rt);
  Tensor tv = model.text_value_matrix(text);
  NoGradGuard ng;
  GraphMemory gm = model.graph_encoder().init_memory(text);
  IterationResult one = model.iterate(text, tv, gm.states, 1, rt);
  IterationResult four = model.iterate(text, tv, gm.states, 4, rt);
  double diff = 0.0;
  for (std::size_t i = 0; i < one.alpha.values().size(); ++i) {
    diff += std::fabs(one.alpha.values()[i] - four.alpha.values()[i]);
  }
  CHECK(diff > 1e-12);
}

TEST_CASE("parameter count is invariant to the number of inference steps") {
  for (Profile p : {Profile::Desk, Profile::Paper}) {
    std::int64_t base = -1;
    for (int n : {1, 2, 4, 8}) {
      RunConfig cfg = RunConfig::defaults(p);
      cfg.inference_steps = n;
      // keep the paper profile affordable in a unit test: vocabularies tiny
      ParserModel model(cfg, tiny_bundle());
      if (base < 0) base = model.parameter_count();
      CHECK(model.parameter_count() == base);
    }
  }
}

TEST_CASE("adding a parameter raises the count by its size") {
  ParserModel model(micro_config(), tiny_bundle());
  const std::int64_t before = model.parameter_count();
  Rng rng(1);
  model.store().create("extra", {2, 2}, Init::Zeros, rng);
  CHECK(model.parameter_count() == before + 4);
}

TEST_CASE("greedy parse terminates under the node cap and counts invocations") {
  ParserModel model(micro_config(), tiny_bundle());
  CorpusRecord rec = tiny_record();
  ParseOptions opts;
  opts.restore_senses = false;
  ParseResult res = parse_greedy(model, rec, nullptr, opts);
  const int cap = 2 * rec.size() + 10;
  const long long m = res.graph.empty() ? 0 : res.graph.node_count();
  CHECK(m <= cap);
  // N * (expansions); every expansion runs the two solvers N times
  CHECK(res.stats.concept_solver_calls == 4 * res.stats.expansions);
  CHECK(res.stats.relation_solver_calls == 4 * res.stats.expansions);
  if (!res.truncated) {
    CHECK(res.stats.expansions == m + 1);  // the +1 is the EOG step
  }
  CHECK(res.score <= 0.0);
}

TEST_CASE("repeated parses of the same sentence are identical") {
  ParserModel model(micro_config(), tiny_bundle());
  CorpusRecord rec = tiny_record();
  ParseOptions opts;
  ParseResult a = parse_greedy(model, rec, nullptr, opts);
  ParseResult b = parse_greedy(model, rec, nullptr, opts);
  CHECK(a.score == b.score);
  CHECK(serialize_penman(a.graph) == serialize_penman(b.graph));
}

TEST_CASE("beam with k=1 equals greedy bitwise, including scores") {
  for (std::uint64_t seed : {3u, 17u, 23u}) {
    RunConfig cfg = micro_config();
    cfg.seed = seed;
    ParserModel model(cfg, tiny_bundle());
    CorpusRecord rec = tiny_record();
    ParseOptions opts;
    opts.beam = 1;
    ParseResult g = parse_greedy(model, rec, nullptr, opts);
    ParseResult b = parse_beam(model, rec, nullptr, opts);
    CHECK(g.score == b.score);
    CHECK(g.truncated == b.truncated);
    CHECK(g.empty_parse == b.empty_parse);
    CHECK(serialize_penman(g.graph) == serialize_penman(b.graph));
  }
}

TEST_CASE("beam returns the best-scoring finished hypothesis") {
  ParserModel model(micro_config(), tiny_bundle());
  CorpusRecord rec = tiny_record();
  ParseOptions o1, o4;
  o1.beam = 1;
  o4.beam = 4;
  ParseResult b1 = parse_beam(model, rec, nullptr, o1);
  ParseResult b4 = parse_beam(model, rec, nullptr, o4);
  if (!b1.truncated && !b4.truncated) {
    CHECK(b4.score >= b1.score - 1e-12);
  }
}

TEST_CASE("parse honors an explicit rounds override") {
  ParserModel model(micro_config(), tiny_bundle());
  CorpusRecord rec = tiny_record();
  ParseOptions opts;
  opts.rounds = 2;
  ParseResult res = parse_greedy(model, rec, nullptr, opts);
  CHECK(res.stats.concept_solver_calls == 2 * res.stats.expansions);
}

TEST_CASE("diagnostics trace carries one alpha/beta pair per round") {
  ParserModel model(micro_config(), tiny_bundle());
  CorpusRecord rec = tiny_record();
  ParseOptions opts;
  opts.diagnostics = true;
  ParseResult res = parse_greedy(model, rec, nullptr, opts);
  REQUIRE(!res.diagnostics.empty());
  for (const StepDiagnostics& d : res.diagnostics) {
    CHECK(d.alpha_rounds.size() == 4);
    CHECK(d.beta_rounds.size() == 4);
    CHECK(!d.top_candidates.empty());
  }
}

TEST_CASE("checkpoints round-trip byte-exactly and reload into an equal model") {
  ParserModel model(micro_config(), tiny_bundle());
  Checkpoint ck = model.to_checkpoint({{"step", "0"}});
  const std::string bytes = ck.serialize();
  Checkpoint back = Checkpoint::deserialize(bytes);
  CHECK(back.serialize() == bytes);

  auto reloaded = ParserModel::from_checkpoint(back);
  CHECK(reloaded->parameter_count() == model.parameter_count());
  CorpusRecord rec = tiny_record();
  ParseOptions opts;
  ParseResult a = parse_greedy(model, rec, nullptr, opts);
  ParseResult b = parse_greedy(*reloaded, rec, nullptr, opts);
  CHECK(serialize_penman(a.graph) == serialize_penman(b.graph));
  CHECK(a.score == b.score);
}

TEST_CASE("max-nodes cap yields a truncated partial parse") {
  ParserModel model(micro_config(), tiny_bundle());
  CorpusRecord rec = tiny_record();
  ParseOptions opts;
  opts.max_nodes = 1;
  ParseResult res = parse_greedy(model, rec, nullptr, opts);
  if (!res.empty_parse) {
    CHECK(res.truncated);
    CHECK(res.graph.node_count() == 1);
  }
  ParseOptions bopts = opts;
  bopts.beam = 1;
  ParseResult bres = parse_beam(model, rec, nullptr, bopts);
  CHECK(bres.truncated == res.truncated);
  CHECK(serialize_penman(bres.graph) == serialize_penman(res.graph));
}
