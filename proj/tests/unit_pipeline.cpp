#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "gsamr/error.hpp"
#include "gsamr/penman.hpp"
#include "gsamr/pipeline.hpp"
#include "gsamr/senses.hpp"
#include "support/fixtures.hpp"
#include "support/toy_corpus.hpp"

using namespace gsamr;
using namespace gsamr::testsupport;
namespace fs = std::filesystem;

namespace {

std::string fresh_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / ("gsamr_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir.string();
}

int count_occurrences(const std::string& hay, const std::string& needle) {
  int n = 0;
  std::size_t pos = 0;
  while ((pos = hay.find(needle, pos)) != std::string::npos) {
    ++n;
    pos += needle.size();
  }
  return n;
}

struct ToyRun {
  std::string dir;
  PreprocessSummary pre;
  TrainSummary train_summary;
};

// One small end-to-end run shared by the pipeline tests.
const ToyRun& shared_run() {
  static ToyRun run = [] {
    ToyRun r;
    r.dir = fresh_dir("pipeline");
    auto corpus = toy_corpus();
    corpus.resize(8);
    save_corpus(r.dir + "/raw.jsonl", corpus);
    r.pre = cmd_preprocess(r.dir + "/raw.jsonl", r.dir + "/data");

    TrainConfig tc;
    tc.max_steps = 10;
    tc.switch_step = 8;
    tc.warmup = 5;
    tc.batch_size = 2;
    tc.eval_interval = 5;
    tc.stop_score = 2.0;
    tc.seed = 7;
    RunConfig rc = micro_config();
    r.train_summary = cmd_train(rc, tc, r.pre.corpus_path, r.pre.corpus_path, r.pre.vocab_path,
                                r.dir + "/run");
    return r;
  }();
  return run;
}

}  // namespace

TEST_CASE("preprocess strips senses and wiki and persists all tables") {
  const ToyRun& r = shared_run();
  CHECK(r.pre.records == 8);
  const auto processed = load_corpus(r.pre.corpus_path);
  for (const CorpusRecord& rec : processed) {
    AmrGraph g = parse_penman(rec.graph);
    for (const AmrNode& n : g.nodes()) {
      if (!n.attribute) CHECK(!has_sense_suffix(n.label));
    }
  }
  const VocabBundle bundle = VocabBundle::deserialize(read_file(r.pre.vocab_path));
  CHECK(bundle.senses.restore("go") == "go-02");
  CHECK(bundle.relation_freq.count("ARG0") > 0);
  // inverse labels are available for oracle steps
  CHECK(bundle.edge_labels.contains("ARG0-of"));
}

TEST_CASE("every vocabulary carries the four sentinels exactly once") {
  const ToyRun& r = shared_run();
  const VocabBundle bundle = VocabBundle::deserialize(read_file(r.pre.vocab_path));
  for (const Vocabulary* v : {&bundle.lemmas, &bundle.pos, &bundle.ner, &bundle.concepts,
                              &bundle.chars, &bundle.edge_labels}) {
    const std::string text = v->serialize();
    for (const char* s : {"<UNK>", "<BOS>", "<BOG>", "<EOG>"}) {
      CHECK(count_occurrences(text, std::string(s) + "\t") == 1);
    }
  }
}

TEST_CASE("preprocess rejects records without gold graphs, with location") {
  const std::string dir = fresh_dir("pipeline_bad");
  write_file(dir + "/bad.jsonl",
             R"({"id":"a","tokens":["hi"],"lemmas":["hi"],"pos":["UH"],"ner":["O"]})"
             "\n");
  CHECK_THROWS_WITH_AS(cmd_preprocess(dir + "/bad.jsonl", dir + "/out"),
                       doctest::Contains("no gold graph"), DataError);
  write_file(dir + "/bad2.jsonl",
             R"x({"id":"a","tokens":["hi"],"lemmas":[],"pos":["UH"],"ner":["O"],"graph":"(a / a)"})x"
             "\n");
  CHECK_THROWS_WITH_AS(cmd_preprocess(dir + "/bad2.jsonl", dir + "/out"),
                       doctest::Contains(":1:"), DataError);
}

TEST_CASE("training writes checkpoints, state and a structured log") {
  const ToyRun& r = shared_run();
  CHECK(fs::exists(r.train_summary.best_path));
  CHECK(fs::exists(r.train_summary.last_path));
  CHECK(fs::exists(r.train_summary.state_path));
  const std::string log = read_file(r.train_summary.log_path);
  CHECK(log.find("\"event\":\"config\"") != std::string::npos);
  CHECK(log.find("\"event\":\"step\"") != std::string::npos);
  CHECK(log.find("\"event\":\"dev\"") != std::string::npos);
  CHECK(count_occurrences(log, "\"event\":\"step\"") == 10);
}

TEST_CASE("parse output preserves order, reparses cleanly and respects hashes") {
  const ToyRun& r = shared_run();
  ParseSummary ps = cmd_parse(r.train_summary.best_path, r.pre.corpus_path,
                              r.dir + "/pred.penman", /*beam=*/1);
  CHECK(ps.sentences == 8);
  const std::string text = read_file(r.dir + "/pred.penman");
  // ids appear in corpus order as comments
  std::size_t prev = 0;
  for (int i = 0; i < 8; ++i) {
    const std::size_t pos = text.find("# ::id toy-" + std::to_string(i) + "\n");
    CHECK(pos != std::string::npos);
    CHECK(pos >= prev);
    prev = pos;
  }
  const auto graphs = parse_penman_blocks(text);
  CHECK(graphs.size() == 8);

  // hash check passes against the matching bundle and fails against another
  CHECK_NOTHROW(cmd_parse(r.train_summary.best_path, r.pre.corpus_path, r.dir + "/pred2.penman",
                          1, 0, "", r.pre.vocab_path));
  const std::string other_dir = fresh_dir("pipeline_other");
  auto corpus = toy_corpus();
  corpus.resize(5);
  save_corpus(other_dir + "/raw.jsonl", corpus);
  PreprocessSummary other = cmd_preprocess(other_dir + "/raw.jsonl", other_dir + "/data");
  CHECK_THROWS_WITH_AS(cmd_parse(r.train_summary.best_path, r.pre.corpus_path,
                                 r.dir + "/pred3.penman", 1, 0, "", other.vocab_path),
                       doctest::Contains("hash mismatch"), DataError);
}

TEST_CASE("diagnostics stream carries one record per expansion") {
  const ToyRun& r = shared_run();
  cmd_parse(r.train_summary.best_path, r.pre.corpus_path, r.dir + "/pred_diag.penman", 1, 0,
            r.dir + "/diag.jsonl");
  const std::string diag = read_file(r.dir + "/diag.jsonl");
  CHECK(count_occurrences(diag, "\"alpha\":") >= 8);
  CHECK(diag.find("\"chosen\":") != std::string::npos);
}

TEST_CASE("empty corpus parses to an empty output with success") {
  const ToyRun& r = shared_run();
  write_file(r.dir + "/empty.jsonl", "");
  ParseSummary ps = cmd_parse(r.train_summary.best_path, r.dir + "/empty.jsonl",
                              r.dir + "/empty_out.penman", 1);
  CHECK(ps.sentences == 0);
  CHECK(read_file(r.dir + "/empty_out.penman").empty());
}

TEST_CASE("eval of a file against itself is exactly one everywhere") {
  const ToyRun& r = shared_run();
  // build a gold penman file from the processed corpus
  const auto processed = load_corpus(r.pre.corpus_path);
  std::vector<AmrGraph> gold;
  for (const auto& rec : processed) gold.push_back(parse_penman(rec.graph));
  write_file(r.dir + "/gold.penman", serialize_penman_blocks(gold));
  EvalReport rep = cmd_eval(r.dir + "/gold.penman", r.dir + "/gold.penman");
  CHECK(rep.scores.smatch_score.f1 == doctest::Approx(1.0));
  CHECK(rep.scores.unlabeled.f1 == doctest::Approx(1.0));
  CHECK(rep.scores.no_wsd.f1 == doctest::Approx(1.0));
  CHECK(rep.scores.concept_f1 == doctest::Approx(1.0));
  const std::string text = rep.to_text();
  CHECK(text.find("restarts: 4") != std::string::npos);
  CHECK(text.find("seed: 1") != std::string::npos);
  CHECK(rep.to_json().find("\"f1\":1.0") != std::string::npos);
}

TEST_CASE("experiment tables have the advertised structure") {
  const ToyRun& r = shared_run();
  const auto processed = load_corpus(r.pre.corpus_path);
  std::vector<AmrGraph> gold;
  for (const auto& rec : processed) gold.push_back(parse_penman(rec.graph));
  write_file(r.dir + "/gold.penman", serialize_penman_blocks(gold));

  const std::string steps_table = cmd_experiment_steps(
      {r.train_summary.best_path}, r.pre.corpus_path, r.dir + "/gold.penman", {1, 2}, {3, 4});
  CHECK(steps_table.find("# mode=shared-checkpoint") != std::string::npos);
  CHECK(steps_table.find("steps\tbucket\tsentences\tsmatch_f1") != std::string::npos);
  CHECK(steps_table.find("\tall\t") != std::string::npos);

  const std::string single = cmd_experiment_steps({r.train_summary.best_path}, r.pre.corpus_path,
                                                  r.dir + "/gold.penman", {4}, {3});
  CHECK(count_occurrences(single, "\nall\t") <= 1);

  const std::string beam_table = cmd_experiment_beam(r.train_summary.best_path, r.pre.corpus_path,
                                                     r.dir + "/gold.penman", {1, 2});
  CHECK(beam_table.find("beam\tsentences\tsmatch_f1") != std::string::npos);
  CHECK(count_occurrences(beam_table, "\n1\t") == 1);
  CHECK(count_occurrences(beam_table, "\n2\t") == 1);
}

#ifdef GSAMR_CLI_PATH
TEST_CASE("cli exit codes: 0 success, 1 usage, 2 data error") {
  const ToyRun& r = shared_run();
  const auto processed = load_corpus(r.pre.corpus_path);
  std::vector<AmrGraph> gold;
  for (const auto& rec : processed) gold.push_back(parse_penman(rec.graph));
  write_file(r.dir + "/cli_gold.penman", serialize_penman_blocks(gold));

  const std::string cli = GSAMR_CLI_PATH;
  auto run = [&](const std::string& args) {
    const int status = std::system((cli + " " + args + " > /dev/null 2>&1").c_str());
    return WEXITSTATUS(status);
  };
  CHECK(run("") == 1);
  CHECK(run("parse --checkpoint /nonexistent.ckpt --input " + r.pre.corpus_path +
            " --output /tmp/gsamr_x.penman") == 2);
  CHECK(run("eval --pred " + r.dir + "/cli_gold.penman --gold " + r.dir + "/cli_gold.penman") ==
        0);
  CHECK(run("train --corpus " + r.pre.corpus_path + " --dev " + r.pre.corpus_path + " --vocab " +
            r.pre.vocab_path + " --out-dir " + r.dir + "/cli_run --set nonsense=1") == 1);
}
#endif
