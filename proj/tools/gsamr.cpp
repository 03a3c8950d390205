// Command-line front end: preprocess, train, parse, eval and the two
// analysis sweeps. Exit codes: 0 success, 1 usage, 2 data error, 3 numeric
// failure.

#include <cstdint>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gsamr/config.hpp"
#include "gsamr/corpus.hpp"
#include "gsamr/error.hpp"
#include "gsamr/pipeline.hpp"
#include "gsamr/training.hpp"

namespace {

using namespace gsamr;

struct ConfigArgs {
  std::string config_file;
  std::string profile = "desk";
  std::vector<std::string> overrides;  // key=value
  std::int64_t seed = -1;
};

std::map<std::string, std::string> resolved_kv(const ConfigArgs& args) {
  std::map<std::string, std::string> kv;
  kv["profile"] = args.profile;
  if (!args.config_file.empty()) {
    for (const auto& [k, v] : RunConfig::parse_kv_file(read_file(args.config_file))) kv[k] = v;
  }
  for (const std::string& kvp : args.overrides) {
    const std::size_t eq = kvp.find('=');
    if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + kvp + "'");
    kv[kvp.substr(0, eq)] = kvp.substr(eq + 1);
  }
  if (args.seed >= 0) kv["seed"] = std::to_string(args.seed);

  // reject unknown keys early
  const auto known_run = RunConfig::defaults(Profile::Desk).to_map();
  const auto known_train = TrainConfig().to_map();
  for (const auto& [k, v] : kv) {
    if (!known_run.count(k) && !known_train.count(k)) {
      throw UsageError("unknown configuration key '" + k + "'");
    }
  }
  return kv;
}

void add_config_options(CLI::App* cmd, ConfigArgs& args) {
  cmd->add_option("--config", args.config_file, "key = value configuration file");
  cmd->add_option("--profile", args.profile, "model profile: desk or paper")
      ->check(CLI::IsMember({"desk", "paper"}));
  cmd->add_option("--set", args.overrides, "override a configuration key (key=value)");
  cmd->add_option("--seed", args.seed, "random seed override");
}

std::vector<int> parse_int_list(const std::string& csv, const char* what) {
  std::vector<int> out;
  std::string token;
  std::istringstream is(csv);
  while (std::getline(is, token, ',')) {
    try {
      out.push_back(std::stoi(token));
    } catch (...) {
      throw UsageError(std::string("bad ") + what + " list entry '" + token + "'");
    }
  }
  if (out.empty()) throw UsageError(std::string("empty ") + what + " list");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"incremental AMR parser with dual graph-sequence iterative inference"};
  app.require_subcommand(1);

  // preprocess
  auto* pre = app.add_subcommand("preprocess", "validate a corpus, build vocabularies and tables");
  std::string pre_input, pre_out;
  pre->add_option("--input", pre_input, "raw corpus (jsonl)")->required();
  pre->add_option("--out-dir", pre_out, "output directory")->required();

  // train
  auto* tr = app.add_subcommand("train", "train a parser");
  ConfigArgs tr_cfg;
  add_config_options(tr, tr_cfg);
  std::string tr_corpus, tr_dev, tr_vocab, tr_out, tr_ctx, tr_resume;
  tr->add_option("--corpus", tr_corpus, "preprocessed training corpus")->required();
  tr->add_option("--dev", tr_dev, "preprocessed development corpus")->required();
  tr->add_option("--vocab", tr_vocab, "vocabulary bundle (vocab.json)")->required();
  tr->add_option("--out-dir", tr_out, "output directory")->required();
  tr->add_option("--ctx", tr_ctx, "contextual-embedding sidecar");
  tr->add_option("--resume", tr_resume, "train state to resume from");

  // parse
  auto* pa = app.add_subcommand("parse", "parse sentences with a checkpoint");
  std::string pa_ckpt, pa_input, pa_output, pa_diag, pa_vocab, pa_ctx;
  int pa_beam = 0, pa_rounds = 0;
  pa->add_option("--checkpoint", pa_ckpt, "model checkpoint")->required();
  pa->add_option("--input", pa_input, "corpus to parse (jsonl)")->required();
  pa->add_option("--output", pa_output, "output Penman file")->required();
  pa->add_option("--beam", pa_beam, "beam size (default: checkpoint setting)");
  pa->add_option("--steps,-N", pa_rounds, "inference rounds override");
  pa->add_option("--diagnostics-out", pa_diag, "per-step attention trace (jsonl)");
  pa->add_option("--vocab", pa_vocab, "vocabulary bundle to hash-check against");
  pa->add_option("--ctx", pa_ctx, "contextual-embedding sidecar");

  // eval
  auto* ev = app.add_subcommand("eval", "score predictions against gold graphs");
  std::string ev_pred, ev_gold, ev_json;
  int ev_restarts = 4;
  std::uint64_t ev_seed = 1;
  ev->add_option("--pred", ev_pred, "predicted Penman file")->required();
  ev->add_option("--gold", ev_gold, "gold Penman file")->required();
  ev->add_option("--restarts", ev_restarts, "hill-climbing restarts");
  ev->add_option("--seed", ev_seed, "matcher seed");
  ev->add_option("--json-out", ev_json, "write the machine-readable report here");

  // experiment-steps
  auto* xs = app.add_subcommand("experiment-steps",
                                "smatch per inference-step count and sentence-length bucket");
  std::vector<std::string> xs_ckpts;
  std::string xs_input, xs_gold, xs_steps = "1,2,4,8", xs_buckets = "10,20", xs_out;
  xs->add_option("--checkpoint", xs_ckpts, "checkpoint(s); one, or one per steps value")
      ->required();
  xs->add_option("--input", xs_input, "corpus to parse (jsonl)")->required();
  xs->add_option("--gold", xs_gold, "gold Penman file")->required();
  xs->add_option("--steps", xs_steps, "comma-separated inference-step counts");
  xs->add_option("--buckets", xs_buckets, "comma-separated length boundaries");
  xs->add_option("--out", xs_out, "write the table here (default: stdout)");

  // experiment-beam
  auto* xb = app.add_subcommand("experiment-beam", "smatch per beam size");
  std::string xb_ckpt, xb_input, xb_gold, xb_beams = "1,2,4,8", xb_out;
  xb->add_option("--checkpoint", xb_ckpt, "model checkpoint")->required();
  xb->add_option("--input", xb_input, "corpus to parse (jsonl)")->required();
  xb->add_option("--gold", xb_gold, "gold Penman file")->required();
  xb->add_option("--beams", xb_beams, "comma-separated beam sizes");
  xb->add_option("--out", xb_out, "write the table here (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (pre->parsed()) {
      PreprocessSummary s = cmd_preprocess(pre_input, pre_out);
      std::cout << "records: " << s.records << "\n"
                << "corpus: " << s.corpus_path << "\n"
                << "vocab: " << s.vocab_path << "\n"
                << "senses: " << s.sense_path << "\n"
                << "relation-freq: " << s.relfreq_path << "\n";
    } else if (tr->parsed()) {
      const auto kv = resolved_kv(tr_cfg);
      const RunConfig rc = RunConfig::from_map(kv);
      const TrainConfig tc = TrainConfig::from_map(kv);
      std::cout << "resolved configuration:\n" << RunConfig::render_kv(rc.to_map());
      std::cout << RunConfig::render_kv(tc.to_map());
      TrainSummary s = cmd_train(rc, tc, tr_corpus, tr_dev, tr_vocab, tr_out, tr_ctx, tr_resume);
      std::cout << "steps: " << s.steps << "\nbest dev smatch: " << s.best_dev << " at step "
                << s.best_step << "\nbest: " << s.best_path << "\nlast: " << s.last_path << "\n";
    } else if (pa->parsed()) {
      ParseSummary s =
          cmd_parse(pa_ckpt, pa_input, pa_output, pa_beam, pa_rounds, pa_diag, pa_vocab, pa_ctx);
      std::cout << "sentences: " << s.sentences << "\nnodes: " << s.nodes
                << "\ntruncated: " << s.truncated << "\nempty: " << s.empty << "\noutput: "
                << s.output_path << "\n";
    } else if (ev->parsed()) {
      EvalReport rep = cmd_eval(ev_pred, ev_gold, ev_restarts, ev_seed);
      std::cout << rep.to_text();
      if (!ev_json.empty()) write_file(ev_json, rep.to_json() + "\n");
    } else if (xs->parsed()) {
      const std::string table =
          cmd_experiment_steps(xs_ckpts, xs_input, xs_gold, parse_int_list(xs_steps, "steps"),
                               parse_int_list(xs_buckets, "buckets"));
      if (xs_out.empty()) std::cout << table;
      else write_file(xs_out, table);
    } else if (xb->parsed()) {
      const std::string table =
          cmd_experiment_beam(xb_ckpt, xb_input, xb_gold, parse_int_list(xb_beams, "beams"));
      if (xb_out.empty()) std::cout << table;
      else write_file(xb_out, table);
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
