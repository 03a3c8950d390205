#include "gsamr/pipeline.hpp"

#include <filesystem>
#include <map>
#include <sstream>

#include "gsamr/error.hpp"
#include "gsamr/inference.hpp"
#include "gsamr/penman.hpp"
#include "gsamr/senses.hpp"
#include "json.hpp"

namespace gsamr {

namespace fs = std::filesystem;

namespace {

std::string join(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

PreprocessSummary cmd_preprocess(const std::string& input_path, const std::string& out_dir) {
  const std::vector<CorpusRecord> raw = load_corpus(input_path);
  if (raw.empty()) throw DataError("preprocess: empty corpus " + input_path);
  fs::create_directories(out_dir);

  std::vector<CorpusRecord> processed = raw;
  std::vector<AmrGraph> stripped_graphs;
  std::vector<AmrGraph> sense_source;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (raw[i].graph.empty()) {
      throw DataError("preprocess: record '" + raw[i].id + "' has no gold graph");
    }
    AmrGraph g;
    try {
      g = parse_penman(raw[i].graph);
    } catch (const DataError& e) {
      throw DataError("record '" + raw[i].id + "': " + e.what());
    }
    AmrGraph no_wiki = strip_wiki(g);
    sense_source.push_back(no_wiki);
    AmrGraph no_sense = remove_senses(no_wiki);
    stripped_graphs.push_back(no_sense);
    processed[i].graph = serialize_penman(no_sense);
  }

  VocabBundle bundle;
  std::map<std::string, int> lemmas, pos, ner, concepts, chars, edges;
  for (const CorpusRecord& r : processed) {
    for (const auto& x : r.lemmas) ++lemmas[x];
    for (const auto& x : r.pos) ++pos[x];
    for (const auto& x : r.ner) ++ner[x];
    for (const auto& t : r.tokens) {
      for (char c : t) ++chars[std::string(1, c)];
    }
  }
  for (const AmrGraph& g : stripped_graphs) {
    for (const AmrNode& n : g.nodes()) {
      ++concepts[n.label];
      for (char c : n.label) ++chars[std::string(1, c)];
    }
    for (const AmrEdge& e : g.edges()) {
      // both directions participate in oracle steps
      ++edges[e.label];
      ++edges[e.label + "-of"];
    }
  }
  bundle.lemmas = Vocabulary::build(lemmas);
  bundle.pos = Vocabulary::build(pos);
  bundle.ner = Vocabulary::build(ner);
  bundle.concepts = Vocabulary::build(concepts);
  bundle.chars = Vocabulary::build(chars);
  bundle.edge_labels = Vocabulary::build(edges);
  bundle.senses = build_sense_table(sense_source);
  bundle.relation_freq.add_corpus(stripped_graphs);

  PreprocessSummary out;
  out.records = static_cast<int>(processed.size());
  out.corpus_path = join(out_dir, "corpus.jsonl");
  out.vocab_path = join(out_dir, "vocab.json");
  out.sense_path = join(out_dir, "sense_table.tsv");
  out.relfreq_path = join(out_dir, "relation_freq.tsv");
  save_corpus(out.corpus_path, processed);
  write_file(out.vocab_path, bundle.serialize());
  write_file(out.sense_path, bundle.senses.serialize());
  write_file(out.relfreq_path, bundle.relation_freq.serialize());
  return out;
}

TrainSummary cmd_train(const RunConfig& run_cfg, const TrainConfig& train_cfg,
                       const std::string& corpus_path, const std::string& dev_path,
                       const std::string& vocab_path, const std::string& out_dir,
                       const std::string& ctx_path, const std::string& resume_path) {
  const std::vector<CorpusRecord> train_set = load_corpus(corpus_path);
  const std::vector<CorpusRecord> dev_set = load_corpus(dev_path);
  const VocabBundle vocab = VocabBundle::deserialize(read_file(vocab_path));
  fs::create_directories(out_dir);

  std::optional<ContextVectors> ctx;
  if (!ctx_path.empty()) ctx = ContextVectors::load(ctx_path);

  ParserModel model(run_cfg, vocab);
  TrainState state;
  TrainState* state_ptr = nullptr;
  if (!resume_path.empty()) {
    state = TrainState::deserialize(read_file(resume_path));
    state_ptr = &state;
  }

  TrainSummary out;
  out.best_path = join(out_dir, "best.ckpt");
  out.last_path = join(out_dir, "last.ckpt");
  out.state_path = join(out_dir, "train_state.bin");
  out.log_path = join(out_dir, "train.log.jsonl");

  std::ostringstream log_stream;
  // resolved configuration first, then one JSON record per event
  {
    nlohmann::json header;
    header["event"] = "config";
    for (const auto& [k, v] : run_cfg.to_map()) header[k] = v;
    for (const auto& [k, v] : train_cfg.to_map()) header[k] = v;
    log_stream << header.dump() << "\n";
  }
  TrainResult result = train(model, train_set, dev_set, ctx ? &*ctx : nullptr, train_cfg,
                             [&](const std::string& line) { log_stream << line << "\n"; },
                             state_ptr);
  result.best.save(out.best_path);
  result.last.save(out.last_path);
  write_file(out.state_path, result.final_state);
  write_file(out.log_path, log_stream.str());
  out.best_dev = result.best_dev;
  out.best_step = result.best_step;
  out.steps = result.steps_run;
  return out;
}

ParseSummary cmd_parse(const std::string& checkpoint_path, const std::string& input_path,
                       const std::string& output_path, int beam, int rounds,
                       const std::string& diagnostics_path, const std::string& vocab_check_path,
                       const std::string& ctx_path) {
  const Checkpoint ck = Checkpoint::load(checkpoint_path);
  if (!vocab_check_path.empty()) {
    const VocabBundle external = VocabBundle::deserialize(read_file(vocab_check_path));
    auto it = ck.meta.find("vocab_hash");
    if (it == ck.meta.end() || it->second != std::to_string(external.hash())) {
      throw DataError("vocabulary hash mismatch between checkpoint and " + vocab_check_path);
    }
  }
  auto model = ParserModel::from_checkpoint(ck);
  const std::vector<CorpusRecord> records = load_corpus(input_path);
  std::optional<ContextVectors> ctx;
  if (!ctx_path.empty()) ctx = ContextVectors::load(ctx_path);

  ParseOptions opts;
  opts.beam = beam > 0 ? beam : model->config().beam_size;
  opts.rounds = rounds;
  opts.diagnostics = !diagnostics_path.empty();

  ParseSummary out;
  out.output_path = output_path;
  std::ostringstream penman_out;
  std::ostringstream diag_out;
  for (std::size_t i = 0; i < records.size(); ++i) {
    ParseResult res = opts.beam == 1 || opts.diagnostics
                          ? parse_greedy(*model, records[i], ctx ? &*ctx : nullptr, opts)
                          : parse_beam(*model, records[i], ctx ? &*ctx : nullptr, opts);
    if (i) penman_out << "\n";
    penman_out << "# ::id " << records[i].id << "\n";
    penman_out << serialize_penman(res.graph) << "\n";
    ++out.sentences;
    out.nodes += res.graph.empty() ? 0 : res.graph.node_count();
    out.truncated += res.truncated ? 1 : 0;
    out.empty += res.empty_parse ? 1 : 0;
    if (opts.diagnostics) {
      for (const StepDiagnostics& d : res.diagnostics) {
        nlohmann::json j;
        j["id"] = records[i].id;
        j["step"] = d.step;
        j["alpha"] = d.alpha_rounds;
        j["beta"] = d.beta_rounds;
        nlohmann::json cands = nlohmann::json::array();
        for (const auto& [name, p] : d.top_candidates) cands.push_back({name, p});
        j["candidates"] = cands;
        j["chosen"] = d.chosen;
        diag_out << j.dump() << "\n";
      }
    }
  }
  write_file(output_path, penman_out.str());
  if (!diagnostics_path.empty()) write_file(diagnostics_path, diag_out.str());
  return out;
}

std::string EvalReport::to_text() const {
  std::ostringstream os;
  auto line = [&os](const char* name, double p, double r, double f) {
    os << name << ": P " << fmt(p) << "  R " << fmt(r) << "  F1 " << fmt(f) << "\n";
  };
  os << "pairs: " << pairs << "  restarts: " << restarts << "  seed: " << seed << "\n";
  line("smatch   ", scores.smatch_score.precision, scores.smatch_score.recall,
       scores.smatch_score.f1);
  line("unlabeled", scores.unlabeled.precision, scores.unlabeled.recall, scores.unlabeled.f1);
  line("no-wsd   ", scores.no_wsd.precision, scores.no_wsd.recall, scores.no_wsd.f1);
  line("concept  ", scores.concept_precision, scores.concept_recall, scores.concept_f1);
  return os.str();
}

std::string EvalReport::to_json() const {
  nlohmann::json j;
  j["pairs"] = pairs;
  j["restarts"] = restarts;
  j["seed"] = seed;
  auto block = [](const MatchResult& m) {
    return nlohmann::json{{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}};
  };
  j["smatch"] = block(scores.smatch_score);
  j["unlabeled"] = block(scores.unlabeled);
  j["no_wsd"] = block(scores.no_wsd);
  j["concept"] = nlohmann::json{{"precision", scores.concept_precision},
                                {"recall", scores.concept_recall},
                                {"f1", scores.concept_f1}};
  return j.dump();
}

EvalReport cmd_eval(const std::string& pred_path, const std::string& gold_path, int restarts,
                    std::uint64_t seed) {
  const std::vector<AmrGraph> pred = parse_penman_blocks(read_file(pred_path));
  const std::vector<AmrGraph> gold = parse_penman_blocks(read_file(gold_path));
  if (pred.size() != gold.size()) {
    throw DataError("eval: " + std::to_string(pred.size()) + " predictions vs " +
                    std::to_string(gold.size()) + " gold graphs");
  }
  EvalReport rep;
  rep.pairs = static_cast<int>(pred.size());
  rep.restarts = restarts;
  rep.seed = seed;
  rep.scores = fine_grained(pred, gold, restarts, seed);
  return rep;
}

namespace {

struct BucketKey {
  std::string label;
  int lo, hi;  // inclusive token range
};

std::vector<BucketKey> make_buckets(const std::vector<int>& bounds) {
  std::vector<BucketKey> out;
  int lo = 0;
  for (int b : bounds) {
    out.push_back({"len" + std::to_string(lo + 1) + "-" + std::to_string(b), lo + 1, b});
    lo = b;
  }
  out.push_back({"len" + std::to_string(lo + 1) + "+", lo + 1, 1 << 30});
  return out;
}

struct PairSet {
  std::vector<CorpusRecord> records;
  std::vector<AmrGraph> gold;
};

PairSet load_pairs(const std::string& input_path, const std::string& gold_path) {
  PairSet ps;
  ps.records = load_corpus(input_path);
  ps.gold = parse_penman_blocks(read_file(gold_path));
  if (ps.records.size() != ps.gold.size()) {
    throw DataError("experiment: corpus and gold sizes differ");
  }
  return ps;
}

double bucket_smatch(const std::vector<AmrGraph>& pred, const std::vector<AmrGraph>& gold) {
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

std::string cmd_experiment_steps(const std::vector<std::string>& checkpoint_paths,
                                 const std::string& input_path, const std::string& gold_path,
                                 const std::vector<int>& steps,
                                 const std::vector<int>& bucket_bounds) {
  if (checkpoint_paths.empty()) throw UsageError("experiment-steps: no checkpoints");
  if (checkpoint_paths.size() != 1 && checkpoint_paths.size() != steps.size()) {
    throw UsageError("experiment-steps: pass one checkpoint or one per steps value");
  }
  const bool shared = checkpoint_paths.size() == 1;
  PairSet ps = load_pairs(input_path, gold_path);
  const std::vector<BucketKey> buckets = make_buckets(bucket_bounds);

  std::ostringstream os;
  os << "# mode=" << (shared ? "shared-checkpoint" : "per-step-checkpoints") << "\n";
  os << "steps\tbucket\tsentences\tsmatch_f1\n";
  for (std::size_t si = 0; si < steps.size(); ++si) {
    const std::string& path = shared ? checkpoint_paths[0] : checkpoint_paths[si];
    auto model = ParserModel::from_checkpoint(Checkpoint::load(path));
    ParseOptions opts;
    opts.rounds = steps[si];
    std::vector<AmrGraph> pred;
    pred.reserve(ps.records.size());
    for (const CorpusRecord& r : ps.records) {
      pred.push_back(parse_greedy(*model, r, nullptr, opts).graph);
    }
    for (const BucketKey& bk : buckets) {
      std::vector<AmrGraph> bp, bg;
      for (std::size_t i = 0; i < ps.records.size(); ++i) {
        const int len = ps.records[i].size();
        if (len >= bk.lo && len <= bk.hi) {
          bp.push_back(pred[i]);
          bg.push_back(ps.gold[i]);
        }
      }
      if (bp.empty()) continue;
      os << steps[si] << "\t" << bk.label << "\t" << bp.size() << "\t"
         << fmt(bucket_smatch(bp, bg)) << "\n";
    }
    // full-corpus row
    os << steps[si] << "\tall\t" << ps.records.size() << "\t"
       << fmt(bucket_smatch(pred, ps.gold)) << "\n";
  }
  return os.str();
}

std::string cmd_experiment_beam(const std::string& checkpoint_path, const std::string& input_path,
                                const std::string& gold_path, const std::vector<int>& beams) {
  PairSet ps = load_pairs(input_path, gold_path);
  auto model = ParserModel::from_checkpoint(Checkpoint::load(checkpoint_path));
  std::ostringstream os;
  os << "beam\tsentences\tsmatch_f1\n";
  for (int k : beams) {
    ParseOptions opts;
    opts.beam = k;
    std::vector<AmrGraph> pred;
    pred.reserve(ps.records.size());
    for (const CorpusRecord& r : ps.records) {
      pred.push_back((k == 1 ? parse_greedy(*model, r, nullptr, opts)
                             : parse_beam(*model, r, nullptr, opts))
                         .graph);
    }
    os << k << "\t" << ps.records.size() << "\t" << fmt(bucket_smatch(pred, ps.gold)) << "\n";
  }
  return os.str();
}

}  // namespace gsamr
