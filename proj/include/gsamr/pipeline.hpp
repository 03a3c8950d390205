#pragma once

#include <optional>
#include <string>
#include <vector>

#include "gsamr/config.hpp"
#include "gsamr/smatch.hpp"
#include "gsamr/training.hpp"

namespace gsamr {

// Command implementations shared by the CLI and the acceptance suite.
// Each function is idempotent with respect to its inputs: identical inputs
// and seeds produce byte-identical outputs.

struct PreprocessSummary {
  int records = 0;
  std::string corpus_path;
  std::string vocab_path;
  std::string sense_path;
  std::string relfreq_path;
};

// Parses and validates gold graphs, strips wiki links, removes senses,
// builds all vocabularies plus the sense and relation-frequency tables, and
// writes the processed corpus alongside them.
PreprocessSummary cmd_preprocess(const std::string& input_path, const std::string& out_dir);

struct TrainSummary {
  std::string best_path;
  std::string last_path;
  std::string state_path;
  std::string log_path;
  double best_dev = 0.0;
  long long best_step = 0;
  long long steps = 0;
};

TrainSummary cmd_train(const RunConfig& run_cfg, const TrainConfig& train_cfg,
                       const std::string& corpus_path, const std::string& dev_path,
                       const std::string& vocab_path, const std::string& out_dir,
                       const std::string& ctx_path = "", const std::string& resume_path = "");

struct ParseSummary {
  int sentences = 0;
  long long nodes = 0;
  int truncated = 0;
  int empty = 0;
  std::string output_path;
};

ParseSummary cmd_parse(const std::string& checkpoint_path, const std::string& input_path,
                       const std::string& output_path, int beam = 0, int rounds = 0,
                       const std::string& diagnostics_path = "",
                       const std::string& vocab_check_path = "",
                       const std::string& ctx_path = "");

struct EvalReport {
  FineGrained scores;
  int pairs = 0;
  int restarts = 4;
  std::uint64_t seed = 1;
  std::string to_text() const;
  std::string to_json() const;
};

EvalReport cmd_eval(const std::string& pred_path, const std::string& gold_path, int restarts = 4,
                    std::uint64_t seed = 1);

// Smatch per (inference steps, sentence-length bucket). With a single
// checkpoint the same parameters run at every N; with one checkpoint per N
// each is evaluated at its own setting. Returns a TSV table.
std::string cmd_experiment_steps(const std::vector<std::string>& checkpoint_paths,
                                 const std::string& input_path, const std::string& gold_path,
                                 const std::vector<int>& steps,
                                 const std::vector<int>& bucket_bounds);

// Smatch per beam size; TSV table.
std::string cmd_experiment_beam(const std::string& checkpoint_path, const std::string& input_path,
                                const std::string& gold_path, const std::vector<int>& beams);

}  // namespace gsamr
