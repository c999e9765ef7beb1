#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vw/io.hpp"
#include "vw/train.hpp"

namespace vw::cmd {

// Each command returns the process exit code: 0 ok, 2 numeric failure.
// Bad inputs throw std::invalid_argument / std::runtime_error, which the
// binary maps to exit code 1.

struct GenSynthArgs {
  io::RunConfig cfg;
  std::string out_dir = ".";
};
int gen_synth(const GenSynthArgs& a);

struct PoolArgs {
  std::string model_path;
  std::string scans_path;
  std::string out_path;
  bool no_whiten = false;
  std::optional<double> eps;
  std::optional<double> sigma;
  std::string dump_covariances;  // VWCV path, empty = off
};
int pool(const PoolArgs& a);

struct GradcheckArgs {
  std::uint64_t seed = 7;
  int seeds = 1;  // consecutive, starting at seed
  double h = 1e-5;
  double tol_core = 1e-5;
  double tol_svdpi = 5e-2;
  bool no_svdpi_backward = false;
};
int gradcheck(const GradcheckArgs& a);

struct TrainToyArgs {
  io::RunConfig cfg;
  std::string scans_path;
  std::string val_path;  // optional
  std::string out_dir = ".";
  train::Ablate ablate = train::Ablate::none;
  int max_steps = 0;
};
int train_toy(const TrainToyArgs& a);

struct EvalArgs {
  std::string db_path;
  std::string queries_path;
  std::string out_csv;  // optional; roc curve goes next to it as .roc.csv
  double radius = 3.0;
  std::vector<std::string> metrics = {"r@1", "r@1pct", "map@10", "f1max", "mrr", "roc"};
  bool exclude_self = false;
};
int eval(const EvalArgs& a);

struct AnalyzeArgs {
  std::string mode;          // ranks | w2
  std::string input_path;    // VWCV for ranks, VWDB for w2
  std::string compare_path;  // optional second VWDB for w2
  std::string out_csv;       // optional
};
int analyze(const AnalyzeArgs& a);

}  // namespace vw::cmd
