#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vw/io.hpp"
#include "vw/pipeline.hpp"

namespace vw::train {

// rblw: shrinkage off (raw covariance + eps I). svdpi: closed-form
// eigendecomposition backward instead of the power-series one. whiten: raw
// flattened pooling, no whitening at all.
enum class Ablate { none, rblw, svdpi, whiten };

Ablate parse_ablate(const std::string& name);
const char* ablate_name(Ablate a);

struct StepRecord {
  int step = 0;
  double loss = 0.0;
  double grad_norm = 0.0;
  std::uint64_t batch_seed = 0;
};

struct EpochRecord {
  int epoch = 0;
  double mean_loss = 0.0;
  double val_r1 = -1.0;  // -1 when not evaluated
};

struct TrainOptions {
  double lr = 0.02;
  int epochs = 30;
  int batch = 8;
  double margin = 1.0;
  std::uint64_t seed = 7;
  Ablate ablate = Ablate::none;
  int max_steps = 0;  // > 0 caps total steps regardless of epochs
  bool validate = true;
};

struct TrainResult {
  std::vector<StepRecord> steps;
  std::vector<EpochRecord> epochs;
  bool diverged = false;
  int diverged_step = -1;
  std::uint64_t diverged_batch_seed = 0;
};

// Mini-batch triplet training, mean over the batch of
// relu(d(a, p) - d(a, n) + margin) on final scaled descriptors, plain
// gradient descent. Anchors and positives share a place, negatives never do.
// Stops immediately on a non-finite loss or gradient, reporting the batch
// seed that produced it. Deterministic given (model, sets, options).
TrainResult train_toy(pipe::Model& model, const io::ScanSet& train_set,
                      const io::ScanSet& val_set, const TrainOptions& opt);

}  // namespace vw::train
