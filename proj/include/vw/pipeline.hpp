#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vw/pooling.hpp"
#include "vw/whitening.hpp"

namespace vw::pipe {

// Projection tower maps c_in -> c, score tower c_in -> m. h = 0 gives each
// tower the default hidden width 2 * max(in, out); h > 0 forces both to h.
// sigma and eps are stored resolved.
struct ModelConfig {
  int c_in = 8;
  int h = 0;
  int c = 8;
  int m = 8;
  double sigma = 1.0;
  double eps = 1e-5;

  int proj_hidden() const { return h > 0 ? h : 2 * std::max(c_in, c); }
  int score_hidden() const { return h > 0 ? h : 2 * std::max(c_in, m); }
};

struct Model {
  ModelConfig cfg;
  pool::MlpParams proj;
  pool::MlpParams score;

  static Model init(const ModelConfig& cfg, std::uint64_t seed);
};

struct DescriptorOptions {
  bool whiten = true;
  bool ablate_rblw = false;  // pass the raw covariance through, no shrinkage
  std::optional<double> sigma_override;
  std::optional<double> eps_override;
};

// Eval-mode pooled descriptor: proj(X) * softmax_rows(score(X))^T, C x M.
Mat pooled_descriptor(const Model& model, const Mat& scan);

struct DescriptorOut {
  Mat xt;                         // pooled C x M
  std::optional<whiten::WhitenResult> wr;
  std::vector<double> flat;       // flattened, divided by sigma
};
DescriptorOut descriptor(const Model& model, const Mat& scan, const DescriptorOptions& opt = {});

// One named parameter: its tape handle plus the storage it came from.
struct ParamRef {
  std::string name;
  ad::Value value;
  Mat* host = nullptr;
};

// Differentiable batch pass sharing one tape. Instances are concatenated
// column-wise before the towers so train-mode batch statistics span the
// whole co-batch, then sliced apart for per-instance pooling and whitening.
struct TapeModel {
  pool::MlpTape proj, score;
  Model* host = nullptr;

  static TapeModel attach(ad::Tape& t, Model& m);
  std::vector<ParamRef> params() const;

  std::vector<ad::Value> descriptors(const std::vector<const Mat*>& scans, bool train,
                                     bool update_running, const DescriptorOptions& opt,
                                     whiten::EigBackward mode = whiten::EigBackward::series);
};

// Squared distance between two descriptor Values of equal shape.
ad::Value sq_distance(const ad::Value& a, const ad::Value& b);

}  // namespace vw::pipe
