#pragma once

#include "vw/matrix.hpp"
#include "vw/rng.hpp"
#include "vw/tape.hpp"

namespace vw::pool {

// Two-layer MLP applied column-wise: w2 * gelu(bn(w1 * x + b1)) + b2.
// Batch statistics are taken over every column passed in one call, so
// co-batched instances share them.
struct MlpParams {
  Mat w1, b1, gamma, beta, run_mean, run_var, w2, b2;
  double momentum = 0.1;

  int in_dim() const { return w1.cols; }
  int hidden() const { return w1.rows; }
  int out_dim() const { return w2.rows; }

  // hidden = 2 * max(in_dim, out_dim); weights uniform in +-1/sqrt(fan_in),
  // biases 0, gamma 1, beta 0, running stats at the identity transform.
  static MlpParams init(int in_dim, int out_dim, Rng rng);
  static MlpParams init_hidden(int in_dim, int hidden, int out_dim, Rng rng);
};

Mat mlp_forward_eval(const MlpParams& p, const Mat& x);
Mat mlp_forward_train(MlpParams& p, const Mat& x, bool update_running);

// Parameter handles for one tape pass.
struct MlpTape {
  ad::Value w1, b1, gamma, beta, w2, b2;
  static MlpTape attach(ad::Tape& t, const MlpParams& p);
};

// host carries the running statistics; they are read in eval mode and
// (optionally) updated in train mode.
ad::Value mlp_apply(const MlpTape& mt, MlpParams& host, const ad::Value& x, bool train,
                    bool update_running);

// Row-wise softmax of raw scores: cell memberships per location.
Mat soft_assign(const Mat& scores);

// features (C x L) * assignments^T (L x M) -> C x M of per-cell weighted sums.
Mat aggregate(const Mat& features, const Mat& assignments);

// Residual-based bilinear aggregation, written out literally: column m gets
// sum_i (f_i - centroid_m) * p_mi. With zero centroids this is aggregate().
Mat netvlad_bilinear(const Mat& features, const Mat& assignments, const Mat& centroids);

}  // namespace vw::pool
