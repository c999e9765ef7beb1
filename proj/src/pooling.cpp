#include "vw/pooling.hpp"

#include <cmath>

#include "vw/kernels.hpp"

namespace vw::pool {

namespace k = vw::kernels;

MlpParams MlpParams::init(int in_dim, int out_dim, Rng rng) {
  return init_hidden(in_dim, 2 * std::max(in_dim, out_dim), out_dim, rng);
}

MlpParams MlpParams::init_hidden(int in_dim, int hidden, int out_dim, Rng rng) {
  if (in_dim <= 0 || hidden <= 0 || out_dim <= 0)
    throw std::invalid_argument("MlpParams::init: non-positive dimension");
  MlpParams p;
  p.w1 = Mat(hidden, in_dim);
  double s1 = 1.0 / std::sqrt(double(in_dim));
  for (double& v : p.w1.a) v = rng.uniform(-s1, s1);
  p.b1 = Mat(hidden, 1);
  p.gamma = Mat(hidden, 1, 1.0);
  p.beta = Mat(hidden, 1);
  p.run_mean = Mat(hidden, 1);
  p.run_var = Mat(hidden, 1, 1.0);
  p.w2 = Mat(out_dim, hidden);
  double s2 = 1.0 / std::sqrt(double(hidden));
  for (double& v : p.w2.a) v = rng.uniform(-s2, s2);
  p.b2 = Mat(out_dim, 1);
  p.momentum = 0.1;
  return p;
}

namespace {

Mat bn_eval_plain(const MlpParams& p, const Mat& h) {
  Mat y = h;
  for (int r = 0; r < h.rows; ++r) {
    double invstd = 1.0 / std::sqrt(std::max(p.run_var(r, 0), 1e-5));
    for (int j = 0; j < h.cols; ++j)
      y(r, j) = p.gamma(r, 0) * (h(r, j) - p.run_mean(r, 0)) * invstd + p.beta(r, 0);
  }
  return y;
}

Mat bn_train_plain(MlpParams& p, const Mat& h, bool update_running) {
  const int n = h.cols;
  Mat y = h;
  for (int r = 0; r < h.rows; ++r) {
    double mu = 0.0;
    for (int j = 0; j < n; ++j) mu += h(r, j);
    mu /= n;
    double var = 0.0;
    for (int j = 0; j < n; ++j) {
      double d = h(r, j) - mu;
      var += d * d;
    }
    var /= n;
    if (update_running) {
      p.run_mean(r, 0) = (1.0 - p.momentum) * p.run_mean(r, 0) + p.momentum * mu;
      p.run_var(r, 0) = (1.0 - p.momentum) * p.run_var(r, 0) + p.momentum * var;
    }
    double invstd = 1.0 / std::sqrt(std::max(var, 1e-5));
    for (int j = 0; j < n; ++j) y(r, j) = p.gamma(r, 0) * (h(r, j) - mu) * invstd + p.beta(r, 0);
  }
  return y;
}

}  // namespace

Mat mlp_forward_eval(const MlpParams& p, const Mat& x) {
  Mat h = k::add_colvec(k::matmul(p.w1, x), p.b1);
  h = bn_eval_plain(p, h);
  h = k::gelu(h);
  return k::add_colvec(k::matmul(p.w2, h), p.b2);
}

Mat mlp_forward_train(MlpParams& p, const Mat& x, bool update_running) {
  Mat h = k::add_colvec(k::matmul(p.w1, x), p.b1);
  h = bn_train_plain(p, h, update_running);
  h = k::gelu(h);
  return k::add_colvec(k::matmul(p.w2, h), p.b2);
}

MlpTape MlpTape::attach(ad::Tape& t, const MlpParams& p) {
  MlpTape mt{t.input(p.w1), t.input(p.b1), t.input(p.gamma), t.input(p.beta), t.input(p.w2), t.input(p.b2)};
  return mt;
}

ad::Value mlp_apply(const MlpTape& mt, MlpParams& host, const ad::Value& x, bool train,
                    bool update_running) {
  ad::Value h = ad::add_colvec(ad::matmul(mt.w1, x), mt.b1);
  if (train) {
    ad::BnRunning running{&host.run_mean, &host.run_var, host.momentum};
    h = ad::batchnorm_train(h, mt.gamma, mt.beta, running, update_running);
  } else {
    h = ad::batchnorm_eval(h, mt.gamma, mt.beta, host.run_mean, host.run_var);
  }
  h = ad::gelu(h);
  return ad::add_colvec(ad::matmul(mt.w2, h), mt.b2);
}

Mat soft_assign(const Mat& scores) { return k::softmax_rows(scores); }

Mat aggregate(const Mat& features, const Mat& assignments) {
  if (features.cols != assignments.cols)
    throw std::invalid_argument("aggregate: location counts disagree, " + features.shape_str() + " vs " +
                                assignments.shape_str());
  return k::matmul_nt(features, assignments);
}

Mat netvlad_bilinear(const Mat& features, const Mat& assignments, const Mat& centroids) {
  const int c = features.rows, l = features.cols, m = assignments.rows;
  if (assignments.cols != l)
    throw std::invalid_argument("netvlad_bilinear: location counts disagree, " + features.shape_str() + " vs " +
                                assignments.shape_str());
  if (centroids.rows != c || centroids.cols != m)
    throw std::invalid_argument("netvlad_bilinear: centroids " + centroids.shape_str() + ", want " +
                                std::to_string(c) + "x" + std::to_string(m));
  Mat out(c, m);
  for (int i = 0; i < l; ++i)
    for (int j = 0; j < m; ++j)
      for (int r = 0; r < c; ++r) out(r, j) += (features(r, i) - centroids(r, j)) * assignments(j, i);
  return out;
}

}  // namespace vw::pool
