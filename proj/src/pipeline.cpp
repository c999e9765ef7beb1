#include "vw/pipeline.hpp"

#include "vw/kernels.hpp"
#include "vw/rng.hpp"

namespace vw::pipe {

namespace k = vw::kernels;

Model Model::init(const ModelConfig& cfg, std::uint64_t seed) {
  if (cfg.c_in < 1 || cfg.c < 1 || cfg.m < 1)
    throw std::invalid_argument("Model::init: non-positive dimensions");
  if (!(cfg.sigma > 0.0)) throw std::invalid_argument("Model::init: sigma must be positive");
  Model m;
  m.cfg = cfg;
  Rng root(seed);
  m.proj = pool::MlpParams::init_hidden(cfg.c_in, cfg.proj_hidden(), cfg.c, root.child(1));
  m.score = pool::MlpParams::init_hidden(cfg.c_in, cfg.score_hidden(), cfg.m, root.child(2));
  return m;
}

Mat pooled_descriptor(const Model& model, const Mat& scan) {
  if (scan.rows != model.cfg.c_in)
    throw std::invalid_argument("pooled_descriptor: scan has " + std::to_string(scan.rows) + " channels, model wants " +
                                std::to_string(model.cfg.c_in));
  Mat f = pool::mlp_forward_eval(model.proj, scan);
  Mat p = pool::soft_assign(pool::mlp_forward_eval(model.score, scan));
  return pool::aggregate(f, p);
}

DescriptorOut descriptor(const Model& model, const Mat& scan, const DescriptorOptions& opt) {
  DescriptorOut out;
  out.xt = pooled_descriptor(model, scan);
  double sigma = opt.sigma_override.value_or(model.cfg.sigma);
  if (opt.whiten) {
    whiten::WhitenOptions wo;
    wo.eps = opt.eps_override.value_or(model.cfg.eps);
    wo.ablate_rblw = opt.ablate_rblw;
    out.wr = whiten::zca_whiten(out.xt, wo);
    out.flat = whiten::scale_flatten(out.wr->z, sigma);
  } else {
    out.flat = whiten::scale_flatten(out.xt, sigma);
  }
  return out;
}

TapeModel TapeModel::attach(ad::Tape& t, Model& m) {
  TapeModel tm;
  tm.proj = pool::MlpTape::attach(t, m.proj);
  tm.score = pool::MlpTape::attach(t, m.score);
  tm.host = &m;
  return tm;
}

std::vector<ParamRef> TapeModel::params() const {
  std::vector<ParamRef> out;
  auto push = [&](const char* net, const pool::MlpTape& mt, pool::MlpParams& p) {
    out.push_back({std::string(net) + ".w1", mt.w1, &p.w1});
    out.push_back({std::string(net) + ".b1", mt.b1, &p.b1});
    out.push_back({std::string(net) + ".gamma", mt.gamma, &p.gamma});
    out.push_back({std::string(net) + ".beta", mt.beta, &p.beta});
    out.push_back({std::string(net) + ".w2", mt.w2, &p.w2});
    out.push_back({std::string(net) + ".b2", mt.b2, &p.b2});
  };
  push("proj", proj, host->proj);
  push("score", score, host->score);
  return out;
}

std::vector<ad::Value> TapeModel::descriptors(const std::vector<const Mat*>& scans, bool train,
                                              bool update_running, const DescriptorOptions& opt,
                                              whiten::EigBackward mode) {
  if (scans.empty()) throw std::invalid_argument("TapeModel::descriptors: empty batch");
  ad::Tape& t = *proj.w1.tape;
  const int c_in = host->cfg.c_in;

  int total = 0;
  for (const Mat* s : scans) {
    if (s->rows != c_in)
      throw std::invalid_argument("TapeModel::descriptors: scan has " + std::to_string(s->rows) +
                                  " channels, model wants " + std::to_string(c_in));
    total += s->cols;
  }
  Mat xall(c_in, total);
  int at = 0;
  for (const Mat* s : scans) {
    for (int i = 0; i < c_in; ++i)
      for (int j = 0; j < s->cols; ++j) xall(i, at + j) = (*s)(i, j);
    at += s->cols;
  }

  ad::Value x = t.input(std::move(xall));
  ad::Value f_all = pool::mlp_apply(proj, host->proj, x, train, update_running);
  ad::Value s_all = pool::mlp_apply(score, host->score, x, train, update_running);

  double sigma = opt.sigma_override.value_or(host->cfg.sigma);
  whiten::WhitenOptions wo;
  wo.eps = opt.eps_override.value_or(host->cfg.eps);
  wo.ablate_rblw = opt.ablate_rblw;

  std::vector<ad::Value> out;
  out.reserve(scans.size());
  at = 0;
  for (const Mat* s : scans) {
    ad::Value f = ad::slice_cols(f_all, at, at + s->cols);
    ad::Value p = ad::softmax_rows(ad::slice_cols(s_all, at, at + s->cols));
    ad::Value xt = ad::matmul(f, ad::transpose(p));
    ad::Value desc = opt.whiten ? whiten::whiten_graph(t, xt, wo, mode) : xt;
    out.push_back(ad::smul(desc, 1.0 / sigma));
    at += s->cols;
  }
  return out;
}

ad::Value sq_distance(const ad::Value& a, const ad::Value& b) {
  ad::Value d = ad::sub(a, b);
  return ad::sum(ad::mul(d, d));
}

}  // namespace vw::pipe
