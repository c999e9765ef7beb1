// Acceptance suite for the pooling + whitening pipeline. Each numbered check
// prints exactly one PASS/FAIL line with its runtime; the exit code is the
// number of failures. Randomized checks are seeded, so every run sees the
// same instances.
#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <numeric>
#include <string>
#include <vector>

#include "vw/analysis.hpp"
#include "vw/commands.hpp"
#include "vw/kernels.hpp"
#include "vw/linalg.hpp"
#include "vw/matrix.hpp"
#include "vw/metrics.hpp"
#include "vw/pipeline.hpp"
#include "vw/pooldb.hpp"
#include "vw/pooling.hpp"
#include "vw/rng.hpp"
#include "vw/synth.hpp"
#include "vw/train.hpp"
#include "vw/whitening.hpp"

using namespace vw;
namespace k = vw::kernels;

namespace {

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

struct Outcome {
  bool ok = false;
  std::string detail;
};

Mat random_mat(Rng& rng, int r, int c, double scale = 1.0) {
  Mat m(r, c);
  for (double& e : m.a) e = scale * rng.normal();
  return m;
}

Mat spd_random(Rng& rng, int n, double ridge) {
  Mat b = random_mat(rng, n, n);
  Mat s = k::matmul_nt(b, b);
  for (int i = 0; i < n; ++i) s(i, i) += ridge;
  return s;
}

// Scans whose columns repeat in exact groups, pushing the pooled covariance
// toward rank `distinct`: the shrunk spectrum then carries near-equal bottom
// eigenvalues, the worst case for the closed-form eigendecomposition
// backward. `noise` sets how near.
io::ScanSet repeated_column_set(int places, int views, int c_in, int distinct, int repeats,
                                double noise, std::uint64_t seed) {
  Rng rng(seed);
  io::ScanSet set;
  set.c_in = std::uint32_t(c_in);
  set.len = std::uint32_t(distinct * repeats);
  std::uint64_t next_id = 1;
  for (int p = 0; p < places; ++p) {
    Mat latent = random_mat(rng, c_in, distinct);
    for (int v = 0; v < views; ++v) {
      io::Scan s;
      s.id = next_id++;
      s.place = std::uint64_t(p + 1);
      s.x = 20.0 * p;
      s.data = Mat(c_in, distinct * repeats);
      for (int g = 0; g < distinct; ++g)
        for (int r = 0; r < repeats; ++r)
          for (int c = 0; c < c_in; ++c)
            s.data(c, g * repeats + r) = latent(c, g) + noise * rng.normal();
      set.scans.push_back(std::move(s));
    }
  }
  return set;
}

pipe::Model model_from_config(const io::RunConfig& cfg) {
  pipe::ModelConfig mc;
  mc.c_in = cfg.c_in;
  mc.h = cfg.h;
  mc.c = cfg.c;
  mc.m = cfg.m;
  mc.sigma = cfg.resolved_sigma();
  mc.eps = cfg.eps;
  return pipe::Model::init(mc, cfg.seed);
}

struct RetrievalScores {
  double r1 = 0.0;
  double map10 = 0.0;
  bool diverged = false;
};

// Train on cfg's synthetic set with the given ablation, then score the
// holdout split against the training split.
RetrievalScores trained_scores(const io::RunConfig& cfg, train::Ablate ab) {
  synth::SynthOut data = synth::gen_synth(cfg);
  pipe::Model model = model_from_config(cfg);
  train::TrainOptions topt;
  topt.lr = cfg.lr;
  topt.epochs = cfg.epochs;
  topt.batch = cfg.batch;
  topt.margin = cfg.margin;
  topt.seed = cfg.seed;
  topt.ablate = ab;
  topt.validate = false;
  train::TrainResult res = train::train_toy(model, data.train, {}, topt);

  pipe::DescriptorOptions dopt;
  dopt.whiten = ab != train::Ablate::whiten;
  io::DescriptorDb ddb = pipe::descriptor_db(model, data.train, dopt);
  io::DescriptorDb qdb = pipe::descriptor_db(model, data.holdout, dopt);
  metrics::RetrievalRun run =
      metrics::build_run(pipe::to_item_set(qdb), pipe::to_item_set(ddb), cfg.radius, false);
  RetrievalScores s;
  s.r1 = metrics::recall_at(run, 1).value;
  s.map10 = metrics::map_at(run, 10).value;
  s.diverged = res.diverged;
  return s;
}

// 1. The bilinear form with explicit centroids equals plain aggregation
// minus the centroids whenever every assignment row sums to 1.
Outcome check_bilinear_reduction() {
  Rng rng(101);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    int c = 2 + int(rng.below(7));
    int l = 4 + int(rng.below(21));
    int m = 2 + int(rng.below(7));
    Mat f = random_mat(rng, c, l);
    Mat p = pool::soft_assign(random_mat(rng, m, l, 2.0));
    Mat cent = random_mat(rng, c, m);
    Mat lhs = pool::netvlad_bilinear(f, p, cent);
    Mat rhs = pool::aggregate(f, p);
    for (int i = 0; i < c; ++i)
      for (int j = 0; j < m; ++j)
        worst = std::max(worst, std::fabs(lhs(i, j) - (rhs(i, j) - cent(i, j))));
  }
  return {worst <= 1e-12, fmt("bilinear = aggregate - centroids, max dev %.2e", worst)};
}

// 2. With shrinkage forced off and no ridge, whitened full-rank data has
// exactly identity column covariance.
Outcome check_whitening_covariance() {
  Rng rng(202);
  whiten::WhitenOptions opt;
  opt.eps = 0.0;
  opt.force_rho = 0.0;
  double worst = 0.0;
  for (int t = 0; t < 50; ++t) {
    Mat x = random_mat(rng, 8, 32);
    whiten::WhitenResult w = whiten::zca_whiten(x, opt);
    Mat cov = whiten::sample_covariance(whiten::center(w.z).xbar);
    for (int i = 0; i < 8; ++i)
      for (int j = 0; j < 8; ++j)
        worst = std::max(worst, std::fabs(cov(i, j) - (i == j ? 1.0 : 0.0)));
  }
  return {worst <= 1e-6, fmt("cov(Z) vs I, max dev %.2e", worst)};
}

// 3. Block-diagonal Mahalanobis agrees with the dense quadratic form and
// with squared Euclidean distance after shared per-cell whitening.
Outcome check_metric_equivalence() {
  Rng rng(303);
  const int c = 4, m = 5, n = c * m;
  double worst_dense = 0.0, worst_eucl = 0.0;
  for (int t = 0; t < 50; ++t) {
    std::vector<Mat> blocks;
    for (int b = 0; b < m; ++b) blocks.push_back(spd_random(rng, c, 0.1));
    Mat x1 = random_mat(rng, c, m);
    Mat x2 = random_mat(rng, c, m);
    double maha = metrics::mahalanobis_blockdiag(x1, x2, blocks);

    Mat dense(n, n);
    for (int b = 0; b < m; ++b)
      for (int i = 0; i < c; ++i)
        for (int j = 0; j < c; ++j) dense(b * c + i, b * c + j) = blocks[std::size_t(b)](i, j);
    std::vector<double> d(std::size_t(n), 0.0);
    for (int b = 0; b < m; ++b)
      for (int i = 0; i < c; ++i) d[std::size_t(b * c + i)] = x1(i, b) - x2(i, b);
    lin::SymEig de = lin::sym_eig(dense);
    double quad = 0.0;
    for (int e = 0; e < n; ++e) {
      double proj = 0.0;
      for (int i = 0; i < n; ++i) proj += de.q(i, e) * d[std::size_t(i)];
      quad += proj * proj / de.lam[std::size_t(e)];
    }
    worst_dense = std::max(worst_dense, std::fabs(quad - maha) / std::fabs(maha));

    double eucl = 0.0;
    for (int b = 0; b < m; ++b) {
      lin::SymEig be = lin::sym_eig(blocks[std::size_t(b)]);
      Mat w(c, c);
      for (int i = 0; i < c; ++i)
        for (int j = 0; j < c; ++j) {
          double acc = 0.0;
          for (int e = 0; e < c; ++e)
            acc += be.q(i, e) * be.q(j, e) / std::sqrt(be.lam[std::size_t(e)]);
          w(i, j) = acc;
        }
      for (int i = 0; i < c; ++i) {
        double y1 = 0.0, y2 = 0.0;
        for (int j = 0; j < c; ++j) {
          y1 += w(i, j) * x1(j, b);
          y2 += w(i, j) * x2(j, b);
        }
        eucl += (y1 - y2) * (y1 - y2);
      }
    }
    worst_eucl = std::max(worst_eucl, std::fabs(eucl - maha) / std::fabs(maha));
  }
  bool ok = worst_dense <= 1e-8 && worst_eucl <= 1e-8;
  return {ok, fmt("vs dense %.2e, vs whitened Euclidean %.2e rel", worst_dense, worst_eucl)};
}

// 4. Shrinkage: coefficient bounds, trace preservation, the two
// hand-derived fixtures, and the ridge floor on rank-deficient inputs.
Outcome check_shrinkage() {
  Rng rng(404);
  const double eps = 1e-5;
  bool bounds_ok = true, trace_ok = true;
  double floor_worst = 1.0;
  for (int t = 0; t < 200; ++t) {
    Mat x = random_mat(rng, 8, 4);
    Mat sigma = whiten::sample_covariance(whiten::center(x).xbar);
    whiten::ShrinkResult s = whiten::rblw_shrink(sigma, 4);
    if (!(s.rho >= 0.0 && s.rho <= 1.0)) bounds_ok = false;
    double tr = lin::trace(sigma);
    if (std::fabs(lin::trace(s.sigma_rblw) - tr) > 1e-10 * std::max(1.0, std::fabs(tr)))
      trace_ok = false;
    Mat a = s.sigma_rblw;
    for (int i = 0; i < 8; ++i) a(i, i) += eps;
    lin::SymEig eig = lin::sym_eig(a);
    floor_worst = std::min(floor_worst, *std::min_element(eig.lam.begin(), eig.lam.end()));
  }
  bool floor_ok = floor_worst >= eps - 1e-12;

  Mat d31(2, 2);
  d31(0, 0) = 3.0;
  d31(1, 1) = 1.0;
  whiten::ShrinkResult f1 = whiten::rblw_shrink(d31, 4);
  bool f1_ok = std::fabs(f1.rho - 1.0) <= 1e-5 && std::fabs(f1.sigma_rblw(0, 0) - 2.0) <= 1e-5 &&
               std::fabs(f1.sigma_rblw(1, 1) - 2.0) <= 1e-5;

  Mat d40(2, 2);
  d40(0, 0) = 4.0;
  whiten::ShrinkResult f2 = whiten::rblw_shrink(d40, 50);
  bool f2_ok = std::fabs(f2.rho - 0.075385) <= 1e-5 &&
               std::fabs(f2.sigma_rblw(0, 0) - 3.84923) <= 1e-5 &&
               std::fabs(f2.sigma_rblw(1, 1) - 0.15077) <= 1e-5 &&
               std::fabs(f2.sigma_rblw(0, 1)) <= 1e-5;

  bool ok = bounds_ok && trace_ok && floor_ok && f1_ok && f2_ok;
  return {ok, fmt("rho in [0,1] %d, trace kept %d, fixtures %d/%d, min eig - eps %.1e", bounds_ok,
                  trace_ok, f1_ok, f2_ok, floor_worst - eps)};
}

// 5. Shrinkage plus the ridge restores full rank and never lowers the
// effective rank of the centered sample covariance.
Outcome check_rank_recovery() {
  Rng rng(505);
  bool ok = true;
  int worst_rank = 0;
  for (int t = 0; t < 100; ++t) {
    Mat x = random_mat(rng, 16, 16);
    Mat sigma = whiten::sample_covariance(whiten::center(x).xbar);
    whiten::ShrinkResult s = whiten::rblw_shrink(sigma, 16);
    Mat a = s.sigma_rblw;
    for (int i = 0; i < 16; ++i) a(i, i) += 1e-5;
    int r_sample = analysis::matrix_rank(sigma);
    int r_fixed = analysis::matrix_rank(a);
    worst_rank = std::max(worst_rank, r_sample);
    if (r_sample > 15 || r_fixed != 16) ok = false;
    if (analysis::effective_rank(s.sigma_rblw) < analysis::effective_rank(sigma) - 1e-12)
      ok = false;
  }
  return {ok, fmt("sample rank <= 15 (max %d), shrunk+ridge rank 16, eff-rank never drops",
                  worst_rank)};
}

// 6. The full-pipeline gradient check at its shipped tolerances.
Outcome check_gradients() {
  cmd::GradcheckArgs ga;
  ga.seed = 7;
  ga.seeds = 10;
  int rc = cmd::gradcheck(ga);
  return {rc == 0, fmt("gradcheck over %d seeds, exit %d", ga.seeds, rc)};
}

// 7. On repeated-column scans the closed-form eigendecomposition backward
// must blow up while the power-series backward trains 200 calm steps.
Outcome check_backward_stability() {
  io::ScanSet scans = repeated_column_set(8, 3, 8, 4, 3, 1e-6, 99);
  pipe::ModelConfig mc;
  mc.c_in = 8;
  mc.c = 6;
  mc.m = 8;
  mc.sigma = std::sqrt(8.0);
  train::TrainOptions topt;
  topt.seed = 11;
  topt.margin = 30.0;  // keep the hinge active so gradients actually flow
  topt.max_steps = 200;
  topt.epochs = 1000;
  topt.validate = false;

  topt.ablate = train::Ablate::svdpi;
  pipe::Model m1 = pipe::Model::init(mc, 42);
  train::TrainResult closed = train::train_toy(m1, scans, {}, topt);
  double spike = 0.0;
  bool nonfinite = closed.diverged;
  for (const train::StepRecord& st : closed.steps) {
    if (!std::isfinite(st.loss) || !std::isfinite(st.grad_norm)) nonfinite = true;
    else spike = std::max(spike, st.grad_norm);
  }
  bool closed_blew = nonfinite || spike > 1e6;

  topt.ablate = train::Ablate::none;
  pipe::Model m2 = pipe::Model::init(mc, 42);
  train::TrainResult series = train::train_toy(m2, scans, {}, topt);
  double series_max = 0.0;
  bool series_ok = !series.diverged && series.steps.size() == 200;
  for (const train::StepRecord& st : series.steps) {
    if (!std::isfinite(st.loss) || !std::isfinite(st.grad_norm)) series_ok = false;
    series_max = std::max(series_max, st.grad_norm);
  }
  series_ok = series_ok && series_max < 1e3 && series_max > 0.0;

  return {closed_blew && series_ok,
          fmt("closed form %s at step %d, series max grad %.1f over %zu steps",
              nonfinite ? "went non-finite" : "spiked", closed.diverged_step, series_max,
              series.steps.size())};
}

// 8. Golden retrieval run on the default synthetic set, plus the
// heterogeneous variant where whitening must beat plain flattening.
Outcome check_golden_retrieval() {
  omp_set_num_threads(1);
  io::RunConfig cfg;  // defaults: 64 places x 4 views, noise 0.05, 30 epochs
  RetrievalScores clean = trained_scores(cfg, train::Ablate::none);

  io::RunConfig het = cfg;
  het.hetero = true;
  RetrievalScores full = trained_scores(het, train::Ablate::none);
  RetrievalScores flat = trained_scores(het, train::Ablate::whiten);

  bool ok = !clean.diverged && clean.r1 >= 0.90 && clean.map10 >= 0.90 && !full.diverged &&
            !flat.diverged && full.r1 > flat.r1;
  return {ok, fmt("r@1 %.3f map@10 %.3f; hetero whitened %.3f > flattened %.3f", clean.r1,
                  clean.map10, full.r1, flat.r1)};
}

// 9. On the steep-ladder heterogeneous set, whitening at least halves the
// mean off-diagonal W2 between cell distributions.
Outcome check_cell_homogeneity() {
  io::RunConfig cfg;
  cfg.hetero = true;
  cfg.hetero_scale_max = 25.0;
  synth::SynthOut data = synth::gen_synth(cfg);
  pipe::Model model = model_from_config(cfg);

  std::vector<Mat> plain, whitened;
  for (const io::Scan& s : data.train.scans) {
    pipe::DescriptorOut out = pipe::descriptor(model, s.data);
    plain.push_back(out.xt);
    whitened.push_back(out.wr->z);
  }
  double w_off = analysis::mean_offdiag(analysis::w2_matrix(analysis::cell_statistics(whitened)));
  double p_off = analysis::mean_offdiag(analysis::w2_matrix(analysis::cell_statistics(plain)));
  bool ok = p_off > 0.0 && w_off <= 0.5 * p_off;
  return {ok, fmt("mean off-diagonal W2 %.3f whitened vs %.3f raw (ratio %.3f)", w_off, p_off,
                  w_off / p_off)};
}

// 10. Dividing descriptors by any sigma leaves every ranking, and therefore
// every retrieval metric, bit-for-bit unchanged.
Outcome check_sigma_invariance() {
  io::RunConfig cfg;
  cfg.places = 25;
  cfg.views = 2;
  cfg.holdout = 0;
  synth::SynthOut data = synth::gen_synth(cfg);
  pipe::Model model = model_from_config(cfg);
  const int n = int(data.train.scans.size());

  const double m = double(model.cfg.m);
  std::vector<std::vector<int>> orders;
  std::vector<std::vector<double>> metric_sets;
  for (double sigma : {1.0, std::sqrt(m), m}) {
    pipe::DescriptorOptions dopt;
    dopt.sigma_override = sigma;
    metrics::ItemSet items;
    items.desc = Mat(n, model.cfg.c * model.cfg.m);
    items.pos = Mat(n, 3);
    for (int i = 0; i < n; ++i) {
      const io::Scan& s = data.train.scans[std::size_t(i)];
      pipe::DescriptorOut out = pipe::descriptor(model, s.data, dopt);
      items.ids.push_back(s.id);
      for (int j = 0; j < int(out.flat.size()); ++j) items.desc(i, j) = out.flat[std::size_t(j)];
      items.pos(i, 0) = s.x;
      items.pos(i, 1) = s.y;
      items.pos(i, 2) = s.z;
    }

    std::vector<double> dists;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        double acc = 0.0;
        for (int d = 0; d < items.desc.cols; ++d) {
          double diff = items.desc(i, d) - items.desc(j, d);
          acc += diff * diff;
        }
        dists.push_back(acc);
      }
    std::vector<int> order(dists.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return dists[std::size_t(a)] < dists[std::size_t(b)]; });
    orders.push_back(std::move(order));

    metrics::RetrievalRun run = metrics::build_run(items, items, cfg.radius, true);
    metric_sets.push_back({metrics::recall_at(run, 1).value, metrics::map_at(run, 10).value,
                           metrics::mrr(run).value});
  }
  bool ok = n == 50;
  for (std::size_t v = 1; v < orders.size(); ++v) {
    if (orders[v] != orders[0]) ok = false;
    for (std::size_t i = 0; i < 3; ++i)
      if (metric_sets[v][i] != metric_sets[0][i]) ok = false;
  }
  return {ok, fmt("argsort of %zu pair distances and r@1/map@10/mrr identical across sigma",
                  orders[0].size())};
}

struct Entry {
  const char* what;
  Outcome (*run)();
  double limit_s;
};

}  // namespace

int main() {
  const Entry entries[] = {
      {"bilinear pooling reduction", check_bilinear_reduction, 1.0},
      {"whitened covariance is identity", check_whitening_covariance, 1.0},
      {"Mahalanobis metric equivalence", check_metric_equivalence, 5.0},
      {"covariance shrinkage", check_shrinkage, 1.0},
      {"rank recovery", check_rank_recovery, 5.0},
      {"pipeline gradients", check_gradients, 30.0},
      {"eigendecomposition backward stability", check_backward_stability, 120.0},
      {"toy retrieval golden run", check_golden_retrieval, 300.0},
      {"cell homogeneity under whitening", check_cell_homogeneity, 30.0},
      {"sigma scaling invariance", check_sigma_invariance, 1.0},
  };
  int failed = 0;
  int id = 0;
  for (const Entry& e : entries) {
    ++id;
    auto t0 = std::chrono::steady_clock::now();
    Outcome out = e.run();
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    bool ok = out.ok && secs < e.limit_s;
    std::printf("[%2d] %s  %6.2fs (limit %3.0fs)  %s: %s%s\n", id, ok ? "PASS" : "FAIL", secs,
                e.limit_s, e.what, out.detail.c_str(),
                out.ok && !ok ? " [over time limit]" : "");
    std::fflush(stdout);
    if (!ok) ++failed;
  }
  if (failed) std::printf("%d of 10 checks failed\n", failed);
  return failed;
}
