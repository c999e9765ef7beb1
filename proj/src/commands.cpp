#include "vw/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "vw/analysis.hpp"
#include "vw/gradcheck.hpp"
#include "vw/kernels.hpp"
#include "vw/metrics.hpp"
#include "vw/pooldb.hpp"
#include "vw/rng.hpp"
#include "vw/synth.hpp"

namespace vw::cmd {

namespace fs = std::filesystem;

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  return out;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create directory " + dir + ": " + ec.message());
}

}  // namespace

int gen_synth(const GenSynthArgs& a) {
  synth::SynthOut out = synth::gen_synth(a.cfg);
  ensure_dir(a.out_dir);
  io::save_scan_set(out.train, a.out_dir + "/train.vwsc");
  io::save_scan_set(out.holdout, a.out_dir + "/holdout.vwsc");

  std::ofstream places = open_out(a.out_dir + "/places.csv");
  places << "place,x,y\n";
  for (const synth::Place& p : out.places)
    places << p.id << "," << num(p.x) << "," << num(p.y) << "\n";

  open_out(a.out_dir + "/config.txt") << a.cfg.to_text();

  std::cout << "gen-synth: " << out.places.size() << " places, " << out.train.scans.size()
            << " train scans, " << out.holdout.scans.size() << " holdout scans -> " << a.out_dir
            << "\n";
  return 0;
}

int pool(const PoolArgs& a) {
  if (a.no_whiten && !a.dump_covariances.empty())
    throw std::invalid_argument("pool: --dump-covariances needs whitening enabled");

  pipe::Model model = io::load_model(a.model_path);
  io::ScanSet scans = io::load_scan_set(a.scans_path);
  if (int(scans.c_in) != model.cfg.c_in)
    throw std::invalid_argument("pool: scans have " + std::to_string(scans.c_in) +
                                " channels, model wants " + std::to_string(model.cfg.c_in));

  pipe::DescriptorOptions opt;
  opt.whiten = !a.no_whiten;
  opt.eps_override = a.eps;
  opt.sigma_override = a.sigma;

  std::vector<whiten::WhitenResult> keep;
  io::DescriptorDb db =
      pipe::descriptor_db(model, scans, opt, a.dump_covariances.empty() ? nullptr : &keep);
  io::save_descriptor_db(db, a.out_path);

  if (!a.dump_covariances.empty()) {
    io::CovDump dump;
    dump.c = std::uint32_t(model.cfg.c);
    dump.records.reserve(keep.size());
    for (std::size_t i = 0; i < keep.size(); ++i) {
      io::CovRecord rec;
      rec.id = scans.scans[i].id;
      rec.sigma = keep[i].sigma;
      rec.sigma_rblw = keep[i].sigma_rblw;
      rec.recon = lin::eig_reconstruct(keep[i].eig);
      dump.records.push_back(std::move(rec));
    }
    io::save_cov_dump(dump, a.dump_covariances);
  }

  std::cout << "pool: " << db.records.size() << " scans -> " << a.out_path << " (dims "
            << db.dims() << ", whiten " << (opt.whiten ? "on" : "off") << ", sigma "
            << num(a.sigma.value_or(model.cfg.sigma)) << ", eps "
            << num(a.eps.value_or(model.cfg.eps)) << ")\n";
  return 0;
}

namespace {

struct CheckSetup {
  pipe::Model model;
  Mat s1, s2;
};

// A scan of 4 distinct random points, each repeated 3 times. The pooled cell
// matrix is an affine combination of 4 feature vectors, so after centering its
// rank is exactly 3: the bottom three eigenvalues of the shrunk covariance are
// exactly equal, and the centered data has no component along them, which
// keeps the truncated-series eigendecomposition backward exact there.
Mat degenerate_scan(Rng& r) {
  Mat s(8, 12);
  for (int d = 0; d < 4; ++d) {
    double col[8];
    for (double& e : col) e = 2.0 * r.normal();
    for (int rep = 0; rep < 3; ++rep)
      for (int i = 0; i < 8; ++i) s(i, 3 * d + rep) = col[i];
  }
  return s;
}

// Largest adjacent ratio among the three live eigenvalues plus the drop to
// the degenerate floor. The series backward loses a (ratio)^terms fraction of
// each adjacent coupling, so candidates are resampled until every ratio is
// small enough for that loss to sit well inside the svdpi tolerance.
double live_spectrum_ratio(const pipe::Model& model, const Mat& s) {
  Mat f = pool::mlp_forward_eval(model.proj, s);
  Mat p = pool::soft_assign(pool::mlp_forward_eval(model.score, s));
  Mat xt = pool::aggregate(f, p);
  whiten::WhitenOptions wo;
  wo.eps = model.cfg.eps;
  whiten::WhitenResult wr = whiten::zca_whiten(xt, wo);
  double worst = 0.0;
  for (std::size_t i = 0; i + 1 < 4; ++i)
    worst = std::max(worst, wr.eig.lam[i + 1] / wr.eig.lam[i]);
  return worst;
}

CheckSetup make_setup(std::uint64_t seed) {
  pipe::ModelConfig mc;
  mc.c_in = 8;
  mc.c = 6;
  mc.m = 8;
  mc.sigma = std::sqrt(double(mc.m));
  mc.eps = 1e-5;
  CheckSetup cs{pipe::Model::init(mc, seed), Mat(8, 12), Mat(8, 12)};
  Rng root(seed);
  for (std::uint64_t attempt = 0; attempt < 200; ++attempt) {
    Rng r1 = root.child(101 + 2 * attempt);
    Rng r2 = root.child(102 + 2 * attempt);
    Mat c1 = degenerate_scan(r1);
    Mat c2 = degenerate_scan(r2);
    if (live_spectrum_ratio(cs.model, c1) <= 0.75 && live_spectrum_ratio(cs.model, c2) <= 0.75) {
      cs.s1 = std::move(c1);
      cs.s2 = std::move(c2);
      return cs;
    }
  }
  throw std::runtime_error("gradcheck: no well-separated eigenspectrum in 200 draws for seed " +
                           std::to_string(seed));
}

// Eval-mode batch norm: in train mode a uniform shift of a pre-norm channel
// is swallowed by the batch statistics, so the first-layer bias gradients
// would be exactly zero and the floored relative error would only measure
// finite-difference noise.
double pair_loss(pipe::Model& model, const Mat& s1, const Mat& s2, bool whiten, double eps) {
  Mat x = kernels::hstack(s1, s2);
  Mat f_all = pool::mlp_forward_eval(model.proj, x);
  Mat sc_all = pool::mlp_forward_eval(model.score, x);
  auto one = [&](int c0, int c1) {
    Mat f = kernels::slice_cols(f_all, c0, c1);
    Mat p = pool::soft_assign(kernels::slice_cols(sc_all, c0, c1));
    Mat xt = pool::aggregate(f, p);
    if (!whiten) return whiten::scale_flatten(xt, model.cfg.sigma);
    whiten::WhitenOptions wo;
    wo.eps = eps;
    return whiten::scale_flatten(whiten::zca_whiten(xt, wo).z, model.cfg.sigma);
  };
  std::vector<double> d1 = one(0, s1.cols);
  std::vector<double> d2 = one(s1.cols, x.cols);
  return metrics::euclidean_sq(d1, d2);
}

ad::GradReport run_gradcheck_path(std::uint64_t seed, bool whiten, whiten::EigBackward mode,
                                  double h) {
  CheckSetup cs = make_setup(seed);
  const double eps = cs.model.cfg.eps;

  ad::Tape t;
  pipe::TapeModel tm = pipe::TapeModel::attach(t, cs.model);
  pipe::DescriptorOptions dopt;
  dopt.whiten = whiten;
  std::vector<ad::Value> desc = tm.descriptors({&cs.s1, &cs.s2}, false, false, dopt, mode);
  ad::Value loss = pipe::sq_distance(desc[0], desc[1]);
  t.backward(loss);

  ad::GradReport rep;
  for (const pipe::ParamRef& pr : tm.params()) {
    Mat g = t.grad(pr.value);
    Mat& host = *pr.host;
    Mat fd(host.rows, host.cols);
    for (std::size_t k = 0; k < host.a.size(); ++k) {
      double orig = host.a[k];
      host.a[k] = orig + h;
      double fp = pair_loss(cs.model, cs.s1, cs.s2, whiten, eps);
      host.a[k] = orig - h;
      double fm = pair_loss(cs.model, cs.s1, cs.s2, whiten, eps);
      host.a[k] = orig;
      fd.a[k] = (fp - fm) / (2.0 * h);
      if (!std::isfinite(fd.a[k]))
        throw std::runtime_error("gradcheck: non-finite probe at " + pr.name + "[" +
                                 std::to_string(k) + "]");
    }
    rep.add(pr.name, std::move(g), std::move(fd));
  }
  return rep;
}

double self_distance_grad_max(std::uint64_t seed) {
  CheckSetup cs = make_setup(seed);
  ad::Tape t;
  pipe::TapeModel tm = pipe::TapeModel::attach(t, cs.model);
  pipe::DescriptorOptions dopt;
  std::vector<ad::Value> desc = tm.descriptors({&cs.s1, &cs.s1}, false, false, dopt,
                                               whiten::EigBackward::series);
  ad::Value loss = pipe::sq_distance(desc[0], desc[1]);
  t.backward(loss);
  double worst = 0.0;
  for (const pipe::ParamRef& pr : tm.params()) worst = std::max(worst, t.grad(pr.value).max_abs());
  return worst;
}

}  // namespace

int gradcheck(const GradcheckArgs& a) {
  if (a.seeds < 1) throw std::invalid_argument("gradcheck: --seeds must be >= 1");
  if (!(a.h > 0.0)) throw std::invalid_argument("gradcheck: --h must be positive");

  bool ok = true;
  std::string worst_line;
  for (int i = 0; i < a.seeds; ++i) {
    std::uint64_t seed = a.seed + std::uint64_t(i);

    ad::GradReport core = run_gradcheck_path(seed, false, whiten::EigBackward::series, a.h);
    double core_err = core.aggregate();
    bool core_ok = core_err <= a.tol_core;
    std::printf("seed %llu  core   rel err %.3e  %s\n", (unsigned long long)seed, core_err,
                core_ok ? "PASS" : "FAIL");
    if (!core_ok) {
      ok = false;
      worst_line = "core path: rel err " + num(core_err) + ", largest entry deviation in " +
                   core.worst_name;
    }

    whiten::EigBackward mode =
        a.no_svdpi_backward ? whiten::EigBackward::none : whiten::EigBackward::series;
    ad::GradReport svdpi = run_gradcheck_path(seed, true, mode, a.h);
    double svdpi_err = svdpi.aggregate();
    if (a.no_svdpi_backward) {
      bool discrepancy = svdpi_err > a.tol_svdpi;
      std::printf("seed %llu  svdpi  rel err %.3e  %s\n", (unsigned long long)seed, svdpi_err,
                  discrepancy ? "EXPECTED-FAIL (gradient blocked, discrepancy confirmed)"
                              : "FAIL (blocked gradient went unnoticed)");
      if (!discrepancy) {
        ok = false;
        worst_line = "svdpi path: blocking the eigendecomposition backward left rel err at " +
                     num(svdpi_err);
      }
    } else {
      bool svdpi_ok = svdpi_err <= a.tol_svdpi;
      std::printf("seed %llu  svdpi  rel err %.3e  %s\n", (unsigned long long)seed, svdpi_err,
                  svdpi_ok ? "PASS" : "FAIL");
      if (!svdpi_ok) {
        ok = false;
        worst_line = "svdpi path: rel err " + num(svdpi_err) + ", largest entry deviation in " +
                     svdpi.worst_name;
      }
    }

    double self_worst = self_distance_grad_max(seed);
    bool self_ok = self_worst <= 1e-8;
    std::printf("seed %llu  self   max |grad| %.3e  %s\n", (unsigned long long)seed, self_worst,
                self_ok ? "PASS" : "FAIL");
    if (!self_ok) {
      ok = false;
      worst_line = "self-distance gradient " + num(self_worst);
    }
  }

  if (!ok) {
    std::printf("gradcheck FAILED: %s\n", worst_line.c_str());
    return 2;
  }
  std::printf("gradcheck passed (%d seed%s)\n", a.seeds, a.seeds == 1 ? "" : "s");
  return 0;
}

int train_toy(const TrainToyArgs& a) {
  io::ScanSet train_set = io::load_scan_set(a.scans_path);
  io::ScanSet val_set;
  if (!a.val_path.empty()) val_set = io::load_scan_set(a.val_path);
  if (int(train_set.c_in) != a.cfg.c_in)
    throw std::invalid_argument("train-toy: scans have " + std::to_string(train_set.c_in) +
                                " channels, config says " + std::to_string(a.cfg.c_in));

  pipe::ModelConfig mc;
  mc.c_in = a.cfg.c_in;
  mc.h = a.cfg.h;
  mc.c = a.cfg.c;
  mc.m = a.cfg.m;
  mc.sigma = a.cfg.resolved_sigma();
  mc.eps = a.cfg.eps;
  pipe::Model model = pipe::Model::init(mc, a.cfg.seed);

  train::TrainOptions topt;
  topt.lr = a.cfg.lr;
  topt.epochs = a.cfg.epochs;
  topt.batch = a.cfg.batch;
  topt.margin = a.cfg.margin;
  topt.seed = a.cfg.seed;
  topt.ablate = a.ablate;
  topt.max_steps = a.max_steps;

  ensure_dir(a.out_dir);
  open_out(a.out_dir + "/config.txt") << a.cfg.to_text();

  std::cout << "train-toy: " << train_set.scans.size() << " scans, ablate "
            << train::ablate_name(a.ablate) << ", sigma " << num(mc.sigma) << "\n";

  train::TrainResult res = train::train_toy(model, train_set, val_set, topt);

  std::ofstream curve = open_out(a.out_dir + "/loss_curve.csv");
  curve << "epoch,mean_loss,val_r1\n";
  for (const train::EpochRecord& e : res.epochs) {
    curve << e.epoch << "," << num(e.mean_loss) << ",";
    if (e.val_r1 >= 0.0) curve << num(e.val_r1);
    curve << "\n";
    std::cout << "epoch " << e.epoch << "  loss " << num(e.mean_loss);
    if (e.val_r1 >= 0.0) std::cout << "  val r@1 " << num(e.val_r1);
    std::cout << "\n";
  }

  std::ofstream steps = open_out(a.out_dir + "/steps.csv");
  steps << "step,loss,grad_norm\n";
  for (const train::StepRecord& s : res.steps)
    steps << s.step << "," << num(s.loss) << "," << num(s.grad_norm) << "\n";

  if (res.diverged) {
    std::cout << "train-toy DIVERGED at step " << res.diverged_step << " (batch seed "
              << res.diverged_batch_seed << ")\n";
    return 2;
  }

  io::save_model(model, a.out_dir + "/model.vwmd");
  std::cout << "train-toy: model -> " << a.out_dir << "/model.vwmd\n";
  return 0;
}

namespace {

struct MetricRow {
  std::string name;
  double value = 0.0;
  int used = 0, skipped = 0;
  std::string note;
};

int parse_k(const std::string& metric, std::size_t at) {
  std::size_t used = 0;
  int k = 0;
  try {
    k = std::stoi(metric.substr(at), &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != metric.size() - at || k < 1)
    throw std::invalid_argument("eval: bad metric '" + metric + "'");
  return k;
}

}  // namespace

int eval(const EvalArgs& a) {
  io::DescriptorDb db = io::load_descriptor_db(a.db_path);
  io::DescriptorDb qdb = io::load_descriptor_db(a.queries_path);
  if (db.dims() != qdb.dims())
    throw std::invalid_argument("eval: dims mismatch, database " + std::to_string(db.dims()) +
                                " vs queries " + std::to_string(qdb.dims()));
  if (db.records.empty() || qdb.records.empty())
    throw std::invalid_argument("eval: empty database or query set");

  metrics::RetrievalRun run =
      metrics::build_run(pipe::to_item_set(qdb), pipe::to_item_set(db), a.radius, a.exclude_self);

  std::vector<double> t1_dist;
  std::vector<char> t1_label;
  metrics::top1(run, t1_dist, t1_label);

  std::vector<MetricRow> rows;
  metrics::RocCurve roc;
  bool want_roc = false;

  for (const std::string& name : a.metrics) {
    MetricRow row;
    row.name = name;
    if (name == "r@1pct") {
      metrics::MetricSummary s =
          metrics::recall_at(run, metrics::k_for_percent(db.records.size(), 1.0));
      row.value = s.value;
      row.used = s.used;
      row.skipped = s.skipped;
    } else if (name.rfind("r@", 0) == 0) {
      metrics::MetricSummary s = metrics::recall_at(run, parse_k(name, 2));
      row.value = s.value;
      row.used = s.used;
      row.skipped = s.skipped;
    } else if (name.rfind("map@", 0) == 0) {
      metrics::MetricSummary s = metrics::map_at(run, parse_k(name, 4));
      row.value = s.value;
      row.used = s.used;
      row.skipped = s.skipped;
    } else if (name == "mrr") {
      metrics::MetricSummary s = metrics::mrr(run);
      row.value = s.value;
      row.used = s.used;
      row.skipped = s.skipped;
    } else if (name == "f1max") {
      metrics::F1Result f = metrics::f1_max(t1_dist, t1_label);
      row.value = f.f1;
      row.used = int(t1_dist.size());
      row.note = f.degenerate ? "degenerate" : "tau=" + num(f.tau);
    } else if (name == "roc") {
      roc = metrics::roc_points(t1_dist, t1_label);
      want_roc = true;
      row.name = "roc_auc";
      row.value = metrics::roc_auc(roc);
      row.used = int(t1_dist.size());
      if (roc.degenerate) row.note = "degenerate";
    } else {
      throw std::invalid_argument("eval: unknown metric '" + name + "'");
    }
    rows.push_back(std::move(row));
  }

  std::printf("%-10s %12s %6s %8s  %s\n", "metric", "value", "used", "skipped", "note");
  for (const MetricRow& r : rows)
    std::printf("%-10s %12.6f %6d %8d  %s\n", r.name.c_str(), r.value, r.used, r.skipped,
                r.note.c_str());

  if (!a.out_csv.empty()) {
    std::ofstream out = open_out(a.out_csv);
    out << "metric,value,used,skipped,note\n";
    for (const MetricRow& r : rows)
      out << r.name << "," << num(r.value) << "," << r.used << "," << r.skipped << "," << r.note
          << "\n";
    if (want_roc) {
      std::ofstream rocout = open_out(a.out_csv + ".roc.csv");
      rocout << "fpr,tpr,tau\n";
      for (const metrics::RocPoint& p : roc.points)
        rocout << num(p.fpr) << "," << num(p.tpr) << "," << num(p.tau) << "\n";
    }
  }
  return 0;
}

namespace {

double median(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("median of an empty set");
  std::sort(v.begin(), v.end());
  std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

int analyze_ranks(const AnalyzeArgs& a) {
  io::CovDump dump = io::load_cov_dump(a.input_path);
  if (dump.records.empty())
    throw std::invalid_argument("analyze ranks: the covariance dump " + a.input_path +
                                " has no records; produce one with pool --dump-covariances");

  struct Cols {
    std::vector<double> rank_sigma, eff_sigma, rank_rblw, eff_rblw, rank_recon, eff_recon;
  } c;

  std::ostringstream body;
  for (const io::CovRecord& r : dump.records) {
    double rs = analysis::matrix_rank(r.sigma);
    double es = analysis::effective_rank(r.sigma);
    double rb = analysis::matrix_rank(r.sigma_rblw);
    double eb = analysis::effective_rank(r.sigma_rblw);
    double rr = analysis::matrix_rank(r.recon);
    double er = analysis::effective_rank(r.recon);
    c.rank_sigma.push_back(rs);
    c.eff_sigma.push_back(es);
    c.rank_rblw.push_back(rb);
    c.eff_rblw.push_back(eb);
    c.rank_recon.push_back(rr);
    c.eff_recon.push_back(er);
    body << r.id << "," << rs << "," << num(es) << "," << rb << "," << num(eb) << "," << rr << ","
         << num(er) << "\n";
  }

  std::printf("stage            median rank   median eff-rank   (%zu instances, C=%u)\n",
              dump.records.size(), dump.c);
  std::printf("covariance       %11g   %15.4f\n", median(c.rank_sigma), median(c.eff_sigma));
  std::printf("shrunk           %11g   %15.4f\n", median(c.rank_rblw), median(c.eff_rblw));
  std::printf("reconstructed    %11g   %15.4f\n", median(c.rank_recon), median(c.eff_recon));

  if (!a.out_csv.empty()) {
    std::ofstream out = open_out(a.out_csv);
    out << "id,rank_sigma,effrank_sigma,rank_rblw,effrank_rblw,rank_recon,effrank_recon\n"
        << body.str();
  }
  return 0;
}

std::vector<Mat> db_descriptors(const io::DescriptorDb& db) {
  std::vector<Mat> out;
  out.reserve(db.records.size());
  const int c = int(db.c), m = int(db.m);
  for (const io::DescriptorRecord& r : db.records) {
    Mat xt(c, m);
    for (int j = 0; j < m; ++j)
      for (int i = 0; i < c; ++i) xt(i, j) = double(r.desc[std::size_t(j * c + i)]);
    out.push_back(std::move(xt));
  }
  return out;
}

double w2_offdiag_of_db(const io::DescriptorDb& db, Mat* w2_out) {
  std::vector<analysis::CellGaussian> cells = analysis::cell_statistics(db_descriptors(db));
  Mat w2 = analysis::w2_matrix(cells);
  double mean = analysis::mean_offdiag(w2);
  if (w2_out) *w2_out = std::move(w2);
  return mean;
}

int analyze_w2(const AnalyzeArgs& a) {
  io::DescriptorDb db = io::load_descriptor_db(a.input_path);
  Mat w2;
  double mean_main = w2_offdiag_of_db(db, &w2);
  std::printf("w2 mean off-diagonal: %.6f  (%zu descriptors, M=%u cells)\n", mean_main,
              db.records.size(), db.m);

  if (!a.out_csv.empty()) {
    std::ofstream out = open_out(a.out_csv);
    for (int i = 0; i < w2.rows; ++i) {
      for (int j = 0; j < w2.cols; ++j) out << (j ? "," : "") << num(w2(i, j));
      out << "\n";
    }
  }

  if (!a.compare_path.empty()) {
    io::DescriptorDb other = io::load_descriptor_db(a.compare_path);
    Mat w2b;
    double mean_cmp = w2_offdiag_of_db(other, &w2b);
    std::printf("w2 mean off-diagonal (compare): %.6f\n", mean_cmp);
    std::printf("ratio main/compare: %.6f\n", mean_cmp > 0.0 ? mean_main / mean_cmp : 0.0);
    if (!a.out_csv.empty()) {
      std::ofstream out = open_out(a.out_csv + ".compare.csv");
      for (int i = 0; i < w2b.rows; ++i) {
        for (int j = 0; j < w2b.cols; ++j) out << (j ? "," : "") << num(w2b(i, j));
        out << "\n";
      }
    }
  }
  return 0;
}

}  // namespace

int analyze(const AnalyzeArgs& a) {
  if (a.mode == "ranks") return analyze_ranks(a);
  if (a.mode == "w2") return analyze_w2(a);
  throw std::invalid_argument("analyze: mode must be ranks or w2, got '" + a.mode + "'");
}

}  // namespace vw::cmd
