#include "vw/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "vw/kernels.hpp"
#include "vw/linalg.hpp"

namespace vw::metrics {

double mahalanobis_blockdiag(const Mat& x1, const Mat& x2, const std::vector<Mat>& blocks) {
  if (!x1.same_shape(x2))
    throw std::invalid_argument("mahalanobis_blockdiag: descriptor shapes " + x1.shape_str() + " vs " + x2.shape_str());
  if (int(blocks.size()) != x1.cols)
    throw std::invalid_argument("mahalanobis_blockdiag: " + std::to_string(blocks.size()) + " blocks for " +
                                std::to_string(x1.cols) + " cells");
  const int c = x1.rows;
  double total = 0.0;
  for (int j = 0; j < x1.cols; ++j) {
    const Mat& b = blocks[j];
    if (b.rows != c || b.cols != c)
      throw std::invalid_argument("mahalanobis_blockdiag: block " + std::to_string(j) + " is " + b.shape_str());
    lin::SymEig e = lin::sym_eig(b);
    double tr = 0.0;
    for (double l : e.lam) tr += l;
    for (double l : e.lam)
      if (l <= 1e-12 * tr)
        throw std::runtime_error("mahalanobis_blockdiag: cell " + std::to_string(j) + " covariance is singular");
    for (int k = 0; k < c; ++k) {
      double proj = 0.0;
      for (int i = 0; i < c; ++i) proj += e.q(i, k) * (x1(i, j) - x2(i, j));
      total += proj * proj / e.lam[k];
    }
  }
  return total;
}

double euclidean_sq(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size())
    throw std::invalid_argument("euclidean_sq: lengths " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

RetrievalRun build_run(const ItemSet& queries, const ItemSet& db, double radius, bool exclude_same_id) {
  const int nq = int(queries.ids.size()), nd = int(db.ids.size());
  if (queries.desc.rows != nq || db.desc.rows != nd || queries.pos.rows != nq || db.pos.rows != nd)
    throw std::invalid_argument("build_run: id/descriptor/position counts disagree");
  if (nd > 0 && nq > 0 && queries.desc.cols != db.desc.cols)
    throw std::invalid_argument("build_run: descriptor dims " + std::to_string(queries.desc.cols) + " vs " +
                                std::to_string(db.desc.cols));

  RetrievalRun run;
  run.queries.resize(nq);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < nq; ++i) {
    QueryResult& qr = run.queries[i];
    qr.query_id = queries.ids[i];
    qr.ranked.reserve(nd);
    for (int j = 0; j < nd; ++j) {
      if (exclude_same_id && db.ids[j] == queries.ids[i]) continue;
      double d = 0.0;
      for (int k = 0; k < db.desc.cols; ++k) {
        double t = queries.desc(i, k) - db.desc(j, k);
        d += t * t;
      }
      double gx = queries.pos(i, 0) - db.pos(j, 0);
      double gy = queries.pos(i, 1) - db.pos(j, 1);
      double gz = queries.pos(i, 2) - db.pos(j, 2);
      bool rel = std::sqrt(gx * gx + gy * gy + gz * gz) < radius;
      qr.ranked.push_back(Candidate{db.ids[j], d, rel});
      if (rel) ++qr.relevant_total;
    }
    std::sort(qr.ranked.begin(), qr.ranked.end(), [](const Candidate& a, const Candidate& b) {
      if (a.dist != b.dist) return a.dist < b.dist;
      return a.id < b.id;
    });
  }
  return run;
}

MetricSummary recall_at(const RetrievalRun& run, int k) {
  if (k < 1) throw std::invalid_argument("recall_at: k must be >= 1");
  MetricSummary s;
  double hits = 0.0;
  for (const QueryResult& q : run.queries) {
    if (q.relevant_total == 0) {
      ++s.skipped;
      continue;
    }
    ++s.used;
    int top = std::min<int>(k, int(q.ranked.size()));
    for (int i = 0; i < top; ++i)
      if (q.ranked[i].relevant) {
        hits += 1.0;
        break;
      }
  }
  s.value = s.used ? hits / s.used : 0.0;
  return s;
}

MetricSummary map_at(const RetrievalRun& run, int k) {
  if (k < 1) throw std::invalid_argument("map_at: k must be >= 1");
  MetricSummary s;
  double ap_sum = 0.0;
  for (const QueryResult& q : run.queries) {
    if (q.relevant_total == 0) {
      ++s.skipped;
      continue;
    }
    ++s.used;
    int top = std::min<int>(k, int(q.ranked.size()));
    int hits = 0;
    double ap = 0.0;
    for (int i = 0; i < top; ++i) {
      if (q.ranked[i].relevant) {
        ++hits;
        ap += double(hits) / (i + 1);
      }
    }
    ap_sum += ap / std::min(k, q.relevant_total);
  }
  s.value = s.used ? ap_sum / s.used : 0.0;
  return s;
}

MetricSummary mrr(const RetrievalRun& run) {
  MetricSummary s;
  double total = 0.0;
  for (const QueryResult& q : run.queries) {
    if (q.relevant_total == 0) {
      ++s.skipped;
      continue;
    }
    ++s.used;
    for (std::size_t i = 0; i < q.ranked.size(); ++i) {
      if (q.ranked[i].relevant) {
        total += 1.0 / double(i + 1);
        break;
      }
    }
  }
  s.value = s.used ? total / s.used : 0.0;
  return s;
}

int k_for_percent(std::size_t db_size, double pct) {
  if (pct <= 0.0) throw std::invalid_argument("k_for_percent: pct must be positive");
  return std::max(1, int(std::ceil(double(db_size) * pct / 100.0)));
}

F1Result f1_max(const std::vector<double>& dists, const std::vector<char>& labels) {
  if (dists.size() != labels.size()) throw std::invalid_argument("f1_max: lengths disagree");
  F1Result r;
  int pos = 0;
  for (char l : labels) pos += l ? 1 : 0;
  if (pos == 0) {
    r.degenerate = true;
    return r;
  }
  std::vector<int> order(dists.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = int(i);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return dists[a] < dists[b]; });

  int tp = 0, fp = 0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (labels[order[i]])
      ++tp;
    else
      ++fp;
    // evaluate only at the last of a tie group, once everything <= tau is in
    if (i + 1 < order.size() && dists[order[i + 1]] == dists[order[i]]) continue;
    int fn = pos - tp;
    double f1 = 2.0 * tp / (2.0 * tp + fp + fn);
    if (f1 > r.f1) {
      r.f1 = f1;
      r.tau = dists[order[i]];
    }
  }
  return r;
}

RocCurve roc_points(const std::vector<double>& dists, const std::vector<char>& labels) {
  if (dists.size() != labels.size()) throw std::invalid_argument("roc_points: lengths disagree");
  RocCurve curve;
  int pos = 0, neg = 0;
  for (char l : labels) (l ? pos : neg)++;
  curve.degenerate = pos == 0 || neg == 0;

  double dmax = 0.0;
  for (double d : dists) dmax = std::max(dmax, d);
  std::vector<double> norm(dists.size());
  for (std::size_t i = 0; i < dists.size(); ++i) norm[i] = dmax > 0.0 ? dists[i] / dmax : 0.0;

  std::vector<int> order(norm.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = int(i);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return norm[a] < norm[b]; });

  curve.points.push_back(RocPoint{0.0, 0.0, 0.0});
  int tp = 0, fp = 0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (labels[order[i]])
      ++tp;
    else
      ++fp;
    if (i + 1 < order.size() && norm[order[i + 1]] == norm[order[i]]) continue;
    curve.points.push_back(RocPoint{neg ? double(fp) / neg : 0.0, pos ? double(tp) / pos : 0.0,
                                    norm[order[i]]});
  }
  RocPoint& last = curve.points.back();
  if (last.fpr != 1.0 || last.tpr != 1.0) curve.points.push_back(RocPoint{1.0, 1.0, 1.0});
  return curve;
}

double roc_auc(const RocCurve& curve) {
  double auc = 0.0;
  for (std::size_t i = 1; i < curve.points.size(); ++i) {
    const RocPoint& a = curve.points[i - 1];
    const RocPoint& b = curve.points[i];
    auc += (b.fpr - a.fpr) * 0.5 * (a.tpr + b.tpr);
  }
  return auc;
}

void top1(const RetrievalRun& run, std::vector<double>& dists, std::vector<char>& labels) {
  dists.clear();
  labels.clear();
  for (const QueryResult& q : run.queries) {
    if (q.ranked.empty()) continue;
    dists.push_back(q.ranked.front().dist);
    labels.push_back(q.ranked.front().relevant ? 1 : 0);
  }
}

}  // namespace vw::metrics
