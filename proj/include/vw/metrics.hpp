#pragma once

#include <cstdint>
#include <vector>

#include "vw/matrix.hpp"

namespace vw::metrics {

// sum over cells of (x1_i - x2_i)^T inv(blocks[i]) (x1_i - x2_i), each block
// solved through its eigendecomposition rather than an explicit inverse.
// A block with an eigenvalue <= 1e-12 * trace is rejected, naming the cell.
double mahalanobis_blockdiag(const Mat& x1, const Mat& x2, const std::vector<Mat>& blocks);

double euclidean_sq(const std::vector<double>& a, const std::vector<double>& b);

struct Candidate {
  std::uint64_t id = 0;
  double dist = 0.0;
  bool relevant = false;
};

struct QueryResult {
  std::uint64_t query_id = 0;
  std::vector<Candidate> ranked;  // ascending distance, ties by id ascending
  int relevant_total = 0;
};

struct RetrievalRun {
  std::vector<QueryResult> queries;
};

struct ItemSet {
  std::vector<std::uint64_t> ids;
  Mat desc;  // one row per item
  Mat pos;   // n x 3, meters
};

// Exhaustive squared-Euclidean ranking of every query against the database.
// Relevance is geographic distance strictly below radius.
RetrievalRun build_run(const ItemSet& queries, const ItemSet& db, double radius,
                       bool exclude_same_id);

// Averages skip queries that have no relevant item anywhere in the database;
// skipped counts how many that was.
struct MetricSummary {
  double value = 0.0;
  int used = 0;
  int skipped = 0;
};

MetricSummary recall_at(const RetrievalRun& run, int k);
MetricSummary map_at(const RetrievalRun& run, int k);
MetricSummary mrr(const RetrievalRun& run);

// K for recall at pct percent of an N-item database: ceil(N * pct / 100).
int k_for_percent(std::size_t db_size, double pct);

struct F1Result {
  double f1 = 0.0;
  double tau = 0.0;
  bool degenerate = false;  // no positive labels present
};

// Threshold sweep over the observed distances, predicting positive at
// dist <= tau. Ties on F1 resolve to the smallest tau.
F1Result f1_max(const std::vector<double>& dists, const std::vector<char>& labels);

struct RocPoint {
  double fpr = 0.0, tpr = 0.0, tau = 0.0;
};

struct RocCurve {
  std::vector<RocPoint> points;  // staircase from (0,0) to (1,1)
  bool degenerate = false;       // single-class labels
};

// Distances are normalized by the largest observed value before the sweep.
RocCurve roc_points(const std::vector<double>& dists, const std::vector<char>& labels);

double roc_auc(const RocCurve& curve);

// Per-query top-ranked distance and its relevance label.
void top1(const RetrievalRun& run, std::vector<double>& dists, std::vector<char>& labels);

}  // namespace vw::metrics
