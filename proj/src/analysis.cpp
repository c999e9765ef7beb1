#include "vw/analysis.hpp"

#include <cmath>
#include <stdexcept>

#include "vw/kernels.hpp"

namespace vw::analysis {

namespace k = vw::kernels;

int matrix_rank(const std::vector<double>& lam, double tau) {
  int r = 0;
  for (double l : lam)
    if (l > tau) ++r;
  return r;
}

int matrix_rank(const Mat& sym, double tau) { return matrix_rank(lin::sym_eig(sym).lam, tau); }

double effective_rank(const std::vector<double>& lam, double tau) {
  double total = 0.0;
  int kept = 0;
  for (double l : lam)
    if (l > tau) {
      total += l;
      ++kept;
    }
  if (kept == 0) throw std::runtime_error("effective_rank: no eigenvalue above " + std::to_string(tau));
  double h = 0.0;
  for (double l : lam)
    if (l > tau) {
      double p = l / total;
      h -= p * std::log(p);
    }
  return std::exp(h);
}

double effective_rank(const Mat& sym, double tau) { return effective_rank(lin::sym_eig(sym).lam, tau); }

std::vector<CellGaussian> cell_statistics(const std::vector<Mat>& descriptors) {
  if (descriptors.empty()) throw std::invalid_argument("cell_statistics: no descriptors");
  const int c = descriptors[0].rows, m = descriptors[0].cols;
  for (const Mat& d : descriptors)
    if (d.rows != c || d.cols != m)
      throw std::invalid_argument("cell_statistics: mixed shapes, " + descriptors[0].shape_str() + " vs " +
                                  d.shape_str());
  const int n = int(descriptors.size());

  std::vector<CellGaussian> cells(m);
  for (int j = 0; j < m; ++j) {
    Mat mean(c, 1);
    for (const Mat& d : descriptors)
      for (int i = 0; i < c; ++i) mean(i, 0) += d(i, j);
    for (int i = 0; i < c; ++i) mean(i, 0) /= n;

    Mat cov(c, c);
    for (const Mat& d : descriptors)
      for (int r = 0; r < c; ++r)
        for (int s = 0; s < c; ++s) cov(r, s) += (d(r, j) - mean(r, 0)) * (d(s, j) - mean(s, 0));
    for (double& v : cov.a) v /= n;

    cells[j] = CellGaussian{std::move(mean), std::move(cov)};
  }
  return cells;
}

double gaussian_w2(const CellGaussian& a, const CellGaussian& b) {
  if (!a.mean.same_shape(b.mean) || !a.cov.same_shape(b.cov))
    throw std::invalid_argument("gaussian_w2: dimension mismatch");
  double mean_sq = 0.0;
  for (int i = 0; i < a.mean.rows; ++i) {
    double d = a.mean(i, 0) - b.mean(i, 0);
    mean_sq += d * d;
  }
  Mat sb = lin::sqrtm_psd(lin::sym_part(b.cov));
  Mat inner = lin::sym_part(k::matmul(k::matmul(sb, lin::sym_part(a.cov)), sb));
  double cross = lin::trace(lin::sqrtm_psd(inner));
  double tr = lin::trace(a.cov) + lin::trace(b.cov) - 2.0 * cross;
  if (tr < 0.0) tr = 0.0;
  return std::sqrt(mean_sq + tr);
}

Mat w2_matrix(const std::vector<CellGaussian>& cells) {
  const int n = int(cells.size());
  Mat w(n, n);
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) w(i, j) = gaussian_w2(cells[i], cells[j]);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < i; ++j) w(i, j) = w(j, i);
  return w;
}

double mean_offdiag(const Mat& m) {
  if (m.rows != m.cols) throw std::invalid_argument("mean_offdiag: matrix not square, " + m.shape_str());
  if (m.rows < 2) return 0.0;
  double s = 0.0;
  for (int i = 0; i < m.rows; ++i)
    for (int j = 0; j < m.cols; ++j)
      if (i != j) s += m(i, j);
  return s / (double(m.rows) * (m.rows - 1));
}

}  // namespace vw::analysis
