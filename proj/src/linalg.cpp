#include "vw/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "vw/kernels.hpp"

namespace vw::lin {

namespace {

double off_diag_frob(const Mat& a) {
  double s = 0.0;
  for (int i = 0; i < a.rows; ++i)
    for (int j = 0; j < a.cols; ++j)
      if (i != j) s += a(i, j) * a(i, j);
  return std::sqrt(s);
}

}  // namespace

Mat sym_part(const Mat& a) {
  if (a.rows != a.cols) throw std::invalid_argument("sym_part: matrix not square, " + a.shape_str());
  Mat s(a.rows, a.cols);
  for (int i = 0; i < a.rows; ++i)
    for (int j = 0; j < a.cols; ++j) s(i, j) = 0.5 * (a(i, j) + a(j, i));
  return s;
}

SymEig sym_eig(const Mat& a_in, int max_sweeps) {
  const int n = a_in.rows;
  if (a_in.rows != a_in.cols) throw std::invalid_argument("sym_eig: matrix not square, " + a_in.shape_str());
  if (!a_in.all_finite()) throw std::invalid_argument("sym_eig: non-finite entries");
  double asym = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) asym = std::max(asym, std::fabs(a_in(i, j) - a_in(j, i)));
  if (asym > 1e-10 * std::max(1.0, a_in.max_abs()))
    throw std::invalid_argument("sym_eig: asymmetry " + std::to_string(asym) + " above tolerance");

  Mat a = sym_part(a_in);
  Mat v = Mat::identity(n);
  if (n == 0) return {v, {}};

  const double norm = a.frob();
  const double tol = 1e-12 * norm;

  int sweep = 0;
  double off = off_diag_frob(a);
  while (off > tol) {
    if (sweep >= max_sweeps)
      throw std::runtime_error("sym_eig: no convergence after " + std::to_string(max_sweeps) +
                               " sweeps, off-diagonal residual " + std::to_string(off));
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        double apq = a(p, q);
        if (apq == 0.0) continue;
        double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        double t;
        if (std::fabs(theta) > 1e100) {
          t = 1.0 / (2.0 * theta);
        } else {
          t = 1.0 / (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
          if (theta < 0.0) t = -t;
        }
        double c = 1.0 / std::sqrt(t * t + 1.0);
        double s = t * c;
        double tau = s / (1.0 + c);

        a(p, p) -= t * apq;
        a(q, q) += t * apq;
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (int i = 0; i < n; ++i) {
          if (i == p || i == q) continue;
          double aip = a(i, p), aiq = a(i, q);
          a(i, p) = aip - s * (aiq + tau * aip);
          a(i, q) = aiq + s * (aip - tau * aiq);
          a(p, i) = a(i, p);
          a(q, i) = a(i, q);
        }
        for (int i = 0; i < n; ++i) {
          double vip = v(i, p), viq = v(i, q);
          v(i, p) = vip - s * (viq + tau * vip);
          v(i, q) = viq + s * (vip - tau * viq);
        }
      }
    }
    ++sweep;
    off = off_diag_frob(a);
  }

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int x, int y) { return a(x, x) > a(y, y); });

  SymEig e;
  e.q = Mat(n, n);
  e.lam.resize(n);
  for (int j = 0; j < n; ++j) {
    int src = order[j];
    e.lam[j] = a(src, src);
    int arg = 0;
    double best = std::fabs(v(0, src));
    for (int i = 1; i < n; ++i) {
      double m = std::fabs(v(i, src));
      if (m > best) {
        best = m;
        arg = i;
      }
    }
    double flip = v(arg, src) < 0.0 ? -1.0 : 1.0;
    for (int i = 0; i < n; ++i) e.q(i, j) = flip * v(i, src);
  }
  return e;
}

Mat eig_reconstruct(const SymEig& e) {
  const int n = e.q.rows;
  Mat ql(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) ql(i, j) = e.q(i, j) * e.lam[j];
  return kernels::matmul_nt(ql, e.q);
}

Mat sqrtm_psd(const Mat& a) {
  SymEig e = sym_eig(a);
  for (double& l : e.lam) {
    if (l < -1e-10) throw std::invalid_argument("sqrtm_psd: eigenvalue " + std::to_string(l) + " below -1e-10");
    l = l < 0.0 ? 0.0 : std::sqrt(l);
  }
  return eig_reconstruct(e);
}

double trace(const Mat& a) {
  if (a.rows != a.cols) throw std::invalid_argument("trace: matrix not square, " + a.shape_str());
  double s = 0.0;
  for (int i = 0; i < a.rows; ++i) s += a(i, i);
  return s;
}

double trace_sq(const Mat& a) {
  if (a.rows != a.cols) throw std::invalid_argument("trace_sq: matrix not square, " + a.shape_str());
  double s = 0.0;
  for (int i = 0; i < a.rows; ++i)
    for (int j = 0; j < a.cols; ++j) s += a(i, j) * a(j, i);
  return s;
}

}  // namespace vw::lin
