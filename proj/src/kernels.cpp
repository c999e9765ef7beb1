#include "vw/kernels.hpp"

#include <cmath>

namespace vw::kernels {

namespace {

// Below this many multiply-adds the fork/join overhead dominates.
constexpr long kOmpThreshold = 1 << 15;

void check_mm(const Mat& a, const Mat& b, int ak, int bk, const char* op) {
  if (ak != bk)
    throw std::invalid_argument(std::string(op) + ": inner dims disagree, " + a.shape_str() + " vs " + b.shape_str());
}

}  // namespace

Mat matmul_serial(const Mat& a, const Mat& b) {
  check_mm(a, b, a.cols, b.rows, "matmul");
  Mat c(a.rows, b.cols);
  for (int i = 0; i < a.rows; ++i)
    for (int j = 0; j < b.cols; ++j) {
      double acc = 0.0;
      for (int k = 0; k < a.cols; ++k) acc += a(i, k) * b(k, j);
      c(i, j) = acc;
    }
  return c;
}

Mat matmul_omp(const Mat& a, const Mat& b) {
  check_mm(a, b, a.cols, b.rows, "matmul");
  Mat c(a.rows, b.cols);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < a.rows; ++i)
    for (int j = 0; j < b.cols; ++j) {
      double acc = 0.0;
      for (int k = 0; k < a.cols; ++k) acc += a(i, k) * b(k, j);
      c(i, j) = acc;
    }
  return c;
}

Mat matmul(const Mat& a, const Mat& b) {
  long work = long(a.rows) * a.cols * b.cols;
  return work >= kOmpThreshold ? matmul_omp(a, b) : matmul_serial(a, b);
}

Mat matmul_nt_serial(const Mat& a, const Mat& b) {
  check_mm(a, b, a.cols, b.cols, "matmul_nt");
  Mat c(a.rows, b.rows);
  for (int i = 0; i < a.rows; ++i)
    for (int j = 0; j < b.rows; ++j) {
      double acc = 0.0;
      for (int k = 0; k < a.cols; ++k) acc += a(i, k) * b(j, k);
      c(i, j) = acc;
    }
  return c;
}

Mat matmul_nt_omp(const Mat& a, const Mat& b) {
  check_mm(a, b, a.cols, b.cols, "matmul_nt");
  Mat c(a.rows, b.rows);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < a.rows; ++i)
    for (int j = 0; j < b.rows; ++j) {
      double acc = 0.0;
      for (int k = 0; k < a.cols; ++k) acc += a(i, k) * b(j, k);
      c(i, j) = acc;
    }
  return c;
}

Mat matmul_nt(const Mat& a, const Mat& b) {
  long work = long(a.rows) * a.cols * b.rows;
  return work >= kOmpThreshold ? matmul_nt_omp(a, b) : matmul_nt_serial(a, b);
}

Mat matmul_tn_serial(const Mat& a, const Mat& b) {
  check_mm(a, b, a.rows, b.rows, "matmul_tn");
  Mat c(a.cols, b.cols);
  for (int i = 0; i < a.cols; ++i)
    for (int j = 0; j < b.cols; ++j) {
      double acc = 0.0;
      for (int k = 0; k < a.rows; ++k) acc += a(k, i) * b(k, j);
      c(i, j) = acc;
    }
  return c;
}

Mat matmul_tn_omp(const Mat& a, const Mat& b) {
  check_mm(a, b, a.rows, b.rows, "matmul_tn");
  Mat c(a.cols, b.cols);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < a.cols; ++i)
    for (int j = 0; j < b.cols; ++j) {
      double acc = 0.0;
      for (int k = 0; k < a.rows; ++k) acc += a(k, i) * b(k, j);
      c(i, j) = acc;
    }
  return c;
}

Mat matmul_tn(const Mat& a, const Mat& b) {
  long work = long(a.cols) * a.rows * b.cols;
  return work >= kOmpThreshold ? matmul_tn_omp(a, b) : matmul_tn_serial(a, b);
}

Mat pairwise_sqdist_serial(const Mat& q, const Mat& db) {
  if (q.cols != db.cols)
    throw std::invalid_argument("pairwise_sqdist: dim mismatch, " + q.shape_str() + " vs " + db.shape_str());
  Mat d(q.rows, db.rows);
  for (int i = 0; i < q.rows; ++i)
    for (int j = 0; j < db.rows; ++j) {
      double acc = 0.0;
      for (int k = 0; k < q.cols; ++k) {
        double t = q(i, k) - db(j, k);
        acc += t * t;
      }
      d(i, j) = acc;
    }
  return d;
}

Mat pairwise_sqdist_omp(const Mat& q, const Mat& db) {
  if (q.cols != db.cols)
    throw std::invalid_argument("pairwise_sqdist: dim mismatch, " + q.shape_str() + " vs " + db.shape_str());
  Mat d(q.rows, db.rows);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < q.rows; ++i)
    for (int j = 0; j < db.rows; ++j) {
      double acc = 0.0;
      for (int k = 0; k < q.cols; ++k) {
        double t = q(i, k) - db(j, k);
        acc += t * t;
      }
      d(i, j) = acc;
    }
  return d;
}

Mat pairwise_sqdist(const Mat& q, const Mat& db) {
  long work = long(q.rows) * db.rows * q.cols;
  return work >= kOmpThreshold ? pairwise_sqdist_omp(q, db) : pairwise_sqdist_serial(q, db);
}

Mat transpose(const Mat& a) {
  Mat t(a.cols, a.rows);
  for (int i = 0; i < a.rows; ++i)
    for (int j = 0; j < a.cols; ++j) t(j, i) = a(i, j);
  return t;
}

namespace {
void check_same(const Mat& a, const Mat& b, const char* op) {
  if (!a.same_shape(b))
    throw std::invalid_argument(std::string(op) + ": shape mismatch, " + a.shape_str() + " vs " + b.shape_str());
}
}  // namespace

Mat add(const Mat& a, const Mat& b) {
  check_same(a, b, "add");
  Mat c = a;
  for (int i = 0; i < c.size(); ++i) c.a[i] += b.a[i];
  return c;
}

Mat sub(const Mat& a, const Mat& b) {
  check_same(a, b, "sub");
  Mat c = a;
  for (int i = 0; i < c.size(); ++i) c.a[i] -= b.a[i];
  return c;
}

Mat hadamard(const Mat& a, const Mat& b) {
  check_same(a, b, "mul");
  Mat c = a;
  for (int i = 0; i < c.size(); ++i) c.a[i] *= b.a[i];
  return c;
}

Mat divide(const Mat& a, const Mat& b) {
  check_same(a, b, "div");
  Mat c = a;
  for (int i = 0; i < c.size(); ++i) c.a[i] /= b.a[i];
  return c;
}

Mat scale(const Mat& a, double s) {
  Mat c = a;
  for (double& v : c.a) v *= s;
  return c;
}

Mat add_colvec(const Mat& m, const Mat& v) {
  if (v.cols != 1 || v.rows != m.rows)
    throw std::invalid_argument("add_colvec: want " + std::to_string(m.rows) + "x1, got " + v.shape_str());
  Mat c = m;
  for (int i = 0; i < m.rows; ++i)
    for (int j = 0; j < m.cols; ++j) c(i, j) += v(i, 0);
  return c;
}

Mat softmax_rows(const Mat& a) {
  Mat s = a;
  for (int i = 0; i < a.rows; ++i) {
    double mx = a(i, 0);
    for (int j = 1; j < a.cols; ++j) mx = std::max(mx, a(i, j));
    double z = 0.0;
    for (int j = 0; j < a.cols; ++j) {
      s(i, j) = std::exp(a(i, j) - mx);
      z += s(i, j);
    }
    for (int j = 0; j < a.cols; ++j) s(i, j) /= z;
  }
  return s;
}

double gelu_scalar(double x) { return 0.5 * x * (1.0 + std::erf(x * 0.70710678118654752440)); }

double gelu_grad_scalar(double x) {
  double phi = std::exp(-0.5 * x * x) * 0.39894228040143267794;
  return 0.5 * (1.0 + std::erf(x * 0.70710678118654752440)) + x * phi;
}

Mat gelu(const Mat& a) {
  Mat c = a;
  for (double& v : c.a) v = gelu_scalar(v);
  return c;
}

Mat row_sum(const Mat& a) {
  Mat s(a.rows, 1);
  for (int i = 0; i < a.rows; ++i) {
    double acc = 0.0;
    for (int j = 0; j < a.cols; ++j) acc += a(i, j);
    s(i, 0) = acc;
  }
  return s;
}

Mat col_sum(const Mat& a) {
  Mat s(1, a.cols);
  for (int j = 0; j < a.cols; ++j) {
    double acc = 0.0;
    for (int i = 0; i < a.rows; ++i) acc += a(i, j);
    s(0, j) = acc;
  }
  return s;
}

double total_sum(const Mat& a) {
  double acc = 0.0;
  for (double v : a.a) acc += v;
  return acc;
}

double dot_all(const Mat& a, const Mat& b) {
  check_same(a, b, "dot_all");
  double acc = 0.0;
  for (int i = 0; i < a.size(); ++i) acc += a.a[i] * b.a[i];
  return acc;
}

std::vector<double> flatten_colmajor(const Mat& a) {
  std::vector<double> v(std::size_t(a.size()));
  std::size_t k = 0;
  for (int j = 0; j < a.cols; ++j)
    for (int i = 0; i < a.rows; ++i) v[k++] = a(i, j);
  return v;
}

Mat hstack(const Mat& a, const Mat& b) {
  if (a.rows != b.rows)
    throw std::invalid_argument("hstack: row mismatch, " + a.shape_str() + " vs " + b.shape_str());
  Mat c(a.rows, a.cols + b.cols);
  for (int i = 0; i < a.rows; ++i) {
    for (int j = 0; j < a.cols; ++j) c(i, j) = a(i, j);
    for (int j = 0; j < b.cols; ++j) c(i, a.cols + j) = b(i, j);
  }
  return c;
}

Mat slice_cols(const Mat& a, int c0, int c1) {
  if (c0 < 0 || c1 > a.cols || c0 > c1)
    throw std::invalid_argument("slice_cols: range [" + std::to_string(c0) + "," + std::to_string(c1) + ") outside " + a.shape_str());
  Mat c(a.rows, c1 - c0);
  for (int i = 0; i < a.rows; ++i)
    for (int j = c0; j < c1; ++j) c(i, j - c0) = a(i, j);
  return c;
}

}  // namespace vw::kernels
