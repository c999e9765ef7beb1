#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace vw {

// Dense row-major matrix of doubles. Column vectors are n x 1.
struct Mat {
  int rows = 0;
  int cols = 0;
  std::vector<double> a;

  Mat() = default;
  Mat(int r, int c, double fill = 0.0) : rows(r), cols(c), a(std::size_t(r) * c, fill) {
    if (r < 0 || c < 0) throw std::invalid_argument("Mat: negative shape");
  }

  static Mat identity(int n) {
    Mat m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  static Mat from_rows(std::initializer_list<std::initializer_list<double>> rs) {
    Mat m(int(rs.size()), rs.size() ? int(rs.begin()->size()) : 0);
    int r = 0;
    for (const auto& row : rs) {
      if (int(row.size()) != m.cols) throw std::invalid_argument("Mat::from_rows: ragged rows");
      int c = 0;
      for (double v : row) m(r, c++) = v;
      ++r;
    }
    return m;
  }

  static Mat column(const std::vector<double>& v) {
    Mat m(int(v.size()), 1);
    m.a = v;
    return m;
  }

  double& operator()(int r, int c) { return a[std::size_t(r) * cols + c]; }
  double operator()(int r, int c) const { return a[std::size_t(r) * cols + c]; }

  int size() const { return rows * cols; }
  bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }

  std::string shape_str() const { return std::to_string(rows) + "x" + std::to_string(cols); }

  bool all_finite() const {
    for (double v : a)
      if (!std::isfinite(v)) return false;
    return true;
  }

  double max_abs() const {
    double m = 0.0;
    for (double v : a) m = std::max(m, std::fabs(v));
    return m;
  }

  double frob() const {
    double s = 0.0;
    for (double v : a) s += v * v;
    return std::sqrt(s);
  }
};

inline double max_abs_diff(const Mat& x, const Mat& y) {
  if (!x.same_shape(y)) throw std::invalid_argument("max_abs_diff: shape mismatch " + x.shape_str() + " vs " + y.shape_str());
  double m = 0.0;
  for (int i = 0; i < x.size(); ++i) m = std::max(m, std::fabs(x.a[i] - y.a[i]));
  return m;
}

}  // namespace vw
