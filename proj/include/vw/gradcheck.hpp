#pragma once

#include <functional>
#include <string>
#include <vector>

#include "vw/matrix.hpp"

namespace vw::ad {

// Central differences (f(x+h e_i) - f(x-h e_i)) / 2h. f must be pure and
// deterministic; a non-finite probe is an error naming the coordinate.
std::vector<double> finite_difference_gradient(const std::function<double(const std::vector<double>&)>& f,
                                               const std::vector<double>& x, double h = 1e-5);

// |a - n| / max(|a|, |n|, 1e-8)
double rel_err(double a, double n);

struct GradEntry {
  std::string name;
  Mat analytic;
  Mat numeric;
  double max_rel_err = 0.0;
};

// Two granularities. Per-entry (worst, worst_name) is the right check for an
// isolated primitive, where every coordinate carries signal. aggregate() is
// the right check for a composite loss: parameters that the loss is invariant
// to (a bias ahead of a row softmax, an output shift removed by centering)
// have exact-zero gradients whose finite differences measure only rounding
// noise against the error floor, and a vector-level comparison absorbs that.
struct GradReport {
  std::vector<GradEntry> entries;
  double worst = 0.0;
  std::string worst_name;

  void add(std::string name, Mat analytic, Mat numeric);
  bool within(double tol) const { return worst <= tol; }

  // |a - n| / max(|a|, |n|, 1e-8) with vector 2-norms over all entries.
  double aggregate() const;
};

}  // namespace vw::ad
