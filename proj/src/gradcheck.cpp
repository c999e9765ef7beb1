#include "vw/gradcheck.hpp"

#include <cmath>
#include <stdexcept>

namespace vw::ad {

std::vector<double> finite_difference_gradient(const std::function<double(const std::vector<double>&)>& f,
                                               const std::vector<double>& x, double h) {
  if (h <= 0.0) throw std::invalid_argument("finite_difference_gradient: h must be positive");
  std::vector<double> g(x.size());
  std::vector<double> probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + h;
    double fp = f(probe);
    probe[i] = x[i] - h;
    double fm = f(probe);
    probe[i] = x[i];
    if (!std::isfinite(fp) || !std::isfinite(fm))
      throw std::runtime_error("finite_difference_gradient: non-finite loss at coordinate " + std::to_string(i));
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

double rel_err(double a, double n) {
  return std::fabs(a - n) / std::max({std::fabs(a), std::fabs(n), 1e-8});
}

void GradReport::add(std::string name, Mat analytic, Mat numeric) {
  if (!analytic.same_shape(numeric))
    throw std::invalid_argument("GradReport: shape mismatch for " + name + ", " + analytic.shape_str() + " vs " +
                                numeric.shape_str());
  GradEntry e{std::move(name), std::move(analytic), std::move(numeric), 0.0};
  for (int i = 0; i < e.analytic.size(); ++i)
    e.max_rel_err = std::max(e.max_rel_err, rel_err(e.analytic.a[i], e.numeric.a[i]));
  if (e.max_rel_err > worst) {
    worst = e.max_rel_err;
    worst_name = e.name;
  }
  entries.push_back(std::move(e));
}

double GradReport::aggregate() const {
  double diff2 = 0.0, a2 = 0.0, n2 = 0.0;
  for (const GradEntry& e : entries) {
    for (int i = 0; i < e.analytic.size(); ++i) {
      double d = e.analytic.a[i] - e.numeric.a[i];
      diff2 += d * d;
      a2 += e.analytic.a[i] * e.analytic.a[i];
      n2 += e.numeric.a[i] * e.numeric.a[i];
    }
  }
  double den = std::max({std::sqrt(a2), std::sqrt(n2), 1e-8});
  return std::sqrt(diff2) / den;
}

}  // namespace vw::ad
