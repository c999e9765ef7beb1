#include "vw/whitening.hpp"

#include <cmath>

#include "vw/kernels.hpp"

namespace vw::whiten {

namespace k = vw::kernels;

CenterResult center(const Mat& xt) {
  if (xt.cols < 1) throw std::invalid_argument("center: no columns");
  CenterResult r;
  r.mu = Mat(xt.rows, 1);
  for (int i = 0; i < xt.rows; ++i) {
    double s = 0.0;
    for (int j = 0; j < xt.cols; ++j) s += xt(i, j);
    r.mu(i, 0) = s / xt.cols;
  }
  r.xbar = xt;
  for (int i = 0; i < xt.rows; ++i)
    for (int j = 0; j < xt.cols; ++j) r.xbar(i, j) -= r.mu(i, 0);
  return r;
}

Mat sample_covariance(const Mat& xbar) {
  if (xbar.cols < 1) throw std::invalid_argument("sample_covariance: no columns");
  return k::scale(k::matmul_nt(xbar, xbar), 1.0 / xbar.cols);
}

double rblw_rho(double t1, double t2, int c, int m) {
  if (m < 2) throw std::invalid_argument("rblw_rho: needs at least 2 columns, got " + std::to_string(m));
  double num = ((m - 2.0) / m) * t2 + t1 * t1;
  double den = (m + 2.0) * (t2 - t1 * t1 / c);
  if (den <= 1e-14 * std::max(1.0, t1 * t1)) return 1.0;
  double rho = num / den;
  return std::min(std::max(rho, 0.0), 1.0);
}

ShrinkResult rblw_shrink(const Mat& sigma, int m) {
  if (sigma.rows != sigma.cols) throw std::invalid_argument("rblw_shrink: covariance not square, " + sigma.shape_str());
  const int c = sigma.rows;
  double t1 = lin::trace(sigma);
  double t2 = lin::trace_sq(sigma);
  ShrinkResult r;
  r.rho = rblw_rho(t1, t2, c, m);
  r.target = k::scale(Mat::identity(c), t1 / c);
  r.sigma_rblw = k::add(k::scale(r.target, r.rho), k::scale(sigma, 1.0 - r.rho));
  return r;
}

lin::SymEig svdpi_forward(const Mat& a) { return lin::sym_eig(a); }

Mat svdpi_backward(const Mat& a, const lin::SymEig& eig, const Mat& grad_q,
                   const std::vector<double>& grad_lam, int terms) {
  const int n = a.rows;
  if (a.cols != n) throw std::invalid_argument("svdpi_backward: matrix not square, " + a.shape_str());
  if (eig.q.rows != n || eig.q.cols != n || int(eig.lam.size()) != n)
    throw std::invalid_argument("svdpi_backward: eigendecomposition size mismatch");
  if (grad_q.rows != n || grad_q.cols != n || int(grad_lam.size()) != n)
    throw std::invalid_argument("svdpi_backward: upstream gradient size mismatch");
  for (int j = 0; j < n; ++j) {
    if (!std::isfinite(grad_lam[j]))
      throw std::invalid_argument("svdpi_backward: non-finite upstream gradient for eigenpair " + std::to_string(j));
    for (int i = 0; i < n; ++i)
      if (!std::isfinite(grad_q(i, j)))
        throw std::invalid_argument("svdpi_backward: non-finite upstream gradient for eigenpair " + std::to_string(j));
  }
  if (terms < 1) throw std::invalid_argument("svdpi_backward: terms must be >= 1");

  // Deflation chain: s[0] is A, s[j+1] = s[j] - (s[j] u_j) u_j^T. Each
  // eigenpair is the dominant one of its own deflated matrix, so the power
  // series below never amplifies.
  std::vector<Mat> s(n);
  s[0] = lin::sym_part(a);
  std::vector<Mat> su(n);  // s[j] * u_j
  for (int j = 0; j < n; ++j) {
    Mat u(n, 1);
    for (int i = 0; i < n; ++i) u(i, 0) = eig.q(i, j);
    su[j] = k::matmul(s[j], u);
    if (j + 1 < n) {
      s[j + 1] = s[j];
      for (int r = 0; r < n; ++r)
        for (int c2 = 0; c2 < n; ++c2) s[j + 1](r, c2) -= su[j](r, 0) * u(c2, 0);
    }
  }

  // Reverse sweep. g holds the adjoint of s[j+1] while handling step j.
  Mat g(n, n);
  for (int j = n - 1; j >= 0; --j) {
    Mat u(n, 1);
    for (int i = 0; i < n; ++i) u(i, 0) = eig.q(i, j);

    Mat gv(n, 1);
    for (int i = 0; i < n; ++i) gv(i, 0) = grad_q(i, j);
    if (j < n - 1) {
      // v-path of the deflation: -(s[j] g + g^T s[j]) u_j
      Mat t1 = k::matmul(s[j], k::matmul(g, u));
      Mat t2 = k::matmul_tn(g, su[j]);
      for (int i = 0; i < n; ++i) gv(i, 0) -= t1(i, 0) + t2(i, 0);
    }

    double nj = su[j].frob();
    if (nj <= 0.0)
      throw std::runtime_error("svdpi_backward: vanishing deflated eigenvalue at pair " + std::to_string(j));

    // omega * gv: (I - u u^T) gv / nj run through the truncated series.
    double udot = 0.0;
    for (int i = 0; i < n; ++i) udot += u(i, 0) * gv(i, 0);
    Mat w(n, 1);
    for (int i = 0; i < n; ++i) w(i, 0) = (gv(i, 0) - u(i, 0) * udot) / nj;
    Mat acc = w;
    for (int t = 1; t < terms; ++t) {
      w = k::scale(k::matmul(s[j], w), 1.0 / nj);
      for (int i = 0; i < n; ++i) acc.a[i] += w.a[i];
    }

    // Adjoint of s[j]: deflation pass-through, eigenvalue term, series term.
    Mat gu = k::matmul(g, u);
    Mat gnew = g;
    for (int r = 0; r < n; ++r)
      for (int c2 = 0; c2 < n; ++c2)
        gnew(r, c2) += -gu(r, 0) * u(c2, 0) + grad_lam[j] * u(r, 0) * u(c2, 0) + acc(r, 0) * u(c2, 0);
    g = gnew;
  }
  return lin::sym_part(g);
}

Mat eig_backward_analytic(const lin::SymEig& eig, const Mat& grad_q, const std::vector<double>& grad_lam) {
  const int n = eig.q.rows;
  if (grad_q.rows != n || grad_q.cols != n || int(grad_lam.size()) != n)
    throw std::invalid_argument("eig_backward_analytic: upstream gradient size mismatch");
  Mat b = k::matmul_tn(eig.q, grad_q);  // b(i, j) = u_i . grad_u_j
  Mat m(n, n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      if (i == j)
        m(i, j) = grad_lam[j];
      else
        m(i, j) = b(i, j) / (eig.lam[j] - eig.lam[i]);
    }
  }
  Mat ga = k::matmul_nt(k::matmul(eig.q, m), eig.q);
  return lin::sym_part(ga);
}

namespace {

Mat zca_from_eig(const lin::SymEig& eig) {
  const int n = eig.q.rows;
  Mat ql(n, n);
  for (int j = 0; j < n; ++j) {
    if (eig.lam[j] <= 0.0)
      throw std::runtime_error("whiten: non-positive eigenvalue " + std::to_string(eig.lam[j]) +
                               " after regularization");
    double s = 1.0 / std::sqrt(eig.lam[j]);
    for (int i = 0; i < n; ++i) ql(i, j) = eig.q(i, j) * s;
  }
  return k::matmul_nt(ql, eig.q);
}

}  // namespace

WhitenResult zca_whiten(const Mat& xt, const WhitenOptions& opt) {
  if (xt.cols < 2) throw std::invalid_argument("zca_whiten: needs at least 2 cells, got " + xt.shape_str());
  if (!xt.all_finite()) throw std::invalid_argument("zca_whiten: non-finite input");
  const int c = xt.rows, m = xt.cols;

  WhitenResult r;
  CenterResult cen = center(xt);
  r.mu = cen.mu;
  r.xbar = cen.xbar;
  r.sigma = sample_covariance(r.xbar);

  double t1 = lin::trace(r.sigma);
  r.target = k::scale(Mat::identity(c), t1 / c);
  if (opt.ablate_rblw)
    r.rho = 0.0;
  else if (opt.force_rho)
    r.rho = *opt.force_rho;
  else
    r.rho = rblw_rho(t1, lin::trace_sq(r.sigma), c, m);
  r.sigma_rblw = k::add(k::scale(r.target, r.rho), k::scale(r.sigma, 1.0 - r.rho));

  Mat a = r.sigma_rblw;
  for (int i = 0; i < c; ++i) a(i, i) += opt.eps;
  r.eig = lin::sym_eig(a);
  r.zca = zca_from_eig(r.eig);
  r.z = k::matmul(r.zca, r.xbar);
  return r;
}

std::vector<double> scale_flatten(const Mat& z, double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("scale_flatten: sigma must be positive");
  std::vector<double> v = k::flatten_colmajor(z);
  for (double& x : v) x /= sigma;
  return v;
}

namespace {

// Custom tape node for W = Q diag(lam^-1/2) Q^T of a symmetric input.
// Forward is the exact solve; backward converts dW into per-eigenpair
// gradients and routes them through the selected eigendecomposition
// backward. mode none drops the path entirely.
ad::Value zca_node(const ad::Value& a, EigBackward mode) {
  const Mat av = a.mat();
  lin::SymEig eig = lin::sym_eig(av);
  Mat w = zca_from_eig(eig);
  const int n = av.rows;
  ad::VjpFn vjp = [av, eig, n, mode](const Mat& gw, const ad::AccumFn& accum) {
    if (mode == EigBackward::none) {
      accum(0, Mat(n, n));
      return;
    }
    Mat grad_q(n, n);
    std::vector<double> grad_lam(n);
    for (int j = 0; j < n; ++j) {
      double ls = 1.0 / std::sqrt(eig.lam[j]);
      double quad = 0.0;
      for (int r = 0; r < n; ++r) {
        double gwu = 0.0, gwtu = 0.0;
        for (int c2 = 0; c2 < n; ++c2) {
          gwu += gw(r, c2) * eig.q(c2, j);
          gwtu += gw(c2, r) * eig.q(c2, j);
        }
        grad_q(r, j) = ls * (gwu + gwtu);
        quad += eig.q(r, j) * gwu;
      }
      grad_lam[j] = -0.5 * ls * ls * ls * quad;
    }
    Mat ga = mode == EigBackward::series ? svdpi_backward(av, eig, grad_q, grad_lam)
                                         : eig_backward_analytic(eig, grad_q, grad_lam);
    accum(0, ga);
  };
  if (!a.tracked()) return ad::Value::constant(std::move(w));
  return a.tape->record("zca_transform", {a}, std::move(w), std::move(vjp));
}

}  // namespace

ad::Value whiten_graph(ad::Tape& t, const ad::Value& xt, const WhitenOptions& opt, EigBackward mode) {
  const int c = xt.rows(), m = xt.cols();
  if (m < 2) throw std::invalid_argument("whiten_graph: needs at least 2 cells, got " + xt.mat().shape_str());

  ad::Value mu = ad::matmul(xt, ad::Value::constant(Mat(m, 1, 1.0 / m)));
  ad::Value xbar = ad::sub(xt, ad::matmul(mu, ad::Value::constant(Mat(1, m, 1.0))));
  ad::Value sigma = ad::smul(ad::matmul(xbar, ad::transpose(xbar)), 1.0 / m);

  ad::Value arblw = sigma;
  if (!opt.ablate_rblw) {
    ad::Value t1 = ad::trace(sigma);
    ad::Value rho;
    if (opt.force_rho) {
      rho = ad::Value::constant_scalar(*opt.force_rho);
    } else {
      ad::Value t2 = ad::trace(ad::matmul(sigma, sigma));
      double t1v = t1.scalar(), t2v = t2.scalar();
      double den_v = (m + 2.0) * (t2v - t1v * t1v / c);
      if (den_v <= 1e-14 * std::max(1.0, t1v * t1v)) {
        rho = ad::Value::constant_scalar(1.0);
      } else {
        ad::Value num = ad::add(ad::smul(t2, (m - 2.0) / m), ad::mul(t1, t1));
        ad::Value den = ad::smul(ad::sub(t2, ad::smul(ad::mul(t1, t1), 1.0 / c)), m + 2.0);
        rho = ad::min_const(ad::max_const(ad::divide(num, den), 0.0), 1.0);
      }
    }
    ad::Value target = ad::bscale(ad::smul(t1, 1.0 / c), ad::Value::constant(Mat::identity(c)));
    ad::Value one_minus = ad::sub(ad::Value::constant_scalar(1.0), rho);
    arblw = ad::add(ad::bscale(rho, target), ad::bscale(one_minus, sigma));
  }

  ad::Value a = ad::add(arblw, ad::Value::constant(kernels::scale(Mat::identity(c), opt.eps)));
  ad::Value w = zca_node(a, mode);
  (void)t;
  return ad::matmul(w, xbar);
}

}  // namespace vw::whiten
