#pragma once

#include <optional>
#include <vector>

#include "vw/linalg.hpp"
#include "vw/matrix.hpp"
#include "vw/tape.hpp"

namespace vw::whiten {

struct CenterResult {
  Mat xbar;  // xt with the column mean removed
  Mat mu;    // C x 1
};
CenterResult center(const Mat& xt);

// (1/M) * xbar * xbar^T; rank at most M-1 after centering.
Mat sample_covariance(const Mat& xbar);

// Shrinkage coefficient and blend toward the scaled identity target
// (tr(sigma)/C) * I. rho is clamped to [0, 1]; a vanishing denominator
// (within 1e-14 * max(1, tr^2)) forces rho = 1.
struct ShrinkResult {
  double rho = 0.0;
  Mat target;
  Mat sigma_rblw;
};
ShrinkResult rblw_shrink(const Mat& sigma, int m);

double rblw_rho(double t1, double t2, int c, int m);

// Exact eigensolve; gradients must not flow through the solver itself.
lin::SymEig svdpi_forward(const Mat& a);

// Gradient of a function of (Q, lam) with respect to a, via the truncated
// power-series of the deflated matrix chain (terms per eigenpair), plus the
// u_j u_j^T dlam_j eigenvalue term. Stays finite through repeated
// eigenvalues; result is symmetrized. grad_q column j is the upstream
// gradient for eigenvector j.
Mat svdpi_backward(const Mat& a, const lin::SymEig& eig, const Mat& grad_q,
                   const std::vector<double>& grad_lam, int terms = 20);

// Closed-form eigendecomposition backward with 1/(lam_j - lam_i) factors.
// Blows up on (near-)repeated eigenvalues by construction.
Mat eig_backward_analytic(const lin::SymEig& eig, const Mat& grad_q,
                          const std::vector<double>& grad_lam);

struct WhitenOptions {
  double eps = 1e-5;
  bool ablate_rblw = false;  // rho forced to 0, covariance used as estimated
  std::optional<double> force_rho;
};

struct WhitenResult {
  Mat mu, xbar, sigma, target, sigma_rblw;
  double rho = 0.0;
  lin::SymEig eig;  // of sigma_rblw + eps * I
  Mat zca;          // Q diag(lam^-1/2) Q^T
  Mat z;            // zca * xbar
};

// center -> covariance -> shrink -> eigendecompose(+eps I) -> rotate-scale.
WhitenResult zca_whiten(const Mat& xt, const WhitenOptions& opt = {});

// Column-major flatten, divided by sigma.
std::vector<double> scale_flatten(const Mat& z, double sigma);

enum class EigBackward { series, analytic, none };

// Same arithmetic as zca_whiten built from tape primitives, with the
// eigendecomposition as a custom node whose backward follows mode.
ad::Value whiten_graph(ad::Tape& t, const ad::Value& xt, const WhitenOptions& opt,
                       EigBackward mode = EigBackward::series);

}  // namespace vw::whiten
