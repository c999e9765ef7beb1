#pragma once

#include <vector>

#include "vw/linalg.hpp"
#include "vw/matrix.hpp"

namespace vw::analysis {

// Eigenvalues strictly above tau count toward the rank.
int matrix_rank(const std::vector<double>& lam, double tau = 1e-5);
int matrix_rank(const Mat& sym, double tau = 1e-5);

// exp of the Shannon entropy of the eigenvalue distribution after dropping
// everything <= tau and renormalizing. Errors when nothing survives.
double effective_rank(const std::vector<double>& lam, double tau = 1e-5);
double effective_rank(const Mat& sym, double tau = 1e-5);

struct CellGaussian {
  Mat mean;  // C x 1
  Mat cov;   // C x C, 1/N normalization
};

// Fits one Gaussian per cell across a set of C x M descriptors.
std::vector<CellGaussian> cell_statistics(const std::vector<Mat>& descriptors);

// Closed-form 2-Wasserstein distance between Gaussians; the trace term is
// floored at 0 before the outer square root.
double gaussian_w2(const CellGaussian& a, const CellGaussian& b);

// Symmetric, zero diagonal.
Mat w2_matrix(const std::vector<CellGaussian>& cells);

double mean_offdiag(const Mat& m);

}  // namespace vw::analysis
