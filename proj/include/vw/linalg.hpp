#pragma once

#include <vector>

#include "vw/matrix.hpp"

namespace vw::lin {

// Eigenvectors are the columns of q, eigenvalues descending, and the sign of
// each column is fixed so its largest-magnitude entry is positive.
struct SymEig {
  Mat q;
  std::vector<double> lam;
};

// Cyclic Jacobi on (a + a^T)/2. Converges when the off-diagonal Frobenius
// norm drops to 1e-12 * ||a||_F; throws if that takes more than max_sweeps.
SymEig sym_eig(const Mat& a, int max_sweeps = 100);

// q * diag(lam) * q^T
Mat eig_reconstruct(const SymEig& e);

// Principal square root of a PSD matrix. Eigenvalues in [-1e-10, 0) are
// treated as 0; anything lower is an error.
Mat sqrtm_psd(const Mat& a);

double trace(const Mat& a);

// trace(a*a) accumulated as sum_ij a_ij * a_ji, without forming the product.
double trace_sq(const Mat& a);

Mat sym_part(const Mat& a);

}  // namespace vw::lin
