#pragma once

#include "vw/matrix.hpp"

// Dense kernels. The heavy ones (matmul family, pairwise distances) have a
// serial reference and an OpenMP variant; both fill each output element with
// the same serial accumulation order, so results are bit-identical across
// thread counts. The default entry points dispatch on problem size.
namespace vw::kernels {

Mat matmul_serial(const Mat& a, const Mat& b);
Mat matmul_omp(const Mat& a, const Mat& b);
Mat matmul(const Mat& a, const Mat& b);

// a * b^T
Mat matmul_nt_serial(const Mat& a, const Mat& b);
Mat matmul_nt_omp(const Mat& a, const Mat& b);
Mat matmul_nt(const Mat& a, const Mat& b);

// a^T * b
Mat matmul_tn_serial(const Mat& a, const Mat& b);
Mat matmul_tn_omp(const Mat& a, const Mat& b);
Mat matmul_tn(const Mat& a, const Mat& b);

// Squared Euclidean distance between rows of q (nq x d) and rows of db (nd x d).
Mat pairwise_sqdist_serial(const Mat& q, const Mat& db);
Mat pairwise_sqdist_omp(const Mat& q, const Mat& db);
Mat pairwise_sqdist(const Mat& q, const Mat& db);

Mat transpose(const Mat& a);
Mat add(const Mat& a, const Mat& b);
Mat sub(const Mat& a, const Mat& b);
Mat hadamard(const Mat& a, const Mat& b);
Mat divide(const Mat& a, const Mat& b);
Mat scale(const Mat& a, double s);

// m + v replicated across columns; v is rows x 1.
Mat add_colvec(const Mat& m, const Mat& v);

// Each row rescaled to sum 1 through a shifted exp.
Mat softmax_rows(const Mat& a);

// x * Phi(x) with the exact Gaussian CDF.
Mat gelu(const Mat& a);
double gelu_scalar(double x);
double gelu_grad_scalar(double x);

Mat row_sum(const Mat& a);   // rows x 1
Mat col_sum(const Mat& a);   // 1 x cols
double total_sum(const Mat& a);
double dot_all(const Mat& a, const Mat& b);

// Column-major flattening: cell j's entries are contiguous at [j*rows, (j+1)*rows).
std::vector<double> flatten_colmajor(const Mat& a);

Mat hstack(const Mat& a, const Mat& b);
Mat slice_cols(const Mat& a, int c0, int c1);

}  // namespace vw::kernels
