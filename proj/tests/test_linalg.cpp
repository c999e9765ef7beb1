#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "vw/kernels.hpp"
#include "vw/linalg.hpp"
#include "vw/rng.hpp"

#include <algorithm>
#include <cmath>

using vw::Mat;
using vw::Rng;
namespace k = vw::kernels;
namespace la = vw::lin;

namespace {

Mat random_sym(Rng& r, int n, double scale = 1.0) {
  Mat m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      double v = scale * r.uniform(-1.0, 1.0);
      m(i, j) = v;
      m(j, i) = v;
    }
  return m;
}

}  // namespace

TEST_CASE("diagonal matrix eigenvalues come back sorted descending") {
  Mat d = Mat::from_rows({{2, 0, 0}, {0, 7, 0}, {0, 0, 4}});
  la::SymEig e = la::sym_eig(d);
  REQUIRE(e.lam.size() == 3);
  CHECK(e.lam[0] == doctest::Approx(7).epsilon(1e-14));
  CHECK(e.lam[1] == doctest::Approx(4).epsilon(1e-14));
  CHECK(e.lam[2] == doctest::Approx(2).epsilon(1e-14));
}

TEST_CASE("2x2 fixture with known spectrum") {
  Mat a = Mat::from_rows({{2, 1}, {1, 2}});
  la::SymEig e = la::sym_eig(a);
  CHECK(e.lam[0] == doctest::Approx(3).epsilon(1e-13));
  CHECK(e.lam[1] == doctest::Approx(1).epsilon(1e-13));
  double s = 1.0 / std::sqrt(2.0);
  // first eigenvector is [1,1]/sqrt(2) up to the sign convention
  CHECK(std::abs(e.q(0, 0)) == doctest::Approx(s).epsilon(1e-12));
  CHECK(std::abs(e.q(1, 0)) == doctest::Approx(s).epsilon(1e-12));
  CHECK(e.q(0, 0) * e.q(1, 0) > 0);
  CHECK(e.q(0, 1) * e.q(1, 1) < 0);
}

TEST_CASE("eigenvectors are orthonormal and reconstruct the input") {
  Rng r(41);
  for (int n : {2, 5, 12}) {
    Mat a = random_sym(r, n, 2.0);
    la::SymEig e = la::sym_eig(a);
    Mat qtq = k::matmul_tn(e.q, e.q);
    CHECK(vw::max_abs_diff(qtq, Mat::identity(n)) < 1e-10);
    CHECK(vw::max_abs_diff(la::eig_reconstruct(e), a) < 1e-9);
    for (size_t i = 0; i + 1 < e.lam.size(); ++i) CHECK(e.lam[i] >= e.lam[i + 1]);
    double lam_sum = 0;
    for (double l : e.lam) lam_sum += l;
    CHECK(lam_sum == doctest::Approx(la::trace(a)).epsilon(1e-10));
  }
}

TEST_CASE("sign convention puts the largest-magnitude entry positive") {
  Rng r(43);
  Mat a = random_sym(r, 6);
  la::SymEig e = la::sym_eig(a);
  for (int j = 0; j < 6; ++j) {
    int arg = 0;
    for (int i = 1; i < 6; ++i)
      if (std::abs(e.q(i, j)) > std::abs(e.q(arg, j))) arg = i;
    CHECK(e.q(arg, j) > 0);
  }
}

TEST_CASE("asymmetric input is rejected, rounding-level asymmetry absorbed") {
  Rng r(44);
  Mat a(5, 5);
  for (double& v : a.a) v = r.uniform(-1.0, 1.0);
  CHECK_THROWS(la::sym_eig(a));

  Mat s = random_sym(r, 5);
  Mat nudged = s;
  nudged(1, 2) += 5e-12;
  la::SymEig en = la::sym_eig(nudged);
  la::SymEig es = la::sym_eig(la::sym_part(nudged));
  for (size_t i = 0; i < en.lam.size(); ++i)
    CHECK(en.lam[i] == doctest::Approx(es.lam[i]).epsilon(1e-12));
}

TEST_CASE("repeated calls are bit-identical") {
  Rng r(45);
  Mat a = random_sym(r, 8);
  la::SymEig e1 = la::sym_eig(a);
  la::SymEig e2 = la::sym_eig(a);
  for (int i = 0; i < e1.q.size(); ++i) CHECK(e1.q.a[i] == e2.q.a[i]);
  for (size_t i = 0; i < e1.lam.size(); ++i) CHECK(e1.lam[i] == e2.lam[i]);
}

TEST_CASE("sqrtm_psd squares back to the input") {
  Rng r(46);
  Mat b(6, 4);
  for (double& v : b.a) v = r.uniform(-1.0, 1.0);
  Mat a = k::matmul_nt(b, b);  // PSD, rank 4
  Mat s = la::sqrtm_psd(a);
  CHECK(vw::max_abs_diff(k::matmul(s, s), a) < 1e-9);
}

TEST_CASE("sqrtm_psd clamps tiny negatives and rejects real ones") {
  Mat tiny = Mat::from_rows({{-5e-11}});
  Mat s = la::sqrtm_psd(tiny);
  CHECK(s(0, 0) == 0.0);
  Mat neg = Mat::from_rows({{-1e-3}});
  CHECK_THROWS(la::sqrtm_psd(neg));
}

TEST_CASE("trace helpers") {
  Mat a = Mat::from_rows({{1, 2}, {3, 4}});
  CHECK(la::trace(a) == 5);
  // tr(A^2) = sum_ij a_ij a_ji without forming the product
  CHECK(la::trace_sq(a) == doctest::Approx(la::trace(k::matmul(a, a))).epsilon(1e-14));
}
