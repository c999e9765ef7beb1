#include <chrono>
#include <cstdio>
#include <functional>
#include <string>

#include "vw/kernels.hpp"
#include "vw/rng.hpp"

// Times the serial references against the OpenMP variants on a few shapes.
// The two must agree bit for bit; this only reports speed.

namespace {

using vw::Mat;
namespace k = vw::kernels;

Mat random_mat(int rows, int cols, vw::Rng& rng) {
  Mat m(rows, cols);
  for (double& e : m.a) e = rng.normal();
  return m;
}

double time_ms(const std::function<Mat()>& f, int reps) {
  f();  // warm
  auto t0 = std::chrono::steady_clock::now();
  double sink = 0.0;
  for (int i = 0; i < reps; ++i) sink += f().a[0];
  auto t1 = std::chrono::steady_clock::now();
  if (sink == 0.12345) std::printf(" ");
  return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

void row(const std::string& name, const std::function<Mat()>& serial,
         const std::function<Mat()>& omp, int reps) {
  double ts = time_ms(serial, reps);
  double to = time_ms(omp, reps);
  std::printf("%-28s %10.3f ms %10.3f ms %8.2fx\n", name.c_str(), ts, to, ts / to);
}

}  // namespace

int main() {
  vw::Rng rng(42);
  std::printf("%-28s %13s %13s %9s\n", "kernel", "serial", "openmp", "speedup");

  {
    Mat a = random_mat(256, 256, rng), b = random_mat(256, 256, rng);
    row("matmul 256x256x256", [&] { return k::matmul_serial(a, b); },
        [&] { return k::matmul_omp(a, b); }, 20);
  }
  {
    Mat a = random_mat(512, 512, rng), b = random_mat(512, 512, rng);
    row("matmul 512x512x512", [&] { return k::matmul_serial(a, b); },
        [&] { return k::matmul_omp(a, b); }, 5);
  }
  {
    Mat a = random_mat(128, 2048, rng), b = random_mat(128, 2048, rng);
    row("matmul_nt 128x2048 pair", [&] { return k::matmul_nt_serial(a, b); },
        [&] { return k::matmul_nt_omp(a, b); }, 10);
  }
  {
    Mat a = random_mat(2048, 128, rng), b = random_mat(2048, 128, rng);
    row("matmul_tn 2048x128 pair", [&] { return k::matmul_tn_serial(a, b); },
        [&] { return k::matmul_tn_omp(a, b); }, 10);
  }
  {
    Mat q = random_mat(400, 512, rng), db = random_mat(1000, 512, rng);
    row("pairwise_sqdist 400x1000", [&] { return k::pairwise_sqdist_serial(q, db); },
        [&] { return k::pairwise_sqdist_omp(q, db); }, 5);
  }
  return 0;
}
