#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "vw/io.hpp"
#include "vw/synth.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

using vw::Mat;
namespace io = vw::io;
using namespace vw::synth;

namespace {

io::RunConfig small_cfg() {
  io::RunConfig cfg;
  cfg.places = 9;
  cfg.views = 3;
  cfg.holdout = 1;
  cfg.c_in = 6;
  cfg.l = 12;
  cfg.seed = 31;
  return cfg;
}

// columns sorted lexicographically, to compare scans up to column order
std::vector<std::vector<double>> sorted_columns(const Mat& m) {
  std::vector<std::vector<double>> cols;
  for (int j = 0; j < m.cols; ++j) {
    std::vector<double> col;
    for (int i = 0; i < m.rows; ++i) col.push_back(m(i, j));
    cols.push_back(col);
  }
  std::sort(cols.begin(), cols.end());
  return cols;
}

}  // namespace

namespace vw::io {
bool operator==(const Scan& a, const Scan& b) {
  return a.id == b.id && a.place == b.place && a.x == b.x && a.y == b.y && a.z == b.z &&
         a.data.rows == b.data.rows && a.data.cols == b.data.cols && a.data.a == b.data.a;
}
}  // namespace vw::io

TEST_CASE("generation is deterministic in the seed") {
  io::RunConfig cfg = small_cfg();
  SynthOut a = gen_synth(cfg);
  SynthOut b = gen_synth(cfg);
  REQUIRE(a.train.scans.size() == b.train.scans.size());
  for (size_t i = 0; i < a.train.scans.size(); ++i) CHECK(a.train.scans[i] == b.train.scans[i]);
  for (size_t i = 0; i < a.holdout.scans.size(); ++i) CHECK(a.holdout.scans[i] == b.holdout.scans[i]);

  cfg.seed = 32;
  SynthOut c = gen_synth(cfg);
  CHECK_FALSE(a.train.scans[0] == c.train.scans[0]);
}

TEST_CASE("set sizes, ids, and split follow the config") {
  io::RunConfig cfg = small_cfg();
  SynthOut out = gen_synth(cfg);
  CHECK(out.places.size() == 9);
  CHECK(out.latents.size() == 9);
  CHECK(out.train.scans.size() == 9 * 2);
  CHECK(out.holdout.scans.size() == 9 * 1);
  CHECK(out.train.c_in == 6);
  CHECK(out.train.len == 12);

  std::set<std::uint64_t> ids;
  for (const io::Scan& s : out.train.scans) ids.insert(s.id);
  for (const io::Scan& s : out.holdout.scans) ids.insert(s.id);
  CHECK(ids.size() == 27);  // all scan ids unique across the split

  for (const io::Scan& s : out.holdout.scans) CHECK(s.place < 9);
  for (std::uint64_t p = 0; p < 9; ++p) {
    int train_views = 0, hold_views = 0;
    for (const io::Scan& s : out.train.scans) train_views += s.place == p;
    for (const io::Scan& s : out.holdout.scans) hold_views += s.place == p;
    CHECK(train_views == 2);
    CHECK(hold_views == 1);
  }
}

TEST_CASE("places sit on the grid and scans stay inside the jitter box") {
  io::RunConfig cfg = small_cfg();
  SynthOut out = gen_synth(cfg);
  for (const Place& p : out.places) {
    CHECK(std::fmod(p.x, 20.0) == 0.0);
    CHECK(std::fmod(p.y, 20.0) == 0.0);
  }
  auto check_scan = [&](const io::Scan& s) {
    const Place& p = out.places[s.place];
    CHECK(std::abs(s.x - p.x) <= 0.35);
    CHECK(std::abs(s.y - p.y) <= 0.35);
    CHECK(s.z == 0.0);
  };
  for (const io::Scan& s : out.train.scans) check_scan(s);
  for (const io::Scan& s : out.holdout.scans) check_scan(s);
}

TEST_CASE("with zero noise every scan is a column permutation of its latent") {
  io::RunConfig cfg = small_cfg();
  cfg.noise = 0.0;
  SynthOut out = gen_synth(cfg);
  for (const io::Scan& s : out.train.scans) {
    auto got = sorted_columns(s.data);
    auto want = sorted_columns(out.latents[s.place]);
    CHECK(got == want);
  }
}

TEST_CASE("at default noise each scan is closest to its own latent") {
  io::RunConfig cfg;
  cfg.places = 64;
  cfg.views = 4;
  cfg.holdout = 1;
  cfg.seed = 5;
  SynthOut out = gen_synth(cfg);

  // column sums are invariant to the shuffle, so compare those
  auto colsum_profile = [](const Mat& m) {
    std::vector<double> sums;
    for (int j = 0; j < m.cols; ++j) {
      double s = 0;
      for (int i = 0; i < m.rows; ++i) s += m(i, j);
      sums.push_back(s);
    }
    std::sort(sums.begin(), sums.end());
    return sums;
  };
  std::vector<std::vector<double>> profiles;
  for (const Mat& l : out.latents) profiles.push_back(colsum_profile(l));

  int correct = 0, total = 0;
  for (const io::Scan& s : out.train.scans) {
    std::vector<double> mine = colsum_profile(s.data);
    double best = 1e300;
    std::uint64_t arg = 0;
    for (std::uint64_t p = 0; p < profiles.size(); ++p) {
      double d = 0;
      for (size_t i = 0; i < mine.size(); ++i) {
        double diff = mine[i] - profiles[p][i];
        d += diff * diff;
      }
      if (d < best) {
        best = d;
        arg = p;
      }
    }
    correct += arg == s.place;
    ++total;
  }
  CHECK(correct == total);
}

TEST_CASE("hetero scales are log-spaced and default to ones") {
  io::RunConfig cfg;
  cfg.c_in = 3;
  cfg.hetero = false;
  std::vector<double> flat = hetero_scales(cfg);
  REQUIRE(flat.size() == 3);
  for (double s : flat) CHECK(s == 1.0);

  cfg.hetero = true;
  cfg.hetero_scale_max = 5.0;
  std::vector<double> scales = hetero_scales(cfg);
  CHECK(scales[0] == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(scales[1] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(scales[2] == doctest::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("the hetero variant spreads channel energy by the scale ladder") {
  io::RunConfig cfg = small_cfg();
  cfg.hetero = true;
  cfg.nuisance = 0.0;  // isolate the channel scaling
  cfg.noise = 0.0;
  SynthOut plain = gen_synth(small_cfg());
  SynthOut het = gen_synth(cfg);

  auto channel_energy = [](const std::vector<Mat>& latents, int channel) {
    double e = 0;
    for (const Mat& l : latents)
      for (int j = 0; j < l.cols; ++j) e += l(channel, j) * l(channel, j);
    return e;
  };
  // same seed: the hetero latents are the plain ones times the ladder
  std::vector<double> scales = hetero_scales(cfg);
  for (int ch = 0; ch < cfg.c_in; ++ch) {
    double ratio = channel_energy(het.latents, ch) / channel_energy(plain.latents, ch);
    CHECK(ratio == doctest::Approx(scales[ch] * scales[ch]).epsilon(1e-9));
  }
}

TEST_CASE("the nuisance component is rank one per scan") {
  io::RunConfig cfg = small_cfg();
  cfg.hetero = true;
  cfg.noise = 0.0;
  cfg.hetero_scale_max = 1.0;  // flat ladder, so residual = nuisance only
  SynthOut het = gen_synth(cfg);
  io::RunConfig base = small_cfg();
  base.noise = 0.0;
  SynthOut plain = gen_synth(base);

  // compare scan to its latent: the leftover must be rank 1; column order is
  // shuffled identically because both runs share the seed
  const io::Scan& hs = het.train.scans[0];
  const io::Scan& ps = plain.train.scans[0];
  Mat residual(hs.data.rows, hs.data.cols);
  for (int i = 0; i < residual.size(); ++i) residual.a[i] = hs.data.a[i] - ps.data.a[i];
  // every pair of columns must be parallel
  int c0 = 0;
  double n0 = 0;
  for (int i = 0; i < residual.rows; ++i) n0 += residual(i, c0) * residual(i, c0);
  REQUIRE(n0 > 1e-12);
  for (int j = 1; j < residual.cols; ++j) {
    double dot = 0, nj = 0;
    for (int i = 0; i < residual.rows; ++i) {
      dot += residual(i, c0) * residual(i, j);
      nj += residual(i, j) * residual(i, j);
    }
    if (nj < 1e-20) continue;  // a zero column weight is still rank 1
    CHECK(std::abs(std::abs(dot) / std::sqrt(n0 * nj) - 1.0) < 1e-9);
  }
}

TEST_CASE("bad view splits are rejected") {
  io::RunConfig cfg = small_cfg();
  cfg.holdout = 3;  // nothing left for training
  CHECK_THROWS(gen_synth(cfg));
  cfg.holdout = 0;
  CHECK_NOTHROW(gen_synth(cfg));
}
