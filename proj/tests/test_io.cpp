#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "vw/io.hpp"
#include "vw/pipeline.hpp"
#include "vw/rng.hpp"

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

using vw::Mat;
using vw::Rng;
using namespace vw::io;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("vwio-" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

std::vector<char> slurp(const std::string& p) {
  std::ifstream in(p, std::ios::binary);
  return std::vector<char>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void spit(const std::string& p, const std::vector<char>& bytes) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), std::streamsize(bytes.size()));
}

DescriptorDb sample_db(Rng& r) {
  DescriptorDb db;
  db.flags = DescriptorDb::kWhitenedFlag;
  db.c = 3;
  db.m = 2;
  for (int i = 0; i < 5; ++i) {
    DescriptorRecord rec;
    rec.id = 100 + i;
    rec.x = r.uniform(-50, 50);
    rec.y = r.uniform(-50, 50);
    rec.z = 0.0;
    for (int j = 0; j < 6; ++j) rec.desc.push_back(float(r.normal()));
    db.records.push_back(rec);
  }
  return db;
}

ScanSet sample_scans(Rng& r) {
  ScanSet set;
  set.c_in = 4;
  set.len = 6;
  for (int i = 0; i < 3; ++i) {
    Scan s;
    s.id = i;
    s.place = i / 2;
    s.x = r.uniform(0, 10);
    s.y = r.uniform(0, 10);
    s.data = Mat(4, 6);
    for (double& v : s.data.a) v = r.normal();
    set.scans.push_back(s);
  }
  return set;
}

}  // namespace

TEST_CASE("descriptor db round-trips byte-identically") {
  TempDir tmp;
  Rng r(111);
  DescriptorDb db = sample_db(r);
  std::string p1 = tmp.file("a.vwdb"), p2 = tmp.file("b.vwdb");
  save_descriptor_db(db, p1);
  DescriptorDb back = load_descriptor_db(p1);
  CHECK(back.flags == db.flags);
  CHECK(back.c == db.c);
  CHECK(back.m == db.m);
  REQUIRE(back.records.size() == db.records.size());
  for (size_t i = 0; i < db.records.size(); ++i) {
    CHECK(back.records[i].id == db.records[i].id);
    CHECK(back.records[i].x == db.records[i].x);
    CHECK(back.records[i].desc == db.records[i].desc);
  }
  save_descriptor_db(back, p2);
  CHECK(slurp(p1) == slurp(p2));
}

TEST_CASE("descriptor db corruption is named after the file") {
  TempDir tmp;
  Rng r(112);
  std::string p = tmp.file("c.vwdb");
  save_descriptor_db(sample_db(r), p);

  std::vector<char> bytes = slurp(p);

  SUBCASE("truncation") {
    std::vector<char> cut(bytes.begin(), bytes.end() - 7);
    spit(p, cut);
    CHECK_THROWS_WITH_AS(load_descriptor_db(p), doctest::Contains("c.vwdb"), std::exception);
  }
  SUBCASE("bad magic") {
    bytes[0] = 'X';
    spit(p, bytes);
    CHECK_THROWS(load_descriptor_db(p));
  }
  SUBCASE("trailing garbage") {
    bytes.push_back(0x5A);
    spit(p, bytes);
    CHECK_THROWS(load_descriptor_db(p));
  }
  SUBCASE("missing file") {
    CHECK_THROWS_WITH_AS(load_descriptor_db(tmp.file("nope.vwdb")),
                         doctest::Contains("nope.vwdb"), std::exception);
  }
}

TEST_CASE("model round-trips byte-identically") {
  TempDir tmp;
  vw::pipe::ModelConfig mc;
  mc.c_in = 5;
  mc.c = 3;
  mc.m = 4;
  mc.sigma = 2.0;
  vw::pipe::Model model = vw::pipe::Model::init(mc, 77);
  // perturb the running stats so non-default values go through the file
  model.proj.run_mean(0, 0) = 0.37;
  model.score.run_var(1, 0) = 1.21;

  std::string p1 = tmp.file("m1.vwmd"), p2 = tmp.file("m2.vwmd");
  save_model(model, p1);
  vw::pipe::Model back = load_model(p1);
  CHECK(back.cfg.c_in == 5);
  CHECK(back.cfg.m == 4);
  CHECK(back.cfg.sigma == 2.0);
  CHECK(vw::max_abs_diff(back.proj.w1, model.proj.w1) == 0.0);
  CHECK(vw::max_abs_diff(back.proj.run_mean, model.proj.run_mean) == 0.0);
  CHECK(vw::max_abs_diff(back.score.w2, model.score.w2) == 0.0);
  CHECK(vw::max_abs_diff(back.score.run_var, model.score.run_var) == 0.0);
  CHECK(back.proj.momentum == model.proj.momentum);
  save_model(back, p2);
  CHECK(slurp(p1) == slurp(p2));
}

TEST_CASE("model loader rejects a damaged header") {
  TempDir tmp;
  vw::pipe::ModelConfig mc;
  vw::pipe::Model model = vw::pipe::Model::init(mc, 1);
  std::string p = tmp.file("m.vwmd");
  save_model(model, p);
  std::vector<char> bytes = slurp(p);
  bytes[4] = 99;  // version field
  spit(p, bytes);
  CHECK_THROWS_WITH_AS(load_model(p), doctest::Contains("version"), std::exception);
}

TEST_CASE("scan set round-trips byte-identically") {
  TempDir tmp;
  Rng r(113);
  ScanSet set = sample_scans(r);
  std::string p1 = tmp.file("s1.vwsc"), p2 = tmp.file("s2.vwsc");
  save_scan_set(set, p1);
  ScanSet back = load_scan_set(p1);
  CHECK(back.c_in == set.c_in);
  CHECK(back.len == set.len);
  REQUIRE(back.scans.size() == set.scans.size());
  for (size_t i = 0; i < set.scans.size(); ++i) {
    CHECK(back.scans[i].id == set.scans[i].id);
    CHECK(back.scans[i].place == set.scans[i].place);
    CHECK(vw::max_abs_diff(back.scans[i].data, set.scans[i].data) == 0.0);
  }
  save_scan_set(back, p2);
  CHECK(slurp(p1) == slurp(p2));

  std::vector<char> cut = slurp(p1);
  cut.resize(cut.size() / 2);
  spit(p1, cut);
  CHECK_THROWS(load_scan_set(p1));
}

TEST_CASE("covariance dump round-trips byte-identically") {
  TempDir tmp;
  Rng r(114);
  CovDump dump;
  dump.c = 3;
  for (int i = 0; i < 2; ++i) {
    CovRecord rec;
    rec.id = 7 + i;
    rec.sigma = Mat(3, 3);
    rec.sigma_rblw = Mat(3, 3);
    rec.recon = Mat(3, 3);
    for (double& v : rec.sigma.a) v = r.normal();
    for (double& v : rec.sigma_rblw.a) v = r.normal();
    for (double& v : rec.recon.a) v = r.normal();
    dump.records.push_back(rec);
  }
  std::string p1 = tmp.file("c1.vwcv"), p2 = tmp.file("c2.vwcv");
  save_cov_dump(dump, p1);
  CovDump back = load_cov_dump(p1);
  REQUIRE(back.records.size() == 2);
  CHECK(back.c == 3);
  CHECK(back.records[1].id == 8);
  CHECK(vw::max_abs_diff(back.records[0].sigma, dump.records[0].sigma) == 0.0);
  CHECK(vw::max_abs_diff(back.records[1].recon, dump.records[1].recon) == 0.0);
  save_cov_dump(back, p2);
  CHECK(slurp(p1) == slurp(p2));
}

TEST_CASE("run config parses the full key set") {
  std::string text =
      "# synthetic run\n"
      "seed = 9\n"
      "c_in = 12\n"
      "h = 20\n"
      "l = 40\n"
      "c = 6\n"
      "m = 5\n"
      "\n"
      "sigma_mode = explicit\n"
      "sigma = 2.5\n"
      "eps = 1e-4\n"
      "lr = 0.01\n"
      "epochs = 3\n"
      "batch = 4\n"
      "margin = 0.5\n"
      "places = 16\n"
      "views = 3\n"
      "noise = 0.1\n"
      "hetero = true\n"
      "hetero_scale_max = 4.0\n"
      "nuisance = 2.0\n"
      "radius = 5.0\n"
      "holdout = 1\n";
  RunConfig cfg = parse_run_config(text);
  CHECK(cfg.seed == 9);
  CHECK(cfg.c_in == 12);
  CHECK(cfg.h == 20);
  CHECK(cfg.l == 40);
  CHECK(cfg.c == 6);
  CHECK(cfg.m == 5);
  CHECK(cfg.sigma_mode == "explicit");
  CHECK(cfg.sigma == 2.5);
  CHECK(cfg.eps == 1e-4);
  CHECK(cfg.lr == 0.01);
  CHECK(cfg.epochs == 3);
  CHECK(cfg.batch == 4);
  CHECK(cfg.margin == 0.5);
  CHECK(cfg.places == 16);
  CHECK(cfg.views == 3);
  CHECK(cfg.noise == 0.1);
  CHECK(cfg.hetero);
  CHECK(cfg.hetero_scale_max == 4.0);
  CHECK(cfg.nuisance == 2.0);
  CHECK(cfg.radius == 5.0);
  CHECK(cfg.holdout == 1);
  CHECK(cfg.resolved_sigma() == 2.5);
}

TEST_CASE("config text round-trips through the parser") {
  RunConfig cfg;
  cfg.seed = 123;
  cfg.hetero = true;
  cfg.sigma_mode = "m";
  cfg.noise = 0.25;
  RunConfig back = parse_run_config(cfg.to_text());
  CHECK(back.seed == 123);
  CHECK(back.hetero);
  CHECK(back.sigma_mode == "m");
  CHECK(back.noise == 0.25);
  CHECK(back.to_text() == cfg.to_text());
}

TEST_CASE("config rejections name the offending line") {
  CHECK_THROWS_WITH_AS(parse_run_config("seed = 1\nbogus_key = 2\n"),
                       doctest::Contains("bogus_key"), std::exception);
  CHECK_THROWS_WITH_AS(parse_run_config("seed = 1\nseed = 2\n"),
                       doctest::Contains("duplicate"), std::exception);
  CHECK_THROWS(parse_run_config("seed = notanumber\n"));
  CHECK_THROWS(parse_run_config("hetero = maybe\n"));
  CHECK_THROWS(parse_run_config("seed 1\n"));
}

TEST_CASE("sigma resolution modes") {
  RunConfig cfg;
  cfg.m = 9;
  cfg.sigma_mode = "sqrt_m";
  CHECK(cfg.resolved_sigma() == doctest::Approx(3.0));
  cfg.sigma_mode = "m";
  CHECK(cfg.resolved_sigma() == doctest::Approx(9.0));
  cfg.sigma_mode = "explicit";
  cfg.sigma = 0.0;
  CHECK_THROWS(cfg.resolved_sigma());
  cfg.sigma_mode = "unknown";
  CHECK_THROWS(cfg.resolved_sigma());
}
