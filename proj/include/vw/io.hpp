#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vw/matrix.hpp"
#include "vw/pipeline.hpp"

namespace vw::io {

// All binary formats are little-endian with fixed field order; writing the
// same payload twice produces byte-identical files.

struct DescriptorRecord {
  std::uint64_t id = 0;
  double x = 0.0, y = 0.0, z = 0.0;
  std::vector<float> desc;
};

// "VWDB": magic, version u16, flags u16 (bit 0: whitened), count u64,
// dims u32, c u32, m u32, then per record id u64, position 3 x f64,
// descriptor dims x f32.
struct DescriptorDb {
  std::uint16_t flags = 0;
  std::uint32_t c = 0, m = 0;
  std::vector<DescriptorRecord> records;

  std::uint32_t dims() const { return c * m; }
  static constexpr std::uint16_t kWhitenedFlag = 1;
};

void save_descriptor_db(const DescriptorDb& db, const std::string& path);
DescriptorDb load_descriptor_db(const std::string& path);

// "VWMD": magic, version u16, c_in u32, h u32 (0 = per-tower default width
// 2 * max(in, out), else both towers use h), c u32, m u32, sigma f64,
// eps f64, then the projection and score parameter blobs. Each blob: w1,
// b1, gamma, beta, run_mean, run_var, momentum, w2, b2, all f64 row-major.
void save_model(const pipe::Model& model, const std::string& path);
pipe::Model load_model(const std::string& path);

struct Scan {
  std::uint64_t id = 0;
  std::uint64_t place = 0;
  double x = 0.0, y = 0.0, z = 0.0;
  Mat data;  // c_in x len
};

// "VWSC": magic, version u16, reserved u16, count u64, c_in u32, len u32,
// then per scan id u64, place u64, position 3 x f64, data f64 row-major.
struct ScanSet {
  std::uint32_t c_in = 0, len = 0;
  std::vector<Scan> scans;
};

void save_scan_set(const ScanSet& set, const std::string& path);
ScanSet load_scan_set(const std::string& path);

struct CovRecord {
  std::uint64_t id = 0;
  Mat sigma;       // sample covariance of the centered descriptor
  Mat sigma_rblw;  // after shrinkage
  Mat recon;       // eigen reconstruction of (sigma_rblw + eps I)
};

// "VWCV": magic, version u16, reserved u16, count u64, c u32, then per
// record id u64 and the three c x c f64 blobs.
struct CovDump {
  std::uint32_t c = 0;
  std::vector<CovRecord> records;
};

void save_cov_dump(const CovDump& dump, const std::string& path);
CovDump load_cov_dump(const std::string& path);

// Flat "key = value" text with '#' comments. Unknown or duplicate keys are
// errors. to_text() emits every key, which doubles as the resolved-config
// log written next to command outputs.
struct RunConfig {
  std::uint64_t seed = 7;
  int c_in = 8;
  int h = 0;  // 0 = per-tower default
  int l = 32;
  int c = 8;
  int m = 8;
  std::string sigma_mode = "sqrt_m";  // sqrt_m | m | explicit
  double sigma = 1.0;                 // used by sigma_mode = explicit
  double eps = 1e-5;
  double lr = 0.02;
  int epochs = 30;
  int batch = 8;
  double margin = 1.0;
  int places = 64;
  int views = 4;
  double noise = 0.05;
  bool hetero = false;
  double hetero_scale_max = 5.0;
  double nuisance = 6.0;
  double radius = 3.0;
  int holdout = 1;

  double resolved_sigma() const;
  std::string to_text() const;
};

RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::string& path);

}  // namespace vw::io
