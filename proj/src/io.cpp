#include "vw/io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

static_assert(std::endian::native == std::endian::little, "formats are written as native little-endian");

namespace vw::io {

namespace {

class Writer {
 public:
  explicit Writer(const std::string& path) : out_(path, std::ios::binary) {
    if (!out_) throw std::runtime_error("cannot open " + path + " for writing");
    path_ = path;
  }
  void bytes(const void* p, std::size_t n) {
    out_.write(static_cast<const char*>(p), std::streamsize(n));
    if (!out_) throw std::runtime_error("write failed on " + path_);
  }
  template <class T>
  void pod(T v) {
    bytes(&v, sizeof(T));
  }

 private:
  std::ofstream out_;
  std::string path_;
};

class Reader {
 public:
  explicit Reader(const std::string& path) : in_(path, std::ios::binary), path_(path) {
    if (!in_) throw std::runtime_error("cannot open " + path);
  }
  void bytes(void* p, std::size_t n) {
    in_.read(static_cast<char*>(p), std::streamsize(n));
    if (std::size_t(in_.gcount()) != n) throw std::runtime_error("truncated file " + path_);
  }
  template <class T>
  T pod() {
    T v;
    bytes(&v, sizeof(T));
    return v;
  }
  void expect_magic(const char magic[4]) {
    char got[4];
    bytes(got, 4);
    if (std::memcmp(got, magic, 4) != 0)
      throw std::runtime_error(path_ + ": bad magic, expected " + std::string(magic, 4));
  }
  void expect_version(std::uint16_t want) {
    std::uint16_t got = pod<std::uint16_t>();
    if (got != want)
      throw std::runtime_error(path_ + ": unsupported version " + std::to_string(got));
  }
  bool at_eof() {
    in_.peek();
    return in_.eof();
  }
  const std::string& path() const { return path_; }

 private:
  std::ifstream in_;
  std::string path_;
};

void write_mat(Writer& w, const Mat& m) { w.bytes(m.a.data(), m.a.size() * sizeof(double)); }

Mat read_mat(Reader& r, int rows, int cols) {
  Mat m(rows, cols);
  r.bytes(m.a.data(), m.a.size() * sizeof(double));
  return m;
}

}  // namespace

void save_descriptor_db(const DescriptorDb& db, const std::string& path) {
  Writer w(path);
  w.bytes("VWDB", 4);
  w.pod<std::uint16_t>(1);
  w.pod<std::uint16_t>(db.flags);
  w.pod<std::uint64_t>(db.records.size());
  w.pod<std::uint32_t>(db.dims());
  w.pod<std::uint32_t>(db.c);
  w.pod<std::uint32_t>(db.m);
  for (const DescriptorRecord& r : db.records) {
    if (r.desc.size() != db.dims())
      throw std::invalid_argument("save_descriptor_db: record " + std::to_string(r.id) + " has " +
                                  std::to_string(r.desc.size()) + " dims, header says " + std::to_string(db.dims()));
    w.pod<std::uint64_t>(r.id);
    w.pod<double>(r.x);
    w.pod<double>(r.y);
    w.pod<double>(r.z);
    w.bytes(r.desc.data(), r.desc.size() * sizeof(float));
  }
}

DescriptorDb load_descriptor_db(const std::string& path) {
  Reader r(path);
  r.expect_magic("VWDB");
  r.expect_version(1);
  DescriptorDb db;
  db.flags = r.pod<std::uint16_t>();
  std::uint64_t count = r.pod<std::uint64_t>();
  std::uint32_t dims = r.pod<std::uint32_t>();
  db.c = r.pod<std::uint32_t>();
  db.m = r.pod<std::uint32_t>();
  if (dims != db.c * db.m)
    throw std::runtime_error(path + ": dims " + std::to_string(dims) + " != c*m = " + std::to_string(db.c * db.m));
  db.records.resize(count);
  for (DescriptorRecord& rec : db.records) {
    rec.id = r.pod<std::uint64_t>();
    rec.x = r.pod<double>();
    rec.y = r.pod<double>();
    rec.z = r.pod<double>();
    rec.desc.resize(dims);
    r.bytes(rec.desc.data(), dims * sizeof(float));
  }
  if (!r.at_eof()) throw std::runtime_error(path + ": trailing bytes after last record");
  return db;
}

namespace {

void write_mlp(Writer& w, const pool::MlpParams& p) {
  write_mat(w, p.w1);
  write_mat(w, p.b1);
  write_mat(w, p.gamma);
  write_mat(w, p.beta);
  write_mat(w, p.run_mean);
  write_mat(w, p.run_var);
  w.pod<double>(p.momentum);
  write_mat(w, p.w2);
  write_mat(w, p.b2);
}

pool::MlpParams read_mlp(Reader& r, int in_dim, int hidden, int out_dim) {
  pool::MlpParams p;
  p.w1 = read_mat(r, hidden, in_dim);
  p.b1 = read_mat(r, hidden, 1);
  p.gamma = read_mat(r, hidden, 1);
  p.beta = read_mat(r, hidden, 1);
  p.run_mean = read_mat(r, hidden, 1);
  p.run_var = read_mat(r, hidden, 1);
  p.momentum = r.pod<double>();
  p.w2 = read_mat(r, out_dim, hidden);
  p.b2 = read_mat(r, out_dim, 1);
  return p;
}

}  // namespace

void save_model(const pipe::Model& model, const std::string& path) {
  const pipe::ModelConfig& c = model.cfg;
  if (model.proj.hidden() != c.proj_hidden() || model.score.hidden() != c.score_hidden())
    throw std::invalid_argument("save_model: tower widths disagree with config");
  Writer w(path);
  w.bytes("VWMD", 4);
  w.pod<std::uint16_t>(1);
  w.pod<std::uint32_t>(std::uint32_t(c.c_in));
  w.pod<std::uint32_t>(std::uint32_t(c.h));
  w.pod<std::uint32_t>(std::uint32_t(c.c));
  w.pod<std::uint32_t>(std::uint32_t(c.m));
  w.pod<double>(c.sigma);
  w.pod<double>(c.eps);
  write_mlp(w, model.proj);
  write_mlp(w, model.score);
}

pipe::Model load_model(const std::string& path) {
  Reader r(path);
  r.expect_magic("VWMD");
  r.expect_version(1);
  pipe::Model m;
  m.cfg.c_in = int(r.pod<std::uint32_t>());
  m.cfg.h = int(r.pod<std::uint32_t>());
  m.cfg.c = int(r.pod<std::uint32_t>());
  m.cfg.m = int(r.pod<std::uint32_t>());
  m.cfg.sigma = r.pod<double>();
  m.cfg.eps = r.pod<double>();
  if (m.cfg.c_in <= 0 || m.cfg.c <= 0 || m.cfg.m <= 0)
    throw std::runtime_error(path + ": non-positive dimension in config block");
  m.proj = read_mlp(r, m.cfg.c_in, m.cfg.proj_hidden(), m.cfg.c);
  m.score = read_mlp(r, m.cfg.c_in, m.cfg.score_hidden(), m.cfg.m);
  if (!r.at_eof()) throw std::runtime_error(path + ": trailing bytes after parameters");
  return m;
}

void save_scan_set(const ScanSet& set, const std::string& path) {
  Writer w(path);
  w.bytes("VWSC", 4);
  w.pod<std::uint16_t>(1);
  w.pod<std::uint16_t>(0);
  w.pod<std::uint64_t>(set.scans.size());
  w.pod<std::uint32_t>(set.c_in);
  w.pod<std::uint32_t>(set.len);
  for (const Scan& s : set.scans) {
    if (s.data.rows != int(set.c_in) || s.data.cols != int(set.len))
      throw std::invalid_argument("save_scan_set: scan " + std::to_string(s.id) + " is " + s.data.shape_str());
    w.pod<std::uint64_t>(s.id);
    w.pod<std::uint64_t>(s.place);
    w.pod<double>(s.x);
    w.pod<double>(s.y);
    w.pod<double>(s.z);
    write_mat(w, s.data);
  }
}

ScanSet load_scan_set(const std::string& path) {
  Reader r(path);
  r.expect_magic("VWSC");
  r.expect_version(1);
  r.pod<std::uint16_t>();
  ScanSet set;
  std::uint64_t count = r.pod<std::uint64_t>();
  set.c_in = r.pod<std::uint32_t>();
  set.len = r.pod<std::uint32_t>();
  set.scans.resize(count);
  for (Scan& s : set.scans) {
    s.id = r.pod<std::uint64_t>();
    s.place = r.pod<std::uint64_t>();
    s.x = r.pod<double>();
    s.y = r.pod<double>();
    s.z = r.pod<double>();
    s.data = read_mat(r, int(set.c_in), int(set.len));
  }
  if (!r.at_eof()) throw std::runtime_error(path + ": trailing bytes after last scan");
  return set;
}

void save_cov_dump(const CovDump& dump, const std::string& path) {
  Writer w(path);
  w.bytes("VWCV", 4);
  w.pod<std::uint16_t>(1);
  w.pod<std::uint16_t>(0);
  w.pod<std::uint64_t>(dump.records.size());
  w.pod<std::uint32_t>(dump.c);
  const int c = int(dump.c);
  for (const CovRecord& r : dump.records) {
    if (r.sigma.rows != c || r.sigma.cols != c || r.sigma_rblw.rows != c || r.recon.rows != c)
      throw std::invalid_argument("save_cov_dump: record " + std::to_string(r.id) + " block is not " +
                                  std::to_string(c) + "x" + std::to_string(c));
    w.pod<std::uint64_t>(r.id);
    write_mat(w, r.sigma);
    write_mat(w, r.sigma_rblw);
    write_mat(w, r.recon);
  }
}

CovDump load_cov_dump(const std::string& path) {
  Reader r(path);
  r.expect_magic("VWCV");
  r.expect_version(1);
  r.pod<std::uint16_t>();
  CovDump dump;
  std::uint64_t count = r.pod<std::uint64_t>();
  dump.c = r.pod<std::uint32_t>();
  dump.records.resize(count);
  for (CovRecord& rec : dump.records) {
    rec.id = r.pod<std::uint64_t>();
    rec.sigma = read_mat(r, int(dump.c), int(dump.c));
    rec.sigma_rblw = read_mat(r, int(dump.c), int(dump.c));
    rec.recon = read_mat(r, int(dump.c), int(dump.c));
  }
  if (!r.at_eof()) throw std::runtime_error(path + ": trailing bytes after last record");
  return dump;
}

double RunConfig::resolved_sigma() const {
  if (sigma_mode == "sqrt_m") return std::sqrt(double(m));
  if (sigma_mode == "m") return double(m);
  if (sigma_mode == "explicit") {
    if (!(sigma > 0.0)) throw std::invalid_argument("config: explicit sigma must be positive");
    return sigma;
  }
  throw std::invalid_argument("config: unknown sigma_mode '" + sigma_mode + "'");
}

std::string RunConfig::to_text() const {
  std::ostringstream o;
  o << "seed = " << seed << "\n";
  o << "c_in = " << c_in << "\n";
  o << "h = " << h << "\n";
  o << "l = " << l << "\n";
  o << "c = " << c << "\n";
  o << "m = " << m << "\n";
  o << "sigma_mode = " << sigma_mode << "\n";
  o << "sigma = " << sigma << "\n";
  o << "eps = " << eps << "\n";
  o << "lr = " << lr << "\n";
  o << "epochs = " << epochs << "\n";
  o << "batch = " << batch << "\n";
  o << "margin = " << margin << "\n";
  o << "places = " << places << "\n";
  o << "views = " << views << "\n";
  o << "noise = " << noise << "\n";
  o << "hetero = " << (hetero ? "true" : "false") << "\n";
  o << "hetero_scale_max = " << hetero_scale_max << "\n";
  o << "nuisance = " << nuisance << "\n";
  o << "radius = " << radius << "\n";
  o << "holdout = " << holdout << "\n";
  return o.str();
}

namespace {

bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw std::invalid_argument("config: key '" + key + "' wants a boolean, got '" + v + "'");
}

long long parse_int(const std::string& v, const std::string& key) {
  std::size_t used = 0;
  long long out = 0;
  try {
    out = std::stoll(v, &used);
  } catch (const std::exception&) {
    used = std::string::npos;
  }
  if (used != v.size())
    throw std::invalid_argument("config: key '" + key + "' wants an integer, got '" + v + "'");
  return out;
}

double parse_num(const std::string& v, const std::string& key) {
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception&) {
    used = std::string::npos;
  }
  if (used != v.size())
    throw std::invalid_argument("config: key '" + key + "' wants a number, got '" + v + "'");
  return out;
}

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

RunConfig parse_run_config(const std::string& text) {
  RunConfig cfg;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected 'key = value'");
    std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));
    if (key.empty() || val.empty())
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": empty key or value");
    if (!seen.insert(key).second)
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": duplicate key '" + key + "'");

    if (key == "seed")
      cfg.seed = std::uint64_t(parse_int(val, key));
    else if (key == "c_in")
      cfg.c_in = int(parse_int(val, key));
    else if (key == "h")
      cfg.h = int(parse_int(val, key));
    else if (key == "l")
      cfg.l = int(parse_int(val, key));
    else if (key == "c")
      cfg.c = int(parse_int(val, key));
    else if (key == "m")
      cfg.m = int(parse_int(val, key));
    else if (key == "sigma_mode")
      cfg.sigma_mode = val;
    else if (key == "sigma")
      cfg.sigma = parse_num(val, key);
    else if (key == "eps")
      cfg.eps = parse_num(val, key);
    else if (key == "lr")
      cfg.lr = parse_num(val, key);
    else if (key == "epochs")
      cfg.epochs = int(parse_int(val, key));
    else if (key == "batch")
      cfg.batch = int(parse_int(val, key));
    else if (key == "margin")
      cfg.margin = parse_num(val, key);
    else if (key == "places")
      cfg.places = int(parse_int(val, key));
    else if (key == "views")
      cfg.views = int(parse_int(val, key));
    else if (key == "noise")
      cfg.noise = parse_num(val, key);
    else if (key == "hetero")
      cfg.hetero = parse_bool(val, key);
    else if (key == "hetero_scale_max")
      cfg.hetero_scale_max = parse_num(val, key);
    else if (key == "nuisance")
      cfg.nuisance = parse_num(val, key);
    else if (key == "radius")
      cfg.radius = parse_num(val, key);
    else if (key == "holdout")
      cfg.holdout = int(parse_int(val, key));
    else
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
  }
  cfg.resolved_sigma();  // validates sigma_mode
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_run_config(buf.str());
}

}  // namespace vw::io
