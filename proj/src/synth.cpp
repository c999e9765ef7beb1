#include "vw/synth.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "vw/rng.hpp"

namespace vw::synth {

namespace {

constexpr double kGridPitch = 20.0;
constexpr double kJitter = 0.35;

// Tag spaces for child streams, one per independent random quantity.
constexpr std::uint64_t kTagLatent = 1ull << 32;
constexpr std::uint64_t kTagNoise = 2ull << 32;
constexpr std::uint64_t kTagPerm = 3ull << 32;
constexpr std::uint64_t kTagJitter = 4ull << 32;
constexpr std::uint64_t kTagNuisance = 5ull << 32;

void check_config(const io::RunConfig& cfg) {
  if (cfg.places < 1) throw std::invalid_argument("gen_synth: places must be >= 1");
  if (cfg.views < 1) throw std::invalid_argument("gen_synth: views must be >= 1");
  if (cfg.holdout < 0 || cfg.holdout >= cfg.views)
    throw std::invalid_argument("gen_synth: holdout must be in [0, views)");
  if (cfg.c_in < 1) throw std::invalid_argument("gen_synth: c_in must be >= 1");
  if (cfg.l < 1) throw std::invalid_argument("gen_synth: l must be >= 1");
  if (cfg.noise < 0.0) throw std::invalid_argument("gen_synth: noise must be >= 0");
  if (cfg.hetero && !(cfg.hetero_scale_max >= 1.0))
    throw std::invalid_argument("gen_synth: hetero_scale_max must be >= 1");
  if (cfg.hetero && cfg.nuisance < 0.0) throw std::invalid_argument("gen_synth: nuisance must be >= 0");
}

}  // namespace

std::vector<double> hetero_scales(const io::RunConfig& cfg) {
  std::vector<double> s(std::size_t(cfg.c_in), 1.0);
  if (!cfg.hetero) return s;
  double lg = std::log(cfg.hetero_scale_max);
  for (int i = 0; i < cfg.c_in; ++i) {
    double t = cfg.c_in > 1 ? 2.0 * double(i) / double(cfg.c_in - 1) - 1.0 : 0.0;
    s[std::size_t(i)] = std::exp(t * lg);
  }
  return s;
}

SynthOut gen_synth(const io::RunConfig& cfg) {
  check_config(cfg);
  const int p = cfg.places, v = cfg.views, c_in = cfg.c_in, l = cfg.l;
  Rng root(cfg.seed);

  SynthOut out;
  out.train.c_in = out.holdout.c_in = std::uint32_t(c_in);
  out.train.len = out.holdout.len = std::uint32_t(l);

  const std::vector<double> scales = hetero_scales(cfg);
  const int grid = int(std::ceil(std::sqrt(double(p))));

  out.places.reserve(std::size_t(p));
  out.latents.reserve(std::size_t(p));
  for (int pi = 0; pi < p; ++pi) {
    Place pl;
    pl.id = std::uint64_t(pi);
    pl.x = kGridPitch * double(pi % grid);
    pl.y = kGridPitch * double(pi / grid);
    out.places.push_back(pl);

    Rng lr = root.child(kTagLatent + std::uint64_t(pi));
    Mat lat(c_in, l);
    for (int i = 0; i < c_in; ++i)
      for (int j = 0; j < l; ++j) lat(i, j) = scales[std::size_t(i)] * lr.normal();
    out.latents.push_back(std::move(lat));
  }

  std::uint64_t scan_id = 0;
  for (int pi = 0; pi < p; ++pi) {
    for (int vi = 0; vi < v; ++vi, ++scan_id) {
      io::Scan s;
      s.id = scan_id;
      s.place = std::uint64_t(pi);

      Rng jr = root.child(kTagJitter + scan_id);
      s.x = out.places[std::size_t(pi)].x + jr.uniform(-kJitter, kJitter);
      s.y = out.places[std::size_t(pi)].y + jr.uniform(-kJitter, kJitter);
      s.z = 0.0;

      Mat d = out.latents[std::size_t(pi)];
      if (cfg.noise > 0.0) {
        Rng nr = root.child(kTagNoise + scan_id);
        for (double& e : d.a) e += cfg.noise * nr.normal();
      }
      if (cfg.hetero && cfg.nuisance > 0.0) {
        Rng ur = root.child(kTagNuisance + scan_id);
        std::vector<double> dir(std::size_t(c_in), 0.0);
        double nrm = 0.0;
        for (double& e : dir) {
          e = ur.normal();
          nrm += e * e;
        }
        nrm = std::sqrt(nrm);
        if (nrm == 0.0) {
          dir[0] = 1.0;
          nrm = 1.0;
        }
        for (int j = 0; j < l; ++j) {
          double w = cfg.nuisance * ur.normal();
          for (int i = 0; i < c_in; ++i) d(i, j) += dir[std::size_t(i)] / nrm * w;
        }
      }

      // Fisher-Yates over columns.
      Rng pr = root.child(kTagPerm + scan_id);
      for (int j = l - 1; j > 0; --j) {
        int k = int(pr.below(std::uint64_t(j) + 1));
        if (k == j) continue;
        for (int i = 0; i < c_in; ++i) std::swap(d(i, j), d(i, k));
      }

      s.data = std::move(d);
      if (vi >= v - cfg.holdout)
        out.holdout.scans.push_back(std::move(s));
      else
        out.train.scans.push_back(std::move(s));
    }
  }
  return out;
}

}  // namespace vw::synth
