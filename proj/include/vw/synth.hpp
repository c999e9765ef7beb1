#pragma once

#include <cstdint>
#include <vector>

#include "vw/io.hpp"
#include "vw/matrix.hpp"

namespace vw::synth {

struct Place {
  std::uint64_t id = 0;
  double x = 0.0, y = 0.0;
};

struct SynthOut {
  io::ScanSet train;
  io::ScanSet holdout;
  std::vector<Place> places;
  std::vector<Mat> latents;  // c_in x l pattern per place, pre-scan noise
};

// Places sit on a ceil(sqrt(P)) grid with 20 m pitch; every scan of a place
// is its latent pattern plus scan noise, columns shuffled, position jittered
// by at most 0.35 m per axis. The hetero variant additionally scales channel
// i of every latent by hetero_scale_max^(2i/(c_in-1) - 1) and adds one large
// random rank-1 component per scan (unit input direction times N(0,
// nuisance^2) column weights). The last `holdout` views of each place go to
// the holdout set. Fully determined by cfg.seed.
SynthOut gen_synth(const io::RunConfig& cfg);

// Per-channel scales used by the hetero variant; all ones when disabled.
std::vector<double> hetero_scales(const io::RunConfig& cfg);

}  // namespace vw::synth
