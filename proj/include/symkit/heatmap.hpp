#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "symkit/labels.hpp"
#include "symkit/tensor.hpp"

namespace symkit {

// Dense map of [0, 1] responses, row-major.
struct Heatmap {
  int width = 0;
  int height = 0;
  std::vector<double> values;

  Heatmap() = default;
  Heatmap(int w, int h, double fill = 0.0);

  double& at(int x, int y) { return values[static_cast<std::size_t>(y) * width + x]; }
  double at(int x, int y) const {
    return values[static_cast<std::size_t>(y) * width + x];
  }
};

struct SynthConfig {
  double sigma = 5.0;
};

struct PixelCoord {
  int x = 0;
  int y = 0;
};

struct RasterResult {
  std::vector<PixelCoord> pixels;  // sorted by (y, x), clipped to bounds
  bool out_of_bounds = false;      // true when the geometry missed the image
};

// Axis -> 8-connected 1-px digital line between half-up-rounded endpoints
// (DDA from the lexicographically smaller endpoint, half-up interior
// rounding). Center -> single nearest pixel. Pixels outside the image are
// dropped; a fully outside geometry yields an empty set with the flag set.
RasterResult rasterize(const ConsensusSymmetry& gt, int width, int height);

// Per-pixel sum of unnormalized gaussians around every raster pixel of the
// GT, then scaled so the peak is exactly 1. Throws when the raster is empty.
Heatmap synth_single(const ConsensusSymmetry& gt, int width, int height,
                     const SynthConfig& cfg);

// Elementwise max. All maps must share dims.
Heatmap fuse(const std::vector<Heatmap>& maps);

// One channel per kind: fused map over all GTs of that kind (all-zero when
// the kind is absent). GTs whose raster is empty are skipped.
std::pair<Heatmap, Heatmap> synth_gt(const std::vector<ConsensusSymmetry>& gts,
                                     int width, int height,
                                     const SynthConfig& cfg);

// 16-bit binary PGM, maxval 65535, big-endian payload; value = round(65535*v).
void write_heatmap_pgm(std::ostream& os, const Heatmap& hm);
Heatmap read_heatmap_pgm(std::istream& is);
void save_heatmap(const std::string& path, const Heatmap& hm);
Heatmap load_heatmap(const std::string& path);

// Rank-2 float32 snapshot sidecar (dims h, w).
void save_heatmap_snapshot(const std::string& path, const Heatmap& hm);
Heatmap load_heatmap_snapshot(const std::string& path);

Tensor tensor_from_heatmap(const Heatmap& hm);
Heatmap heatmap_from_tensor(const Tensor& t);

}  // namespace symkit
