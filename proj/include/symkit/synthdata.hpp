#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "symkit/image.hpp"
#include "symkit/labels.hpp"

namespace symkit {

enum class SynthTexture { filtered_noise, blob_collage };

// Parameters for one generated image. The fixed_* hooks pin the drawn
// geometry so tests can place a symmetry exactly.
struct SynthSpec {
  int width = 64;
  int height = 64;
  SymmetryKind kind = SymmetryKind::reflection;
  int count = 1;
  SynthTexture texture = SynthTexture::filtered_noise;
  double noise_level = 0.0;
  std::uint64_t seed = 1;
  std::string image_id = "synth";

  bool has_fixed_angle = false;
  double fixed_angle_deg = 0.0;  // axis direction, degrees
  bool has_fixed_anchor = false;
  Point fixed_anchor;

  void validate() const;
};

// Reflection: each symmetry gets a vertical strip of the image filled with
// a texture that is a function of (along-axis, |across-axis|) coordinates,
// so the strip is mirrored exactly about the axis line; the GT segment is
// the chord of the strip's margin box. Axis angles come from {0, 45, 90,
// 135} plus up to +-10 degrees of jitter; at the four exact angles the
// mirror pairs are equal bit for bit (noise_level 0).
// Rotation: a disk around each center is filled by folding integer offsets
// into one quadrant with exact 90-degree rotations, giving exact 4-fold
// symmetry on an asymmetric background.
// Placement retries up to 100 times per symmetry, then fails.
// GT support is 999 so synthetic GTs survive any support filter.
std::pair<ImageU8, std::vector<ConsensusSymmetry>> gen_image(
    const SynthSpec& spec);

// Simulated annotators: each rater re-draws every GT with Gaussian jitter
// on the points, or (with probability outlier_rate) an unrelated uniform
// label. Deterministic in seed.
LabelSet gen_rater_labels(const std::vector<ConsensusSymmetry>& gts,
                          int n_raters, double jitter_sigma,
                          double outlier_rate, std::uint64_t seed, int width,
                          int height);

}  // namespace symkit
