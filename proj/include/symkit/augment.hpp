#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "symkit/image.hpp"
#include "symkit/labels.hpp"

namespace symkit {

struct CropRect {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;
};

// Applied in fixed order: scale, rotate, flip, crop.
struct AugmentSpec {
  double scale = 1.0;            // one of {0.85, 0.9, 1.0, 1.1, 1.25}
  int rotation_deg = 0;          // 0 / 90 / 180 / 270
  bool flip = false;             // horizontal
  bool has_crop = false;
  CropRect crop;
};

// The five legal scale factors, in draw order.
extern const double kAugmentScales[5];

// Transforms the image and its GT geometry together. GTs that leave the
// crop are dropped: a rotation center survives iff its rounded pixel stays
// inside; an axis survives iff at least half of its rasterized pixels stay
// inside, and then its endpoints are clipped to the crop window (documented
// part of the survival rule, so no geometry ever ends up out of bounds).
std::pair<ImageU8, std::vector<ConsensusSymmetry>> apply_augment(
    const ImageU8& img, const std::vector<ConsensusSymmetry>& gts,
    const AugmentSpec& spec);

// Seeded draw: scale index, rotation index, flip, crop x, crop y, in that
// order. The crop is round(fraction * dim) of the post-transform image.
AugmentSpec sample_augment(std::uint64_t seed, int width, int height,
                           double crop_fraction = 0.9);

}  // namespace symkit
