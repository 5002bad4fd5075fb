#pragma once

#include "symkit/heatmap.hpp"
#include "symkit/image.hpp"

namespace symkit {

struct ReflectionBaselineConfig {
  int top_k = 5;            // accumulator peaks rendered
  double sigma = 5.0;       // axis rendering width
  double gate_deg = 10.0;   // mirror-orientation tolerance
  int max_pairs = 200000;   // gradient pair budget
};

// Mirror-gradient Hough voting: strong-gradient pixel pairs whose gradients
// are mirror images across the pair's perpendicular bisector vote for that
// bisector in a (rho, theta) accumulator (1 px / 1 degree bins). The top
// peaks after 3x3 NMS are rendered as axis heatmaps and max-fused. A flat
// image yields all zeros.
Heatmap detect_reflection_baseline(const ImageU8& img,
                                   const ReflectionBaselineConfig& cfg = {});

struct RotationBaselineConfig {
  int patch_radius = 16;
  int stride = 2;
};

// Rotational self-correlation: at each candidate pixel the square patch is
// compared against its own 90/180/270 degree rotations by NCC; the mean
// score (clamped to [0,1]) is bilinearly interpolated back to full
// resolution. Pixels without a full patch score 0, as do zero-variance
// patches.
Heatmap detect_rotation_baseline(const ImageU8& img,
                                 const RotationBaselineConfig& cfg = {});

}  // namespace symkit
