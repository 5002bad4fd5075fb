#include "symkit/augment.hpp"

#include <cmath>
#include <stdexcept>

#include "symkit/heatmap.hpp"
#include "symkit/rng.hpp"

namespace symkit {

const double kAugmentScales[5] = {0.85, 0.9, 1.0, 1.1, 1.25};

namespace {

int round_half_up(double v) { return static_cast<int>(std::floor(v + 0.5)); }

bool allowed_scale(double s) {
  for (double k : kAugmentScales)
    if (s == k) return true;
  return false;
}

// Clip a segment to the inclusive box [bx0, bx1] x [by0, by1]
// (Liang-Barsky). Returns false when the segment misses the box entirely.
bool clip_segment(Point& a, Point& b, double bx0, double by0, double bx1,
                  double by1) {
  double dx = b.x - a.x, dy = b.y - a.y;
  double t0 = 0.0, t1 = 1.0;
  const double p[4] = {-dx, dx, -dy, dy};
  const double q[4] = {a.x - bx0, bx1 - a.x, a.y - by0, by1 - a.y};
  for (int i = 0; i < 4; ++i) {
    if (p[i] == 0.0) {
      if (q[i] < 0.0) return false;
    } else {
      double t = q[i] / p[i];
      if (p[i] < 0.0) {
        if (t > t1) return false;
        if (t > t0) t0 = t;
      } else {
        if (t < t0) return false;
        if (t < t1) t1 = t;
      }
    }
  }
  Point na = t0 == 0.0 ? a : Point{a.x + t0 * dx, a.y + t0 * dy};
  Point nb = t1 == 1.0 ? b : Point{a.x + t1 * dx, a.y + t1 * dy};
  a = na;
  b = nb;
  return true;
}

}  // namespace

std::pair<ImageU8, std::vector<ConsensusSymmetry>> apply_augment(
    const ImageU8& img, const std::vector<ConsensusSymmetry>& gts,
    const AugmentSpec& spec) {
  if (!allowed_scale(spec.scale))
    throw std::invalid_argument("augment: scale " + std::to_string(spec.scale) +
                                " is not one of the allowed factors");
  if (spec.rotation_deg != 0 && spec.rotation_deg != 90 &&
      spec.rotation_deg != 180 && spec.rotation_deg != 270)
    throw std::invalid_argument("augment: rotation must be a right angle, got " +
                                std::to_string(spec.rotation_deg));

  ImageU8 out = img;
  std::vector<ConsensusSymmetry> geo = gts;

  // scale
  if (spec.scale != 1.0) {
    int nw = std::max(1, round_half_up(spec.scale * out.width));
    int nh = std::max(1, round_half_up(spec.scale * out.height));
    double fx = out.width > 1 ? static_cast<double>(nw - 1) / (out.width - 1) : 0.0;
    double fy = out.height > 1 ? static_cast<double>(nh - 1) / (out.height - 1) : 0.0;
    for (ConsensusSymmetry& g : geo)
      for (Point& p : g.geometry) {
        p.x *= fx;
        p.y *= fy;
      }
    out = resize_bilinear(out, nw, nh);
  }

  // rotate in 90 degree steps: (x, y) -> (H-1-y, x)
  for (int r = 0; r < spec.rotation_deg / 90; ++r) {
    int h = out.height;
    for (ConsensusSymmetry& g : geo)
      for (Point& p : g.geometry) {
        double nx = (h - 1) - p.y;
        p.y = p.x;
        p.x = nx;
      }
    out = rot90(out);
  }

  if (spec.flip) {
    for (ConsensusSymmetry& g : geo)
      for (Point& p : g.geometry) p.x = (out.width - 1) - p.x;
    out = hflip(out);
  }

  if (spec.has_crop) {
    const CropRect& c = spec.crop;
    if (c.w < 1 || c.h < 1 || c.x < 0 || c.y < 0 || c.x + c.w > out.width ||
        c.y + c.h > out.height)
      throw std::invalid_argument("augment: crop window outside image");
    std::vector<ConsensusSymmetry> kept;
    for (ConsensusSymmetry& g : geo) {
      if (g.kind == SymmetryKind::rotation) {
        int px = round_half_up(g.geometry[0].x);
        int py = round_half_up(g.geometry[0].y);
        if (px < c.x || px >= c.x + c.w || py < c.y || py >= c.y + c.h) continue;
        g.geometry[0].x -= c.x;
        g.geometry[0].y -= c.y;
        kept.push_back(g);
      } else {
        RasterResult r = rasterize(g, out.width, out.height);
        if (r.pixels.empty()) continue;
        std::size_t inside = 0;
        for (const PixelCoord& p : r.pixels)
          if (p.x >= c.x && p.x < c.x + c.w && p.y >= c.y && p.y < c.y + c.h)
            ++inside;
        if (2 * inside < r.pixels.size()) continue;
        Point a = g.geometry[0], b = g.geometry[1];
        if (!clip_segment(a, b, c.x, c.y, c.x + c.w - 1, c.y + c.h - 1)) continue;
        g.geometry[0] = {a.x - c.x, a.y - c.y};
        g.geometry[1] = {b.x - c.x, b.y - c.y};
        kept.push_back(g);
      }
    }
    geo = std::move(kept);
    out = crop(out, c.x, c.y, c.w, c.h);
  }

  return {std::move(out), std::move(geo)};
}

AugmentSpec sample_augment(std::uint64_t seed, int width, int height,
                           double crop_fraction) {
  if (width < 1 || height < 1)
    throw std::invalid_argument("augment: bad image dims");
  if (!(crop_fraction > 0.0 && crop_fraction <= 1.0))
    throw std::invalid_argument("augment: crop fraction must be in (0, 1]");
  Rng rng(seed);
  AugmentSpec spec;
  spec.scale = kAugmentScales[rng.uniform_int(5)];
  spec.rotation_deg = 90 * rng.uniform_int(4);
  spec.flip = rng.uniform_int(2) == 1;

  int w1 = std::max(1, round_half_up(spec.scale * width));
  int h1 = std::max(1, round_half_up(spec.scale * height));
  if (spec.rotation_deg == 90 || spec.rotation_deg == 270) std::swap(w1, h1);

  spec.has_crop = true;
  spec.crop.w = std::max(1, round_half_up(crop_fraction * w1));
  spec.crop.h = std::max(1, round_half_up(crop_fraction * h1));
  spec.crop.x = rng.uniform_int(w1 - spec.crop.w + 1);
  spec.crop.y = rng.uniform_int(h1 - spec.crop.h + 1);
  return spec;
}

}  // namespace symkit
