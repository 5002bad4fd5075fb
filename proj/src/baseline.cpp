#include "symkit/baseline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "symkit/labels.hpp"
#include "symkit/tensor.hpp"

namespace symkit {

namespace {

constexpr double kPi = 3.14159265358979323846;

struct GradField {
  int w = 0, h = 0;
  std::vector<double> gx, gy, mag;
};

GradField sobel(const std::vector<double>& lum, int w, int h) {
  GradField f;
  f.w = w;
  f.h = h;
  f.gx.resize(lum.size());
  f.gy.resize(lum.size());
  f.mag.resize(lum.size());
  auto at = [&](int x, int y) {
    x = std::clamp(x, 0, w - 1);
    y = std::clamp(y, 0, h - 1);
    return lum[static_cast<std::size_t>(y) * w + x];
  };
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double tl = at(x - 1, y - 1), tc = at(x, y - 1), tr = at(x + 1, y - 1);
      double ml = at(x - 1, y), mr = at(x + 1, y);
      double bl = at(x - 1, y + 1), bc = at(x, y + 1), br = at(x + 1, y + 1);
      std::size_t i = static_cast<std::size_t>(y) * w + x;
      f.gx[i] = (tr + 2 * mr + br) - (tl + 2 * ml + bl);
      f.gy[i] = (bl + 2 * bc + br) - (tl + 2 * tc + tr);
      f.mag[i] = std::sqrt(f.gx[i] * f.gx[i] + f.gy[i] * f.gy[i]);
    }
  return f;
}

// Infinite line rho = p . n clipped to the image rectangle. Returns false
// when the line misses it.
bool clip_line_to_rect(double rho, double nx, double ny, int w, int h,
                       Point* a, Point* b) {
  double px = rho * nx, py = rho * ny;
  double dx = -ny, dy = nx;
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  auto slab = [&](double p, double d, double lim) {
    if (std::fabs(d) < 1e-12) return p >= 0.0 && p <= lim;
    double t1 = (0.0 - p) / d, t2 = (lim - p) / d;
    lo = std::max(lo, std::min(t1, t2));
    hi = std::min(hi, std::max(t1, t2));
    return true;
  };
  if (!slab(px, dx, w - 1.0)) return false;
  if (!slab(py, dy, h - 1.0)) return false;
  if (lo > hi) return false;
  *a = {px + lo * dx, py + lo * dy};
  *b = {px + hi * dx, py + hi * dy};
  return true;
}

}  // namespace

Heatmap detect_reflection_baseline(const ImageU8& img,
                                   const ReflectionBaselineConfig& cfg) {
  int w = img.width, h = img.height;
  Heatmap out(w, h);
  std::vector<double> lum = luma(img);
  GradField grad = sobel(lum, w, h);

  // Budget: M pixels give M(M-1)/2 pairs.
  int budget_m = 2;
  while (static_cast<std::int64_t>(budget_m + 1) * budget_m / 2 <=
         cfg.max_pairs)
    ++budget_m;

  // Keep pixels strictly above the magnitude of the budget_m-th strongest.
  // A value cutoff (rather than a positional top-M) keeps the selection
  // invariant under image flips, where equal-magnitude ties reorder.
  std::vector<double> mags;
  mags.reserve(grad.mag.size());
  for (double m : grad.mag)
    if (m > 0.0) mags.push_back(m);
  double cutoff = 0.0;
  if (static_cast<int>(mags.size()) > budget_m) {
    std::nth_element(mags.begin(), mags.begin() + budget_m, mags.end(),
                     std::greater<double>());
    cutoff = mags[budget_m];
  }
  struct Cand {
    int x, y;
    double gx, gy, mag;
  };
  std::vector<Cand> cands;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      std::size_t i = static_cast<std::size_t>(y) * w + x;
      if (grad.mag[i] > cutoff)
        cands.push_back({x, y, grad.gx[i], grad.gy[i], grad.mag[i]});
    }
  if (cands.empty()) return out;

  // Bin-center normals with exact mirror symmetry: nxs[180-t] == -nxs[t]
  // and nys[180-t] == nys[t] bit for bit, axis-aligned entries pinned to
  // 0/1. Votes snap rho to these normals, referenced to the image center,
  // so a horizontal flip sends a vote in bin (t, rho) to bin (180-t, rho)
  // with the identical rho double, and the accumulators mirror exactly.
  double nxs[180], nys[180];
  for (int t = 1; t < 90; ++t) {
    double rad = t * kPi / 180.0;
    nxs[t] = std::cos(rad);
    nys[t] = std::sin(rad);
  }
  nxs[0] = 1.0;
  nys[0] = 0.0;
  nxs[90] = 0.0;
  nys[90] = 1.0;
  for (int t = 91; t < 180; ++t) {
    nxs[t] = -nxs[180 - t];
    nys[t] = nys[180 - t];
  }

  double cx = (w - 1) / 2.0, cy = (h - 1) / 2.0;
  int dc = static_cast<int>(std::ceil(
      std::sqrt(double(w - 1) * (w - 1) + double(h - 1) * (h - 1)) / 2.0));
  int n_rho = 2 * dc + 1;
  // int64 votes: quantized weights make the bin sums independent of the
  // pair visiting order
  std::vector<std::int64_t> votes(static_cast<std::size_t>(180) * n_rho, 0);
  double gate_cos = std::cos(cfg.gate_deg * kPi / 180.0);

  for (std::size_t i = 0; i < cands.size(); ++i)
    for (std::size_t j = i + 1; j < cands.size(); ++j) {
      const Cand& a = cands[i];
      const Cand& b = cands[j];
      int dx = b.x - a.x, dy = b.y - a.y;
      if (dx == 0 && dy == 0) continue;
      // canonical segment direction, which is the axis normal
      if (dx < 0 || (dx == 0 && dy < 0)) {
        dx = -dx;
        dy = -dy;
      }
      double seg_len = std::sqrt(double(dx) * dx + double(dy) * dy);
      double ux = dx / seg_len, uy = dy / seg_len;
      // mirror gate written symmetrically: reflecting b across the axis
      // (normal u) and dotting with a gives a.b - 2(a.u)(b.u), the same
      // number when the pair swaps roles or the image flips
      double as = a.gx * ux + a.gy * uy;
      double bs = b.gx * ux + b.gy * uy;
      double ab = a.gx * b.gx + a.gy * b.gy;
      double dot = ab - 2.0 * as * bs;
      if (dot < gate_cos * a.mag * b.mag) continue;

      double deg = std::atan2(double(dy), double(dx)) * 180.0 / kPi;
      // lround rounds halves away from zero, symmetric in the sign of deg
      long snapped = std::lround(deg);  // [-90, 90]
      int bin_t = snapped < 0 ? static_cast<int>(snapped) + 180
                              : static_cast<int>(snapped);
      double mx = (a.x + b.x) / 2.0, my = (a.y + b.y) / 2.0;
      double rho = (mx - cx) * nxs[bin_t] + (my - cy) * nys[bin_t];
      int bin_r = static_cast<int>(std::lround(rho)) + dc;
      if (bin_r < 0 || bin_r >= n_rho) continue;
      std::int64_t weight = static_cast<std::int64_t>(
          std::floor(a.mag * b.mag * 1048576.0 + 0.5));
      votes[static_cast<std::size_t>(bin_t) * n_rho + bin_r] += weight;
    }

  // 3x3 peak NMS, ties kept. Theta wraps cyclically with the rho axis
  // negated (the line (t + 180, rho) is the line (t, -rho)), which keeps
  // the neighborhood structure itself mirror-symmetric.
  struct Peak {
    std::int64_t v;
    int t, r;
  };
  std::vector<Peak> peaks;
  for (int t = 0; t < 180; ++t)
    for (int r = 0; r < n_rho; ++r) {
      std::int64_t v = votes[static_cast<std::size_t>(t) * n_rho + r];
      if (v <= 0) continue;
      bool is_peak = true;
      for (int dt = -1; dt <= 1 && is_peak; ++dt)
        for (int dr = -1; dr <= 1; ++dr) {
          if (dt == 0 && dr == 0) continue;
          int tt = t + dt, rr = r + dr;
          if (tt < 0) {
            tt += 180;
            rr = (n_rho - 1) - rr;
          } else if (tt >= 180) {
            tt -= 180;
            rr = (n_rho - 1) - rr;
          }
          if (rr < 0 || rr >= n_rho) continue;
          if (votes[static_cast<std::size_t>(tt) * n_rho + rr] > v) {
            is_peak = false;
            break;
          }
        }
      if (is_peak) peaks.push_back({v, t, r});
    }
  if (peaks.empty()) return out;
  std::sort(peaks.begin(), peaks.end(), [](const Peak& a, const Peak& b) {
    if (a.v != b.v) return a.v > b.v;
    if (a.t != b.t) return a.t < b.t;
    return a.r < b.r;
  });
  if (static_cast<int>(peaks.size()) > cfg.top_k) {
    // cut by vote value, carrying ties past the cut: a positional cut
    // could pick different members of a tie in the flipped image
    std::int64_t vcut = peaks[cfg.top_k - 1].v;
    int keep = cfg.top_k;
    while (keep < static_cast<int>(peaks.size()) && peaks[keep].v == vcut)
      ++keep;
    peaks.resize(keep);
  }

  double top_votes = static_cast<double>(peaks[0].v);
  SynthConfig synth_cfg;
  synth_cfg.sigma = cfg.sigma;
  std::vector<Heatmap> maps;
  for (const Peak& pk : peaks) {
    Point a, b;
    double rho_c = pk.r - dc;
    double rho_origin = rho_c + cx * nxs[pk.t] + cy * nys[pk.t];
    if (!clip_line_to_rect(rho_origin, nxs[pk.t], nys[pk.t], w, h, &a, &b))
      continue;
    ConsensusSymmetry gt;
    gt.kind = SymmetryKind::reflection;
    gt.geometry = {a, b};
    RasterResult raster = rasterize(gt, w, h);
    if (raster.pixels.empty()) continue;
    Heatmap hm = synth_single(gt, w, h, synth_cfg);
    double scale = pk.v / top_votes;
    for (double& v : hm.values) v *= scale;
    maps.push_back(std::move(hm));
  }
  if (maps.empty()) return out;
  return fuse(maps);
}

Heatmap detect_rotation_baseline(const ImageU8& img,
                                 const RotationBaselineConfig& cfg) {
  int w = img.width, h = img.height;
  Heatmap out(w, h);
  int rad = cfg.patch_radius, stride = cfg.stride;
  if (w < 2 * rad + 1 || h < 2 * rad + 1) return out;  // no full patch fits
  std::vector<double> lum = luma(img);
  auto at = [&](int x, int y) {
    return lum[static_cast<std::size_t>(y) * w + x];
  };

  int nx = (w - 1 - 2 * rad) / stride + 1;
  int ny = (h - 1 - 2 * rad) / stride + 1;
  Tensor grid(1, 1, ny, nx);
  int side = 2 * rad + 1;
  int count = side * side;

  for (int gy = 0; gy < ny; ++gy)
    for (int gx = 0; gx < nx; ++gx) {
      int cx = rad + gx * stride, cy = rad + gy * stride;
      double mean = 0.0;
      for (int v = -rad; v <= rad; ++v)
        for (int u = -rad; u <= rad; ++u) mean += at(cx + u, cy + v);
      mean /= count;
      double var = 0.0;
      for (int v = -rad; v <= rad; ++v)
        for (int u = -rad; u <= rad; ++u) {
          double d = at(cx + u, cy + v) - mean;
          var += d * d;
        }
      var /= count;
      if (var < 1e-18) continue;  // constant patch scores 0

      // rotations about the patch center are exact pixel permutations:
      // 90 deg maps offset (u, v) to (v, -u)
      double c90 = 0.0, c180 = 0.0, c270 = 0.0;
      for (int v = -rad; v <= rad; ++v)
        for (int u = -rad; u <= rad; ++u) {
          double d = at(cx + u, cy + v) - mean;
          c90 += d * (at(cx + v, cy - u) - mean);
          c180 += d * (at(cx - u, cy - v) - mean);
          c270 += d * (at(cx - v, cy + u) - mean);
        }
      double denom = count * var;
      double score = (c90 + c180 + c270) / (3.0 * denom);
      grid.at(0, 0, gy, gx) = std::clamp(score, 0.0, 1.0);
    }

  // paste the interpolated grid over its exact span; borders stay 0
  int span_w = (nx - 1) * stride + 1, span_h = (ny - 1) * stride + 1;
  Tensor up = bilinear_resize(grid, span_h, span_w);
  for (int y = 0; y < span_h; ++y)
    for (int x = 0; x < span_w; ++x)
      out.at(rad + x, rad + y) = up.at(0, 0, y, x);
  return out;
}

}  // namespace symkit
