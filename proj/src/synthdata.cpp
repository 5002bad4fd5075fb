#include "symkit/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "symkit/rng.hpp"

namespace symkit {

namespace {

constexpr int kMargin = 8;
constexpr int kMaxAttempts = 100;
constexpr double kPi = 3.14159265358979323846;

// Small raster the (s, |t|) and folded-quadrant lookups are sampled from.
struct TextureRaster {
  int w = 0, h = 0;
  std::vector<double> v;  // in [0, 1]

  double at(int x, int y) const {
    return v[static_cast<std::size_t>(y) * w + x];
  }
  double sample(double x, double y) const {
    x = std::clamp(x, 0.0, w - 1.0);
    y = std::clamp(y, 0.0, h - 1.0);
    int x0 = std::min(static_cast<int>(x), w - 2 < 0 ? 0 : w - 2);
    int y0 = std::min(static_cast<int>(y), h - 2 < 0 ? 0 : h - 2);
    int x1 = std::min(x0 + 1, w - 1);
    int y1 = std::min(y0 + 1, h - 1);
    double fx = x - x0, fy = y - y0;
    double top = at(x0, y0) * (1 - fx) + at(x1, y0) * fx;
    double bot = at(x0, y1) * (1 - fx) + at(x1, y1) * fx;
    return top * (1 - fy) + bot * fy;
  }
};

void normalize01(std::vector<double>& v) {
  double lo = v[0], hi = v[0];
  for (double x : v) {
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  if (hi - lo < 1e-12) {
    std::fill(v.begin(), v.end(), 0.5);
    return;
  }
  for (double& x : v) x = (x - lo) / (hi - lo);
}

std::vector<double> gaussian_blur(const std::vector<double>& src, int w,
                                  int h, double sigma) {
  int rad = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> kernel(2 * rad + 1);
  double sum = 0.0;
  for (int i = -rad; i <= rad; ++i) {
    kernel[i + rad] = std::exp(-0.5 * i * i / (sigma * sigma));
    sum += kernel[i + rad];
  }
  for (double& k : kernel) k /= sum;

  std::vector<double> tmp(src.size()), out(src.size());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -rad; i <= rad; ++i)
        acc += kernel[i + rad] * src[static_cast<std::size_t>(y) * w +
                                     std::clamp(x + i, 0, w - 1)];
      tmp[static_cast<std::size_t>(y) * w + x] = acc;
    }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -rad; i <= rad; ++i)
        acc += kernel[i + rad] *
               tmp[static_cast<std::size_t>(std::clamp(y + i, 0, h - 1)) * w +
                   x];
      out[static_cast<std::size_t>(y) * w + x] = acc;
    }
  return out;
}

TextureRaster make_texture(SynthTexture kind, int w, int h, Rng& rng) {
  TextureRaster tex;
  tex.w = w;
  tex.h = h;
  tex.v.resize(static_cast<std::size_t>(w) * h, 0.0);
  if (kind == SynthTexture::filtered_noise) {
    // band-pass noise: difference of two blurs of the same white noise
    std::vector<double> noise(tex.v.size());
    for (double& x : noise) x = rng.uniform();
    std::vector<double> fine = gaussian_blur(noise, w, h, 1.2);
    std::vector<double> coarse = gaussian_blur(noise, w, h, 3.0);
    for (std::size_t i = 0; i < tex.v.size(); ++i)
      tex.v[i] = fine[i] - coarse[i];
  } else {
    int blobs = 8 + (w * h) / 400;
    for (int b = 0; b < blobs; ++b) {
      double cx = rng.uniform(0.0, w - 1.0);
      double cy = rng.uniform(0.0, h - 1.0);
      double sig = rng.uniform(1.5, 6.0);
      double amp = rng.uniform(0.3, 1.0) * (rng.uniform() < 0.5 ? -1.0 : 1.0);
      int rad = static_cast<int>(std::ceil(3.0 * sig));
      int x0 = std::max(0, static_cast<int>(cx) - rad);
      int x1 = std::min(w - 1, static_cast<int>(cx) + rad);
      int y0 = std::max(0, static_cast<int>(cy) - rad);
      int y1 = std::min(h - 1, static_cast<int>(cy) + rad);
      for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
          double d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
          tex.v[static_cast<std::size_t>(y) * w + x] +=
              amp * std::exp(-0.5 * d2 / (sig * sig));
        }
    }
  }
  normalize01(tex.v);
  return tex;
}

// Axis frame directions. The four pinned angles get exact components so
// that mirrored grid offsets produce bitwise-negated across-axis
// coordinates.
void axis_frame(double angle_deg, double* dx, double* dy, double* nx,
                double* ny) {
  const double s2 = std::sqrt(0.5);
  if (angle_deg == 0.0) {
    *dx = 1.0; *dy = 0.0; *nx = 0.0; *ny = 1.0;
  } else if (angle_deg == 45.0) {
    *dx = s2; *dy = s2; *nx = -s2; *ny = s2;
  } else if (angle_deg == 90.0) {
    *dx = 0.0; *dy = 1.0; *nx = -1.0; *ny = 0.0;
  } else if (angle_deg == 135.0) {
    *dx = -s2; *dy = s2; *nx = -s2; *ny = -s2;
  } else {
    double a = angle_deg * kPi / 180.0;
    *dx = std::cos(a); *dy = std::sin(a);
    *nx = -*dy; *ny = *dx;
  }
}

// Chord of the line through `anchor` with direction (dx, dy) inside the
// box [x0, x1] x [y0, y1]. False when the line misses the box.
bool chord_in_box(const Point& anchor, double dx, double dy, double x0,
                  double x1, double y0, double y1, Point* a, Point* b) {
  double lo = -1e18, hi = 1e18;
  auto slab = [&](double p, double d, double mn, double mx) {
    if (std::fabs(d) < 1e-12) return p >= mn && p <= mx;
    double t1 = (mn - p) / d, t2 = (mx - p) / d;
    lo = std::max(lo, std::min(t1, t2));
    hi = std::min(hi, std::max(t1, t2));
    return true;
  };
  if (!slab(anchor.x, dx, x0, x1)) return false;
  if (!slab(anchor.y, dy, y0, y1)) return false;
  if (lo > hi) return false;
  *a = {anchor.x + lo * dx, anchor.y + lo * dy};
  *b = {anchor.x + hi * dx, anchor.y + hi * dy};
  return true;
}

struct ReflectionStrip {
  int x0, x1;  // inclusive pixel range
  Point anchor;
  double dx, dy, nx, ny;
  TextureRaster tex;
  double diag;
};

}  // namespace

void SynthSpec::validate() const {
  if (width < 32 || height < 32)
    throw std::invalid_argument("synth: size must be at least 32x32");
  if (count < 1) throw std::invalid_argument("synth: count must be >= 1");
  if (noise_level < 0.0)
    throw std::invalid_argument("synth: noise_level must be >= 0");
  if (kind == SymmetryKind::reflection && width / count < 2 * kMargin + 4)
    throw std::invalid_argument(
        "synth: image too narrow for that many reflection strips");
}

std::pair<ImageU8, std::vector<ConsensusSymmetry>> gen_image(
    const SynthSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  int w = spec.width, h = spec.height;

  ImageU8 img;
  img.width = w;
  img.height = h;
  img.channels = 1;
  img.data.assign(static_cast<std::size_t>(w) * h, 0);
  std::vector<double> field(static_cast<std::size_t>(w) * h, 0.0);
  std::vector<ConsensusSymmetry> gts;

  if (spec.kind == SymmetryKind::reflection) {
    std::vector<ReflectionStrip> strips;
    for (int k = 0; k < spec.count; ++k) {
      ReflectionStrip st;
      st.x0 = k * w / spec.count;
      st.x1 = (k + 1) * w / spec.count - 1;
      double bx0 = st.x0 + kMargin, bx1 = st.x1 - kMargin;
      double by0 = kMargin, by1 = h - 1 - kMargin;
      double min_len = 0.4 * std::min(bx1 - bx0, by1 - by0);

      bool placed = false;
      Point a, b;
      for (int attempt = 0; attempt < kMaxAttempts && !placed; ++attempt) {
        double angle;
        if (spec.has_fixed_angle) {
          angle = spec.fixed_angle_deg;
        } else {
          angle = 45.0 * rng.uniform_int(4) + rng.uniform(-10.0, 10.0);
        }
        Point anchor;
        if (spec.has_fixed_anchor) {
          anchor = spec.fixed_anchor;
        } else {
          anchor.x = bx0 + rng.uniform_int(static_cast<int>(bx1 - bx0) + 1);
          anchor.y = by0 + rng.uniform_int(static_cast<int>(by1 - by0) + 1);
        }
        axis_frame(angle, &st.dx, &st.dy, &st.nx, &st.ny);
        if (!chord_in_box(anchor, st.dx, st.dy, bx0, bx1, by0, by1, &a, &b))
          continue;
        double len = std::hypot(b.x - a.x, b.y - a.y);
        if (len < min_len) continue;
        st.anchor = anchor;
        placed = true;
      }
      if (!placed)
        throw std::runtime_error(
            "synth: could not place reflection axis " + std::to_string(k) +
            " after " + std::to_string(kMaxAttempts) + " attempts");

      st.diag = std::hypot(static_cast<double>(w), static_cast<double>(h));
      int tw = 2 * static_cast<int>(std::ceil(st.diag)) + 1;
      int th = static_cast<int>(std::ceil(st.diag)) + 1;
      st.tex = make_texture(spec.texture, tw, th, rng);
      strips.push_back(std::move(st));

      ConsensusSymmetry gt;
      gt.image_id = spec.image_id;
      gt.kind = SymmetryKind::reflection;
      gt.geometry = {a, b};
      gt.support = 999;
      gts.push_back(std::move(gt));
    }

    for (std::size_t k = 0; k < strips.size(); ++k) {
      const ReflectionStrip& st = strips[k];
      for (int y = 0; y < h; ++y)
        for (int x = st.x0; x <= st.x1; ++x) {
          double px = x - st.anchor.x, py = y - st.anchor.y;
          // products first, one subtraction/addition: mirrored offsets at
          // the pinned angles negate t exactly and keep s exact
          double s = px * st.dx + py * st.dy;
          double t = px * st.nx + py * st.ny;
          field[static_cast<std::size_t>(y) * w + x] =
              st.tex.sample(s + std::ceil(st.diag), std::fabs(t));
        }
    }
  } else {
    // asymmetric background first
    TextureRaster bg = make_texture(spec.texture, w, h, rng);
    for (std::size_t i = 0; i < field.size(); ++i) field[i] = bg.v[i];

    struct Disk {
      int cx, cy, r;
    };
    std::vector<Disk> disks;
    int max_r = std::min(w, h) / 2 - kMargin - 2;
    if (max_r < 10)
      throw std::invalid_argument("synth: image too small for rotation disks");
    for (int k = 0; k < spec.count; ++k) {
      bool placed = false;
      Disk d{0, 0, 0};
      for (int attempt = 0; attempt < kMaxAttempts && !placed; ++attempt) {
        d.r = 10 + rng.uniform_int(std::min(max_r, 22) - 10 + 1);
        if (spec.has_fixed_anchor) {
          d.cx = static_cast<int>(spec.fixed_anchor.x);
          d.cy = static_cast<int>(spec.fixed_anchor.y);
        } else {
          d.cx = kMargin + d.r +
                 rng.uniform_int(w - 2 * (kMargin + d.r) > 0
                                     ? w - 2 * (kMargin + d.r)
                                     : 1);
          d.cy = kMargin + d.r +
                 rng.uniform_int(h - 2 * (kMargin + d.r) > 0
                                     ? h - 2 * (kMargin + d.r)
                                     : 1);
        }
        if (d.cx - d.r < kMargin || d.cx + d.r > w - 1 - kMargin ||
            d.cy - d.r < kMargin || d.cy + d.r > h - 1 - kMargin)
          continue;
        bool overlap = false;
        for (const Disk& o : disks) {
          double dist2 = double(d.cx - o.cx) * (d.cx - o.cx) +
                         double(d.cy - o.cy) * (d.cy - o.cy);
          double lim = d.r + o.r + 4.0;
          if (dist2 <= lim * lim) overlap = true;
        }
        if (!overlap) placed = true;
      }
      if (!placed)
        throw std::runtime_error(
            "synth: could not place rotation center " + std::to_string(k) +
            " after " + std::to_string(kMaxAttempts) + " attempts");
      disks.push_back(d);

      TextureRaster tex = make_texture(spec.texture, d.r + 2, d.r + 2, rng);
      for (int y = d.cy - d.r; y <= d.cy + d.r; ++y)
        for (int x = d.cx - d.r; x <= d.cx + d.r; ++x) {
          int ox = x - d.cx, oy = y - d.cy;
          if (ox * ox + oy * oy > d.r * d.r) continue;
          // fold the offset into the half-open quadrant x > 0, y >= 0 by
          // exact quarter turns; the origin stays put
          int fx = ox, fy = oy;
          while (!(fx == 0 && fy == 0) && !(fx > 0 && fy >= 0)) {
            int nx2 = fy, ny2 = -fx;
            fx = nx2;
            fy = ny2;
          }
          field[static_cast<std::size_t>(y) * w + x] = tex.at(fx, fy);
        }

      ConsensusSymmetry gt;
      gt.image_id = spec.image_id;
      gt.kind = SymmetryKind::rotation;
      gt.geometry = {{static_cast<double>(d.cx), static_cast<double>(d.cy)}};
      gt.support = 999;
      gts.push_back(std::move(gt));
    }
  }

  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double v = field[static_cast<std::size_t>(y) * w + x];
      if (spec.noise_level > 0.0)
        v += spec.noise_level * rng.uniform(-1.0, 1.0);
      int code = static_cast<int>(std::floor(255.0 * v + 0.5));
      img.data[static_cast<std::size_t>(y) * w + x] =
          static_cast<unsigned char>(std::clamp(code, 0, 255));
    }

  return {std::move(img), std::move(gts)};
}

LabelSet gen_rater_labels(const std::vector<ConsensusSymmetry>& gts,
                          int n_raters, double jitter_sigma,
                          double outlier_rate, std::uint64_t seed, int width,
                          int height) {
  if (n_raters < 1)
    throw std::invalid_argument("rater sim: n_raters must be >= 1");
  if (jitter_sigma < 0.0)
    throw std::invalid_argument("rater sim: jitter_sigma must be >= 0");
  if (outlier_rate < 0.0 || outlier_rate > 1.0)
    throw std::invalid_argument("rater sim: outlier_rate must be in [0, 1]");

  Rng rng(seed);
  LabelSet labels;
  for (int r = 0; r < n_raters; ++r) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "r%03d", r);
    for (const ConsensusSymmetry& gt : gts) {
      LabelRecord rec;
      rec.image_id = gt.image_id;
      rec.rater_id = buf;
      rec.kind = gt.kind;
      if (rng.uniform() < outlier_rate) {
        for (std::size_t i = 0; i < gt.geometry.size(); ++i)
          rec.points.push_back(
              {rng.uniform(0.0, width - 1.0), rng.uniform(0.0, height - 1.0)});
      } else {
        for (const Point& p : gt.geometry)
          rec.points.push_back({p.x + rng.normal(0.0, jitter_sigma),
                                p.y + rng.normal(0.0, jitter_sigma)});
      }
      labels.push_back(std::move(rec));
    }
  }
  return labels;
}

}  // namespace symkit
