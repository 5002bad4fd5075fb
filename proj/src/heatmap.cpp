#include "symkit/heatmap.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace symkit {

Heatmap::Heatmap(int w, int h, double fill) {
  if (w < 1 || h < 1)
    throw std::invalid_argument("heatmap: bad dims " + std::to_string(w) + "x" +
                                std::to_string(h));
  width = w;
  height = h;
  values.assign(static_cast<std::size_t>(w) * h, fill);
}

namespace {

inline int round_half_up(double v) { return static_cast<int>(std::floor(v + 0.5)); }

inline bool in_bounds(int x, int y, int w, int h) {
  return x >= 0 && y >= 0 && x < w && y < h;
}

// Digital line between integer endpoints. Walks the major axis from the
// lexicographically smaller endpoint with half-up rounding on the minor
// axis; for any segment without exact .5 interior crossings this commutes
// with grid rotations, flips and integer translations, which the synthesis
// and augmentation equivariance guarantees rely on.
std::vector<PixelCoord> line_pixels(int x0, int y0, int x1, int y1) {
  if (x1 < x0 || (x1 == x0 && y1 < y0)) {
    std::swap(x0, x1);
    std::swap(y0, y1);
  }
  int dx = x1 - x0, dy = y1 - y0;
  std::vector<PixelCoord> out;
  if (dx == 0 && dy == 0) {
    out.push_back({x0, y0});
    return out;
  }
  if (std::abs(dx) >= std::abs(dy)) {
    double slope = static_cast<double>(dy) / dx;  // dx > 0 after the swap
    for (int k = 0; k <= dx; ++k)
      out.push_back({x0 + k, y0 + round_half_up(k * slope)});
  } else {
    double slope = static_cast<double>(dx) / dy;
    int step = dy > 0 ? 1 : -1;
    for (int k = 0; k != dy + step; k += step)
      out.push_back({x0 + round_half_up(k * slope), y0 + k});
  }
  return out;
}

}  // namespace

RasterResult rasterize(const ConsensusSymmetry& gt, int width, int height) {
  if (width < 1 || height < 1)
    throw std::invalid_argument("rasterize: bad image dims");
  std::vector<PixelCoord> pix;
  if (gt.kind == SymmetryKind::rotation) {
    if (gt.geometry.size() != 1)
      throw std::invalid_argument("rasterize: rotation GT needs 1 point");
    pix.push_back({round_half_up(gt.geometry[0].x), round_half_up(gt.geometry[0].y)});
  } else {
    if (gt.geometry.size() != 2)
      throw std::invalid_argument("rasterize: reflection GT needs 2 points");
    pix = line_pixels(round_half_up(gt.geometry[0].x), round_half_up(gt.geometry[0].y),
                      round_half_up(gt.geometry[1].x), round_half_up(gt.geometry[1].y));
  }
  RasterResult res;
  for (const PixelCoord& p : pix)
    if (in_bounds(p.x, p.y, width, height)) res.pixels.push_back(p);
  res.out_of_bounds = res.pixels.empty();
  std::sort(res.pixels.begin(), res.pixels.end(),
            [](const PixelCoord& a, const PixelCoord& b) {
              return a.y != b.y ? a.y < b.y : a.x < b.x;
            });
  return res;
}

Heatmap synth_single(const ConsensusSymmetry& gt, int width, int height,
                     const SynthConfig& cfg) {
  if (cfg.sigma <= 0.0)
    throw std::invalid_argument("synth: sigma must be positive");
  RasterResult raster = rasterize(gt, width, height);
  if (raster.pixels.empty())
    throw std::runtime_error("synth: GT rasterizes to no pixels inside " +
                             std::to_string(width) + "x" + std::to_string(height));
  Heatmap hm(width, height);
  double inv = 1.0 / (2.0 * cfg.sigma * cfg.sigma);
  double peak = 0.0;
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      double acc = 0.0;
      for (const PixelCoord& p : raster.pixels) {
        double ddx = p.x - x, ddy = p.y - y;
        acc += std::exp(-(ddx * ddx + ddy * ddy) * inv);
      }
      hm.at(x, y) = acc;
      if (acc > peak) peak = acc;
    }
  for (double& v : hm.values) v /= peak;
  return hm;
}

Heatmap fuse(const std::vector<Heatmap>& maps) {
  if (maps.empty()) throw std::invalid_argument("fuse: needs at least one map");
  for (std::size_t i = 1; i < maps.size(); ++i)
    if (maps[i].width != maps[0].width || maps[i].height != maps[0].height)
      throw std::invalid_argument("fuse: map " + std::to_string(i) +
                                  " dims differ from map 0");
  Heatmap out = maps[0];
  for (std::size_t i = 1; i < maps.size(); ++i)
    for (std::size_t e = 0; e < out.values.size(); ++e)
      out.values[e] = std::max(out.values[e], maps[i].values[e]);
  return out;
}

std::pair<Heatmap, Heatmap> synth_gt(const std::vector<ConsensusSymmetry>& gts,
                                     int width, int height,
                                     const SynthConfig& cfg) {
  std::pair<Heatmap, Heatmap> out{Heatmap(width, height), Heatmap(width, height)};
  for (SymmetryKind kind : {SymmetryKind::reflection, SymmetryKind::rotation}) {
    std::vector<Heatmap> maps;
    for (const ConsensusSymmetry& gt : gts) {
      if (gt.kind != kind) continue;
      if (rasterize(gt, width, height).pixels.empty()) continue;
      maps.push_back(synth_single(gt, width, height, cfg));
    }
    if (!maps.empty())
      (kind == SymmetryKind::reflection ? out.first : out.second) = fuse(maps);
  }
  return out;
}

namespace {

int read_pgm_token(std::istream& is) {
  int ch = is.get();
  while (ch != EOF) {
    if (ch == '#') {
      while (ch != EOF && ch != '\n') ch = is.get();
    } else if (std::isspace(ch)) {
      ch = is.get();
    } else {
      break;
    }
  }
  if (ch == EOF || !std::isdigit(ch))
    throw std::runtime_error("heatmap: malformed PGM header");
  int v = 0;
  while (ch != EOF && std::isdigit(ch)) {
    v = v * 10 + (ch - '0');
    if (v > 1 << 26) throw std::runtime_error("heatmap: absurd PGM header value");
    ch = is.get();
  }
  return v;
}

}  // namespace

void write_heatmap_pgm(std::ostream& os, const Heatmap& hm) {
  os << "P5\n" << hm.width << " " << hm.height << "\n65535\n";
  for (double v : hm.values) {
    if (!(v >= 0.0 && v <= 1.0))
      throw std::runtime_error("heatmap: value outside [0, 1], cannot encode");
    unsigned code = static_cast<unsigned>(std::lround(65535.0 * v));
    unsigned char b[2] = {static_cast<unsigned char>(code >> 8),
                          static_cast<unsigned char>(code & 0xff)};
    os.write(reinterpret_cast<const char*>(b), 2);
  }
  if (!os) throw std::runtime_error("heatmap: write failed");
}

Heatmap read_heatmap_pgm(std::istream& is) {
  char m0 = 0, m1 = 0;
  is.get(m0);
  is.get(m1);
  if (!is || m0 != 'P' || m1 != '5')
    throw std::runtime_error("heatmap: not a binary PGM (P5) stream");
  int w = read_pgm_token(is);
  int h = read_pgm_token(is);
  int maxval = read_pgm_token(is);
  if (maxval < 1 || maxval > 65535)
    throw std::runtime_error("heatmap: bad maxval " + std::to_string(maxval));
  Heatmap hm(w, h);
  int bytes = maxval > 255 ? 2 : 1;
  std::vector<unsigned char> buf(static_cast<std::size_t>(w) * h * bytes);
  is.read(reinterpret_cast<char*>(buf.data()),
          static_cast<std::streamsize>(buf.size()));
  if (is.gcount() != static_cast<std::streamsize>(buf.size()))
    throw std::runtime_error("heatmap: truncated pixel payload");
  for (std::size_t i = 0; i < hm.values.size(); ++i) {
    unsigned code = bytes == 2
                        ? (static_cast<unsigned>(buf[2 * i]) << 8) | buf[2 * i + 1]
                        : buf[i];
    hm.values[i] = static_cast<double>(code) / maxval;
  }
  return hm;
}

void save_heatmap(const std::string& path, const Heatmap& hm) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("heatmap: cannot open " + path + " for write");
  write_heatmap_pgm(os, hm);
}

Heatmap load_heatmap(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("heatmap: cannot open " + path);
  return read_heatmap_pgm(is);
}

void save_heatmap_snapshot(const std::string& path, const Heatmap& hm) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("heatmap: cannot open " + path + " for write");
  write_snapshot(os,
                 {static_cast<std::uint32_t>(hm.height),
                  static_cast<std::uint32_t>(hm.width)},
                 hm.values.data(), hm.values.size());
}

Heatmap load_heatmap_snapshot(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("heatmap: cannot open " + path);
  Snapshot s = read_snapshot(is);
  if (s.dims.size() != 2)
    throw std::runtime_error("heatmap: snapshot rank is not 2");
  Heatmap hm(static_cast<int>(s.dims[1]), static_cast<int>(s.dims[0]));
  hm.values = s.data;
  return hm;
}

Tensor tensor_from_heatmap(const Heatmap& hm) {
  Tensor t(1, 1, hm.height, hm.width);
  t.data = hm.values;
  return t;
}

Heatmap heatmap_from_tensor(const Tensor& t) {
  if (t.n() != 1 || t.c() != 1)
    throw std::invalid_argument("heatmap: tensor must be (1, 1, h, w)");
  Heatmap hm(t.w(), t.h());
  hm.values = t.data;
  return hm;
}

}  // namespace symkit
