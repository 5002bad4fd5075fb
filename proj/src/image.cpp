#include "symkit/image.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace symkit {

ImageU8::ImageU8(int w, int h, int c, std::uint8_t fill) {
  if (w < 1 || h < 1 || (c != 1 && c != 3))
    throw std::invalid_argument("image: bad dims " + std::to_string(w) + "x" +
                                std::to_string(h) + "x" + std::to_string(c));
  width = w;
  height = h;
  channels = c;
  data.assign(static_cast<std::size_t>(w) * h * c, fill);
}

namespace {

// PNM token reader: skips whitespace and # comments.
int read_pnm_int(std::istream& is) {
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
    throw std::runtime_error("image: malformed PNM header");
  int v = 0;
  while (ch != EOF && std::isdigit(ch)) {
    v = v * 10 + (ch - '0');
    if (v > 1 << 26) throw std::runtime_error("image: absurd PNM header value");
    ch = is.get();
  }
  return v;
}

}  // namespace

ImageU8 read_image(std::istream& is) {
  char m0 = 0, m1 = 0;
  is.get(m0);
  is.get(m1);
  if (!is || m0 != 'P' || (m1 != '5' && m1 != '6'))
    throw std::runtime_error("image: not a binary PGM/PPM (P5/P6) stream");
  int channels = m1 == '5' ? 1 : 3;
  int w = read_pnm_int(is);
  int h = read_pnm_int(is);
  int maxval = read_pnm_int(is);
  if (maxval != 255)
    throw std::runtime_error("image: expected 8-bit maxval 255, got " +
                             std::to_string(maxval));
  // the token reader consumed the single whitespace byte after maxval,
  // so the payload starts here
  ImageU8 img(w, h, channels);
  is.read(reinterpret_cast<char*>(img.data.data()),
          static_cast<std::streamsize>(img.data.size()));
  if (is.gcount() != static_cast<std::streamsize>(img.data.size()))
    throw std::runtime_error("image: truncated pixel payload");
  return img;
}

ImageU8 load_image(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("image: cannot open " + path);
  return read_image(is);
}

void write_image(std::ostream& os, const ImageU8& img) {
  os << (img.channels == 1 ? "P5" : "P6") << "\n"
     << img.width << " " << img.height << "\n255\n";
  os.write(reinterpret_cast<const char*>(img.data.data()),
           static_cast<std::streamsize>(img.data.size()));
  if (!os) throw std::runtime_error("image: write failed");
}

void save_image(const std::string& path, const ImageU8& img) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("image: cannot open " + path + " for write");
  write_image(os, img);
}

std::vector<double> luma(const ImageU8& img) {
  std::vector<double> out(static_cast<std::size_t>(img.width) * img.height);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      double v;
      if (img.channels == 1) {
        v = img.at(x, y);
      } else {
        v = 0.299 * img.at(x, y, 0) + 0.587 * img.at(x, y, 1) +
            0.114 * img.at(x, y, 2);
      }
      out[static_cast<std::size_t>(y) * img.width + x] = v / 255.0;
    }
  return out;
}

namespace {

inline double src_pos(int o, int out_dim, int in_dim) {
  if (out_dim <= 1) return 0.0;
  return static_cast<double>(o) * (in_dim - 1) / (out_dim - 1);
}

inline std::uint8_t round_u8(double v) {
  double r = std::floor(v + 0.5);
  if (r < 0.0) r = 0.0;
  if (r > 255.0) r = 255.0;
  return static_cast<std::uint8_t>(r);
}

}  // namespace

ImageU8 resize_bilinear(const ImageU8& img, int out_w, int out_h) {
  if (out_w < 1 || out_h < 1)
    throw std::invalid_argument("image resize: output dims must be >= 1");
  if (out_w == img.width && out_h == img.height) return img;
  ImageU8 out(out_w, out_h, img.channels);
  for (int oy = 0; oy < out_h; ++oy) {
    double sy = src_pos(oy, out_h, img.height);
    int y0 = static_cast<int>(sy);
    if (y0 > img.height - 2) y0 = img.height - 2;
    if (y0 < 0) y0 = 0;
    double fy = sy - y0;
    int y1 = img.height == 1 ? 0 : y0 + 1;
    for (int ox = 0; ox < out_w; ++ox) {
      double sx = src_pos(ox, out_w, img.width);
      int x0 = static_cast<int>(sx);
      if (x0 > img.width - 2) x0 = img.width - 2;
      if (x0 < 0) x0 = 0;
      double fx = sx - x0;
      int x1 = img.width == 1 ? 0 : x0 + 1;
      for (int c = 0; c < img.channels; ++c) {
        double v = (1.0 - fy) * ((1.0 - fx) * img.at(x0, y0, c) +
                                 fx * img.at(x1, y0, c)) +
                   fy * ((1.0 - fx) * img.at(x0, y1, c) + fx * img.at(x1, y1, c));
        out.at(ox, oy, c) = round_u8(v);
      }
    }
  }
  return out;
}

ImageU8 rot90(const ImageU8& img) {
  ImageU8 out(img.height, img.width, img.channels);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < img.channels; ++c)
        out.at(img.height - 1 - y, x, c) = img.at(x, y, c);
  return out;
}

ImageU8 rot180(const ImageU8& img) {
  ImageU8 out(img.width, img.height, img.channels);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < img.channels; ++c)
        out.at(img.width - 1 - x, img.height - 1 - y, c) = img.at(x, y, c);
  return out;
}

ImageU8 rot270(const ImageU8& img) { return rot180(rot90(img)); }

ImageU8 hflip(const ImageU8& img) {
  ImageU8 out(img.width, img.height, img.channels);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < img.channels; ++c)
        out.at(img.width - 1 - x, y, c) = img.at(x, y, c);
  return out;
}

ImageU8 crop(const ImageU8& img, int x0, int y0, int w, int h) {
  if (w < 1 || h < 1 || x0 < 0 || y0 < 0 || x0 + w > img.width ||
      y0 + h > img.height)
    throw std::invalid_argument("image crop: window " + std::to_string(x0) + "," +
                                std::to_string(y0) + " " + std::to_string(w) +
                                "x" + std::to_string(h) +
                                " outside image bounds");
  ImageU8 out(w, h, img.channels);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < img.channels; ++c)
        out.at(x, y, c) = img.at(x0 + x, y0 + y, c);
  return out;
}

}  // namespace symkit
