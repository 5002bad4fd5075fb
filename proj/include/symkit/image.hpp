#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace symkit {

// 8-bit raster, 1 (gray) or 3 (rgb) interleaved channels, row-major.
struct ImageU8 {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<std::uint8_t> data;

  ImageU8() = default;
  ImageU8(int w, int h, int c, std::uint8_t fill = 0);

  std::uint8_t& at(int x, int y, int c = 0) {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  std::uint8_t at(int x, int y, int c = 0) const {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
};

// Binary PGM (P5) / PPM (P6), 8-bit. load_image dispatches on the magic.
ImageU8 load_image(const std::string& path);
ImageU8 read_image(std::istream& is);
void save_image(const std::string& path, const ImageU8& img);
void write_image(std::ostream& os, const ImageU8& img);

// Rec601 luma for rgb, identity for gray; values in [0, 1].
std::vector<double> luma(const ImageU8& img);

ImageU8 resize_bilinear(const ImageU8& img, int out_w, int out_h);
ImageU8 rot90(const ImageU8& img);   // (x, y) -> (H-1-y, x); twice gives 180
ImageU8 rot180(const ImageU8& img);
ImageU8 rot270(const ImageU8& img);
ImageU8 hflip(const ImageU8& img);
ImageU8 crop(const ImageU8& img, int x0, int y0, int w, int h);

}  // namespace symkit
