#include "symkit/tensor.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace symkit {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

std::string dims_str(const Tensor& t) {
  std::ostringstream os;
  os << "(" << t.n() << ", " << t.c() << ", " << t.h() << ", " << t.w() << ")";
  return os.str();
}

}  // namespace

Tensor::Tensor(int n, int c, int h, int w, double fill) {
  if (n < 1 || c < 1 || h < 1 || w < 1)
    throw std::invalid_argument("tensor: all dims must be >= 1, got (" +
                                std::to_string(n) + ", " + std::to_string(c) +
                                ", " + std::to_string(h) + ", " +
                                std::to_string(w) + ")");
  dims = {n, c, h, w};
  data.assign(static_cast<std::size_t>(n) * c * h * w, fill);
}

bool Tensor::all_finite() const {
  for (double v : data)
    if (!std::isfinite(v)) return false;
  return true;
}

Tensor zeros_like(const Tensor& t) {
  return Tensor(t.n(), t.c(), t.h(), t.w(), 0.0);
}

void validate_finite(const Tensor& t, const std::string& what) {
  if (!t.all_finite())
    throw std::runtime_error(what + ": non-finite value in tensor");
}

double quantize_f32(double v) { return static_cast<double>(static_cast<float>(v)); }

void quantize_f32(Tensor& t) {
  for (double& v : t.data) v = quantize_f32(v);
}

void ConvSpec::validate() const {
  require(in_channels >= 1, "conv spec: in_channels must be >= 1");
  require(out_channels >= 1, "conv spec: out_channels must be >= 1");
  require(kernel_h >= 1 && kernel_w >= 1, "conv spec: kernel dims must be >= 1");
  require(stride >= 1, "conv spec: stride must be >= 1");
  require(dilation >= 1, "conv spec: dilation must be >= 1");
  require(padding >= 0, "conv spec: padding must be >= 0");
}

int ConvSpec::out_h(int in_h) const {
  return (in_h + 2 * padding - dilation * (kernel_h - 1) - 1) / stride + 1;
}

int ConvSpec::out_w(int in_w) const {
  return (in_w + 2 * padding - dilation * (kernel_w - 1) - 1) / stride + 1;
}

Tensor conv2d(const Tensor& input, const Tensor& weight,
              const std::vector<double>& bias, const ConvSpec& spec) {
  spec.validate();
  require(input.c() == spec.in_channels,
          "conv2d: input channel axis is " + std::to_string(input.c()) +
              ", spec expects " + std::to_string(spec.in_channels));
  require(weight.n() == spec.out_channels,
          "conv2d: weight output-channel axis is " + std::to_string(weight.n()) +
              ", spec expects " + std::to_string(spec.out_channels));
  require(weight.c() == spec.in_channels,
          "conv2d: weight input-channel axis is " + std::to_string(weight.c()) +
              ", spec expects " + std::to_string(spec.in_channels));
  require(weight.h() == spec.kernel_h,
          "conv2d: weight kernel-height axis is " + std::to_string(weight.h()) +
              ", spec expects " + std::to_string(spec.kernel_h));
  require(weight.w() == spec.kernel_w,
          "conv2d: weight kernel-width axis is " + std::to_string(weight.w()) +
              ", spec expects " + std::to_string(spec.kernel_w));
  require(bias.size() == static_cast<std::size_t>(spec.out_channels),
          "conv2d: bias length is " + std::to_string(bias.size()) +
              ", spec expects " + std::to_string(spec.out_channels));

  int oh = spec.out_h(input.h());
  int ow = spec.out_w(input.w());
  if (oh < 1 || ow < 1)
    throw std::invalid_argument(
        "conv2d: dilated kernel footprint exceeds padded input " +
        dims_str(input) + ", output would be " + std::to_string(oh) + "x" +
        std::to_string(ow));

  Tensor out(input.n(), spec.out_channels, oh, ow);
  for (int n = 0; n < input.n(); ++n)
    for (int oc = 0; oc < spec.out_channels; ++oc)
      for (int oy = 0; oy < oh; ++oy)
        for (int ox = 0; ox < ow; ++ox) {
          double acc = bias[oc];
          for (int ic = 0; ic < spec.in_channels; ++ic)
            for (int ky = 0; ky < spec.kernel_h; ++ky) {
              int iy = oy * spec.stride - spec.padding + ky * spec.dilation;
              if (iy < 0 || iy >= input.h()) continue;
              for (int kx = 0; kx < spec.kernel_w; ++kx) {
                int ix = ox * spec.stride - spec.padding + kx * spec.dilation;
                if (ix < 0 || ix >= input.w()) continue;
                acc += weight.at(oc, ic, ky, kx) * input.at(n, ic, iy, ix);
              }
            }
          out.at(n, oc, oy, ox) = acc;
        }
  return out;
}

ConvGrads conv2d_backward(const Tensor& input, const Tensor& weight,
                          const ConvSpec& spec, const Tensor& grad_out) {
  spec.validate();
  int oh = spec.out_h(input.h());
  int ow = spec.out_w(input.w());
  require(grad_out.n() == input.n() && grad_out.c() == spec.out_channels &&
              grad_out.h() == oh && grad_out.w() == ow,
          "conv2d backward: grad shape " + dims_str(grad_out) +
              " does not match output geometry");

  ConvGrads g;
  g.input = zeros_like(input);
  g.weight = zeros_like(weight);
  g.bias.assign(spec.out_channels, 0.0);
  for (int n = 0; n < input.n(); ++n)
    for (int oc = 0; oc < spec.out_channels; ++oc)
      for (int oy = 0; oy < oh; ++oy)
        for (int ox = 0; ox < ow; ++ox) {
          double go = grad_out.at(n, oc, oy, ox);
          if (go == 0.0) continue;
          g.bias[oc] += go;
          for (int ic = 0; ic < spec.in_channels; ++ic)
            for (int ky = 0; ky < spec.kernel_h; ++ky) {
              int iy = oy * spec.stride - spec.padding + ky * spec.dilation;
              if (iy < 0 || iy >= input.h()) continue;
              for (int kx = 0; kx < spec.kernel_w; ++kx) {
                int ix = ox * spec.stride - spec.padding + kx * spec.dilation;
                if (ix < 0 || ix >= input.w()) continue;
                g.weight.at(oc, ic, ky, kx) += go * input.at(n, ic, iy, ix);
                g.input.at(n, ic, iy, ix) += go * weight.at(oc, ic, ky, kx);
              }
            }
        }
  return g;
}

Tensor relu(const Tensor& input) {
  Tensor out = input;
  for (double& v : out.data) v = v > 0.0 ? v : 0.0;
  return out;
}

Tensor relu_backward(const Tensor& input, const Tensor& grad_out) {
  require(input.same_shape(grad_out),
          "relu backward: grad shape does not match input");
  Tensor g = grad_out;
  for (std::size_t i = 0; i < g.data.size(); ++i)
    if (input.data[i] <= 0.0) g.data[i] = 0.0;
  return g;
}

namespace {

// Align-corners source position for output index o.
inline double src_pos(int o, int out_dim, int in_dim) {
  if (out_dim <= 1) return 0.0;
  return static_cast<double>(o) * (in_dim - 1) / (out_dim - 1);
}

}  // namespace

Tensor bilinear_resize(const Tensor& input, int out_h, int out_w) {
  require(out_h >= 1 && out_w >= 1, "bilinear_resize: output dims must be >= 1");
  if (out_h == input.h() && out_w == input.w()) return input;
  Tensor out(input.n(), input.c(), out_h, out_w);
  for (int n = 0; n < input.n(); ++n)
    for (int c = 0; c < input.c(); ++c)
      for (int oy = 0; oy < out_h; ++oy) {
        double sy = src_pos(oy, out_h, input.h());
        int y0 = static_cast<int>(sy);
        if (y0 > input.h() - 2) y0 = input.h() - 2;
        if (y0 < 0) y0 = 0;
        double fy = sy - y0;
        int y1 = input.h() == 1 ? 0 : y0 + 1;
        for (int ox = 0; ox < out_w; ++ox) {
          double sx = src_pos(ox, out_w, input.w());
          int x0 = static_cast<int>(sx);
          if (x0 > input.w() - 2) x0 = input.w() - 2;
          if (x0 < 0) x0 = 0;
          double fx = sx - x0;
          int x1 = input.w() == 1 ? 0 : x0 + 1;
          double v = (1.0 - fy) * ((1.0 - fx) * input.at(n, c, y0, x0) +
                                   fx * input.at(n, c, y0, x1)) +
                     fy * ((1.0 - fx) * input.at(n, c, y1, x0) +
                           fx * input.at(n, c, y1, x1));
          out.at(n, c, oy, ox) = v;
        }
      }
  return out;
}

Tensor bilinear_resize_backward(const Tensor& grad_out, int in_h, int in_w) {
  require(in_h >= 1 && in_w >= 1, "bilinear_resize backward: input dims must be >= 1");
  if (grad_out.h() == in_h && grad_out.w() == in_w) return grad_out;
  Tensor g(grad_out.n(), grad_out.c(), in_h, in_w);
  for (int n = 0; n < grad_out.n(); ++n)
    for (int c = 0; c < grad_out.c(); ++c)
      for (int oy = 0; oy < grad_out.h(); ++oy) {
        double sy = src_pos(oy, grad_out.h(), in_h);
        int y0 = static_cast<int>(sy);
        if (y0 > in_h - 2) y0 = in_h - 2;
        if (y0 < 0) y0 = 0;
        double fy = sy - y0;
        int y1 = in_h == 1 ? 0 : y0 + 1;
        for (int ox = 0; ox < grad_out.w(); ++ox) {
          double sx = src_pos(ox, grad_out.w(), in_w);
          int x0 = static_cast<int>(sx);
          if (x0 > in_w - 2) x0 = in_w - 2;
          if (x0 < 0) x0 = 0;
          double fx = sx - x0;
          int x1 = in_w == 1 ? 0 : x0 + 1;
          double go = grad_out.at(n, c, oy, ox);
          g.at(n, c, y0, x0) += (1.0 - fy) * (1.0 - fx) * go;
          g.at(n, c, y0, x1) += (1.0 - fy) * fx * go;
          g.at(n, c, y1, x0) += fy * (1.0 - fx) * go;
          g.at(n, c, y1, x1) += fy * fx * go;
        }
      }
  return g;
}

Tensor bilinear_upsample(const Tensor& input, int factor) {
  require(factor >= 1, "bilinear_upsample: factor must be >= 1, got " +
                           std::to_string(factor));
  return bilinear_resize(input, input.h() * factor, input.w() * factor);
}

Tensor bilinear_upsample_backward(const Tensor& grad_out, int factor) {
  require(factor >= 1, "bilinear_upsample backward: factor must be >= 1");
  require(grad_out.h() % factor == 0 && grad_out.w() % factor == 0,
          "bilinear_upsample backward: grad dims not divisible by factor");
  return bilinear_resize_backward(grad_out, grad_out.h() / factor,
                                  grad_out.w() / factor);
}

Tensor max_fuse(const std::vector<Tensor>& inputs) {
  require(!inputs.empty(), "max_fuse: needs at least one input");
  for (std::size_t i = 1; i < inputs.size(); ++i)
    require(inputs[i].same_shape(inputs[0]),
            "max_fuse: input " + std::to_string(i) + " shape " +
                dims_str(inputs[i]) + " differs from input 0 " +
                dims_str(inputs[0]));
  Tensor out = inputs[0];
  for (std::size_t i = 1; i < inputs.size(); ++i)
    for (std::size_t e = 0; e < out.data.size(); ++e)
      if (inputs[i].data[e] > out.data[e]) out.data[e] = inputs[i].data[e];
  return out;
}

std::vector<Tensor> max_fuse_backward(const std::vector<Tensor>& inputs,
                                      const Tensor& grad_out) {
  require(!inputs.empty(), "max_fuse backward: needs at least one input");
  require(grad_out.same_shape(inputs[0]),
          "max_fuse backward: grad shape does not match inputs");
  std::vector<Tensor> grads;
  grads.reserve(inputs.size());
  for (const Tensor& t : inputs) grads.push_back(zeros_like(t));
  for (std::size_t e = 0; e < grad_out.data.size(); ++e) {
    std::size_t arg = 0;
    double best = inputs[0].data[e];
    for (std::size_t i = 1; i < inputs.size(); ++i)
      if (inputs[i].data[e] > best) {
        best = inputs[i].data[e];
        arg = i;
      }
    grads[arg].data[e] = grad_out.data[e];
  }
  return grads;
}

double l2_loss(const Tensor& pred, const Tensor& target) {
  require(pred.same_shape(target), "l2_loss: pred shape " + dims_str(pred) +
                                       " does not match target " +
                                       dims_str(target));
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.data.size(); ++i) {
    double d = pred.data[i] - target.data[i];
    acc += d * d;
  }
  return acc / (2.0 * static_cast<double>(pred.data.size()));
}

Tensor l2_loss_backward(const Tensor& pred, const Tensor& target,
                        double upstream) {
  require(pred.same_shape(target),
          "l2_loss backward: pred shape does not match target");
  Tensor g = zeros_like(pred);
  double scale = upstream / static_cast<double>(pred.data.size());
  for (std::size_t i = 0; i < pred.data.size(); ++i)
    g.data[i] = scale * (pred.data[i] - target.data[i]);
  return g;
}

GradCheckResult grad_check(const OpClosure& op, const std::vector<Tensor>& inputs,
                           double epsilon, double tolerance) {
  require(!inputs.empty(), "grad_check: needs at least one input");
  require(epsilon > 0.0, "grad_check: epsilon must be positive");

  std::vector<Tensor> analytic;
  op(inputs, &analytic);
  require(analytic.size() == inputs.size(),
          "grad_check: closure filled " + std::to_string(analytic.size()) +
              " gradients for " + std::to_string(inputs.size()) + " inputs");
  for (std::size_t i = 0; i < inputs.size(); ++i)
    require(analytic[i].same_shape(inputs[i]),
            "grad_check: gradient " + std::to_string(i) +
                " shape does not match its input");

  GradCheckResult res;
  res.passed = true;
  std::vector<Tensor> probe = inputs;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    for (std::size_t e = 0; e < inputs[i].data.size(); ++e) {
      double keep = probe[i].data[e];
      probe[i].data[e] = keep + epsilon;
      double up = op(probe, nullptr);
      probe[i].data[e] = keep - epsilon;
      double down = op(probe, nullptr);
      probe[i].data[e] = keep;
      double numeric = (up - down) / (2.0 * epsilon);
      double a = analytic[i].data[e];
      double denom = std::max({std::fabs(a), std::fabs(numeric), 1e-6});
      double rel = std::fabs(a - numeric) / denom;
      if (rel > res.max_rel_error) {
        res.max_rel_error = rel;
        res.worst_input = static_cast<int>(i);
        res.worst_index = e;
        res.worst_analytic = a;
        res.worst_numeric = numeric;
      }
    }
  }
  res.passed = res.max_rel_error < tolerance;
  return res;
}

namespace {

void write_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32(std::istream& is) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4))
    throw std::runtime_error("snapshot: truncated header");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) |
         (static_cast<std::uint32_t>(b[3]) << 24);
}

void write_f32(std::ostream& os, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  write_u32(os, bits);
}

float read_f32(std::istream& is) {
  std::uint32_t bits = read_u32(is);
  float v;
  std::memcpy(&v, &bits, 4);
  return v;
}

}  // namespace

void write_snapshot(std::ostream& os, const std::vector<std::uint32_t>& dims,
                    const double* data, std::size_t count) {
  std::size_t expect = 1;
  for (std::uint32_t d : dims) expect *= d;
  if (dims.empty() || expect != count)
    throw std::invalid_argument("snapshot: dims do not match element count");
  os.write("SYMT", 4);
  write_u32(os, static_cast<std::uint32_t>(dims.size()));
  for (std::uint32_t d : dims) write_u32(os, d);
  for (std::size_t i = 0; i < count; ++i)
    write_f32(os, static_cast<float>(data[i]));
  if (!os) throw std::runtime_error("snapshot: write failed");
}

void write_snapshot(std::ostream& os, const Tensor& t) {
  std::vector<std::uint32_t> dims = {
      static_cast<std::uint32_t>(t.n()), static_cast<std::uint32_t>(t.c()),
      static_cast<std::uint32_t>(t.h()), static_cast<std::uint32_t>(t.w())};
  write_snapshot(os, dims, t.data.data(), t.data.size());
}

Snapshot read_snapshot(std::istream& is) {
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, "SYMT", 4) != 0)
    throw std::runtime_error("snapshot: bad magic, not a tensor snapshot");
  std::uint32_t rank = read_u32(is);
  if (rank < 1 || rank > 8)
    throw std::runtime_error("snapshot: unreasonable rank " + std::to_string(rank));
  Snapshot s;
  std::uint64_t count = 1;
  for (std::uint32_t i = 0; i < rank; ++i) {
    std::uint32_t d = read_u32(is);
    if (d < 1) throw std::runtime_error("snapshot: zero dimension");
    count *= d;
    if (count > (1ull << 32)) throw std::runtime_error("snapshot: payload too large");
    s.dims.push_back(d);
  }
  s.data.resize(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    s.data[i] = static_cast<double>(read_f32(is));
    if (!is) throw std::runtime_error("snapshot: truncated payload");
  }
  return s;
}

Tensor snapshot_to_tensor(const Snapshot& s) {
  if (s.dims.size() != 4)
    throw std::runtime_error("snapshot: expected rank 4, got rank " +
                             std::to_string(s.dims.size()));
  Tensor t(static_cast<int>(s.dims[0]), static_cast<int>(s.dims[1]),
           static_cast<int>(s.dims[2]), static_cast<int>(s.dims[3]));
  t.data = s.data;
  return t;
}

void save_tensor(const std::string& path, const Tensor& t) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("snapshot: cannot open " + path + " for write");
  write_snapshot(os, t);
}

Tensor load_tensor(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("snapshot: cannot open " + path);
  return snapshot_to_tensor(read_snapshot(is));
}

}  // namespace symkit
