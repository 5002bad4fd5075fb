#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace symkit {

// Dense NCHW tensor of doubles. Shape is fixed at construction; ops return
// new tensors rather than mutating inputs.
struct Tensor {
  std::array<int, 4> dims{0, 0, 0, 0};
  std::vector<double> data;

  Tensor() = default;
  Tensor(int n, int c, int h, int w, double fill = 0.0);

  int n() const { return dims[0]; }
  int c() const { return dims[1]; }
  int h() const { return dims[2]; }
  int w() const { return dims[3]; }
  std::size_t size() const { return data.size(); }

  std::size_t idx(int n, int c, int y, int x) const {
    return ((static_cast<std::size_t>(n) * dims[1] + c) * dims[2] + y) * dims[3] + x;
  }
  double& at(int n, int c, int y, int x) { return data[idx(n, c, y, x)]; }
  double at(int n, int c, int y, int x) const { return data[idx(n, c, y, x)]; }

  bool same_shape(const Tensor& o) const { return dims == o.dims; }
  bool all_finite() const;
};

Tensor zeros_like(const Tensor& t);

// Throws std::runtime_error naming `what` if any value is NaN or infinite.
void validate_finite(const Tensor& t, const std::string& what);

// Snap every value to the nearest float32, staying in double storage.
double quantize_f32(double v);
void quantize_f32(Tensor& t);

struct ConvSpec {
  int in_channels = 1;
  int out_channels = 1;
  int kernel_h = 3;
  int kernel_w = 3;
  int stride = 1;
  int padding = 0;
  int dilation = 1;

  void validate() const;
  int out_h(int in_h) const;
  int out_w(int in_w) const;
};

// input (N, Cin, H, W), weight (Cout, Cin, Kh, Kw), bias length Cout.
// Zero padding, isotropic stride and dilation.
Tensor conv2d(const Tensor& input, const Tensor& weight,
              const std::vector<double>& bias, const ConvSpec& spec);

struct ConvGrads {
  Tensor input;
  Tensor weight;
  std::vector<double> bias;
};
ConvGrads conv2d_backward(const Tensor& input, const Tensor& weight,
                          const ConvSpec& spec, const Tensor& grad_out);

Tensor relu(const Tensor& input);
Tensor relu_backward(const Tensor& input, const Tensor& grad_out);

// Align-corners bilinear. out dim 1 samples src position 0.
Tensor bilinear_resize(const Tensor& input, int out_h, int out_w);
Tensor bilinear_resize_backward(const Tensor& grad_out, int in_h, int in_w);
Tensor bilinear_upsample(const Tensor& input, int factor);
Tensor bilinear_upsample_backward(const Tensor& grad_out, int factor);

// Elementwise max across equal-shaped tensors; gradient of a tied maximum
// goes to the lowest input index.
Tensor max_fuse(const std::vector<Tensor>& inputs);
std::vector<Tensor> max_fuse_backward(const std::vector<Tensor>& inputs,
                                      const Tensor& grad_out);

// (1 / 2N) * sum((pred - target)^2)
double l2_loss(const Tensor& pred, const Tensor& target);
Tensor l2_loss_backward(const Tensor& pred, const Tensor& target,
                        double upstream = 1.0);

// Closure contract for grad_check: return the scalar value at `inputs`;
// when `grads` is non-null, fill one gradient tensor per input.
using OpClosure =
    std::function<double(const std::vector<Tensor>&, std::vector<Tensor>*)>;

struct GradCheckResult {
  bool passed = false;
  double max_rel_error = 0.0;
  int worst_input = -1;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

// Central differences against the closure's analytic gradients.
// rel error = |a - n| / max(|a|, |n|, 1e-6).
GradCheckResult grad_check(const OpClosure& op, const std::vector<Tensor>& inputs,
                           double epsilon = 1e-5, double tolerance = 1e-4);

// Binary tensor snapshot: magic "SYMT", u32 rank, u32 dims, float32 payload
// in row-major order, all little-endian. Values are narrowed to f32 on
// write and widened back on read.
struct Snapshot {
  std::vector<std::uint32_t> dims;
  std::vector<double> data;
};

void write_snapshot(std::ostream& os, const std::vector<std::uint32_t>& dims,
                    const double* data, std::size_t count);
void write_snapshot(std::ostream& os, const Tensor& t);
Snapshot read_snapshot(std::istream& is);
Tensor snapshot_to_tensor(const Snapshot& s);

void save_tensor(const std::string& path, const Tensor& t);
Tensor load_tensor(const std::string& path);

}  // namespace symkit
