#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "symkit/heatmap.hpp"
#include "symkit/image.hpp"
#include "symkit/kvconfig.hpp"
#include "symkit/tensor.hpp"

namespace symkit {

// Trunk: strided 3x3-ish conv stages with relu, spatial downsampling exactly
// 8x, dilation applied at the final stage. Pyramid: parallel dilated convs
// from trunk channels to 1, fused by sum or max. Streams: the whole net run
// on bilinearly scaled copies of the input, outputs max-fused at full
// resolution after the 8x upsample.
struct NetConfig {
  int in_channels = 1;
  std::vector<int> channels = {8, 16, 32, 32, 32};
  std::vector<int> strides = {2, 2, 2, 1, 1};
  int kernel = 3;
  int trunk_dilation = 2;
  std::vector<int> pyramid_rates = {2, 4, 8};
  bool pyramid_max = false;  // false: sum fusion
  std::vector<double> streams = {1.0};
  std::uint64_t seed = 1;

  void validate() const;
  KvMap to_kv() const;
  static NetConfig from_kv(const KvMap& kv);

  // Two-stage trunk, 4 channels, one pyramid branch. Small enough for
  // exhaustive finite-difference checks.
  static NetConfig tiny();
};

struct ConvLayer {
  ConvSpec spec;
  Tensor weight;
  std::vector<double> bias;
};

struct NetParams {
  NetConfig config;
  std::vector<ConvLayer> trunk;
  std::vector<ConvLayer> pyramid;
};

// He-normal weights from a generator seeded by config.seed, zero biases,
// snapped to the float32 grid (checkpoint payloads are float32).
NetParams init_net(const NetConfig& config);

struct StreamTrace {
  Tensor input;                   // scaled copy fed to the trunk
  std::vector<Tensor> pre;        // trunk conv outputs (pre-relu)
  std::vector<Tensor> post;       // after relu
  std::vector<Tensor> branches;   // pyramid branch outputs
  Tensor fused;                   // pyramid fusion result
  Tensor upsampled;               // after the 8x bilinear upsample
  Tensor resized;                 // at padded resolution
};

struct ForwardTrace {
  int orig_h = 0, orig_w = 0;
  int pad_h = 0, pad_w = 0;
  Tensor padded;
  std::vector<StreamTrace> streams;
  Tensor fused_streams;
  Tensor output;  // cropped to orig dims
};

// input is (1, C, H, W), already normalized. Edges must be in [8, 513];
// the input is reflect-padded up to the next multiple of 8 and the output
// cropped back, so output dims always equal input dims.
Tensor net_forward(const NetParams& params, const Tensor& input,
                   ForwardTrace* trace = nullptr);

struct NetGrads {
  std::vector<Tensor> trunk_w;
  std::vector<std::vector<double>> trunk_b;
  std::vector<Tensor> pyramid_w;
  std::vector<std::vector<double>> pyramid_b;
};

NetGrads zero_grads(const NetParams& params);

// Accumulates parameter gradients for one forward trace into acc.
void net_backward(const NetParams& params, const ForwardTrace& trace,
                  const Tensor& grad_output, NetGrads& acc);

// value/255 - 0.5 per channel; channel count adapted to what the net wants
// (luma for 1, replicate for 3).
Tensor net_input(const ImageU8& img, int in_channels);

// Forward pass on a raster, output clamped to [0, 1].
Heatmap predict(const NetParams& params, const ImageU8& img);

// Canonical text header (config kv) + float32 tensor snapshots. Snaps the
// in-memory params to the float32 grid first so a reloaded checkpoint
// forwards bit-identically to the params object left behind.
void save_checkpoint(const std::string& path, NetParams& params);
NetParams load_checkpoint(const std::string& path);

// Per-layer channel sums at full trace detail, for the debug dump.
std::vector<std::pair<std::string, Tensor>> activation_sums(
    const NetParams& params, const Tensor& input);

}  // namespace symkit
