#include "symkit/network.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "symkit/rng.hpp"

namespace symkit {

namespace {

int round_half_up_i(double v) { return static_cast<int>(std::floor(v + 0.5)); }

std::string join_ints(const std::vector<int>& v) {
  std::ostringstream os;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) os << ",";
    os << v[i];
  }
  return os.str();
}

std::string join_doubles(const std::vector<double>& v) {
  std::ostringstream os;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) os << ",";
    os << v[i];
  }
  return os.str();
}

std::vector<int> split_ints(const std::string& s, const std::string& key) {
  std::vector<int> out;
  std::istringstream is(s);
  std::string tok;
  while (std::getline(is, tok, ',')) {
    try {
      std::size_t pos = 0;
      out.push_back(std::stoi(tok, &pos));
      if (pos != tok.size()) throw std::invalid_argument("junk");
    } catch (const std::exception&) {
      throw std::runtime_error("config: bad integer list in '" + key + "': " + s);
    }
  }
  return out;
}

std::vector<double> split_doubles(const std::string& s, const std::string& key) {
  std::vector<double> out;
  std::istringstream is(s);
  std::string tok;
  while (std::getline(is, tok, ',')) {
    try {
      std::size_t pos = 0;
      out.push_back(std::stod(tok, &pos));
      if (pos != tok.size()) throw std::invalid_argument("junk");
    } catch (const std::exception&) {
      throw std::runtime_error("config: bad number list in '" + key + "': " + s);
    }
  }
  return out;
}

}  // namespace

void NetConfig::validate() const {
  if (in_channels != 1 && in_channels != 3)
    throw std::invalid_argument("net config: in_channels must be 1 or 3");
  if (channels.empty() || channels.size() != strides.size())
    throw std::invalid_argument(
        "net config: channels and strides must be non-empty and equal length");
  int prod = 1;
  for (int s : strides) {
    if (s < 1) throw std::invalid_argument("net config: strides must be >= 1");
    prod *= s;
  }
  if (prod != 8)
    throw std::invalid_argument(
        "net config: product of trunk strides must be 8, got " +
        std::to_string(prod));
  for (int c : channels)
    if (c < 1) throw std::invalid_argument("net config: channels must be >= 1");
  if (kernel < 1 || kernel % 2 == 0)
    throw std::invalid_argument("net config: kernel must be odd and >= 1");
  if (trunk_dilation < 1)
    throw std::invalid_argument("net config: trunk_dilation must be >= 1");
  if (pyramid_rates.empty())
    throw std::invalid_argument("net config: pyramid_rates must be non-empty");
  for (int r : pyramid_rates)
    if (r < 1) throw std::invalid_argument("net config: pyramid rates must be >= 1");
  if (streams.empty())
    throw std::invalid_argument("net config: streams must be non-empty");
  for (double s : streams)
    if (s != 0.5 && s != 0.75 && s != 1.0)
      throw std::invalid_argument(
          "net config: stream scales must come from {0.5, 0.75, 1.0}");
}

KvMap NetConfig::to_kv() const {
  KvMap kv;
  kv["net.in_channels"] = std::to_string(in_channels);
  kv["net.channels"] = join_ints(channels);
  kv["net.strides"] = join_ints(strides);
  kv["net.kernel"] = std::to_string(kernel);
  kv["net.trunk_dilation"] = std::to_string(trunk_dilation);
  kv["net.pyramid_rates"] = join_ints(pyramid_rates);
  kv["net.pyramid_fusion"] = pyramid_max ? "max" : "sum";
  kv["net.streams"] = join_doubles(streams);
  kv["net.seed"] = std::to_string(seed);
  return kv;
}

NetConfig NetConfig::from_kv(const KvMap& kv) {
  NetConfig c;
  c.in_channels = kv_get(kv, "net.in_channels", c.in_channels);
  if (kv.count("net.channels"))
    c.channels = split_ints(kv.at("net.channels"), "net.channels");
  if (kv.count("net.strides"))
    c.strides = split_ints(kv.at("net.strides"), "net.strides");
  c.kernel = kv_get(kv, "net.kernel", c.kernel);
  c.trunk_dilation = kv_get(kv, "net.trunk_dilation", c.trunk_dilation);
  if (kv.count("net.pyramid_rates"))
    c.pyramid_rates = split_ints(kv.at("net.pyramid_rates"), "net.pyramid_rates");
  std::string fusion = kv_get(kv, "net.pyramid_fusion", std::string("sum"));
  if (fusion != "sum" && fusion != "max")
    throw std::runtime_error("config: net.pyramid_fusion must be sum or max");
  c.pyramid_max = fusion == "max";
  if (kv.count("net.streams"))
    c.streams = split_doubles(kv.at("net.streams"), "net.streams");
  c.seed = kv_get(kv, "net.seed", c.seed);
  c.validate();
  return c;
}

NetConfig NetConfig::tiny() {
  NetConfig c;
  c.channels = {4, 4};
  c.strides = {4, 2};
  c.trunk_dilation = 1;
  c.pyramid_rates = {2};
  return c;
}

namespace {

ConvSpec trunk_spec(const NetConfig& cfg, std::size_t i) {
  ConvSpec s;
  s.in_channels = i == 0 ? cfg.in_channels : cfg.channels[i - 1];
  s.out_channels = cfg.channels[i];
  s.kernel_h = s.kernel_w = cfg.kernel;
  s.stride = cfg.strides[i];
  s.dilation = i + 1 == cfg.channels.size() ? cfg.trunk_dilation : 1;
  s.padding = s.dilation * (cfg.kernel - 1) / 2;
  return s;
}

ConvSpec pyramid_spec(const NetConfig& cfg, int rate) {
  ConvSpec s;
  s.in_channels = cfg.channels.back();
  s.out_channels = 1;
  s.kernel_h = s.kernel_w = 3;
  s.stride = 1;
  s.dilation = rate;
  s.padding = rate;
  return s;
}

ConvLayer make_layer(const ConvSpec& spec, Rng& rng) {
  ConvLayer layer;
  layer.spec = spec;
  layer.weight = Tensor(spec.out_channels, spec.in_channels, spec.kernel_h,
                        spec.kernel_w);
  double fan_in = static_cast<double>(spec.in_channels) * spec.kernel_h *
                  spec.kernel_w;
  double stddev = std::sqrt(2.0 / fan_in);
  for (double& v : layer.weight.data) v = rng.normal(0.0, stddev);
  quantize_f32(layer.weight);
  layer.bias.assign(spec.out_channels, 0.0);
  return layer;
}

}  // namespace

NetParams init_net(const NetConfig& config) {
  config.validate();
  NetParams p;
  p.config = config;
  Rng rng(config.seed);
  for (std::size_t i = 0; i < config.channels.size(); ++i)
    p.trunk.push_back(make_layer(trunk_spec(config, i), rng));
  for (int rate : config.pyramid_rates)
    p.pyramid.push_back(make_layer(pyramid_spec(config, rate), rng));
  return p;
}

namespace {

constexpr int kMaxEdge = 513;
constexpr int kMinEdge = 8;

// Reflect-pad on the right/bottom up to multiples of 8 (no edge repeat:
// x maps to 2(W-1)-x). Legal because inputs are at least 8 wide.
Tensor pad_to_multiple8(const Tensor& in) {
  int ph = (in.h() + 7) / 8 * 8;
  int pw = (in.w() + 7) / 8 * 8;
  if (ph == in.h() && pw == in.w()) return in;
  Tensor out(in.n(), in.c(), ph, pw);
  for (int n = 0; n < in.n(); ++n)
    for (int c = 0; c < in.c(); ++c)
      for (int y = 0; y < ph; ++y) {
        int sy = y < in.h() ? y : 2 * (in.h() - 1) - y;
        for (int x = 0; x < pw; ++x) {
          int sx = x < in.w() ? x : 2 * (in.w() - 1) - x;
          out.at(n, c, y, x) = in.at(n, c, sy, sx);
        }
      }
  return out;
}

Tensor add_tensors(const Tensor& a, const Tensor& b) {
  Tensor out = a;
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += b.data[i];
  return out;
}

void accumulate(Tensor& into, const Tensor& g) {
  for (std::size_t i = 0; i < into.data.size(); ++i) into.data[i] += g.data[i];
}

void accumulate(std::vector<double>& into, const std::vector<double>& g) {
  for (std::size_t i = 0; i < into.size(); ++i) into[i] += g[i];
}

}  // namespace

Tensor net_forward(const NetParams& params, const Tensor& input,
                   ForwardTrace* trace) {
  const NetConfig& cfg = params.config;
  cfg.validate();
  if (input.n() != 1)
    throw std::invalid_argument("net forward: expected batch of 1");
  if (input.c() != cfg.in_channels)
    throw std::invalid_argument("net forward: input has " +
                                std::to_string(input.c()) +
                                " channels, config expects " +
                                std::to_string(cfg.in_channels));
  if (input.h() > kMaxEdge || input.w() > kMaxEdge)
    throw std::invalid_argument("net forward: input edge " +
                                std::to_string(std::max(input.h(), input.w())) +
                                " exceeds the 513 px limit");
  if (input.h() < kMinEdge || input.w() < kMinEdge)
    throw std::invalid_argument("net forward: input edges must be at least 8 px");

  Tensor padded = pad_to_multiple8(input);
  int ph = padded.h(), pw = padded.w();

  ForwardTrace local;
  ForwardTrace& tr = trace ? *trace : local;
  tr = ForwardTrace{};
  tr.orig_h = input.h();
  tr.orig_w = input.w();
  tr.pad_h = ph;
  tr.pad_w = pw;
  tr.padded = padded;

  std::vector<Tensor> stream_maps;
  for (double scale : cfg.streams) {
    StreamTrace st;
    if (scale == 1.0) {
      st.input = padded;
    } else {
      st.input = bilinear_resize(padded, std::max(1, round_half_up_i(scale * ph)),
                                 std::max(1, round_half_up_i(scale * pw)));
    }
    Tensor cur = st.input;
    for (std::size_t i = 0; i < params.trunk.size(); ++i) {
      const ConvLayer& layer = params.trunk[i];
      Tensor pre = conv2d(cur, layer.weight, layer.bias, layer.spec);
      Tensor post = relu(pre);
      st.pre.push_back(pre);
      st.post.push_back(post);
      cur = std::move(post);
    }
    const Tensor& trunk_out = st.post.back();
    for (const ConvLayer& branch : params.pyramid)
      st.branches.push_back(
          conv2d(trunk_out, branch.weight, branch.bias, branch.spec));
    if (cfg.pyramid_max) {
      st.fused = max_fuse(st.branches);
    } else {
      st.fused = st.branches[0];
      for (std::size_t i = 1; i < st.branches.size(); ++i)
        st.fused = add_tensors(st.fused, st.branches[i]);
    }
    st.upsampled = bilinear_upsample(st.fused, 8);
    st.resized = st.upsampled.h() == ph && st.upsampled.w() == pw
                     ? st.upsampled
                     : bilinear_resize(st.upsampled, ph, pw);
    stream_maps.push_back(st.resized);
    tr.streams.push_back(std::move(st));
  }

  tr.fused_streams = max_fuse(stream_maps);

  Tensor out(1, 1, input.h(), input.w());
  for (int y = 0; y < input.h(); ++y)
    for (int x = 0; x < input.w(); ++x)
      out.at(0, 0, y, x) = tr.fused_streams.at(0, 0, y, x);
  validate_finite(out, "net forward output");
  tr.output = out;
  return out;
}

NetGrads zero_grads(const NetParams& params) {
  NetGrads g;
  for (const ConvLayer& l : params.trunk) {
    g.trunk_w.push_back(zeros_like(l.weight));
    g.trunk_b.emplace_back(l.bias.size(), 0.0);
  }
  for (const ConvLayer& l : params.pyramid) {
    g.pyramid_w.push_back(zeros_like(l.weight));
    g.pyramid_b.emplace_back(l.bias.size(), 0.0);
  }
  return g;
}

void net_backward(const NetParams& params, const ForwardTrace& trace,
                  const Tensor& grad_output, NetGrads& acc) {
  const NetConfig& cfg = params.config;
  if (grad_output.h() != trace.orig_h || grad_output.w() != trace.orig_w)
    throw std::invalid_argument("net backward: grad dims do not match trace");

  // undo the crop
  Tensor g(1, 1, trace.pad_h, trace.pad_w);
  for (int y = 0; y < trace.orig_h; ++y)
    for (int x = 0; x < trace.orig_w; ++x)
      g.at(0, 0, y, x) = grad_output.at(0, 0, y, x);

  std::vector<Tensor> stream_maps;
  for (const StreamTrace& st : trace.streams) stream_maps.push_back(st.resized);
  std::vector<Tensor> stream_grads = max_fuse_backward(stream_maps, g);

  for (std::size_t si = 0; si < trace.streams.size(); ++si) {
    const StreamTrace& st = trace.streams[si];
    Tensor sg = std::move(stream_grads[si]);
    if (st.resized.h() != st.upsampled.h() || st.resized.w() != st.upsampled.w())
      sg = bilinear_resize_backward(sg, st.upsampled.h(), st.upsampled.w());
    Tensor fused_g = bilinear_upsample_backward(sg, 8);

    std::vector<Tensor> branch_grads;
    if (cfg.pyramid_max) {
      branch_grads = max_fuse_backward(st.branches, fused_g);
    } else {
      branch_grads.assign(st.branches.size(), fused_g);
    }

    const Tensor& trunk_out = st.post.back();
    Tensor trunk_g = zeros_like(trunk_out);
    for (std::size_t bi = 0; bi < params.pyramid.size(); ++bi) {
      ConvGrads cg = conv2d_backward(trunk_out, params.pyramid[bi].weight,
                                     params.pyramid[bi].spec, branch_grads[bi]);
      accumulate(acc.pyramid_w[bi], cg.weight);
      accumulate(acc.pyramid_b[bi], cg.bias);
      accumulate(trunk_g, cg.input);
    }

    for (std::size_t li = params.trunk.size(); li-- > 0;) {
      Tensor pre_g = relu_backward(st.pre[li], trunk_g);
      const Tensor& layer_in = li == 0 ? st.input : st.post[li - 1];
      ConvGrads cg = conv2d_backward(layer_in, params.trunk[li].weight,
                                     params.trunk[li].spec, pre_g);
      accumulate(acc.trunk_w[li], cg.weight);
      accumulate(acc.trunk_b[li], cg.bias);
      trunk_g = std::move(cg.input);
    }
  }
}

Tensor net_input(const ImageU8& img, int in_channels) {
  if (in_channels == 1) {
    std::vector<double> lum = luma(img);
    Tensor t(1, 1, img.height, img.width);
    for (std::size_t i = 0; i < lum.size(); ++i) t.data[i] = lum[i] - 0.5;
    return t;
  }
  if (in_channels != 3)
    throw std::invalid_argument("net input: in_channels must be 1 or 3");
  Tensor t(1, 3, img.height, img.width);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x)
        t.at(0, c, y, x) =
            img.at(x, y, img.channels == 3 ? c : 0) / 255.0 - 0.5;
  return t;
}

Heatmap predict(const NetParams& params, const ImageU8& img) {
  Tensor out = net_forward(params, net_input(img, params.config.in_channels));
  Heatmap hm(out.w(), out.h());
  for (std::size_t i = 0; i < out.data.size(); ++i)
    hm.values[i] = std::clamp(out.data[i], 0.0, 1.0);
  return hm;
}

namespace {

constexpr char kCheckpointMagic[] = "symkit-checkpoint-v1";

void write_bias_snapshot(std::ostream& os, const std::vector<double>& bias) {
  write_snapshot(os, {static_cast<std::uint32_t>(bias.size())}, bias.data(),
                 bias.size());
}

std::vector<double> read_bias_snapshot(std::istream& is, std::size_t expect,
                                       const std::string& what) {
  Snapshot s = read_snapshot(is);
  if (s.dims.size() != 1 || s.data.size() != expect)
    throw std::runtime_error("checkpoint: " + what + " bias has wrong shape");
  return s.data;
}

Tensor read_weight_snapshot(std::istream& is, const ConvSpec& spec,
                            const std::string& what) {
  Tensor t = snapshot_to_tensor(read_snapshot(is));
  if (t.n() != spec.out_channels || t.c() != spec.in_channels ||
      t.h() != spec.kernel_h || t.w() != spec.kernel_w)
    throw std::runtime_error("checkpoint: " + what + " weight dims mismatch");
  return t;
}

}  // namespace

void save_checkpoint(const std::string& path, NetParams& params) {
  for (ConvLayer& l : params.trunk) {
    quantize_f32(l.weight);
    for (double& b : l.bias) b = quantize_f32(b);
  }
  for (ConvLayer& l : params.pyramid) {
    quantize_f32(l.weight);
    for (double& b : l.bias) b = quantize_f32(b);
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("checkpoint: cannot open " + path + " for write");
  os << kCheckpointMagic << "\n";
  write_kv(os, params.config.to_kv());
  os << "end\n";
  for (const ConvLayer& l : params.trunk) {
    write_snapshot(os, l.weight);
    write_bias_snapshot(os, l.bias);
  }
  for (const ConvLayer& l : params.pyramid) {
    write_snapshot(os, l.weight);
    write_bias_snapshot(os, l.bias);
  }
  if (!os) throw std::runtime_error("checkpoint: write failed for " + path);
}

NetParams load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("checkpoint: cannot open " + path);
  std::string line;
  if (!std::getline(is, line) || line != kCheckpointMagic)
    throw std::runtime_error("checkpoint: " + path + " is not a checkpoint file");
  std::ostringstream header;
  bool closed = false;
  while (std::getline(is, line)) {
    if (line == "end") {
      closed = true;
      break;
    }
    header << line << "\n";
  }
  if (!closed) throw std::runtime_error("checkpoint: unterminated header");
  std::istringstream header_is(header.str());
  NetConfig cfg = NetConfig::from_kv(parse_kv(header_is));

  NetParams p;
  p.config = cfg;
  for (std::size_t i = 0; i < cfg.channels.size(); ++i) {
    ConvLayer l;
    l.spec = trunk_spec(cfg, i);
    std::string what = "trunk layer " + std::to_string(i);
    l.weight = read_weight_snapshot(is, l.spec, what);
    l.bias = read_bias_snapshot(is, l.spec.out_channels, what);
    p.trunk.push_back(std::move(l));
  }
  for (int rate : cfg.pyramid_rates) {
    ConvLayer l;
    l.spec = pyramid_spec(cfg, rate);
    std::string what = "pyramid rate " + std::to_string(rate);
    l.weight = read_weight_snapshot(is, l.spec, what);
    l.bias = read_bias_snapshot(is, l.spec.out_channels, what);
    p.pyramid.push_back(std::move(l));
  }
  return p;
}

std::vector<std::pair<std::string, Tensor>> activation_sums(
    const NetParams& params, const Tensor& input) {
  ForwardTrace tr;
  net_forward(params, input, &tr);
  std::vector<std::pair<std::string, Tensor>> out;
  auto channel_sum = [](const Tensor& t) {
    Tensor s(1, 1, t.h(), t.w());
    for (int c = 0; c < t.c(); ++c)
      for (int y = 0; y < t.h(); ++y)
        for (int x = 0; x < t.w(); ++x) s.at(0, 0, y, x) += t.at(0, c, y, x);
    return s;
  };
  for (std::size_t si = 0; si < tr.streams.size(); ++si) {
    const StreamTrace& st = tr.streams[si];
    std::string prefix = "stream" + std::to_string(si);
    for (std::size_t li = 0; li < st.post.size(); ++li)
      out.emplace_back(prefix + ".trunk" + std::to_string(li),
                       channel_sum(st.post[li]));
    for (std::size_t bi = 0; bi < st.branches.size(); ++bi)
      out.emplace_back(
          prefix + ".branch" +
              std::to_string(params.config.pyramid_rates[bi]),
          channel_sum(st.branches[bi]));
    out.emplace_back(prefix + ".fused", channel_sum(st.fused));
    out.emplace_back(prefix + ".upsampled", channel_sum(st.upsampled));
  }
  out.emplace_back("fused", channel_sum(tr.fused_streams));
  out.emplace_back("output", channel_sum(tr.output));
  return out;
}

}  // namespace symkit
