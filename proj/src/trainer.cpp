#include "symkit/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "symkit/augment.hpp"
#include "symkit/rng.hpp"

namespace symkit {

void TrainSchedule::validate() const {
  // base_lr 0 is allowed: it is the documented null-update case.
  if (base_lr < 0.0 || !std::isfinite(base_lr))
    throw std::invalid_argument("train schedule: base_lr must be >= 0");
  if (power <= 0.0 || !std::isfinite(power))
    throw std::invalid_argument("train schedule: power must be > 0");
  if (total_batches < 1)
    throw std::invalid_argument("train schedule: total_batches must be >= 1");
  if (batch_size < 1)
    throw std::invalid_argument("train schedule: batch_size must be >= 1");
  if (momentum < 0.0 || momentum >= 1.0)
    throw std::invalid_argument("train schedule: momentum must be in [0, 1)");
}

KvMap TrainSchedule::to_kv() const {
  KvMap kv;
  kv["train.base_lr"] = format_double(base_lr);
  kv["train.power"] = format_double(power);
  kv["train.total_batches"] = std::to_string(total_batches);
  kv["train.batch_size"] = std::to_string(batch_size);
  kv["train.momentum"] = format_double(momentum);
  kv["train.seed"] = std::to_string(seed);
  return kv;
}

TrainSchedule TrainSchedule::from_kv(const KvMap& kv) {
  TrainSchedule s;
  s.base_lr = kv_get(kv, "train.base_lr", s.base_lr);
  s.power = kv_get(kv, "train.power", s.power);
  s.total_batches = kv_get(kv, "train.total_batches", s.total_batches);
  s.batch_size = kv_get(kv, "train.batch_size", s.batch_size);
  s.momentum = kv_get(kv, "train.momentum", s.momentum);
  s.seed = kv_get(kv, "train.seed", s.seed);
  s.validate();
  return s;
}

double poly_lr(const TrainSchedule& schedule, int batch) {
  if (batch < 0 || batch > schedule.total_batches)
    throw std::invalid_argument(
        "poly_lr: batch " + std::to_string(batch) + " outside [0, " +
        std::to_string(schedule.total_batches) + "]");
  double frac = static_cast<double>(batch) / schedule.total_batches;
  return schedule.base_lr * std::pow(1.0 - frac, schedule.power);
}

std::pair<std::vector<std::string>, std::vector<std::string>> split_dataset(
    std::vector<std::string> ids, double ratio, std::uint64_t seed) {
  if (ids.size() < 2)
    throw std::invalid_argument("split: need at least 2 ids, got " +
                                std::to_string(ids.size()));
  if (!(ratio > 0.0 && ratio < 1.0))
    throw std::invalid_argument("split: ratio must be in (0, 1)");
  std::sort(ids.begin(), ids.end());
  Rng rng(seed);
  rng.shuffle(ids);
  std::size_t n_train =
      static_cast<std::size_t>(std::floor(ratio * ids.size() + 0.5));
  std::vector<std::string> train(ids.begin(), ids.begin() + n_train);
  std::vector<std::string> test(ids.begin() + n_train, ids.end());
  return {std::move(train), std::move(test)};
}

void sgd_step(NetParams& params, const NetGrads& grads, SgdState& state,
              double lr, double momentum) {
  auto update_tensor = [&](Tensor& p, Tensor& v, const Tensor& g) {
    for (std::size_t i = 0; i < p.data.size(); ++i) {
      v.data[i] = momentum * v.data[i] + g.data[i];
      p.data[i] -= lr * v.data[i];
    }
  };
  auto update_vec = [&](std::vector<double>& p, std::vector<double>& v,
                        const std::vector<double>& g) {
    for (std::size_t i = 0; i < p.size(); ++i) {
      v[i] = momentum * v[i] + g[i];
      p[i] -= lr * v[i];
    }
  };
  for (std::size_t i = 0; i < params.trunk.size(); ++i) {
    update_tensor(params.trunk[i].weight, state.velocity.trunk_w[i],
                  grads.trunk_w[i]);
    update_vec(params.trunk[i].bias, state.velocity.trunk_b[i],
               grads.trunk_b[i]);
  }
  for (std::size_t i = 0; i < params.pyramid.size(); ++i) {
    update_tensor(params.pyramid[i].weight, state.velocity.pyramid_w[i],
                  grads.pyramid_w[i]);
    update_vec(params.pyramid[i].bias, state.velocity.pyramid_b[i],
               grads.pyramid_b[i]);
  }
}

namespace {

std::vector<ConsensusSymmetry> gts_of_kind(
    const std::vector<ConsensusSymmetry>& gts, SymmetryKind kind) {
  std::vector<ConsensusSymmetry> out;
  for (const ConsensusSymmetry& g : gts)
    if (g.kind == kind) out.push_back(g);
  return out;
}

}  // namespace

std::pair<NetParams, TrainLog> train(const NetConfig& config,
                                     const TrainSchedule& schedule,
                                     const std::vector<TrainItem>& dataset,
                                     SymmetryKind kind,
                                     const TrainOptions& options) {
  config.validate();
  schedule.validate();
  if (dataset.empty()) throw std::invalid_argument("train: empty dataset");
  for (const TrainItem& item : dataset)
    if (gts_of_kind(item.gts, kind).empty())
      throw std::invalid_argument("train: item '" + item.id + "' has no " +
                                  kind_name(kind) + " ground truth");
  if (options.checkpoint_interval > 0 && options.checkpoint_dir.empty())
    throw std::invalid_argument(
        "train: checkpoint_interval set but no checkpoint_dir");

  NetParams params = init_net(config);
  SgdState state{zero_grads(params)};
  TrainLog log;
  Rng rng(schedule.seed);

  for (int batch = 0; batch < schedule.total_batches; ++batch) {
    double lr = poly_lr(schedule, batch);
    NetGrads acc = zero_grads(params);
    double loss_sum = 0.0;

    for (int j = 0; j < schedule.batch_size; ++j) {
      const TrainItem& item =
          dataset[rng.uniform_int(static_cast<int>(dataset.size()))];
      std::uint64_t aug_seed = rng.next_u64();

      ImageU8 img = item.image;
      std::vector<ConsensusSymmetry> gts = gts_of_kind(item.gts, kind);
      if (options.augment) {
        AugmentSpec spec = sample_augment(aug_seed, item.image.width,
                                          item.image.height,
                                          options.crop_fraction);
        std::tie(img, gts) = apply_augment(item.image, gts, spec);
      }

      auto [refl_map, rot_map] = synth_gt(gts, img.width, img.height,
                                          options.synth);
      const Heatmap& target_hm =
          kind == SymmetryKind::reflection ? refl_map : rot_map;
      Tensor target = tensor_from_heatmap(target_hm);

      ForwardTrace trace;
      Tensor out = net_forward(params, net_input(img, config.in_channels),
                               &trace);
      loss_sum += l2_loss(out, target);
      Tensor grad = l2_loss_backward(out, target, 1.0 / schedule.batch_size);
      net_backward(params, trace, grad, acc);
    }

    double mean_loss = loss_sum / schedule.batch_size;
    if (!std::isfinite(mean_loss))
      throw std::runtime_error("train: non-finite loss at batch " +
                               std::to_string(batch) + " (lr " +
                               format_double(lr) + ")");
    sgd_step(params, acc, state, lr, schedule.momentum);
    log.entries.push_back({batch, lr, mean_loss});

    if (options.checkpoint_interval > 0 &&
        (batch + 1) % options.checkpoint_interval == 0) {
      save_checkpoint(options.checkpoint_dir + "/ckpt_" +
                          std::to_string(batch + 1) + ".ckpt",
                      params);
    }
  }
  return {std::move(params), std::move(log)};
}

void write_train_log(const std::string& path, const TrainLog& log) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("train log: cannot open " + path);
  os << "batch,lr,loss\n";
  for (const TrainLogEntry& e : log.entries)
    os << e.batch << "," << format_double(e.lr) << ","
       << format_double(e.loss) << "\n";
  if (!os) throw std::runtime_error("train log: write failed for " + path);
}

}  // namespace symkit
