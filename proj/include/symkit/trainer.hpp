#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "symkit/heatmap.hpp"
#include "symkit/image.hpp"
#include "symkit/kvconfig.hpp"
#include "symkit/labels.hpp"
#include "symkit/network.hpp"

namespace symkit {

struct TrainSchedule {
  double base_lr = 0.01;
  double power = 0.9;
  int total_batches = 1;
  int batch_size = 4;
  double momentum = 0.9;
  std::uint64_t seed = 1;

  void validate() const;
  KvMap to_kv() const;
  static TrainSchedule from_kv(const KvMap& kv);
};

// base_lr * (1 - batch/total)^power; 0 exactly at the final batch count.
double poly_lr(const TrainSchedule& schedule, int batch);

// Deterministic split: ids are sorted, shuffled by seed, and the first
// round(ratio * n) become the train side. Needs at least two ids.
std::pair<std::vector<std::string>, std::vector<std::string>> split_dataset(
    std::vector<std::string> ids, double ratio, std::uint64_t seed);

struct TrainItem {
  std::string id;
  ImageU8 image;
  std::vector<ConsensusSymmetry> gts;
};

struct TrainLogEntry {
  int batch = 0;
  double lr = 0.0;
  double loss = 0.0;  // batch mean
};

struct TrainLog {
  std::vector<TrainLogEntry> entries;
};

struct TrainOptions {
  SynthConfig synth;             // GT heatmap sigma for the regression target
  bool augment = true;
  double crop_fraction = 0.9;
  int checkpoint_interval = 0;   // 0 disables intermediate checkpoints
  std::string checkpoint_dir;    // required when interval > 0
};

// SGD momentum buffers, exposed so tests can drive single steps.
struct SgdState {
  NetGrads velocity;
};

// v = momentum*v + g; p -= lr*v. All in doubles, nothing snapped to f32
// here (checkpoint writes do the snapping).
void sgd_step(NetParams& params, const NetGrads& grads, SgdState& state,
              double lr, double momentum);

// Full loop: per batch draw batch_size items with replacement, augment,
// synthesize the target for the kind at the augmented size, forward,
// l2 loss, accumulate grads, one momentum step at the poly lr.
std::pair<NetParams, TrainLog> train(const NetConfig& config,
                                     const TrainSchedule& schedule,
                                     const std::vector<TrainItem>& dataset,
                                     SymmetryKind kind,
                                     const TrainOptions& options = {});

// CSV with header batch,lr,loss.
void write_train_log(const std::string& path, const TrainLog& log);

}  // namespace symkit
