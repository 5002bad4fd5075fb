#include "symkit/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <stdexcept>

#include "CLI11.hpp"
#include "symkit/augment.hpp"
#include "symkit/baseline.hpp"
#include "symkit/evaluate.hpp"
#include "symkit/heatmap.hpp"
#include "symkit/kvconfig.hpp"
#include "symkit/labels.hpp"
#include "symkit/network.hpp"
#include "symkit/rng.hpp"
#include "symkit/synthdata.hpp"
#include "symkit/trainer.hpp"

namespace fs = std::filesystem;

namespace symkit {

namespace {

// One process per output dir; the lock disappears with the guard.
class OutDirLock {
 public:
  explicit OutDirLock(const std::string& out_dir) {
    fs::create_directories(out_dir);
    path_ = fs::path(out_dir) / ".symkit.lock";
    if (fs::exists(path_))
      throw std::runtime_error("output dir is locked (remove " +
                               path_.string() + " if no other run is live)");
    std::ofstream os(path_, std::ios::binary);
    os << "lock\n";
    if (!os) throw std::runtime_error("cannot create " + path_.string());
  }
  ~OutDirLock() {
    std::error_code ec;
    fs::remove(path_, ec);
  }
  OutDirLock(const OutDirLock&) = delete;
  OutDirLock& operator=(const OutDirLock&) = delete;

 private:
  fs::path path_;
};

std::vector<std::pair<std::string, std::string>> list_images(
    const std::string& dir) {
  if (!fs::is_directory(dir))
    throw std::runtime_error("not a directory: " + dir);
  std::vector<std::pair<std::string, std::string>> out;
  for (const fs::directory_entry& e : fs::directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    std::string ext = e.path().extension().string();
    if (ext == ".pgm" || ext == ".ppm")
      out.emplace_back(e.path().stem().string(), e.path().string());
  }
  std::sort(out.begin(), out.end());
  if (out.empty())
    throw std::runtime_error("no .pgm/.ppm images found in " + dir);
  return out;
}

ImageU8 load_image_for_id(const std::string& dir, const std::string& id) {
  for (const char* ext : {".pgm", ".ppm"}) {
    fs::path p = fs::path(dir) / (id + ext);
    if (fs::exists(p)) return load_image(p.string());
  }
  throw std::runtime_error("no image named " + id + ".pgm or " + id +
                           ".ppm in " + dir);
}

KvMap load_kv_or_empty(const std::string& path) {
  if (path.empty()) return {};
  return parse_kv_file(path);
}

std::map<std::string, std::vector<ConsensusSymmetry>> group_by_image(
    const std::vector<ConsensusSymmetry>& gts) {
  std::map<std::string, std::vector<ConsensusSymmetry>> by_image;
  for (const ConsensusSymmetry& g : gts) by_image[g.image_id].push_back(g);
  return by_image;
}

struct CommonFlags {
  std::string labels, images, out, config, kind_str;
  std::uint64_t seed = 1;
  bool seed_given = false;
  int min_support = 0;
  int thresholds = 100;
  double tau = 5.0;
  double sigma = 5.0;
  bool sigma_given = false;
};

SymmetryKind required_kind(const CommonFlags& f) {
  if (f.kind_str.empty())
    throw std::runtime_error("--kind is required for this subcommand");
  return parse_kind(f.kind_str);
}

EvalOptions eval_options(const CommonFlags& f) {
  EvalOptions opt;
  opt.tol = f.tau;
  opt.n_thresholds = f.thresholds;
  opt.min_support = f.min_support;
  return opt;
}

int cmd_cluster(const CommonFlags& f) {
  OutDirLock lock(f.out);
  LabelSet labels = load_labels(f.labels);
  KvMap kv = load_kv_or_empty(f.config);
  ClusterConfig cfg;
  cfg.tau = f.tau;
  cfg.min_labelers = kv_get(kv, "cluster.min_labelers", cfg.min_labelers);
  std::vector<ConsensusSymmetry> consensus = cluster_all_images(labels, cfg);
  save_consensus((fs::path(f.out) / "consensus.jsonl").string(), consensus);
  std::cout << "clustered " << labels.size() << " labels into "
            << consensus.size() << " consensus symmetries\n";
  return 0;
}

int cmd_synth_gt(const CommonFlags& f) {
  OutDirLock lock(f.out);
  std::vector<ConsensusSymmetry> gts = load_consensus(f.labels);
  SynthConfig cfg;
  cfg.sigma = f.sigma;
  int written = 0;
  for (const auto& [id, image_gts] : group_by_image(gts)) {
    ImageU8 img = load_image_for_id(f.images, id);
    auto [refl, rot] = synth_gt(image_gts, img.width, img.height, cfg);
    bool has_refl = false, has_rot = false;
    for (const ConsensusSymmetry& g : image_gts)
      (g.kind == SymmetryKind::reflection ? has_refl : has_rot) = true;
    for (SymmetryKind kind :
         {SymmetryKind::reflection, SymmetryKind::rotation}) {
      if (!f.kind_str.empty() && parse_kind(f.kind_str) != kind) continue;
      if (kind == SymmetryKind::reflection ? !has_refl : !has_rot) continue;
      const Heatmap& hm = kind == SymmetryKind::reflection ? refl : rot;
      save_heatmap((fs::path(f.out) / (id + "_" + kind_name(kind) + ".pgm"))
                       .string(),
                   hm);
      ++written;
    }
  }
  std::cout << "wrote " << written << " ground-truth heatmaps\n";
  return 0;
}

int cmd_augment(const CommonFlags& f) {
  OutDirLock lock(f.out);
  std::vector<ConsensusSymmetry> gts = load_consensus(f.labels);
  auto by_image = group_by_image(gts);
  fs::create_directories(fs::path(f.out) / "images");
  Rng master(f.seed);
  std::vector<ConsensusSymmetry> out_gts;
  for (const auto& [id, path] : list_images(f.images)) {
    ImageU8 img = load_image(path);
    std::uint64_t item_seed = master.next_u64();
    AugmentSpec spec = sample_augment(item_seed, img.width, img.height);
    auto it = by_image.find(id);
    std::vector<ConsensusSymmetry> image_gts =
        it == by_image.end() ? std::vector<ConsensusSymmetry>{} : it->second;
    auto [aug_img, aug_gts] = apply_augment(img, image_gts, spec);
    save_image((fs::path(f.out) / "images" / (id + ".pgm")).string(),
               aug_img);
    for (ConsensusSymmetry& g : aug_gts) out_gts.push_back(std::move(g));
  }
  save_consensus((fs::path(f.out) / "consensus.jsonl").string(), out_gts);
  std::cout << "augmented " << list_images(f.images).size() << " images\n";
  return 0;
}

int cmd_gen_synth(const CommonFlags& f) {
  OutDirLock lock(f.out);
  SymmetryKind kind = required_kind(f);
  KvMap kv = load_kv_or_empty(f.config);

  SynthSpec spec;
  spec.kind = kind;
  spec.width = kv_get(kv, "synth.width", spec.width);
  spec.height = kv_get(kv, "synth.height", spec.height);
  spec.count = kv_get(kv, "synth.count", spec.count);
  spec.noise_level = kv_get(kv, "synth.noise_level", spec.noise_level);
  std::string tex = kv_get(kv, "synth.texture", std::string("filtered-noise"));
  if (tex == "filtered-noise") {
    spec.texture = SynthTexture::filtered_noise;
  } else if (tex == "blob-collage") {
    spec.texture = SynthTexture::blob_collage;
  } else {
    throw std::runtime_error(
        "synth.texture must be filtered-noise or blob-collage, got " + tex);
  }
  int n_images = kv_get(kv, "synth.n_images", 10);
  int n_raters = kv_get(kv, "synth.raters", 20);
  double jitter = kv_get(kv, "synth.jitter", 1.0);
  double outlier_rate = kv_get(kv, "synth.outlier_rate", 0.05);

  fs::create_directories(fs::path(f.out) / "images");
  Rng master(f.seed);
  LabelSet all_labels;
  std::vector<ConsensusSymmetry> all_gts;
  for (int i = 0; i < n_images; ++i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "synth_%04d", i);
    spec.image_id = buf;
    spec.seed = master.next_u64();
    std::uint64_t rater_seed = master.next_u64();
    auto [img, gts] = gen_image(spec);
    save_image((fs::path(f.out) / "images" / (spec.image_id + ".pgm"))
                   .string(),
               img);
    LabelSet labels = gen_rater_labels(gts, n_raters, jitter, outlier_rate,
                                       rater_seed, spec.width, spec.height);
    for (LabelRecord& r : labels) all_labels.push_back(std::move(r));
    for (ConsensusSymmetry& g : gts) all_gts.push_back(std::move(g));
  }
  {
    std::ofstream os(fs::path(f.out) / "labels.jsonl", std::ios::binary);
    write_labels(os, all_labels);
  }
  save_consensus((fs::path(f.out) / "consensus.jsonl").string(), all_gts);
  std::cout << "generated " << n_images << " images, " << all_gts.size()
            << " symmetries, " << all_labels.size() << " rater labels\n";
  return 0;
}

int cmd_train(const CommonFlags& f) {
  OutDirLock lock(f.out);
  SymmetryKind kind = required_kind(f);
  KvMap kv = load_kv_or_empty(f.config);
  NetConfig net_cfg = NetConfig::from_kv(kv);
  TrainSchedule schedule = TrainSchedule::from_kv(kv);
  if (f.seed_given) {
    net_cfg.seed = f.seed;
    schedule.seed = f.seed;
  }
  TrainOptions options;
  options.synth.sigma = f.sigma_given
                            ? f.sigma
                            : kv_get(kv, "train.sigma", options.synth.sigma);
  options.augment = kv_get(kv, "train.augment", options.augment);
  options.crop_fraction =
      kv_get(kv, "train.crop_fraction", options.crop_fraction);
  options.checkpoint_interval =
      kv_get(kv, "train.checkpoint_interval", options.checkpoint_interval);
  options.checkpoint_dir = f.out;

  std::vector<ConsensusSymmetry> gts = load_consensus(f.labels);
  std::vector<TrainItem> items;
  for (const auto& [id, image_gts] : group_by_image(gts)) {
    bool has_kind = false;
    for (const ConsensusSymmetry& g : image_gts)
      if (g.kind == kind) has_kind = true;
    if (!has_kind) continue;
    TrainItem item;
    item.id = id;
    item.image = load_image_for_id(f.images, id);
    item.gts = image_gts;
    items.push_back(std::move(item));
  }
  if (items.empty())
    throw std::runtime_error("train: no images with " + kind_name(kind) +
                             " ground truth in " + f.labels);

  auto [params, log] = train(net_cfg, schedule, items, kind, options);
  save_checkpoint((fs::path(f.out) / "model.ckpt").string(), params);
  write_train_log((fs::path(f.out) / "train_log.csv").string(), log);
  KvMap merged = net_cfg.to_kv();
  for (const auto& [k, v] : schedule.to_kv()) merged[k] = v;
  merged["train.sigma"] = format_double(options.synth.sigma);
  merged["train.augment"] = options.augment ? "true" : "false";
  merged["train.crop_fraction"] = format_double(options.crop_fraction);
  merged["train.checkpoint_interval"] =
      std::to_string(options.checkpoint_interval);
  std::ofstream os(fs::path(f.out) / "config.txt", std::ios::binary);
  write_kv(os, merged);
  std::cout << "trained " << schedule.total_batches << " batches on "
            << items.size() << " images; final loss "
            << format_double(log.entries.back().loss) << "\n";
  return 0;
}

int cmd_predict(const CommonFlags& f, const std::string& model) {
  OutDirLock lock(f.out);
  NetParams params = load_checkpoint(model);
  int n = 0;
  for (const auto& [id, path] : list_images(f.images)) {
    ImageU8 img = load_image(path);
    Heatmap hm = predict(params, img);
    save_heatmap((fs::path(f.out) / (id + ".pgm")).string(), hm);
    ++n;
  }
  std::cout << "predicted " << n << " heatmaps\n";
  return 0;
}

int cmd_baseline(const CommonFlags& f) {
  OutDirLock lock(f.out);
  SymmetryKind kind = required_kind(f);
  ReflectionBaselineConfig refl_cfg;
  refl_cfg.sigma = f.sigma;
  RotationBaselineConfig rot_cfg;
  int n = 0;
  for (const auto& [id, path] : list_images(f.images)) {
    ImageU8 img = load_image(path);
    Heatmap hm = kind == SymmetryKind::reflection
                     ? detect_reflection_baseline(img, refl_cfg)
                     : detect_rotation_baseline(img, rot_cfg);
    save_heatmap((fs::path(f.out) / (id + ".pgm")).string(), hm);
    ++n;
  }
  std::cout << "baseline produced " << n << " heatmaps\n";
  return 0;
}

int cmd_eval(const CommonFlags& f, const std::string& pred_dir) {
  OutDirLock lock(f.out);
  SymmetryKind kind = required_kind(f);
  std::vector<ConsensusSymmetry> gts = load_consensus(f.labels);
  std::string detector = fs::path(pred_dir).filename().string();
  if (detector.empty()) detector = pred_dir;
  EvalReport report =
      evaluate_detector(detector, pred_dir, gts, kind, eval_options(f));
  write_curve_csv((fs::path(f.out) / "mean_curve.csv").string(),
                  report.mean_curve);
  write_per_image_csv((fs::path(f.out) / "per_image.csv").string(), report);
  std::ofstream os(fs::path(f.out) / "report.txt", std::ios::binary);
  os << "detector: " << report.detector << "\n";
  os << "images: " << report.image_ids.size() << "\n";
  os << "max_f: " << format_double(report.max_f) << "\n";
  os << "max_f_threshold: " << format_double(report.max_f_threshold) << "\n";
  std::cout << "mean-curve max-F = " << format_double(report.max_f)
            << " at threshold " << format_double(report.max_f_threshold)
            << " over " << report.image_ids.size() << " images\n";
  return 0;
}

int cmd_compare(const CommonFlags& f, const std::string& pred_a,
                const std::string& pred_b) {
  OutDirLock lock(f.out);
  SymmetryKind kind = required_kind(f);
  std::vector<ConsensusSymmetry> gts = load_consensus(f.labels);
  EvalOptions opt = eval_options(f);
  auto name_of = [](const std::string& dir) {
    std::string n = fs::path(dir).filename().string();
    return n.empty() ? dir : n;
  };
  EvalReport a = evaluate_detector(name_of(pred_a), pred_a, gts, kind, opt);
  EvalReport b = evaluate_detector(name_of(pred_b), pred_b, gts, kind, opt);
  PairedTest test = paired_t_test(a.image_max_f, b.image_max_f);
  std::string summary = compare_summary(a, b, test);
  std::ofstream os(fs::path(f.out) / "compare.txt", std::ios::binary);
  os << summary;
  write_curve_csv((fs::path(f.out) / "mean_curve_a.csv").string(),
                  a.mean_curve);
  write_curve_csv((fs::path(f.out) / "mean_curve_b.csv").string(),
                  b.mean_curve);
  std::cout << summary;
  return 0;
}

int cmd_dump_activations(const CommonFlags& f, const std::string& model) {
  OutDirLock lock(f.out);
  NetParams params = load_checkpoint(model);
  int n = 0;
  for (const auto& [id, path] : list_images(f.images)) {
    ImageU8 img = load_image(path);
    Tensor input = net_input(img, params.config.in_channels);
    for (const auto& [name, tensor] : activation_sums(params, input)) {
      save_tensor((fs::path(f.out) / (id + "_" + name + ".symt")).string(),
                  tensor);
      ++n;
    }
  }
  std::cout << "dumped " << n << " activation snapshots\n";
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"desk-scale symmetry detection toolkit"};
  app.require_subcommand(1);

  CommonFlags f;
  std::string model, pred_dir, pred_a, pred_b;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--labels", f.labels, "label / consensus jsonl file");
    sub->add_option("--images", f.images, "image directory");
    sub->add_option("--out", f.out, "output directory")->required();
    sub->add_option("--kind", f.kind_str, "reflection or rotation");
    sub->add_option("--config", f.config, "key=value config file");
    sub->add_option("--seed", f.seed, "seed override")
        ->each([&](const std::string&) { f.seed_given = true; });
    sub->add_option("--min-support", f.min_support,
                    "evaluate only GTs with at least this support");
    sub->add_option("--thresholds", f.thresholds, "PR sweep threshold count");
    sub->add_option("--tau", f.tau, "agreement radius in px");
    sub->add_option("--sigma", f.sigma, "heatmap gaussian width in px")
        ->each([&](const std::string&) { f.sigma_given = true; });
  };

  CLI::App* cluster = app.add_subcommand(
      "cluster", "labels jsonl -> consensus jsonl via density clustering");
  add_common(cluster);
  CLI::App* synth_gt_cmd = app.add_subcommand(
      "synth-gt", "consensus jsonl -> ground-truth heatmap pgms");
  add_common(synth_gt_cmd);
  CLI::App* augment_cmd = app.add_subcommand(
      "augment", "apply one seeded augmentation per image");
  add_common(augment_cmd);
  CLI::App* gen_synth = app.add_subcommand(
      "gen-synth", "generate a synthetic dataset with known symmetries");
  add_common(gen_synth);
  CLI::App* train_cmd =
      app.add_subcommand("train", "train a detector on consensus GTs");
  add_common(train_cmd);
  CLI::App* predict_cmd = app.add_subcommand(
      "predict", "run a trained checkpoint over an image directory");
  add_common(predict_cmd);
  predict_cmd->add_option("--model", model, "checkpoint file")->required();
  CLI::App* baseline_cmd = app.add_subcommand(
      "baseline", "run the classical detector over an image directory");
  add_common(baseline_cmd);
  CLI::App* eval_cmd = app.add_subcommand(
      "eval", "score a prediction directory against consensus GTs");
  add_common(eval_cmd);
  eval_cmd->add_option("--pred", pred_dir, "prediction heatmap directory")
      ->required();
  CLI::App* compare_cmd = app.add_subcommand(
      "compare", "paired t-test between two prediction directories");
  add_common(compare_cmd);
  compare_cmd->add_option("--pred-a", pred_a, "first prediction directory")
      ->required();
  compare_cmd->add_option("--pred-b", pred_b, "second prediction directory")
      ->required();
  CLI::App* dump_cmd = app.add_subcommand(
      "dump-activations", "write per-layer channel-sum snapshots");
  add_common(dump_cmd);
  dump_cmd->add_option("--model", model, "checkpoint file")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(std::move(reversed));
  } catch (const CLI::CallForHelp& e) {
    app.exit(e);
    return 0;
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (cluster->parsed()) return cmd_cluster(f);
    if (synth_gt_cmd->parsed()) return cmd_synth_gt(f);
    if (augment_cmd->parsed()) return cmd_augment(f);
    if (gen_synth->parsed()) return cmd_gen_synth(f);
    if (train_cmd->parsed()) return cmd_train(f);
    if (predict_cmd->parsed()) return cmd_predict(f, model);
    if (baseline_cmd->parsed()) return cmd_baseline(f);
    if (eval_cmd->parsed()) return cmd_eval(f, pred_dir);
    if (compare_cmd->parsed()) return cmd_compare(f, pred_a, pred_b);
    if (dump_cmd->parsed()) return cmd_dump_activations(f, model);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  std::cerr << "error: no subcommand given\n";
  return 1;
}

}  // namespace symkit
