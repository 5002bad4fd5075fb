#include "symkit/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "symkit/kvconfig.hpp"

namespace symkit {

namespace {

double sample_clamped(const Heatmap& h, double x, double y) {
  x = std::clamp(x, 0.0, static_cast<double>(h.width - 1));
  y = std::clamp(y, 0.0, static_cast<double>(h.height - 1));
  int x0 = std::min(static_cast<int>(x), h.width - 2 < 0 ? 0 : h.width - 2);
  int y0 = std::min(static_cast<int>(y), h.height - 2 < 0 ? 0 : h.height - 2);
  int x1 = std::min(x0 + 1, h.width - 1);
  int y1 = std::min(y0 + 1, h.height - 1);
  double fx = x - x0, fy = y - y0;
  double top = h.at(x0, y0) * (1 - fx) + h.at(x1, y0) * fx;
  double bot = h.at(x0, y1) * (1 - fx) + h.at(x1, y1) * fx;
  return top * (1 - fy) + bot * fy;
}

double at_clamped(const Heatmap& h, int x, int y) {
  x = std::clamp(x, 0, h.width - 1);
  y = std::clamp(y, 0, h.height - 1);
  return h.at(x, y);
}

}  // namespace

Heatmap thin(const Heatmap& h) {
  int w = h.width, hgt = h.height;
  std::vector<double> gx(static_cast<std::size_t>(w) * hgt);
  std::vector<double> gy(gx.size());
  for (int y = 0; y < hgt; ++y)
    for (int x = 0; x < w; ++x) {
      // Sobel with clamp-to-edge borders
      double tl = at_clamped(h, x - 1, y - 1), tc = at_clamped(h, x, y - 1),
             tr = at_clamped(h, x + 1, y - 1);
      double ml = at_clamped(h, x - 1, y), mr = at_clamped(h, x + 1, y);
      double bl = at_clamped(h, x - 1, y + 1), bc = at_clamped(h, x, y + 1),
             br = at_clamped(h, x + 1, y + 1);
      std::size_t i = static_cast<std::size_t>(y) * w + x;
      gx[i] = (tr + 2 * mr + br) - (tl + 2 * ml + bl);
      gy[i] = (bl + 2 * bc + br) - (tl + 2 * tc + tr);
    }

  auto smooth = [&](const std::vector<double>& src) {
    // 3x3 binomial [1 2 1] x [1 2 1] / 16, clamp-to-edge
    std::vector<double> out(src.size());
    auto get = [&](int x, int y) {
      x = std::clamp(x, 0, w - 1);
      y = std::clamp(y, 0, hgt - 1);
      return src[static_cast<std::size_t>(y) * w + x];
    };
    for (int y = 0; y < hgt; ++y)
      for (int x = 0; x < w; ++x) {
        double s = get(x - 1, y - 1) + 2 * get(x, y - 1) + get(x + 1, y - 1) +
                   2 * get(x - 1, y) + 4 * get(x, y) + 2 * get(x + 1, y) +
                   get(x - 1, y + 1) + 2 * get(x, y + 1) + get(x + 1, y + 1);
        out[static_cast<std::size_t>(y) * w + x] = s / 16.0;
      }
    return out;
  };

  std::vector<double> jxx(gx.size()), jyy(gx.size()), jxy(gx.size());
  for (std::size_t i = 0; i < gx.size(); ++i) {
    jxx[i] = gx[i] * gx[i];
    jyy[i] = gy[i] * gy[i];
    jxy[i] = gx[i] * gy[i];
  }
  jxx = smooth(jxx);
  jyy = smooth(jyy);
  jxy = smooth(jxy);
  // Subtract the windowed mean gradient so the tensor holds the gradient
  // covariance, not the raw second moment. A uniform slope then carries no
  // orientation, and near a ridge end the along-ridge slope stops hijacking
  // the normal, which kept line endpoints from surviving.
  std::vector<double> mx = smooth(gx), my = smooth(gy);
  for (std::size_t i = 0; i < gx.size(); ++i) {
    jxx[i] -= mx[i] * mx[i];
    jyy[i] -= my[i] * my[i];
    jxy[i] -= mx[i] * my[i];
  }

  Heatmap out(w, hgt);
  for (int y = 0; y < hgt; ++y)
    for (int x = 0; x < w; ++x) {
      std::size_t i = static_cast<std::size_t>(y) * w + x;
      double v = h.at(x, y);
      if (jxx[i] + jyy[i] < 1e-12) {
        out.at(x, y) = v;  // no ridge direction, keep
        continue;
      }
      double angle = 0.5 * std::atan2(2.0 * jxy[i], jxx[i] - jyy[i]);
      double nx = std::cos(angle), ny = std::sin(angle);
      double a = sample_clamped(h, x + nx, y + ny);
      double b = sample_clamped(h, x - nx, y - ny);
      out.at(x, y) = (v >= a && v >= b) ? v : 0.0;
    }
  return out;
}

namespace {

struct PairCand {
  std::int64_t d2;
  // unordered pixel-pair key, makes ties symmetric under pred/gt swap
  std::int64_t lo_key;
  std::int64_t hi_key;
  int pred_idx;
  int gt_idx;
};

std::int64_t pixel_key(const PixelCoord& p) {
  return (static_cast<std::int64_t>(p.y) << 32) |
         static_cast<std::uint32_t>(p.x);
}

bool cand_less(const PairCand& a, const PairCand& b) {
  if (a.d2 != b.d2) return a.d2 < b.d2;
  if (a.lo_key != b.lo_key) return a.lo_key < b.lo_key;
  if (a.hi_key != b.hi_key) return a.hi_key < b.hi_key;
  if (a.pred_idx != b.pred_idx) return a.pred_idx < b.pred_idx;
  return a.gt_idx < b.gt_idx;
}

std::vector<PairCand> build_candidates(const std::vector<PixelCoord>& pred,
                                       const std::vector<PixelCoord>& gt,
                                       double tol) {
  double tol2 = tol * tol;
  std::vector<PairCand> cands;
  for (int pi = 0; pi < static_cast<int>(pred.size()); ++pi)
    for (int gi = 0; gi < static_cast<int>(gt.size()); ++gi) {
      std::int64_t dx = pred[pi].x - gt[gi].x;
      std::int64_t dy = pred[pi].y - gt[gi].y;
      std::int64_t d2 = dx * dx + dy * dy;
      if (static_cast<double>(d2) > tol2) continue;
      std::int64_t pk = pixel_key(pred[pi]), gk = pixel_key(gt[gi]);
      cands.push_back({d2, std::min(pk, gk), std::max(pk, gk), pi, gi});
    }
  std::sort(cands.begin(), cands.end(), cand_less);
  return cands;
}

}  // namespace

MatchCounts match_reflection(const std::vector<PixelCoord>& pred,
                             const std::vector<PixelCoord>& gt, double tol) {
  if (tol <= 0.0) throw std::invalid_argument("match: tol must be > 0");
  std::vector<PairCand> cands = build_candidates(pred, gt, tol);
  std::vector<char> pred_used(pred.size(), 0), gt_used(gt.size(), 0);
  MatchCounts m;
  for (const PairCand& c : cands) {
    if (pred_used[c.pred_idx] || gt_used[c.gt_idx]) continue;
    pred_used[c.pred_idx] = gt_used[c.gt_idx] = 1;
    ++m.tp;
  }
  m.fp = static_cast<int>(pred.size()) - m.tp;
  m.fn = static_cast<int>(gt.size()) - m.tp;
  return m;
}

RotationMatch match_rotation(const std::vector<PixelCoord>& pred,
                             const std::vector<Point>& centers,
                             double radius) {
  if (radius <= 0.0) throw std::invalid_argument("match: radius must be > 0");
  double r2 = radius * radius;
  RotationMatch m;
  std::vector<char> hit(centers.size(), 0);
  for (const PixelCoord& p : pred) {
    bool inside = false;
    for (std::size_t ci = 0; ci < centers.size(); ++ci) {
      double dx = p.x - centers[ci].x, dy = p.y - centers[ci].y;
      if (dx * dx + dy * dy <= r2) {
        inside = true;
        hit[ci] = 1;
      }
    }
    inside ? ++m.tp : ++m.fp;
  }
  for (char c : hit) m.recalled += c;
  return m;
}

namespace {

// Count of sorted values >= t.
int count_geq(const std::vector<double>& sorted_asc, double t) {
  return static_cast<int>(sorted_asc.end() -
                          std::lower_bound(sorted_asc.begin(),
                                           sorted_asc.end(), t));
}

EvalCurve reflection_curve(const Heatmap& pred_raw,
                           const std::vector<ConsensusSymmetry>& gts,
                           const EvalOptions& opt) {
  Heatmap pred = thin(pred_raw);
  int w = pred.width, h = pred.height;

  std::set<std::pair<int, int>> gt_set;
  for (const ConsensusSymmetry& g : gts) {
    RasterResult r = rasterize(g, w, h);
    for (const PixelCoord& p : r.pixels) gt_set.insert({p.y, p.x});
  }
  std::vector<PixelCoord> gt_pixels;
  for (const auto& [y, x] : gt_set) gt_pixels.push_back({x, y});

  // Candidate pred pixels are every grid pixel within tol of a gt pixel;
  // the rest can only ever be false positives, counted via the value
  // histogram below.
  int rad = static_cast<int>(std::floor(opt.tol));
  double tol2 = opt.tol * opt.tol;
  std::map<std::pair<int, int>, int> pred_ids;
  std::vector<PixelCoord> pred_pixels;
  for (const PixelCoord& g : gt_pixels)
    for (int dy = -rad; dy <= rad; ++dy)
      for (int dx = -rad; dx <= rad; ++dx) {
        if (dx * dx + dy * dy > tol2) continue;
        int x = g.x + dx, y = g.y + dy;
        if (x < 0 || x >= w || y < 0 || y >= h) continue;
        if (pred_ids.emplace(std::make_pair(y, x),
                             static_cast<int>(pred_pixels.size()))
                .second)
          pred_pixels.push_back({x, y});
      }

  std::vector<PairCand> cands = build_candidates(pred_pixels, gt_pixels,
                                                 opt.tol);
  std::vector<double> all_values(pred.values);
  std::sort(all_values.begin(), all_values.end());

  EvalCurve curve;
  int n = opt.n_thresholds;
  std::vector<char> pred_used(pred_pixels.size()), gt_used(gt_pixels.size());
  for (int k = 0; k < n; ++k) {
    double t = static_cast<double>(k) / (n - 1);
    std::fill(pred_used.begin(), pred_used.end(), 0);
    std::fill(gt_used.begin(), gt_used.end(), 0);
    int tp = 0;
    for (const PairCand& c : cands) {
      if (pred.at(pred_pixels[c.pred_idx].x, pred_pixels[c.pred_idx].y) < t)
        continue;
      if (pred_used[c.pred_idx] || gt_used[c.gt_idx]) continue;
      pred_used[c.pred_idx] = gt_used[c.gt_idx] = 1;
      ++tp;
    }
    int detections = count_geq(all_values, t);
    int fp = detections - tp;
    int fn = static_cast<int>(gt_pixels.size()) - tp;
    double p = detections == 0 ? 1.0 : static_cast<double>(tp) / (tp + fp);
    // empty gt raster (geometry off-canvas) makes recall vacuous
    double r = gt_pixels.empty() ? 1.0 : static_cast<double>(tp) / (tp + fn);
    curve.thresholds.push_back(t);
    curve.precision.push_back(p);
    curve.recall.push_back(r);
  }
  return curve;
}

EvalCurve rotation_curve(const Heatmap& pred,
                         const std::vector<ConsensusSymmetry>& gts,
                         const EvalOptions& opt) {
  int w = pred.width, h = pred.height;
  std::vector<Point> centers;
  for (const ConsensusSymmetry& g : gts) centers.push_back(g.geometry[0]);
  double r2 = opt.tol * opt.tol;

  std::vector<double> all_values(pred.values);
  std::vector<double> mask_values;
  std::vector<double> center_best(centers.size(),
                                  -std::numeric_limits<double>::infinity());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      bool inside = false;
      for (std::size_t ci = 0; ci < centers.size(); ++ci) {
        double dx = x - centers[ci].x, dy = y - centers[ci].y;
        if (dx * dx + dy * dy <= r2) {
          inside = true;
          center_best[ci] = std::max(center_best[ci], pred.at(x, y));
        }
      }
      if (inside) mask_values.push_back(pred.at(x, y));
    }
  std::sort(all_values.begin(), all_values.end());
  std::sort(mask_values.begin(), mask_values.end());
  std::vector<double> best_sorted(center_best);
  std::sort(best_sorted.begin(), best_sorted.end());

  EvalCurve curve;
  int n = opt.n_thresholds;
  for (int k = 0; k < n; ++k) {
    double t = static_cast<double>(k) / (n - 1);
    int detections = count_geq(all_values, t);
    int tp = count_geq(mask_values, t);
    int recalled = count_geq(best_sorted, t);
    double p = detections == 0 ? 1.0 : static_cast<double>(tp) / detections;
    double r = static_cast<double>(recalled) / centers.size();
    curve.thresholds.push_back(t);
    curve.precision.push_back(p);
    curve.recall.push_back(r);
  }
  return curve;
}

}  // namespace

EvalCurve pr_curve(const Heatmap& pred,
                   const std::vector<ConsensusSymmetry>& gts,
                   SymmetryKind kind, const EvalOptions& opt) {
  if (opt.n_thresholds < 2)
    throw std::invalid_argument("pr_curve: need at least 2 thresholds");
  if (opt.tol <= 0.0) throw std::invalid_argument("pr_curve: tol must be > 0");
  std::vector<ConsensusSymmetry> kept;
  for (const ConsensusSymmetry& g : gts)
    if (g.kind == kind) kept.push_back(g);
  if (kept.empty())
    throw std::invalid_argument("pr_curve: no " + kind_name(kind) +
                                " ground truth for this image");
  return kind == SymmetryKind::reflection ? reflection_curve(pred, kept, opt)
                                          : rotation_curve(pred, kept, opt);
}

std::pair<double, double> max_f(const EvalCurve& curve) {
  if (curve.thresholds.empty())
    throw std::invalid_argument("max_f: empty curve");
  double best = -1.0, best_t = 0.0;
  for (std::size_t i = 0; i < curve.thresholds.size(); ++i) {
    double p = curve.precision[i], r = curve.recall[i];
    double f = p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
    if (f > best) {
      best = f;
      best_t = curve.thresholds[i];
    }
  }
  return {best, best_t};
}

double regularized_incomplete_beta(double a, double b, double x) {
  if (x < 0.0 || x > 1.0)
    throw std::invalid_argument("incomplete beta: x outside [0, 1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;

  // Lentz continued fraction for the incomplete beta
  auto betacf = [](double a, double b, double x) {
    const int max_iter = 300;
    const double eps = 3e-16, fpmin = 1e-300;
    double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0, d = 1.0 - qab * x / qap;
    if (std::fabs(d) < fpmin) d = fpmin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= max_iter; ++m) {
      int m2 = 2 * m;
      double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
      d = 1.0 + aa * d;
      if (std::fabs(d) < fpmin) d = fpmin;
      c = 1.0 + aa / c;
      if (std::fabs(c) < fpmin) c = fpmin;
      d = 1.0 / d;
      h *= d * c;
      aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
      d = 1.0 + aa * d;
      if (std::fabs(d) < fpmin) d = fpmin;
      c = 1.0 + aa / c;
      if (std::fabs(c) < fpmin) c = fpmin;
      d = 1.0 / d;
      double del = d * c;
      h *= del;
      if (std::fabs(del - 1.0) < eps) break;
    }
    return h;
  };

  double ln_bt = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                 a * std::log(x) + b * std::log1p(-x);
  double bt = std::exp(ln_bt);
  if (x < (a + 1.0) / (a + b + 2.0)) return bt * betacf(a, b, x) / a;
  return 1.0 - bt * betacf(b, a, 1.0 - x) / b;
}

double student_t_two_sided_p(double t, int df) {
  if (df < 1) throw std::invalid_argument("t-test: df must be >= 1");
  double x = df / (df + t * t);
  return regularized_incomplete_beta(df / 2.0, 0.5, x);
}

PairedTest paired_t_test(const std::vector<double>& a,
                         const std::vector<double>& b) {
  if (a.size() != b.size())
    throw std::invalid_argument("t-test: sample lists differ in length");
  int n = static_cast<int>(a.size());
  if (n < 2) throw std::invalid_argument("t-test: need at least 2 pairs");

  double mean = 0.0;
  for (int i = 0; i < n; ++i) mean += a[i] - b[i];
  mean /= n;
  double ss = 0.0;
  for (int i = 0; i < n; ++i) {
    double d = a[i] - b[i] - mean;
    ss += d * d;
  }
  double sd = std::sqrt(ss / (n - 1));

  PairedTest out;
  out.n = n;
  if (sd == 0.0) {
    if (mean == 0.0) {
      out.t_statistic = 0.0;
      out.p_value = 1.0;
    } else {
      out.degenerate = true;
      out.t_statistic = mean > 0.0
                            ? std::numeric_limits<double>::infinity()
                            : -std::numeric_limits<double>::infinity();
      out.p_value = 0.0;
    }
    return out;
  }
  out.t_statistic = mean / (sd / std::sqrt(static_cast<double>(n)));
  out.p_value = student_t_two_sided_p(out.t_statistic, n - 1);
  return out;
}

EvalReport evaluate_heatmaps(
    const std::string& detector_id,
    const std::vector<std::pair<std::string, Heatmap>>& preds,
    const std::vector<ConsensusSymmetry>& gts, SymmetryKind kind,
    const EvalOptions& opt) {
  std::map<std::string, std::vector<ConsensusSymmetry>> by_image;
  for (const ConsensusSymmetry& g : gts) {
    if (g.kind != kind) continue;
    if (opt.min_support > 0 && g.support < opt.min_support) continue;
    by_image[g.image_id].push_back(g);
  }
  if (by_image.empty())
    throw std::invalid_argument("eval: no " + kind_name(kind) +
                                " ground truth left to score");

  std::map<std::string, const Heatmap*> pred_map;
  for (const auto& [id, hm] : preds) pred_map[id] = &hm;
  std::string missing;
  for (const auto& [id, image_gts] : by_image)
    if (!pred_map.count(id)) missing += missing.empty() ? id : ", " + id;
  if (!missing.empty())
    throw std::runtime_error("eval: missing predictions for: " + missing);

  EvalReport report;
  report.detector = detector_id;
  std::vector<EvalCurve> curves;
  for (const auto& [id, image_gts] : by_image) {
    EvalCurve c = pr_curve(*pred_map.at(id), image_gts, kind, opt);
    auto [f, ft] = max_f(c);
    report.image_ids.push_back(id);
    report.image_max_f.push_back(f);
    report.image_max_f_threshold.push_back(ft);
    curves.push_back(std::move(c));
  }

  int n = opt.n_thresholds;
  report.mean_curve.thresholds.resize(n);
  report.mean_curve.precision.assign(n, 0.0);
  report.mean_curve.recall.assign(n, 0.0);
  for (int k = 0; k < n; ++k) {
    report.mean_curve.thresholds[k] = curves[0].thresholds[k];
    for (const EvalCurve& c : curves) {
      report.mean_curve.precision[k] += c.precision[k];
      report.mean_curve.recall[k] += c.recall[k];
    }
    report.mean_curve.precision[k] /= curves.size();
    report.mean_curve.recall[k] /= curves.size();
  }
  std::tie(report.max_f, report.max_f_threshold) = max_f(report.mean_curve);
  return report;
}

EvalReport evaluate_detector(const std::string& detector_id,
                             const std::string& pred_dir,
                             const std::vector<ConsensusSymmetry>& gts,
                             SymmetryKind kind, const EvalOptions& opt) {
  std::set<std::string> ids;
  for (const ConsensusSymmetry& g : gts) {
    if (g.kind != kind) continue;
    if (opt.min_support > 0 && g.support < opt.min_support) continue;
    ids.insert(g.image_id);
  }
  std::string missing;
  std::vector<std::pair<std::string, Heatmap>> preds;
  for (const std::string& id : ids) {
    std::filesystem::path path = std::filesystem::path(pred_dir) /
                                 (id + ".pgm");
    if (!std::filesystem::exists(path)) {
      missing += missing.empty() ? id : ", " + id;
      continue;
    }
    preds.emplace_back(id, load_heatmap(path.string()));
  }
  if (!missing.empty())
    throw std::runtime_error("eval: missing prediction files in " + pred_dir +
                             " for: " + missing);
  return evaluate_heatmaps(detector_id, preds, gts, kind, opt);
}

void write_curve_csv(const std::string& path, const EvalCurve& curve) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("eval: cannot open " + path);
  os << "threshold,precision,recall\n";
  for (std::size_t i = 0; i < curve.thresholds.size(); ++i)
    os << format_double(curve.thresholds[i]) << ","
       << format_double(curve.precision[i]) << ","
       << format_double(curve.recall[i]) << "\n";
  if (!os) throw std::runtime_error("eval: write failed for " + path);
}

void write_per_image_csv(const std::string& path, const EvalReport& report) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("eval: cannot open " + path);
  os << "image_id,max_f,threshold\n";
  for (std::size_t i = 0; i < report.image_ids.size(); ++i)
    os << report.image_ids[i] << "," << format_double(report.image_max_f[i])
       << "," << format_double(report.image_max_f_threshold[i]) << "\n";
  if (!os) throw std::runtime_error("eval: write failed for " + path);
}

std::string compare_summary(const EvalReport& a, const EvalReport& b,
                            const PairedTest& test) {
  std::ostringstream os;
  os << "detector_a: " << a.detector << "\n";
  os << "detector_b: " << b.detector << "\n";
  os << "images: " << test.n << "\n";
  os << "max_f_a: " << format_double(a.max_f) << " (threshold "
     << format_double(a.max_f_threshold) << ")\n";
  os << "max_f_b: " << format_double(b.max_f) << " (threshold "
     << format_double(b.max_f_threshold) << ")\n";
  os << "mean_image_max_f_a: ";
  double ma = 0.0, mb = 0.0;
  for (double f : a.image_max_f) ma += f;
  for (double f : b.image_max_f) mb += f;
  os << format_double(ma / a.image_max_f.size()) << "\n";
  os << "mean_image_max_f_b: " << format_double(mb / b.image_max_f.size())
     << "\n";
  os << "t_statistic: " << format_double(test.t_statistic) << "\n";
  os << "p_value: " << format_double(test.p_value) << "\n";
  if (test.degenerate) os << "degenerate: zero spread, nonzero mean\n";
  return os.str();
}

}  // namespace symkit
