#pragma once

#include <string>
#include <utility>
#include <vector>

#include "symkit/heatmap.hpp"
#include "symkit/labels.hpp"

namespace symkit {

// Ridge thinning: keep a pixel only where its value is >= both bilinear
// samples at +-1 px along the local ridge normal (from the windowed
// covariance of Sobel gradients). Ties and direction-free pixels
// (near-zero tensor) are kept, so constant maps pass through unchanged.
Heatmap thin(const Heatmap& h);

struct MatchCounts {
  int tp = 0;
  int fp = 0;
  int fn = 0;
};

// Greedy one-to-one matching, closest pair first, distance <= tol. Ties on
// distance break on the unordered pixel pair, so swapping pred and gt gives
// the same tp.
MatchCounts match_reflection(const std::vector<PixelCoord>& pred,
                             const std::vector<PixelCoord>& gt,
                             double tol = 5.0);

struct RotationMatch {
  int tp = 0;
  int fp = 0;
  int recalled = 0;  // centers with at least one pred pixel in their disk
};

// Membership in the union of closed disks about the centers. No one-to-one
// constraint: a pred pixel in two disks recalls both.
RotationMatch match_rotation(const std::vector<PixelCoord>& pred,
                             const std::vector<Point>& centers,
                             double radius = 5.0);

struct EvalCurve {
  std::vector<double> thresholds;  // k/(n-1), k = 0..n-1
  std::vector<double> precision;
  std::vector<double> recall;
};

struct EvalOptions {
  double tol = 5.0;        // reflection match tolerance and rotation radius
  int n_thresholds = 100;
  int min_support = 0;     // 0 keeps every GT
};

// Threshold sweep over one prediction. Reflection maps are thinned first;
// detections at t are the pixels with value >= t. Precision is 1 when
// there are no detections. Throws when gts holds nothing of the kind.
EvalCurve pr_curve(const Heatmap& pred,
                   const std::vector<ConsensusSymmetry>& gts,
                   SymmetryKind kind, const EvalOptions& opt = {});

// F1 = 2pr/(p+r), 0 where p+r = 0. Returns the max and the smallest
// threshold achieving it.
std::pair<double, double> max_f(const EvalCurve& curve);

struct PairedTest {
  double t_statistic = 0.0;
  double p_value = 1.0;
  int n = 0;
  bool degenerate = false;  // zero spread with nonzero mean
};

// Two-sided paired t-test via the regularized incomplete beta function.
PairedTest paired_t_test(const std::vector<double>& a,
                         const std::vector<double>& b);

// Exposed for oracle tests.
double regularized_incomplete_beta(double a, double b, double x);
double student_t_two_sided_p(double t, int df);

struct EvalReport {
  std::string detector;
  std::vector<std::string> image_ids;   // sorted
  std::vector<double> image_max_f;      // aligned with image_ids
  std::vector<double> image_max_f_threshold;
  EvalCurve mean_curve;                 // per-threshold mean of p and r
  double max_f = 0.0;                   // of the mean curve
  double max_f_threshold = 0.0;
};

// In-memory evaluation: predictions paired to GT images by id. Images are
// scored in sorted id order; only images with a GT of the kind (after the
// support filter) count, and each needs a prediction.
EvalReport evaluate_heatmaps(
    const std::string& detector_id,
    const std::vector<std::pair<std::string, Heatmap>>& preds,
    const std::vector<ConsensusSymmetry>& gts, SymmetryKind kind,
    const EvalOptions& opt = {});

// File-backed variant: reads <pred_dir>/<image_id>.pgm for every scored
// image; missing files are reported together in one error.
EvalReport evaluate_detector(const std::string& detector_id,
                             const std::string& pred_dir,
                             const std::vector<ConsensusSymmetry>& gts,
                             SymmetryKind kind, const EvalOptions& opt = {});

void write_curve_csv(const std::string& path, const EvalCurve& curve);
void write_per_image_csv(const std::string& path, const EvalReport& report);

// key: value lines covering both detectors and the paired test.
std::string compare_summary(const EvalReport& a, const EvalReport& b,
                            const PairedTest& test);

}  // namespace symkit
