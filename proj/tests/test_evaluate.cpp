#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "doctest.h"
#include "symkit/evaluate.hpp"
#include "symkit/rng.hpp"

using namespace symkit;

namespace {

ConsensusSymmetry axis_gt(const std::string& id, double x0, double y0,
                          double x1, double y1, int support = 10) {
  ConsensusSymmetry g;
  g.image_id = id;
  g.kind = SymmetryKind::reflection;
  g.geometry = {{x0, y0}, {x1, y1}};
  g.support = support;
  return g;
}

ConsensusSymmetry center_gt(const std::string& id, double x, double y,
                            int support = 10) {
  ConsensusSymmetry g;
  g.image_id = id;
  g.kind = SymmetryKind::rotation;
  g.geometry = {{x, y}};
  g.support = support;
  return g;
}

// Exact maximum-cardinality matching on the <= tol bipartite graph
// (augmenting paths). Independent of the greedy implementation.
int optimal_matching(const std::vector<PixelCoord>& pred,
                     const std::vector<PixelCoord>& gt, double tol) {
  int np = static_cast<int>(pred.size()), ng = static_cast<int>(gt.size());
  std::vector<std::vector<int>> adj(np);
  for (int i = 0; i < np; ++i)
    for (int j = 0; j < ng; ++j) {
      double dx = pred[i].x - gt[j].x, dy = pred[i].y - gt[j].y;
      if (dx * dx + dy * dy <= tol * tol) adj[i].push_back(j);
    }
  std::vector<int> owner(ng, -1);
  std::vector<char> seen;
  std::function<bool(int)> augment = [&](int u) {
    for (int v : adj[u]) {
      if (seen[v]) continue;
      seen[v] = 1;
      if (owner[v] < 0 || augment(owner[v])) {
        owner[v] = u;
        return true;
      }
    }
    return false;
  };
  int total = 0;
  for (int u = 0; u < np; ++u) {
    seen.assign(ng, 0);
    if (augment(u)) ++total;
  }
  return total;
}

Heatmap ridge_map(int w, int h, int x_center, double side, double peak) {
  Heatmap hm(w, h);
  for (int y = 0; y < h; ++y) {
    if (x_center - 1 >= 0) hm.at(x_center - 1, y) = side;
    hm.at(x_center, y) = peak;
    if (x_center + 1 < w) hm.at(x_center + 1, y) = side;
  }
  return hm;
}

}  // namespace

TEST_CASE("thin: constant maps pass through unchanged") {
  Heatmap flat(9, 7, 0.42);
  Heatmap out = thin(flat);
  CHECK(out.values == flat.values);
}

TEST_CASE("thin: a one-pixel ridge survives intact") {
  Heatmap hm(13, 11);
  for (int y = 0; y < 11; ++y) hm.at(6, y) = 1.0;
  Heatmap out = thin(hm);
  CHECK(out.values == hm.values);

  // same for a horizontal ridge
  Heatmap hz(11, 13);
  for (int x = 0; x < 11; ++x) hz.at(x, 6) = 0.8;
  Heatmap out2 = thin(hz);
  CHECK(out2.values == hz.values);
}

TEST_CASE("thin: a three-pixel ridge collapses to its crest") {
  Heatmap hm = ridge_map(13, 11, 6, 0.5, 1.0);
  Heatmap out = thin(hm);
  for (int y = 0; y < 11; ++y)
    for (int x = 0; x < 13; ++x) {
      if (x == 6)
        CHECK(out.at(x, y) == 1.0);
      else
        CHECK(out.at(x, y) == 0.0);
    }
}

TEST_CASE("match_reflection: distance gate on the closed disk") {
  // (0,0) to (3,4) is exactly 5
  CHECK(match_reflection({{0, 0}}, {{3, 4}}, 5.0).tp == 1);
  MatchCounts far = match_reflection({{0, 0}}, {{4, 4}}, 5.0);  // sqrt(32)
  CHECK(far.tp == 0);
  CHECK(far.fp == 1);
  CHECK(far.fn == 1);

  MatchCounts same = match_reflection({{2, 3}, {7, 7}}, {{2, 3}, {7, 7}});
  CHECK(same.tp == 2);
  CHECK(same.fp == 0);
  CHECK(same.fn == 0);
}

TEST_CASE("match_reflection: one-to-one, closest pair first") {
  // both preds sit near the single gt; only one can claim it
  MatchCounts m = match_reflection({{0, 0}, {1, 0}}, {{1, 0}});
  CHECK(m.tp == 1);
  CHECK(m.fp == 1);
  CHECK(m.fn == 0);

  // the close pair locks in first, the far pred takes the leftover gt
  MatchCounts n = match_reflection({{0, 0}, {2, 0}}, {{2, 1}, {0, 4}});
  CHECK(n.tp == 2);

  MatchCounts none = match_reflection({}, {{1, 1}, {2, 2}});
  CHECK(none.tp == 0);
  CHECK(none.fp == 0);
  CHECK(none.fn == 2);
  MatchCounts nogt = match_reflection({{1, 1}}, {});
  CHECK(nogt.fp == 1);
  CHECK(nogt.fn == 0);

  CHECK_THROWS_WITH_AS(match_reflection({{0, 0}}, {{0, 0}}, 0.0),
                       doctest::Contains("tol"), std::invalid_argument);
}

TEST_CASE("match_reflection: swapping pred and gt mirrors the counts") {
  Rng rng(404);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<PixelCoord> a, b;
    int na = 1 + rng.uniform_int(12), nb = 1 + rng.uniform_int(12);
    for (int i = 0; i < na; ++i)
      a.push_back({rng.uniform_int(15), rng.uniform_int(15)});
    for (int i = 0; i < nb; ++i)
      b.push_back({rng.uniform_int(15), rng.uniform_int(15)});
    MatchCounts ab = match_reflection(a, b);
    MatchCounts ba = match_reflection(b, a);
    CHECK(ab.tp == ba.tp);
    CHECK(ab.fp == ba.fn);
    CHECK(ab.fn == ba.fp);
  }
}

TEST_CASE("match_reflection: greedy equals the assignment oracle on fixtures") {
  // hand-built configurations, all <= 12 pixels per side
  struct Fixture {
    std::vector<PixelCoord> pred, gt;
  };
  std::vector<Fixture> fixtures = {
      // identical sets
      {{{1, 1}, {4, 4}, {9, 2}}, {{1, 1}, {4, 4}, {9, 2}}},
      // shifted copy, every pair still in range
      {{{0, 0}, {3, 0}, {6, 0}, {9, 0}}, {{1, 1}, {4, 1}, {7, 1}, {10, 1}}},
      // two clusters with a clean split
      {{{0, 0}, {1, 0}, {12, 12}, {13, 12}}, {{0, 1}, {1, 1}, {12, 13}}},
      // surplus predictions around one gt
      {{{5, 5}, {6, 5}, {5, 6}, {7, 7}}, {{6, 6}}},
      // nothing in range at all
      {{{0, 0}, {1, 0}}, {{10, 10}, {12, 12}}},
      // exactly on the distance-5 boundary
      {{{0, 0}, {10, 0}}, {{3, 4}, {13, 4}}},
      // empty against nonempty
      {{}, {{2, 2}}},
  };
  for (const Fixture& f : fixtures) {
    int greedy = match_reflection(f.pred, f.gt).tp;
    CHECK(greedy == optimal_matching(f.pred, f.gt, 5.0));
  }

  // a seeded corpus that the oracle certifies pair by pair
  Rng rng(279);
  for (int trial = 0; trial < 25; ++trial) {
    std::vector<PixelCoord> pred, gt;
    int np = 1 + rng.uniform_int(12), ng = 1 + rng.uniform_int(12);
    for (int i = 0; i < np; ++i)
      pred.push_back({rng.uniform_int(15), rng.uniform_int(15)});
    for (int i = 0; i < ng; ++i)
      gt.push_back({rng.uniform_int(15), rng.uniform_int(15)});
    int greedy = match_reflection(pred, gt).tp;
    int best = optimal_matching(pred, gt, 5.0);
    CHECK(greedy == best);
  }
}

TEST_CASE("match_reflection: greedy stays within the maximal-matching bound") {
  // closest-pair-first can lose to the optimal assignment on chains: the
  // middle pred grabs the near gt and strands its neighbor
  std::vector<PixelCoord> pred = {{0, 0}, {3, 0}};
  std::vector<PixelCoord> gt = {{2, 0}, {8, 0}};
  CHECK(match_reflection(pred, gt).tp == 1);
  CHECK(optimal_matching(pred, gt, 5.0) == 2);

  // any maximal matching holds at least half the optimum, never exceeds it
  Rng rng(4242);
  for (int trial = 0; trial < 400; ++trial) {
    std::vector<PixelCoord> p, g;
    int np = 1 + rng.uniform_int(12), ng = 1 + rng.uniform_int(12);
    for (int i = 0; i < np; ++i)
      p.push_back({rng.uniform_int(15), rng.uniform_int(15)});
    for (int i = 0; i < ng; ++i)
      g.push_back({rng.uniform_int(15), rng.uniform_int(15)});
    int greedy = match_reflection(p, g).tp;
    int best = optimal_matching(p, g, 5.0);
    CHECK(greedy <= best);
    CHECK(2 * greedy >= best);
  }
}

TEST_CASE("match_rotation: closed disks, overlaps recall both centers") {
  RotationMatch in = match_rotation({{3, 4}}, {{0.0, 0.0}});  // distance 5
  CHECK(in.tp == 1);
  CHECK(in.recalled == 1);
  RotationMatch out = match_rotation({{6, 0}}, {{0.0, 0.0}});  // distance 6
  CHECK(out.tp == 0);
  CHECK(out.fp == 1);
  CHECK(out.recalled == 0);

  // one pixel inside two overlapping disks
  RotationMatch both = match_rotation({{3, 0}}, {{0.0, 0.0}, {6.0, 0.0}});
  CHECK(both.tp == 1);
  CHECK(both.fp == 0);
  CHECK(both.recalled == 2);

  RotationMatch empty = match_rotation({}, {{5.0, 5.0}});
  CHECK(empty.recalled == 0);
  CHECK(empty.tp == 0);

  CHECK_THROWS_AS(match_rotation({{0, 0}}, {{0.0, 0.0}}, -1.0),
                  std::invalid_argument);
}

TEST_CASE("pr_curve: threshold grid is k over n minus 1") {
  Heatmap pred(16, 16, 0.0);
  std::vector<ConsensusSymmetry> gts = {axis_gt("i", 8, 0, 8, 15)};
  EvalCurve c = pr_curve(pred, gts, SymmetryKind::reflection);
  REQUIRE(c.thresholds.size() == 100);
  CHECK(c.thresholds[0] == 0.0);
  CHECK(c.thresholds[37] == static_cast<double>(37) / 99);
  CHECK(c.thresholds[99] == 1.0);

  EvalOptions opt;
  opt.n_thresholds = 5;
  EvalCurve c5 = pr_curve(pred, gts, SymmetryKind::reflection, opt);
  REQUIRE(c5.thresholds.size() == 5);
  CHECK(c5.thresholds[1] == 0.25);
  CHECK(c5.thresholds[3] == 0.75);

  opt.n_thresholds = 1;
  CHECK_THROWS_WITH_AS(pr_curve(pred, gts, SymmetryKind::reflection, opt),
                       doctest::Contains("at least 2"), std::invalid_argument);
  EvalOptions bad;
  bad.tol = 0.0;
  CHECK_THROWS_AS(pr_curve(pred, gts, SymmetryKind::reflection, bad),
                  std::invalid_argument);
  CHECK_THROWS_WITH_AS(pr_curve(pred, gts, SymmetryKind::rotation),
                       doctest::Contains("no rotation ground truth"),
                       std::invalid_argument);
}

TEST_CASE("pr_curve: an all-zero prediction is vacuously precise") {
  Heatmap pred(25, 25, 0.0);
  std::vector<ConsensusSymmetry> gts = {axis_gt("i", 12, 0, 12, 24)};
  EvalCurve c = pr_curve(pred, gts, SymmetryKind::reflection);
  // t = 0: every pixel is a detection, recall saturates, precision is thin
  CHECK(c.recall[0] == 1.0);
  CHECK(c.precision[0] == doctest::Approx(25.0 / 625.0).epsilon(1e-12));
  for (int k = 1; k < 100; ++k) {
    CHECK(c.precision[k] == 1.0);
    CHECK(c.recall[k] == 0.0);
  }
}

TEST_CASE("pr_curve: synthesized target scores itself perfectly") {
  // a two-pixel axis puts the exact value 1.0 on both rasterized pixels
  // (each sums the same two gaussian terms), so at threshold 1.0 the
  // detections are exactly the axis and p = r = 1
  std::vector<ConsensusSymmetry> gts = {axis_gt("i", 20, 20, 20, 21)};
  auto [refl, rot] = synth_gt(gts, 41, 41, SynthConfig{});
  EvalCurve c = pr_curve(refl, gts, SymmetryKind::reflection);
  CHECK(c.precision[99] == 1.0);
  CHECK(c.recall[99] == 1.0);
  auto [f, ft] = max_f(c);
  CHECK(f == 1.0);

  std::vector<ConsensusSymmetry> rgts = {center_gt("i", 16, 16)};
  auto [refl2, rot2] = synth_gt(rgts, 33, 33, SynthConfig{});
  EvalCurve rc = pr_curve(rot2, rgts, SymmetryKind::rotation);
  // the center pixel alone reaches 1.0, so the top threshold is exact
  CHECK(rc.precision[99] == 1.0);
  CHECK(rc.recall[99] == 1.0);
  CHECK(max_f(rc).first == 1.0);
}

TEST_CASE("pr_curve: long axis self-eval weathers the end decay") {
  // the gaussian sum sags toward the segment ends (fewer nearby terms),
  // so a full-height axis cannot hold p = r = 1 at the top threshold;
  // the 5 px matching tolerance still absorbs the end pixels lower down
  std::vector<ConsensusSymmetry> gts = {axis_gt("i", 20, 0, 20, 40)};
  auto [refl, rot] = synth_gt(gts, 41, 41, SynthConfig{});
  EvalCurve c = pr_curve(refl, gts, SymmetryKind::reflection);
  CHECK(c.recall[1] == 1.0);
  auto [f, ft] = max_f(c);
  CHECK(f > 0.95);
}

TEST_CASE("pr_curve: recall never rises with the threshold") {
  Rng rng(808);
  for (int trial = 0; trial < 10; ++trial) {
    Heatmap pred(25, 25);
    for (double& v : pred.values) v = rng.uniform();
    std::vector<ConsensusSymmetry> gts = {
        axis_gt("i", rng.uniform_int(25), rng.uniform_int(25),
                rng.uniform_int(25), rng.uniform_int(25))};
    EvalCurve c = pr_curve(pred, gts, SymmetryKind::reflection);
    for (std::size_t k = 1; k < c.recall.size(); ++k)
      CHECK(c.recall[k] <= c.recall[k - 1] + 1e-12);

    std::vector<ConsensusSymmetry> rgts = {
        center_gt("i", 3 + rng.uniform_int(19), 3 + rng.uniform_int(19)),
        center_gt("i", 3 + rng.uniform_int(19), 3 + rng.uniform_int(19))};
    EvalCurve rc = pr_curve(pred, rgts, SymmetryKind::rotation);
    for (std::size_t k = 1; k < rc.recall.size(); ++k)
      CHECK(rc.recall[k] <= rc.recall[k - 1] + 1e-12);
  }
}

TEST_CASE("max_f: harmonic mean fixtures and the smallest-threshold rule") {
  EvalCurve c;
  c.thresholds = {0.0, 0.5, 1.0};
  c.precision = {0.6, 0.2, 0.0};
  c.recall = {0.3, 0.2, 0.0};
  auto [f, t] = max_f(c);
  CHECK(f == doctest::Approx(0.4).epsilon(1e-12));  // 2*.6*.3/.9
  CHECK(t == 0.0);

  EvalCurve tie;
  tie.thresholds = {0.0, 0.5, 1.0};
  tie.precision = {0.5, 0.5, 0.1};
  tie.recall = {0.5, 0.5, 0.1};
  auto [tf, tt] = max_f(tie);
  CHECK(tf == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(tt == 0.0);  // first threshold achieving the max

  EvalCurve zero;
  zero.thresholds = {0.0, 1.0};
  zero.precision = {0.0, 0.0};
  zero.recall = {0.0, 0.0};
  CHECK(max_f(zero).first == 0.0);

  EvalCurve empty;
  CHECK_THROWS_WITH_AS(max_f(empty), doctest::Contains("empty"),
                       std::invalid_argument);
}

TEST_CASE("incomplete beta: closed forms and symmetry") {
  CHECK(regularized_incomplete_beta(1.0, 1.0, 0.37) ==
        doctest::Approx(0.37).epsilon(1e-12));
  // I_x(1, b) = 1 - (1-x)^b
  CHECK(regularized_incomplete_beta(1.0, 3.0, 0.2) ==
        doctest::Approx(1.0 - std::pow(0.8, 3.0)).epsilon(1e-12));
  // I_x(a, 1) = x^a
  CHECK(regularized_incomplete_beta(2.5, 1.0, 0.6) ==
        doctest::Approx(std::pow(0.6, 2.5)).epsilon(1e-12));
  // arcsine law
  CHECK(regularized_incomplete_beta(0.5, 0.5, 0.3) ==
        doctest::Approx(2.0 / M_PI * std::asin(std::sqrt(0.3))).epsilon(1e-10));
  // complement symmetry
  double lhs = regularized_incomplete_beta(2.0, 3.5, 0.42);
  double rhs = 1.0 - regularized_incomplete_beta(3.5, 2.0, 0.58);
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
  CHECK(regularized_incomplete_beta(1.0, 1.0, 0.0) == 0.0);
  CHECK(regularized_incomplete_beta(1.0, 1.0, 1.0) == 1.0);
  CHECK_THROWS_AS(regularized_incomplete_beta(1.0, 1.0, -0.1),
                  std::invalid_argument);
  CHECK_THROWS_AS(regularized_incomplete_beta(1.0, 1.0, 1.1),
                  std::invalid_argument);
}

TEST_CASE("student t: df 1 and 2 match the closed forms") {
  // df = 1 is Cauchy: p = 1 - 2*atan(|t|)/pi
  CHECK(student_t_two_sided_p(1.0, 1) == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(student_t_two_sided_p(0.0, 5) == doctest::Approx(1.0).epsilon(1e-12));
  // df = 2: p = 1 - |t| / sqrt(t^2 + 2)
  for (double t : {0.5, 1.0, 2.0, 3.4641016151377544}) {
    double want = 1.0 - t / std::sqrt(t * t + 2.0);
    CHECK(student_t_two_sided_p(t, 2) == doctest::Approx(want).epsilon(1e-10));
  }
  CHECK_THROWS_AS(student_t_two_sided_p(1.0, 0), std::invalid_argument);
}

TEST_CASE("paired t: the (1,2,3) difference fixture") {
  PairedTest r = paired_t_test({2.0, 4.0, 6.0}, {1.0, 2.0, 3.0});
  // mean d = 2, sd = 1, t = 2 / (1/sqrt(3)) = 2*sqrt(3)
  CHECK(std::abs(r.t_statistic - 3.4641016151377544) < 1e-12);
  double want_p = 1.0 - 2.0 * std::sqrt(3.0) / std::sqrt(14.0);
  CHECK(r.p_value == doctest::Approx(want_p).epsilon(1e-10));
  CHECK(std::abs(r.p_value - 0.0742) < 1e-3);
  CHECK(r.n == 3);
  CHECK(!r.degenerate);
}

TEST_CASE("paired t: identical samples, sign flips, degeneracy") {
  PairedTest same = paired_t_test({1.0, 2.0, 3.0}, {1.0, 2.0, 3.0});
  CHECK(same.t_statistic == 0.0);
  CHECK(same.p_value == 1.0);
  CHECK(!same.degenerate);

  PairedTest fwd = paired_t_test({2.0, 4.0, 6.0}, {1.0, 2.0, 3.0});
  PairedTest rev = paired_t_test({1.0, 2.0, 3.0}, {2.0, 4.0, 6.0});
  CHECK(fwd.t_statistic == doctest::Approx(-rev.t_statistic).epsilon(1e-12));
  CHECK(fwd.p_value == doctest::Approx(rev.p_value).epsilon(1e-12));

  PairedTest deg = paired_t_test({2.0, 3.0, 4.0}, {1.0, 2.0, 3.0});
  CHECK(deg.degenerate);
  CHECK(deg.p_value == 0.0);
  CHECK(std::isinf(deg.t_statistic));
  CHECK(deg.t_statistic > 0);

  CHECK_THROWS_WITH_AS(paired_t_test({1.0}, {2.0}),
                       doctest::Contains("at least 2"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(paired_t_test({1.0, 2.0}, {1.0}),
                       doctest::Contains("differ in length"),
                       std::invalid_argument);
}

TEST_CASE("evaluate_heatmaps: sorted ids, perfect self-eval, mean curve") {
  SynthConfig sc;
  // two-pixel axes so the self-eval is exact at the top threshold
  std::vector<ConsensusSymmetry> gts = {axis_gt("bbb", 12, 12, 12, 13),
                                        axis_gt("aaa", 8, 12, 8, 13)};
  auto [pb, rb] = synth_gt({gts[0]}, 25, 25, sc);
  auto [pa, ra] = synth_gt({gts[1]}, 25, 25, sc);
  std::vector<std::pair<std::string, Heatmap>> preds = {{"bbb", pb},
                                                        {"aaa", pa}};
  EvalReport rep = evaluate_heatmaps("self", preds, gts,
                                     SymmetryKind::reflection);
  CHECK(rep.detector == "self");
  REQUIRE(rep.image_ids.size() == 2);
  CHECK(rep.image_ids[0] == "aaa");
  CHECK(rep.image_ids[1] == "bbb");
  CHECK(rep.image_max_f[0] == 1.0);
  CHECK(rep.image_max_f[1] == 1.0);
  CHECK(rep.max_f == 1.0);
  REQUIRE(rep.mean_curve.thresholds.size() == 100);
  // identical per-image curves would average to themselves; here both are
  // perfect somewhere, so the mean curve must also touch p = r = 1
  bool touch = false;
  for (std::size_t k = 0; k < rep.mean_curve.thresholds.size(); ++k)
    if (rep.mean_curve.precision[k] == 1.0 && rep.mean_curve.recall[k] == 1.0)
      touch = true;
  CHECK(touch);
}

TEST_CASE("evaluate_heatmaps: support filter and missing predictions") {
  std::vector<ConsensusSymmetry> gts = {axis_gt("keep", 8, 0, 8, 15, 31),
                                        axis_gt("drop", 8, 0, 8, 15, 19)};
  Heatmap blank(16, 16, 0.0);
  EvalOptions opt;
  opt.min_support = 20;
  EvalReport rep = evaluate_heatmaps(
      "d", {{"keep", blank}, {"drop", blank}}, gts, SymmetryKind::reflection,
      opt);
  REQUIRE(rep.image_ids.size() == 1);
  CHECK(rep.image_ids[0] == "keep");

  opt.min_support = 40;
  CHECK_THROWS_WITH_AS(
      evaluate_heatmaps("d", {{"keep", blank}}, gts, SymmetryKind::reflection,
                        opt),
      doctest::Contains("left to score"), std::invalid_argument);

  CHECK_THROWS_WITH_AS(
      evaluate_heatmaps("d", {{"keep", blank}}, gts, SymmetryKind::reflection),
      doctest::Contains("missing predictions for: drop"), std::runtime_error);
}

TEST_CASE("evaluate + paired t: real targets beat blank maps decisively") {
  SynthConfig sc;
  std::vector<ConsensusSymmetry> gts = {axis_gt("a", 12, 12, 12, 13),
                                        axis_gt("b", 15, 15, 15, 16),
                                        axis_gt("c", 20, 20, 20, 21)};
  std::vector<std::pair<std::string, Heatmap>> good, blank;
  std::vector<std::pair<std::string, int>> sizes = {{"a", 25}, {"b", 31},
                                                    {"c", 41}};
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    auto [refl, rot] = synth_gt({gts[i]}, sizes[i].second, sizes[i].second, sc);
    good.emplace_back(sizes[i].first, refl);
    blank.emplace_back(sizes[i].first,
                       Heatmap(sizes[i].second, sizes[i].second, 0.0));
  }
  EvalReport rg = evaluate_heatmaps("good", good, gts,
                                    SymmetryKind::reflection);
  EvalReport rb = evaluate_heatmaps("blank", blank, gts,
                                    SymmetryKind::reflection);
  CHECK(rg.max_f == 1.0);
  CHECK(rb.max_f < 0.5);
  PairedTest t = paired_t_test(rg.image_max_f, rb.image_max_f);
  CHECK(t.t_statistic > 3.0);
  CHECK(t.p_value < 0.05);
  std::string summary = compare_summary(rg, rb, t);
  CHECK(summary.find("detector_a: good\n") != std::string::npos);
  CHECK(summary.find("detector_b: blank\n") != std::string::npos);
  CHECK(summary.find("images: 3\n") != std::string::npos);
  CHECK(summary.find("t_statistic: ") != std::string::npos);
  CHECK(summary.find("p_value: ") != std::string::npos);
}

TEST_CASE("evaluate_detector: reads pgm predictions, names missing files") {
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / "symkit_test_preds";
  fs::remove_all(dir);
  fs::create_directories(dir);

  SynthConfig sc;
  std::vector<ConsensusSymmetry> gts = {axis_gt("imgA", 12, 12, 12, 13),
                                        axis_gt("imgB", 8, 12, 8, 13)};
  for (const auto& g : gts) {
    auto [refl, rot] = synth_gt({g}, 25, 25, sc);
    save_heatmap((dir / (g.image_id + ".pgm")).string(), refl);
  }
  EvalReport rep = evaluate_detector("files", dir.string(), gts,
                                     SymmetryKind::reflection);
  CHECK(rep.image_ids.size() == 2);
  CHECK(rep.max_f == 1.0);

  fs::remove(dir / "imgB.pgm");
  CHECK_THROWS_WITH_AS(
      evaluate_detector("files", dir.string(), gts, SymmetryKind::reflection),
      doctest::Contains("missing prediction files"), std::runtime_error);
  fs::remove_all(dir);
}

TEST_CASE("csv writers: exact layout") {
  namespace fs = std::filesystem;
  EvalCurve c;
  c.thresholds = {0.0, 1.0};
  c.precision = {1.0, 0.5};
  c.recall = {0.0, 1.0};
  fs::path p1 = fs::temp_directory_path() / "symkit_test_curve.csv";
  write_curve_csv(p1.string(), c);
  std::ifstream is1(p1);
  std::stringstream ss1;
  ss1 << is1.rdbuf();
  CHECK(ss1.str() == "threshold,precision,recall\n0,1,0\n1,0.5,1\n");
  fs::remove(p1);

  EvalReport rep;
  rep.detector = "d";
  rep.image_ids = {"x", "y"};
  rep.image_max_f = {0.75, 1.0};
  rep.image_max_f_threshold = {0.25, 0.0};
  fs::path p2 = fs::temp_directory_path() / "symkit_test_per_image.csv";
  write_per_image_csv(p2.string(), rep);
  std::ifstream is2(p2);
  std::stringstream ss2;
  ss2 << is2.rdbuf();
  CHECK(ss2.str() == "image_id,max_f,threshold\nx,0.75,0.25\ny,1,0\n");
  fs::remove(p2);

  CHECK_THROWS_AS(write_curve_csv("/nonexistent_dir_zz/c.csv", c),
                  std::runtime_error);
}
