#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace symkit {

enum class SymmetryKind { reflection, rotation };

std::string kind_name(SymmetryKind k);
SymmetryKind parse_kind(const std::string& s);

struct Point {
  double x = 0.0;
  double y = 0.0;
};

// One rater's annotation: an axis (2 points) or a rotation center (1 point).
struct LabelRecord {
  std::string image_id;
  std::string rater_id;
  SymmetryKind kind = SymmetryKind::reflection;
  std::vector<Point> points;
};

using LabelSet = std::vector<LabelRecord>;

struct ConsensusSymmetry {
  std::string image_id;
  SymmetryKind kind = SymmetryKind::reflection;
  std::vector<Point> geometry;
  int support = 0;
};

struct ClusterConfig {
  double tau = 5.0;
  int min_labelers = 5;
};

// JSONL, one record per line. Parse errors carry the line number.
LabelSet parse_labels(std::istream& is);
LabelSet load_labels(const std::string& path);
void write_labels(std::ostream& os, const LabelSet& labels);

std::vector<ConsensusSymmetry> parse_consensus(std::istream& is);
std::vector<ConsensusSymmetry> load_consensus(const std::string& path);
void write_consensus(std::ostream& os, const std::vector<ConsensusSymmetry>& gts);
void save_consensus(const std::string& path,
                    const std::vector<ConsensusSymmetry>& gts);

// Distance between two same-kind labels. Axes compare under both endpoint
// pairings and take the smaller max-endpoint distance; centers compare
// euclidean.
double label_distance(const LabelRecord& a, const LabelRecord& b);

// Density clustering per kind within one image. Labels are visited in a
// canonical order (rater_id, then coordinates), so the result does not
// depend on input permutation. A label is core when at least min_labelers
// labels (itself included) lie within tau; border labels join the first
// core cluster that reaches them.
std::vector<ConsensusSymmetry> cluster_labels(const LabelSet& labels,
                                              const ClusterConfig& cfg);

// Groups by image_id first; images processed in sorted order.
std::vector<ConsensusSymmetry> cluster_all_images(const LabelSet& labels,
                                                  const ClusterConfig& cfg);

std::vector<ConsensusSymmetry> filter_by_support(
    const std::vector<ConsensusSymmetry>& gts, int min_support);

}  // namespace symkit
