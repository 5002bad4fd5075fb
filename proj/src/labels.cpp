#include "symkit/labels.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <stdexcept>

#include <json.hpp>

namespace symkit {

using nlohmann::json;

std::string kind_name(SymmetryKind k) {
  return k == SymmetryKind::reflection ? "reflection" : "rotation";
}

SymmetryKind parse_kind(const std::string& s) {
  if (s == "reflection") return SymmetryKind::reflection;
  if (s == "rotation") return SymmetryKind::rotation;
  throw std::runtime_error("labels: unknown kind '" + s + "'");
}

namespace {

std::size_t expected_points(SymmetryKind k) {
  return k == SymmetryKind::reflection ? 2 : 1;
}

std::vector<Point> parse_points(const json& j, SymmetryKind kind, int lineno) {
  if (!j.is_array())
    throw std::runtime_error("labels: line " + std::to_string(lineno) +
                             ": points is not an array");
  std::vector<Point> pts;
  for (const auto& p : j) {
    if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number())
      throw std::runtime_error("labels: line " + std::to_string(lineno) +
                               ": each point must be [x, y]");
    Point pt{p[0].get<double>(), p[1].get<double>()};
    if (!std::isfinite(pt.x) || !std::isfinite(pt.y))
      throw std::runtime_error("labels: line " + std::to_string(lineno) +
                               ": non-finite coordinate");
    pts.push_back(pt);
  }
  if (pts.size() != expected_points(kind))
    throw std::runtime_error(
        "labels: line " + std::to_string(lineno) + ": " + kind_name(kind) +
        " needs " + std::to_string(expected_points(kind)) + " points, got " +
        std::to_string(pts.size()));
  return pts;
}

json points_json(const std::vector<Point>& pts) {
  json arr = json::array();
  for (const Point& p : pts) arr.push_back(json::array({p.x, p.y}));
  return arr;
}

std::string req_string(const json& j, const char* key, int lineno) {
  if (!j.contains(key) || !j[key].is_string())
    throw std::runtime_error("labels: line " + std::to_string(lineno) +
                             ": missing string field '" + key + "'");
  return j[key].get<std::string>();
}

json parse_line(const std::string& line, int lineno) {
  try {
    return json::parse(line);
  } catch (const json::parse_error& e) {
    throw std::runtime_error("labels: line " + std::to_string(lineno) +
                             ": invalid JSON: " + e.what());
  }
}

}  // namespace

LabelSet parse_labels(std::istream& is) {
  LabelSet out;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j = parse_line(line, lineno);
    LabelRecord rec;
    rec.image_id = req_string(j, "image_id", lineno);
    rec.rater_id = req_string(j, "rater_id", lineno);
    try {
      rec.kind = parse_kind(req_string(j, "kind", lineno));
    } catch (const std::runtime_error& e) {
      throw std::runtime_error("labels: line " + std::to_string(lineno) + ": " +
                               e.what());
    }
    if (!j.contains("points"))
      throw std::runtime_error("labels: line " + std::to_string(lineno) +
                               ": missing field 'points'");
    rec.points = parse_points(j["points"], rec.kind, lineno);
    out.push_back(std::move(rec));
  }
  return out;
}

LabelSet load_labels(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("labels: cannot open " + path);
  return parse_labels(is);
}

void write_labels(std::ostream& os, const LabelSet& labels) {
  for (const LabelRecord& r : labels) {
    json j;
    j["image_id"] = r.image_id;
    j["rater_id"] = r.rater_id;
    j["kind"] = kind_name(r.kind);
    j["points"] = points_json(r.points);
    os << j.dump() << "\n";
  }
}

std::vector<ConsensusSymmetry> parse_consensus(std::istream& is) {
  std::vector<ConsensusSymmetry> out;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j = parse_line(line, lineno);
    ConsensusSymmetry c;
    c.image_id = req_string(j, "image_id", lineno);
    try {
      c.kind = parse_kind(req_string(j, "kind", lineno));
    } catch (const std::runtime_error& e) {
      throw std::runtime_error("labels: line " + std::to_string(lineno) + ": " +
                               e.what());
    }
    if (!j.contains("points"))
      throw std::runtime_error("labels: line " + std::to_string(lineno) +
                               ": missing field 'points'");
    c.geometry = parse_points(j["points"], c.kind, lineno);
    if (!j.contains("support") || !j["support"].is_number_integer())
      throw std::runtime_error("labels: line " + std::to_string(lineno) +
                               ": missing integer field 'support'");
    c.support = j["support"].get<int>();
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<ConsensusSymmetry> load_consensus(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("labels: cannot open " + path);
  return parse_consensus(is);
}

void write_consensus(std::ostream& os, const std::vector<ConsensusSymmetry>& gts) {
  for (const ConsensusSymmetry& c : gts) {
    json j;
    j["image_id"] = c.image_id;
    j["kind"] = kind_name(c.kind);
    j["points"] = points_json(c.geometry);
    j["support"] = c.support;
    os << j.dump() << "\n";
  }
}

void save_consensus(const std::string& path,
                    const std::vector<ConsensusSymmetry>& gts) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("labels: cannot open " + path + " for write");
  write_consensus(os, gts);
}

namespace {

double dist(const Point& a, const Point& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

}  // namespace

double label_distance(const LabelRecord& a, const LabelRecord& b) {
  if (a.kind != b.kind)
    throw std::invalid_argument("label_distance: labels of different kinds");
  if (a.kind == SymmetryKind::rotation) return dist(a.points[0], b.points[0]);
  double keep = std::max(dist(a.points[0], b.points[0]),
                         dist(a.points[1], b.points[1]));
  double swap = std::max(dist(a.points[0], b.points[1]),
                         dist(a.points[1], b.points[0]));
  return std::min(keep, swap);
}

namespace {

bool canonical_less(const LabelRecord& a, const LabelRecord& b) {
  if (a.rater_id != b.rater_id) return a.rater_id < b.rater_id;
  for (std::size_t i = 0; i < std::min(a.points.size(), b.points.size()); ++i) {
    if (a.points[i].x != b.points[i].x) return a.points[i].x < b.points[i].x;
    if (a.points[i].y != b.points[i].y) return a.points[i].y < b.points[i].y;
  }
  return a.points.size() < b.points.size();
}

// Mean geometry of a cluster. Axes are first oriented so endpoint pairing
// agrees with the cluster's first member, then averaged per endpoint.
std::vector<Point> representative(const std::vector<const LabelRecord*>& members,
                                  SymmetryKind kind) {
  if (kind == SymmetryKind::rotation) {
    Point m{0.0, 0.0};
    for (const LabelRecord* r : members) {
      m.x += r->points[0].x;
      m.y += r->points[0].y;
    }
    m.x /= static_cast<double>(members.size());
    m.y /= static_cast<double>(members.size());
    return {m};
  }
  const LabelRecord* anchor = members[0];
  Point e0{0.0, 0.0}, e1{0.0, 0.0};
  for (const LabelRecord* r : members) {
    Point a = r->points[0], b = r->points[1];
    double keep = std::max(dist(a, anchor->points[0]), dist(b, anchor->points[1]));
    double swap = std::max(dist(a, anchor->points[1]), dist(b, anchor->points[0]));
    if (swap < keep) std::swap(a, b);
    e0.x += a.x;
    e0.y += a.y;
    e1.x += b.x;
    e1.y += b.y;
  }
  double n = static_cast<double>(members.size());
  return {{e0.x / n, e0.y / n}, {e1.x / n, e1.y / n}};
}

std::vector<ConsensusSymmetry> cluster_one_kind(
    std::vector<const LabelRecord*> pts, SymmetryKind kind,
    const std::string& image_id, const ClusterConfig& cfg) {
  std::sort(pts.begin(), pts.end(),
            [](const LabelRecord* a, const LabelRecord* b) {
              return canonical_less(*a, *b);
            });
  int n = static_cast<int>(pts.size());
  std::vector<std::vector<int>> nbr(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (label_distance(*pts[i], *pts[j]) <= cfg.tau) nbr[i].push_back(j);

  std::vector<bool> is_core(n);
  for (int i = 0; i < n; ++i)
    is_core[i] = static_cast<int>(nbr[i].size()) >= cfg.min_labelers;

  // -1 unassigned, else cluster id; expansion is FIFO from core points only,
  // so a border point keeps the first cluster that reaches it
  std::vector<int> cluster(n, -1);
  int next_id = 0;
  for (int seed = 0; seed < n; ++seed) {
    if (cluster[seed] != -1 || !is_core[seed]) continue;
    int id = next_id++;
    std::deque<int> queue{seed};
    cluster[seed] = id;
    while (!queue.empty()) {
      int cur = queue.front();
      queue.pop_front();
      if (!is_core[cur]) continue;
      for (int nb : nbr[cur])
        if (cluster[nb] == -1) {
          cluster[nb] = id;
          queue.push_back(nb);
        }
    }
  }

  std::vector<ConsensusSymmetry> out;
  for (int id = 0; id < next_id; ++id) {
    std::vector<const LabelRecord*> members;
    std::set<std::string> raters;
    for (int i = 0; i < n; ++i)
      if (cluster[i] == id) {
        members.push_back(pts[i]);
        raters.insert(pts[i]->rater_id);
      }
    ConsensusSymmetry c;
    c.image_id = image_id;
    c.kind = kind;
    c.geometry = representative(members, kind);
    c.support = static_cast<int>(raters.size());
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace

std::vector<ConsensusSymmetry> cluster_labels(const LabelSet& labels,
                                              const ClusterConfig& cfg) {
  if (cfg.tau < 0.0)
    throw std::invalid_argument("cluster: tau must be non-negative");
  if (cfg.min_labelers < 1)
    throw std::invalid_argument("cluster: min_labelers must be >= 1");
  if (labels.empty()) return {};
  const std::string& image_id = labels[0].image_id;
  for (const LabelRecord& r : labels)
    if (r.image_id != image_id)
      throw std::invalid_argument("cluster: labels span multiple images ('" +
                                  image_id + "' and '" + r.image_id + "')");

  std::vector<ConsensusSymmetry> out;
  for (SymmetryKind kind : {SymmetryKind::reflection, SymmetryKind::rotation}) {
    std::vector<const LabelRecord*> pts;
    for (const LabelRecord& r : labels)
      if (r.kind == kind) pts.push_back(&r);
    if (pts.empty()) continue;
    auto part = cluster_one_kind(std::move(pts), kind, image_id, cfg);
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

std::vector<ConsensusSymmetry> cluster_all_images(const LabelSet& labels,
                                                  const ClusterConfig& cfg) {
  std::map<std::string, LabelSet> by_image;
  for (const LabelRecord& r : labels) by_image[r.image_id].push_back(r);
  std::vector<ConsensusSymmetry> out;
  for (const auto& [id, set] : by_image) {
    auto part = cluster_labels(set, cfg);
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

std::vector<ConsensusSymmetry> filter_by_support(
    const std::vector<ConsensusSymmetry>& gts, int min_support) {
  std::vector<ConsensusSymmetry> out;
  for (const ConsensusSymmetry& c : gts)
    if (c.support >= min_support) out.push_back(c);
  return out;
}

}  // namespace symkit
