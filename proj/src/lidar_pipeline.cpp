#include "dcage/lidar_pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "dcage/errors.hpp"

namespace dcage {

namespace {

struct CellKey {
  std::int64_t ix;
  std::int64_t iy;
  bool operator==(const CellKey&) const = default;
};

struct CellHash {
  std::size_t operator()(const CellKey& k) const noexcept {
    return std::hash<std::int64_t>{}(k.ix * 73856093LL ^ k.iy * 19349663LL);
  }
};

class DisjointSet {
 public:
  explicit DisjointSet(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }

  std::size_t find(std::size_t i) {
    while (parent_[i] != i) {
      parent_[i] = parent_[parent_[i]];
      i = parent_[i];
    }
    return i;
  }

  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (a > b) std::swap(a, b);
    parent_[b] = a;  // smallest index stays root
  }

 private:
  std::vector<std::size_t> parent_;
};

}  // namespace

void FilterConfig::validate() const {
  if (!(z_min < z_max)) throw ConfigError("z_min must be below z_max");
  if (!(cluster_eps > 0.0)) throw ConfigError("cluster_eps must be strictly positive");
  if (cluster_min_pts < 1) throw ConfigError("cluster_min_pts must be at least 1");
}

LidarScan z_cutoff(const LidarScan& scan, const FilterConfig& cfg) {
  LidarScan out;
  out.timestamp_ms = scan.timestamp_ms;
  out.seq = scan.seq;
  std::copy_if(scan.points.begin(), scan.points.end(), std::back_inserter(out.points),
               [&](const Point3d& p) { return p.z() >= cfg.z_min && p.z() <= cfg.z_max; });
  return out;
}

std::vector<Cluster> cluster(const std::vector<Point2d>& points, const FilterConfig& cfg) {
  const std::size_t n = points.size();
  const double eps = cfg.cluster_eps;
  const double eps2 = eps * eps;

  std::unordered_map<CellKey, std::vector<std::size_t>, CellHash> grid;
  grid.reserve(n);
  auto key_of = [eps](const Point2d& p) {
    return CellKey{static_cast<std::int64_t>(std::floor(p.x() / eps)),
                   static_cast<std::int64_t>(std::floor(p.y() / eps))};
  };
  for (std::size_t i = 0; i < n; ++i) grid[key_of(points[i])].push_back(i);

  DisjointSet sets(n);
  for (std::size_t i = 0; i < n; ++i) {
    const CellKey k = key_of(points[i]);
    for (std::int64_t dx = -1; dx <= 1; ++dx) {
      for (std::int64_t dy = -1; dy <= 1; ++dy) {
        auto it = grid.find({k.ix + dx, k.iy + dy});
        if (it == grid.end()) continue;
        for (std::size_t j : it->second) {
          if (j > i && (points[i] - points[j]).squaredNorm() <= eps2) sets.unite(i, j);
        }
      }
    }
  }

  std::vector<std::size_t> sizes(n, 0);
  for (std::size_t i = 0; i < n; ++i) ++sizes[sets.find(i)];

  std::vector<Cluster> clusters;
  std::vector<std::ptrdiff_t> slot(n, -1);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t root = sets.find(i);
    if (sizes[root] < cfg.cluster_min_pts) continue;
    if (slot[root] < 0) {
      slot[root] = static_cast<std::ptrdiff_t>(clusters.size());
      clusters.emplace_back();
    }
    clusters[static_cast<std::size_t>(slot[root])].push_back(points[i]);
  }
  return clusters;
}

LidarVerdict evaluate(const LidarScan& scan, const ZonePolygon& zone, const FilterConfig& cfg,
                      const VehicleGeometry& geom) {
  const LidarScan band = z_cutoff(scan, cfg);
  std::vector<Point2d> planar;
  planar.reserve(band.points.size());
  for (const auto& p : band.points) planar.emplace_back(p.x(), p.y());

  LidarVerdict verdict;
  verdict.scan_seq = scan.seq;
  const Point2d bumper = geom.front_bumper_mid();
  for (const auto& group : cluster(planar, cfg)) {
    for (const auto& p : group) {
      if (!contains(zone, p)) continue;
      verdict.offending_points.push_back(p);
      const double d = (p - bumper).norm();
      if (!verdict.nearest_obstacle_distance || d < *verdict.nearest_obstacle_distance) {
        verdict.nearest_obstacle_distance = d;
      }
    }
  }
  verdict.cage_state = verdict.offending_points.empty() ? CageState::Free : CageState::Occupied;
  return verdict;
}

}  // namespace dcage
