#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "dcage/driving_mode.hpp"
#include "dcage/geometry.hpp"
#include "dcage/safe_zone.hpp"

namespace dcage {

/// Point cloud in the vehicle frame.
struct LidarScan {
  std::vector<Point3d> points;
  std::int64_t timestamp_ms{0};
  std::uint64_t seq{0};
};

struct FilterConfig {
  double z_min{0.10};
  double z_max{2.50};
  double cluster_eps{0.30};
  std::size_t cluster_min_pts{3};

  void validate() const;
};

struct LidarVerdict {
  CageState cage_state{CageState::Free};
  std::vector<Point2d> offending_points;
  std::optional<double> nearest_obstacle_distance;
  std::uint64_t scan_seq{0};
};

using Cluster = std::vector<Point2d>;

/// Keeps points with z_min <= z <= z_max; order, seq and timestamp preserved.
LidarScan z_cutoff(const LidarScan& scan, const FilterConfig& cfg);

/// Connected components of the eps-neighbourhood graph; components smaller
/// than cluster_min_pts are ghost noise and dropped. Clusters come out ordered
/// by their first member's input index, members in input order.
std::vector<Cluster> cluster(const std::vector<Point2d>& points, const FilterConfig& cfg);

/// z-cutoff, clustering, then zone membership. Distances are measured from
/// the front-bumper midpoint of `geom`.
LidarVerdict evaluate(const LidarScan& scan, const ZonePolygon& zone, const FilterConfig& cfg,
                      const VehicleGeometry& geom = {});

}  // namespace dcage
