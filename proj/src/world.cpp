#include "dcage/world.hpp"

#include <cmath>

#include "dcage/errors.hpp"

namespace dcage {

namespace {

void check_window(const TimeWindow& w, const char* what) {
  if (!(w.from_ms < w.to_ms)) throw ConfigError(std::string(what) + ": window must have from_ms < to_ms");
}

}  // namespace

void WorldModel::validate() const {
  for (const auto& o : obstacles) {
    if (o.outline.size() < 3 || !is_simple(o.outline)) {
      throw ConfigError("obstacle '" + o.name + "' outline must be a simple polygon");
    }
    if (!(o.height > 0.0)) throw ConfigError("obstacle '" + o.name + "' height must be positive");
  }
  for (const auto& name : route) {
    if (!delivery_points.contains(name)) throw ConfigError("route references unknown point '" + name + "'");
  }
}

Point2d WorldModel::point(const std::string& name) const {
  auto it = delivery_points.find(name);
  if (it == delivery_points.end()) throw ConfigError("unknown point '" + name + "'");
  return it->second;
}

void FaultSchedule::validate() const {
  for (const auto& g : ghost_points) {
    check_window(g.window, "ghost_points");
    if (g.count < 0) throw ConfigError("ghost_points: count must be non-negative");
    if (!(g.x_min < g.x_max && g.y_min < g.y_max)) throw ConfigError("ghost_points: empty region");
  }
  for (const auto& c : camera_freeze) check_window(c.window, "camera_freeze");
  for (const auto& l : link_faults) {
    check_window(l.window, "link_faults");
    if (l.drop_probability < 0.0 || l.drop_probability > 1.0) {
      throw ConfigError("link_faults: drop_probability must lie in [0, 1]");
    }
  }
}

bool FaultSchedule::camera_frozen(CameraId id, std::int64_t t) const {
  for (const auto& c : camera_freeze) {
    if (c.camera == id && c.window.contains(t)) return true;
  }
  return false;
}

double FaultSchedule::link_drop_probability(std::int64_t t) const {
  double p = 0.0;
  for (const auto& l : link_faults) {
    if (l.window.contains(t)) p = std::max(p, l.drop_probability);
  }
  return p;
}

std::optional<double> cast_ray(const WorldModel& world, const Point2d& origin, const Point2d& dir, double max_range) {
  std::optional<double> best;
  for (const auto& o : world.obstacles) {
    const std::size_t n = o.outline.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
      double t = 0.0;
      if (ray_segment_hit(origin, dir, o.outline[j], o.outline[i], t) && t <= max_range) {
        if (!best || t < *best) best = t;
      }
    }
  }
  return best;
}

LidarScan raycast_lidar(const WorldModel& world, const VehiclePose& pose, const LidarConfig& cfg,
                        const FaultSchedule& faults, std::int64_t t_ms, std::mt19937_64& rng) {
  if (cfg.n_beams < 1) throw ConfigError("lidar n_beams must be at least 1");
  static constexpr double kHitHeights[] = {0.3, 0.6, 0.9};

  LidarScan scan;
  scan.timestamp_ms = t_ms;
  const Point2d origin_w{pose.x, pose.y};
  const Point2d mount_local{cfg.mount_x, cfg.mount_y};
  const Point2d sensor_w = to_world(mount_local, origin_w, pose.heading);
  std::uniform_real_distribution<double> noise(-cfg.ground_noise, cfg.ground_noise);

  for (int i = 0; i < cfg.n_beams; ++i) {
    const double a = cfg.n_beams == 1 ? 0.0 : -cfg.fov / 2.0 + cfg.fov * i / (cfg.n_beams - 1);
    const Point2d dir_local{std::cos(a), std::sin(a)};
    const Point2d dir_w{std::cos(pose.heading + a), std::sin(pose.heading + a)};

    double ground_r = cfg.ground_range;
    if (auto hit = cast_ray(world, sensor_w, dir_w, cfg.max_range)) {
      ground_r = std::min(ground_r, 0.8 * *hit);
      double height = 0.0;
      const Point2d hit_w = sensor_w + *hit * dir_w;
      for (const auto& o : world.obstacles) {
        if (point_polygon_distance(o.outline, hit_w) < 1e-6) height = std::max(height, o.height);
      }
      const Point2d hit_local = mount_local + *hit * dir_local;
      for (double z : kHitHeights) {
        if (z <= height) scan.points.emplace_back(hit_local.x(), hit_local.y(), z);
      }
    }
    const Point2d g = mount_local + ground_r * dir_local;
    scan.points.emplace_back(g.x(), g.y(), noise(rng));
  }

  for (const auto& burst : faults.ghost_points) {
    if (!burst.window.contains(t_ms)) continue;
    std::uniform_real_distribution<double> ux(burst.x_min, burst.x_max);
    std::uniform_real_distribution<double> uy(burst.y_min, burst.y_max);
    std::vector<Point2d> placed;
    for (int k = 0; k < burst.count; ++k) {
      Point2d p{ux(rng), uy(rng)};
      for (int attempt = 0; attempt < 1000; ++attempt) {
        bool isolated = true;
        for (const auto& q : placed) isolated = isolated && (p - q).norm() >= burst.min_separation;
        if (isolated) break;
        p = {ux(rng), uy(rng)};
      }
      placed.push_back(p);
      scan.points.emplace_back(p.x(), p.y(), burst.z);
    }
  }
  return scan;
}

CameraFrame synthesize_frame(CameraId id, std::uint64_t seq, std::int64_t t_ms, int width, int height) {
  CameraFrame f;
  f.width = width;
  f.height = height;
  f.timestamp_ms = t_ms;
  f.seq = seq;
  f.camera_id = id;
  f.pixels.resize(static_cast<std::size_t>(width) * static_cast<std::size_t>(height));
  const double phase = static_cast<double>(seq % 1024) * 0.37 + (id == CameraId::Back ? 1.0 : 0.0);
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      const double v = 128.0 + 60.0 * std::sin(0.45 * c + phase) * std::cos(0.3 * r);
      f.pixels[static_cast<std::size_t>(r) * static_cast<std::size_t>(width) + static_cast<std::size_t>(c)] =
          static_cast<std::uint8_t>(std::lround(v));
    }
  }
  return f;
}

}  // namespace dcage
