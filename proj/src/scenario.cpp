#include "dcage/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "dcage/errors.hpp"

namespace dcage {

using nlohmann::json;

const ZoneParams& Scenario::zone_params(DrivingMode mode) const {
  return mode == DrivingMode::FAD || mode == DrivingMode::ES ? fad_zone : lad_zone;
}

namespace {

// Reads one JSON object while tracking where it sits in the document, so
// errors can name the key path and the line it was found on.
class Section {
 public:
  Section(const json& obj, std::string path, const std::string& text, const std::string& origin)
      : obj_(obj), path_(std::move(path)), text_(text), origin_(origin) {}

  [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
    std::ostringstream os;
    os << origin_;
    if (auto line = line_of(key)) os << ":" << *line;
    os << ": " << qualified(key) << ": " << msg;
    throw ConfigError(os.str());
  }

  void require_object() const {
    if (!obj_.is_object()) fail("", "expected an object");
  }

  void allow_only(std::initializer_list<std::string_view> keys) const {
    require_object();
    for (const auto& [k, _] : obj_.items()) {
      if (std::find(keys.begin(), keys.end(), k) == keys.end()) fail(k, "unknown key");
    }
  }

  bool has(const std::string& key) const { return obj_.contains(key); }
  const json& raw(const std::string& key) const { return obj_.at(key); }

  Section child(const std::string& key) const {
    Section s(obj_.at(key), qualified(key), text_, origin_);
    s.anchor_ = anchor_;
    s.anchor_.push_back(key);
    s.require_object();
    return s;
  }

  double number(const std::string& key, double def) const {
    if (!has(key)) return def;
    const auto& v = obj_.at(key);
    if (!v.is_number()) fail(key, "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) fail(key, "expected a finite number");
    return d;
  }

  double positive(const std::string& key, double def) const {
    const double d = number(key, def);
    if (!(d > 0.0)) fail(key, "must be strictly positive (got " + format(d) + ")");
    return d;
  }

  double non_negative(const std::string& key, double def) const {
    const double d = number(key, def);
    if (d < 0.0) fail(key, "must be non-negative (got " + format(d) + ")");
    return d;
  }

  std::int64_t integer(const std::string& key, std::int64_t def) const {
    if (!has(key)) return def;
    const auto& v = obj_.at(key);
    if (!v.is_number_integer()) fail(key, "expected an integer");
    return v.get<std::int64_t>();
  }

  std::string string(const std::string& key, const std::string& def) const {
    if (!has(key)) return def;
    const auto& v = obj_.at(key);
    if (!v.is_string()) fail(key, "expected a string");
    return v.get<std::string>();
  }

  std::vector<std::string> strings(const std::string& key) const {
    std::vector<std::string> out;
    if (!has(key)) return out;
    const auto& v = obj_.at(key);
    if (!v.is_array()) fail(key, "expected an array of strings");
    for (const auto& e : v) {
      if (!e.is_string()) fail(key, "expected an array of strings");
      out.push_back(e.get<std::string>());
    }
    return out;
  }

  Point2d point(const json& v, const std::string& key) const {
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
      fail(key, "expected a point [x, y]");
    }
    return {v[0].get<double>(), v[1].get<double>()};
  }

  /// Elements of an array of objects, each as its own section.
  std::vector<Section> entries(const std::string& key) const {
    std::vector<Section> out;
    if (!has(key)) return out;
    const auto& arr = obj_.at(key);
    if (!arr.is_array()) fail(key, "expected an array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      Section e(arr[i], qualified(key) + "[" + std::to_string(i) + "]", text_, origin_);
      e.anchor_ = anchor_;
      e.anchor_.push_back(key);
      e.require_object();
      out.push_back(std::move(e));
    }
    return out;
  }

 private:
  static std::string format(double d) {
    std::ostringstream os;
    os << d;
    return os.str();
  }

  std::string qualified(const std::string& key) const {
    if (key.empty()) return path_.empty() ? "<root>" : path_;
    return path_.empty() ? key : path_ + "." + key;
  }

  // Line of the first occurrence of the quoted key after the enclosing
  // section keys. Good enough for hand-written files.
  std::optional<std::size_t> line_of(const std::string& key) const {
    std::size_t pos = 0;
    auto find_key = [&](const std::string& k) {
      const auto at = text_.find("\"" + k + "\"", pos);
      if (at != std::string::npos) pos = at + 1;
      return at != std::string::npos;
    };
    for (const auto& a : anchor_) {
      if (!find_key(a)) return std::nullopt;
    }
    if (!key.empty() && !find_key(key)) return std::nullopt;
    if (key.empty() && anchor_.empty()) return std::nullopt;
    return 1 + static_cast<std::size_t>(std::count(text_.begin(), text_.begin() + static_cast<long>(pos), '\n'));
  }

  const json& obj_;
  std::string path_;
  const std::string& text_;
  const std::string& origin_;
  std::vector<std::string> anchor_;
};

TimeWindow read_window(const Section& s) {
  TimeWindow w{s.integer("from_ms", 0), s.integer("to_ms", 0)};
  if (!(w.from_ms < w.to_ms)) s.fail("to_ms", "window must satisfy from_ms < to_ms");
  return w;
}

void read_zone(const Section& s, ZoneParams& z) {
  s.allow_only({"decel_max", "react_time", "front_margin", "lat_margin", "arc_step"});
  z.decel_max = s.positive("decel_max", z.decel_max);
  z.react_time = s.positive("react_time", z.react_time);
  z.front_margin = s.positive("front_margin", z.front_margin);
  z.lat_margin = s.positive("lat_margin", z.lat_margin);
  z.arc_step = s.positive("arc_step", z.arc_step);
  if (z.arc_step > 0.5) s.fail("arc_step", "must not exceed 0.5 m");
}

void read_world(const Section& s, Scenario& sc) {
  s.allow_only({"points", "route", "obstacles", "start", "start_heading"});
  if (s.has("points")) {
    const Section pts = s.child("points");
    for (const auto& [name, v] : s.raw("points").items()) {
      sc.world.delivery_points[name] = pts.point(v, name);
    }
  }
  sc.world.route = s.strings("route");
  for (const auto& r : sc.world.route) {
    if (!sc.world.delivery_points.contains(r)) s.fail("route", "unknown point '" + r + "'");
  }
  for (const auto& e : s.entries("obstacles")) {
    e.allow_only({"name", "outline", "height"});
    Obstacle obs;
    obs.name = e.string("name", "obstacle_" + std::to_string(sc.world.obstacles.size()));
    if (!e.has("outline") || !e.raw("outline").is_array()) e.fail("outline", "expected an array of points");
    for (const auto& p : e.raw("outline")) obs.outline.push_back(e.point(p, "outline"));
    obs.height = e.positive("height", obs.height);
    if (obs.outline.size() < 3 || !is_simple(obs.outline)) e.fail("outline", "not a simple polygon");
    if (signed_area(obs.outline) < 0.0) std::reverse(obs.outline.begin(), obs.outline.end());
    sc.world.obstacles.push_back(std::move(obs));
  }
  if (s.has("start")) {
    const auto name = s.string("start", "");
    if (!sc.world.delivery_points.contains(name)) s.fail("start", "unknown point '" + name + "'");
    const Point2d p = sc.world.point(name);
    sc.start_pose.x = p.x();
    sc.start_pose.y = p.y();
  }
  sc.start_pose.heading = s.number("start_heading", 0.0);
}

}  // namespace

Scenario parse_scenario(std::string_view text_view, const std::string& origin) {
  const std::string text(text_view);
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto byte = std::min<std::size_t>(e.byte, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<long>(byte), '\n');
    throw ConfigError(origin + ":" + std::to_string(line) + ": JSON parse error: " + e.what());
  }

  const Section root(doc, "", text, origin);
  root.allow_only({"name", "vehicle_id", "sim", "vehicle", "zones", "mode_caps", "cage", "filters", "cameras", "lidar",
                   "ads", "world", "mission", "faults"});

  Scenario sc;
  sc.name = root.string("name", sc.name);
  sc.vehicle_id = root.string("vehicle_id", sc.vehicle_id);
  if (sc.vehicle_id.empty()) root.fail("vehicle_id", "must not be empty");

  if (root.has("sim")) {
    const Section s = root.child("sim");
    s.allow_only({"tick_ms", "seed", "max_duration_s"});
    sc.sim.tick_ms = s.integer("tick_ms", sc.sim.tick_ms);
    if (sc.sim.tick_ms < 1 || sc.sim.tick_ms > 100) s.fail("tick_ms", "must lie in [1, 100]");
    const auto seed = s.integer("seed", static_cast<std::int64_t>(sc.sim.seed));
    if (seed < 0) s.fail("seed", "must be non-negative");
    sc.sim.seed = static_cast<std::uint64_t>(seed);
    sc.sim.max_duration_s = s.positive("max_duration_s", sc.sim.max_duration_s);
  }

  if (root.has("vehicle")) {
    const Section s = root.child("vehicle");
    s.allow_only({"wheelbase", "width", "front_overhang", "rear_overhang", "decel_max", "max_accel", "max_steering",
                  "max_steering_rate"});
    sc.geometry.wheelbase = s.positive("wheelbase", sc.geometry.wheelbase);
    sc.geometry.width = s.positive("width", sc.geometry.width);
    sc.geometry.front_overhang = s.non_negative("front_overhang", sc.geometry.front_overhang);
    sc.geometry.rear_overhang = s.non_negative("rear_overhang", sc.geometry.rear_overhang);
    sc.dynamics.decel_max = s.positive("decel_max", sc.dynamics.decel_max);
    sc.dynamics.max_accel = s.positive("max_accel", sc.dynamics.max_accel);
    sc.dynamics.max_steering = s.positive("max_steering", sc.dynamics.max_steering);
    if (sc.dynamics.max_steering >= std::numbers::pi / 2.0) s.fail("max_steering", "must be below pi/2");
    sc.dynamics.max_steering_rate = s.positive("max_steering_rate", sc.dynamics.max_steering_rate);
  }
  sc.dynamics.wheelbase = sc.geometry.wheelbase;

  if (root.has("zones")) {
    const Section s = root.child("zones");
    s.allow_only({"FAD", "LAD"});
    if (s.has("FAD")) read_zone(s.child("FAD"), sc.fad_zone);
    if (s.has("LAD")) read_zone(s.child("LAD"), sc.lad_zone);
  }

  if (root.has("mode_caps")) {
    const Section s = root.child("mode_caps");
    s.allow_only({"FAD", "LAD", "RMD"});
    sc.caps.fad = s.positive("FAD", sc.caps.fad);
    sc.caps.lad = s.positive("LAD", sc.caps.lad);
    sc.caps.rmd = s.positive("RMD", sc.caps.rmd);
  }
  sc.fad_zone.speed_cap = sc.caps.fad;
  sc.lad_zone.speed_cap = sc.caps.lad;

  if (root.has("cage")) {
    const Section s = root.child("cage");
    s.allow_only({"mode"});
    const auto m = parse_cage_mode(s.string("mode", "active"));
    if (!m) s.fail("mode", "expected \"active\" or \"passive\"");
    sc.cage_mode = *m;
  }

  if (root.has("filters")) {
    const Section s = root.child("filters");
    s.allow_only({"z_min", "z_max", "cluster_eps", "cluster_min_pts"});
    sc.filters.z_min = s.number("z_min", sc.filters.z_min);
    sc.filters.z_max = s.number("z_max", sc.filters.z_max);
    if (!(sc.filters.z_min < sc.filters.z_max)) s.fail("z_max", "must exceed z_min");
    sc.filters.cluster_eps = s.positive("cluster_eps", sc.filters.cluster_eps);
    const auto mp = s.integer("cluster_min_pts", static_cast<std::int64_t>(sc.filters.cluster_min_pts));
    if (mp < 1) s.fail("cluster_min_pts", "must be at least 1");
    sc.filters.cluster_min_pts = static_cast<std::size_t>(mp);
  }

  if (root.has("cameras")) {
    const Section s = root.child("cameras");
    s.allow_only({"max_age_ms", "frozen_repeat_count", "mean_low", "mean_high"});
    sc.cameras.max_age_ms = s.integer("max_age_ms", sc.cameras.max_age_ms);
    if (sc.cameras.max_age_ms <= 0) s.fail("max_age_ms", "must be strictly positive");
    const auto n = s.integer("frozen_repeat_count", static_cast<std::int64_t>(sc.cameras.frozen_repeat_count));
    if (n < 2) s.fail("frozen_repeat_count", "must be at least 2");
    sc.cameras.frozen_repeat_count = static_cast<std::size_t>(n);
    sc.cameras.mean_low = s.number("mean_low", sc.cameras.mean_low);
    sc.cameras.mean_high = s.number("mean_high", sc.cameras.mean_high);
    if (!(sc.cameras.mean_low < sc.cameras.mean_high)) s.fail("mean_high", "must exceed mean_low");
  }

  sc.lidar.mount_x = sc.geometry.front_x();
  if (root.has("lidar")) {
    const Section s = root.child("lidar");
    s.allow_only({"n_beams", "fov_deg", "max_range", "mount_x", "mount_y", "ground_range", "ground_noise"});
    const auto n = s.integer("n_beams", sc.lidar.n_beams);
    if (n < 1 || n > 100000) s.fail("n_beams", "must lie in [1, 100000]");
    sc.lidar.n_beams = static_cast<int>(n);
    const double fov_deg = s.positive("fov_deg", sc.lidar.fov * 180.0 / std::numbers::pi);
    if (fov_deg > 360.0) s.fail("fov_deg", "must not exceed 360");
    sc.lidar.fov = fov_deg * std::numbers::pi / 180.0;
    sc.lidar.max_range = s.positive("max_range", sc.lidar.max_range);
    sc.lidar.mount_x = s.number("mount_x", sc.lidar.mount_x);
    sc.lidar.mount_y = s.number("mount_y", sc.lidar.mount_y);
    sc.lidar.ground_range = s.positive("ground_range", sc.lidar.ground_range);
    sc.lidar.ground_noise = s.non_negative("ground_noise", sc.lidar.ground_noise);
  }

  if (root.has("ads")) {
    const Section s = root.child("ads");
    s.allow_only({"lookahead", "comfort_decel", "lateral_accel", "speed_gain", "steering_gain", "stop_radius"});
    sc.ads.lookahead = s.positive("lookahead", sc.ads.lookahead);
    sc.ads.comfort_decel = s.positive("comfort_decel", sc.ads.comfort_decel);
    sc.ads.lateral_accel = s.positive("lateral_accel", sc.ads.lateral_accel);
    sc.ads.speed_gain = s.positive("speed_gain", sc.ads.speed_gain);
    sc.ads.steering_gain = s.positive("steering_gain", sc.ads.steering_gain);
    sc.ads.stop_radius = s.non_negative("stop_radius", sc.ads.stop_radius);
  }

  if (root.has("world")) read_world(root.child("world"), sc);

  if (root.has("mission")) {
    const Section s = root.child("mission");
    s.allow_only({"id", "waypoints", "assign_at_ms", "dwell_s", "reach_tolerance"});
    ScheduledMission m;
    m.assignment.mission_id = s.string("id", "mission-1");
    m.assignment.waypoints = s.strings("waypoints");
    if (m.assignment.waypoints.empty()) s.fail("waypoints", "must list at least one point");
    for (const auto& w : m.assignment.waypoints) {
      if (!sc.world.delivery_points.contains(w)) s.fail("waypoints", "unknown point '" + w + "'");
    }
    m.assign_at_ms = s.integer("assign_at_ms", 0);
    if (m.assign_at_ms < 0) s.fail("assign_at_ms", "must be non-negative");
    sc.mission_cfg.dwell_s = s.non_negative("dwell_s", sc.mission_cfg.dwell_s);
    sc.mission_cfg.reach_tolerance = s.positive("reach_tolerance", sc.mission_cfg.reach_tolerance);
    sc.mission = std::move(m);
  }

  if (root.has("faults")) {
    const Section s = root.child("faults");
    s.allow_only({"ghost_points", "camera_freeze", "link_faults"});
    for (const auto& e : s.entries("ghost_points")) {
      e.allow_only({"from_ms", "to_ms", "count", "x_min", "x_max", "y_min", "y_max", "z", "min_separation"});
      GhostBurst g;
      g.window = read_window(e);
      const auto c = e.integer("count", g.count);
      if (c < 0 || c > 10000) e.fail("count", "must lie in [0, 10000]");
      g.count = static_cast<int>(c);
      g.x_min = e.number("x_min", g.x_min);
      g.x_max = e.number("x_max", g.x_max);
      g.y_min = e.number("y_min", g.y_min);
      g.y_max = e.number("y_max", g.y_max);
      if (!(g.x_min < g.x_max && g.y_min < g.y_max)) e.fail("x_max", "region must be non-empty");
      g.z = e.number("z", g.z);
      g.min_separation = e.non_negative("min_separation", g.min_separation);
      sc.faults.ghost_points.push_back(g);
    }
    for (const auto& e : s.entries("camera_freeze")) {
      e.allow_only({"camera", "from_ms", "to_ms"});
      CameraFreeze f;
      const auto id = parse_camera_id(e.string("camera", "front"));
      if (!id) e.fail("camera", "expected \"front\" or \"back\"");
      f.camera = *id;
      f.window = read_window(e);
      sc.faults.camera_freeze.push_back(f);
    }
    for (const auto& e : s.entries("link_faults")) {
      e.allow_only({"from_ms", "to_ms", "drop_probability"});
      LinkFault l;
      l.window = read_window(e);
      l.drop_probability = e.number("drop_probability", l.drop_probability);
      if (l.drop_probability < 0.0 || l.drop_probability > 1.0) e.fail("drop_probability", "must lie in [0, 1]");
      sc.faults.link_faults.push_back(l);
    }
  }

  // Backstop for cross-field invariants the per-key checks do not cover.
  try {
    sc.geometry.validate();
    sc.fad_zone.validate();
    sc.lad_zone.validate();
    sc.caps.validate();
    sc.filters.validate();
    sc.cameras.validate();
    sc.world.validate();
    sc.faults.validate();
    sc.mission_cfg.validate();
    sc.ads.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(origin + ": " + e.what());
  }
  return sc;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open scenario file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str(), path.string());
}

}  // namespace dcage
