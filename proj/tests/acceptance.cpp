// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>

#include "dcage/event_log.hpp"
#include "dcage/lidar_pipeline.hpp"
#include "dcage/mode_control.hpp"
#include "dcage/protocol.hpp"
#include "dcage/runner.hpp"
#include "dcage/safe_zone.hpp"
#include "fuzz.hpp"
#include "oracles.hpp"

using namespace dcage;
using namespace dcage::protocol;

namespace {

struct Outcome {
  bool pass{false};
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::vector<oracle::P> to_oracle(const Polygon2d& poly) {
  std::vector<oracle::P> out;
  for (const auto& v : poly) out.push_back({v.x(), v.y()});
  return out;
}

// Points along every edge, every `step` metres, vertices included.
std::vector<Point2d> boundary_samples(const Polygon2d& poly, double step) {
  std::vector<Point2d> out;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Point2d& a = poly[i];
    const Point2d& b = poly[(i + 1) % poly.size()];
    const int n = std::max(1, static_cast<int>(std::ceil((b - a).norm() / step)));
    for (int k = 0; k < n; ++k) out.push_back(a + (b - a) * (static_cast<double>(k) / n));
  }
  return out;
}

// ---- Hamburg --------------------------------------------------------------

struct HamburgRuns {
  RunReport scripted;
  RunReport scripted_again;
  double wall_s{0.0};
};

const HamburgRuns& hamburg() {
  static const HamburgRuns runs = [] {
    const Scenario sc = load_scenario(DCAGE_SCENARIO_DIR "/hamburg_demo.json");
    const OperatorScript op = load_operator_script(DCAGE_SCENARIO_DIR "/operators/hamburg_es_to_lad.json");
    HamburgRuns h;
    const auto t0 = Clock::now();
    h.scripted = run_scenario(sc, op);
    h.wall_s = seconds_since(t0);
    h.scripted_again = run_scenario(sc, op);
    return h;
  }();
  return runs;
}

Outcome hamburg_scenario() {
  const RunReport& r = hamburg().scripted;
  std::vector<std::string> bad;

  // (a) H1 and H2 delivered in FAD.
  std::map<std::string, const DeliveryRecord*> del;
  for (const auto& d : r.deliveries) del[d.waypoint] = &d;
  for (const char* w : {"H1", "H2"}) {
    const auto it = del.find(w);
    if (it == del.end() || !it->second->departed_ms || it->second->mode_at_arrival != DrivingMode::FAD ||
        it->second->mode_at_departure != DrivingMode::FAD) {
      bad.push_back(std::string("(a) ") + w + " not delivered in FAD");
    }
  }

  // (b) ES with the stopped bumper 1 to 2 m from the obstacle.
  const bool entered_es = !r.mode_transitions.empty() && r.mode_transitions[0].to == "emergency stop";
  if (!entered_es) bad.push_back("(b) no ES on approach");
  if (!r.es_stop_clearance_m || *r.es_stop_clearance_m < 1.0 || *r.es_stop_clearance_m > 2.0) {
    bad.push_back("(b) stop clearance outside [1.0, 2.0] m");
  }
  if (del.contains("H3") && entered_es && del["H3"]->arrived_ms < r.mode_transitions[0].t_ms) {
    bad.push_back("(b) ES after H3");
  }

  // (c) Blocked for every tick spent in ES while the mission was running.
  bool blocked_in_es = true, saw_es = false;
  for (const auto& s : r.dc_summaries) {
    if (s.driving_mode != DrivingMode::ES) continue;
    saw_es = true;
    if (s.mission_state != MissionState::Blocked) blocked_in_es = false;
  }
  if (!saw_es || !blocked_in_es) bad.push_back("(c) mission not blocked throughout ES");

  // (d) LAD accepted, H3 delivered under LAD, mission completed, no contact.
  const bool lad_ok = r.steps.size() == 1 && r.steps[0].ack && r.steps[0].ack->outcome == AckOutcome::Accepted &&
                      r.mode_transitions.size() >= 2 && r.mode_transitions[1].to == "limited autonomous driving";
  if (!lad_ok) bad.push_back("(d) LAD request not accepted");
  if (!del.contains("H3") || del["H3"]->mode_at_arrival != DrivingMode::LAD) bad.push_back("(d) H3 not reached in LAD");
  if (r.final_mission_state != MissionState::Completed) bad.push_back("(d) mission not completed");
  const Check* nc = r.check("no_collision");
  if (!nc || !nc->pass) bad.push_back("(d) collision");

  if (hamburg().wall_s >= 60.0) bad.push_back("wall time over 60 s");

  Outcome o;
  o.pass = bad.empty();
  o.detail = fmt("stop clearance %.2f m, min clearance %.2f m, %zu deliveries, wall %.2f s",
                 r.es_stop_clearance_m.value_or(-1.0),
                 r.min_clearance_m.contains("parked_car") ? r.min_clearance_m.at("parked_car") : -1.0,
                 r.deliveries.size(), hamburg().wall_s);
  for (const auto& b : bad) o.detail += "; " + b;
  return o;
}

// ---- mode control -----------------------------------------------------------

Outcome mode_truth_table() {
  const auto t0 = Clock::now();
  std::size_t cases = 0, mismatches = 0, silent_es_exits = 0, late_failsafe = 0;
  for (int mode = 0; mode < 5; ++mode) {
    for (bool occ : {false, true}) {
      for (bool cam : {false, true}) {
        for (int req = -1; req < 5; ++req) {
          for (bool req_free : {false, true}) {
            if (req < 0 && !req_free) continue;
            for (bool active : {false, true}) {
              ++cases;
              const oracle::ModeCase c{mode, occ, cam, req, req_free, active};
              const oracle::ModeExpect e = oracle::mode_oracle(c);
              ModeInputs in;
              in.current_mode = kAllDrivingModes[static_cast<std::size_t>(mode)];
              in.cage_state_current = occ ? CageState::Occupied : CageState::Free;
              in.camera_validity = cam ? Validity::Valid : Validity::Invalid;
              if (req >= 0) {
                in.operator_request = kAllDrivingModes[static_cast<std::size_t>(req)];
                in.cage_state_requested = req_free ? CageState::Free : CageState::Occupied;
              }
              in.cage_mode = active ? CageMode::Active : CageMode::Passive;
              const ModeDecision d = step(in);

              bool same = static_cast<int>(d.new_mode) == e.new_mode && (d.brake == Brake::Full) == e.brake_full &&
                          d.request_outcome.has_value() == e.accepted.has_value() &&
                          d.speed_cap == mode_speed_cap(d.new_mode);
              if (same && d.request_outcome) {
                same = d.request_outcome->accepted == *e.accepted && d.request_outcome->reason == e.reason;
              }
              if (!same) ++mismatches;
              // Leaving ES needs an accepted operator request.
              if (in.current_mode == DrivingMode::ES && d.new_mode != DrivingMode::ES &&
                  !(d.request_outcome && d.request_outcome->accepted)) {
                ++silent_es_exits;
              }
              // A fault under an active cage in a supervised mode is handled
              // by this very call.
              const bool supervised = mode <= 2;
              if (active && supervised && (occ || !cam) && d.new_mode != DrivingMode::ES) ++late_failsafe;
            }
          }
        }
      }
    }
  }
  const double dt = seconds_since(t0);
  Outcome o;
  o.pass = cases == 440 && mismatches == 0 && silent_es_exits == 0 && late_failsafe == 0 && dt < 1.0;
  o.detail = fmt("%zu cases, %zu mismatches, %zu silent ES exits, %zu late fail-safes, %.3f s", cases, mismatches,
                 silent_es_exits, late_failsafe, dt);
  return o;
}

// ---- zone geometry ------------------------------------------------------------

Outcome zone_properties() {
  const VehicleGeometry g;
  const ZoneParams fad = ZoneParams::fad_defaults();
  ZoneParams lad = ZoneParams::lad_defaults();
  lad.speed_cap = fad.speed_cap;  // compare at equal speed
  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> us(0.0, 3.0), ust(-0.6, 0.6), unit(0.0, 1.0);

  std::size_t monotone = 0, nesting = 0, mirror = 0, raycast = 0, points = 0;
  for (int i = 0; i < 1000; ++i) {
    double v1 = us(rng), v2 = us(rng);
    if (v1 > v2) std::swap(v1, v2);
    const double steer = ust(rng);

    const ZonePolygon small = compute_safe_zone(v1, steer, g, fad);
    const ZonePolygon big = compute_safe_zone(v2, steer, g, fad);
    const auto big_o = to_oracle(big.vertices);
    for (const auto& p : boundary_samples(small.vertices, 0.05)) {
      if (!oracle::ray_cast_inside(big_o, {p.x(), p.y()}, 1e-9)) {
        ++monotone;
        break;
      }
    }

    const ZonePolygon lz = compute_safe_zone(v2, steer, g, lad, DrivingMode::LAD);
    for (const auto& p : boundary_samples(lz.vertices, 0.05)) {
      if (!oracle::ray_cast_inside(big_o, {p.x(), p.y()}, 1e-9)) {
        ++nesting;
        break;
      }
    }

    const ZonePolygon m = mirror_y(compute_safe_zone(v2, -steer, g, fad));
    if (m.vertices.size() != big.vertices.size()) {
      ++mirror;
    } else {
      for (std::size_t k = 0; k < m.vertices.size(); ++k) {
        if ((m.vertices[k] - big.vertices[k]).norm() > 1e-9) {
          ++mirror;
          break;
        }
      }
    }

    // Ten points per zone, half near the boundary: 10,000 in total.
    double xmin = 1e9, xmax = -1e9, ymin = 1e9, ymax = -1e9;
    for (const auto& v : big.vertices) {
      xmin = std::min(xmin, v.x());
      xmax = std::max(xmax, v.x());
      ymin = std::min(ymin, v.y());
      ymax = std::max(ymax, v.y());
    }
    for (int k = 0; k < 10; ++k) {
      Point2d p;
      if (k % 2 == 0) {
        p = {xmin - 1.0 + unit(rng) * (xmax - xmin + 2.0), ymin - 1.0 + unit(rng) * (ymax - ymin + 2.0)};
      } else {
        const auto& a = big.vertices[static_cast<std::size_t>(unit(rng) * big.vertices.size()) % big.vertices.size()];
        p = a + Point2d{unit(rng) - 0.5, unit(rng) - 0.5} * 0.02;
      }
      ++points;
      if (contains(big, p) != oracle::ray_cast_inside(big_o, {p.x(), p.y()})) ++raycast;
    }
  }
  Outcome o;
  o.pass = monotone == 0 && nesting == 0 && mirror == 0 && raycast == 0;
  o.detail = fmt("1000 pairs: %zu monotonicity, %zu nesting, %zu mirror violations; %zu/%zu ray-cast disagreements",
                 monotone, nesting, mirror, raycast, points);
  return o;
}

// ---- LiDAR --------------------------------------------------------------------

Outcome lidar_oracle() {
  const VehicleGeometry g;
  const FilterConfig cfg;
  std::mt19937_64 rng(777);
  std::uniform_real_distribution<double> ux(-3.0, 10.0), uy(-5.0, 5.0), uz(-0.3, 3.0), unit(0.0, 1.0);
  std::uniform_int_distribution<int> un(0, 500);

  std::size_t mismatches = 0, flips = 0, occupied_scans = 0, ghosts_total = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const ZonePolygon zone = compute_safe_zone(unit(rng) * 3.0, (unit(rng) - 0.5) * 1.2, g, ZoneParams{});
    const auto zone_o = to_oracle(zone.vertices);

    // Sparse background plus a few tight blobs, at most 500 points.
    LidarScan scan;
    const int n = un(rng);
    while (static_cast<int>(scan.points.size()) < n) {
      if (unit(rng) < 0.05) {
        const double cx = ux(rng), cy = uy(rng), cz = uz(rng);
        const int k = 1 + static_cast<int>(unit(rng) * 6);
        for (int j = 0; j < k && static_cast<int>(scan.points.size()) < n; ++j) {
          scan.points.emplace_back(cx + (unit(rng) - 0.5) * 0.3, cy + (unit(rng) - 0.5) * 0.3, cz);
        }
      } else {
        scan.points.emplace_back(ux(rng), uy(rng), uz(rng));
      }
    }
    std::vector<oracle::P3> o;
    for (const auto& q : scan.points) o.push_back({q.x(), q.y(), q.z()});
    const bool expect = oracle::occupied(o, zone_o, cfg.z_min, cfg.z_max, cfg.cluster_eps, cfg.cluster_min_pts);
    const CageState got = evaluate(scan, zone, cfg, g).cage_state;
    if ((got == CageState::Occupied) != expect) ++mismatches;
    if (expect) ++occupied_scans;

    // Up to min_pts - 1 isolated ghosts inside the zone, each farther than
    // eps from every other point.
    LidarScan ghosted = scan;
    std::vector<Point2d> placed;
    for (const auto& q : scan.points) placed.emplace_back(q.x(), q.y());
    const std::size_t want = 1 + static_cast<std::size_t>(unit(rng) * static_cast<double>(cfg.cluster_min_pts - 1));
    std::size_t added = 0;
    for (int attempt = 0; attempt < 2000 && added < want; ++attempt) {
      const Point2d c{ux(rng), uy(rng)};
      if (!contains(zone, c)) continue;
      bool isolated = true;
      for (const auto& p : placed) {
        if ((p - c).norm() <= cfg.cluster_eps * 1.01) {
          isolated = false;
          break;
        }
      }
      if (!isolated) continue;
      ghosted.points.emplace_back(c.x(), c.y(), 0.5 + unit(rng));
      placed.push_back(c);
      ++added;
    }
    ghosts_total += added;
    if (evaluate(ghosted, zone, cfg, g).cage_state != got) ++flips;
  }
  Outcome out;
  out.pass = mismatches == 0 && flips == 0;
  out.detail = fmt("200 scans (%zu occupied): %zu oracle mismatches; %zu ghosts injected, %zu verdict flips",
                   occupied_scans, mismatches, ghosts_total, flips);
  return out;
}

// ---- stopping distance ---------------------------------------------------------

Outcome stopping_distance_check() {
  const ZoneParams p;
  double worst = 0.0;
  for (int i = 0; i <= 300; ++i) {
    const double v = i * 0.01;
    worst = std::max(worst, std::abs(stopping_distance(v, p) -
                                     oracle::braking_distance_integrated(v, p.react_time, p.decel_max, 1e-3)));
  }
  Outcome o;
  o.pass = worst <= 1e-3;
  o.detail = fmt("301 speeds in [0, 3] m/s, max |closed form - 1 ms integration| = %.2e m", worst);
  return o;
}

// ---- protocol and log ----------------------------------------------------------

Outcome protocol_and_log() {
  std::vector<std::string> bad;

  fuzz::Gen gen(4242);
  std::size_t fuzz_fail = 0;
  constexpr int kFuzz = 6000;
  for (int i = 0; i < kFuzz; ++i) {
    const WireMessage m = gen.message(static_cast<std::size_t>(i) % fuzz::Gen::kKinds);
    const std::string a = encode(m);
    try {
      const WireMessage back = decode(a);
      if (!(back == m) || encode(back) != a) ++fuzz_fail;
    } catch (const std::exception&) {
      ++fuzz_fail;
    }
  }
  if (fuzz_fail) bad.push_back(fmt("%zu fuzz round-trip failures", fuzz_fail));

  const RunReport& r = hamburg().scripted;
  std::istringstream in(r.log_text);
  const auto entries = read_log(in);
  std::map<std::pair<std::string, std::uint64_t>, int> acks;
  std::size_t commands = 0;
  for (const auto& e : entries) {
    if (get_if<Command>(e.message)) {
      ++commands;
      acks.try_emplace({e.message.vehicle_id, e.message.seq}, 0);
    }
  }
  std::size_t orphan_acks = 0;
  for (const auto& e : entries) {
    if (const auto* a = get_if<Ack>(e.message)) {
      auto it = acks.find({e.message.vehicle_id, a->ref_seq});
      if (it == acks.end()) {
        ++orphan_acks;
      } else {
        ++it->second;
      }
    }
  }
  std::size_t not_one = orphan_acks;
  for (const auto& [_, n] : acks) not_one += n != 1;
  if (commands == 0 || not_one) bad.push_back(fmt("exactly-one-Ack violated %zu times", not_one));

  std::vector<VehicleStateSummary> recorded, replayed;
  for (const auto& e : entries) {
    if (const auto* t = get_if<TelemetrySnapshot>(e.message)) recorded.push_back(t->summary);
  }
  std::istringstream again(r.log_text);
  replay(again, 1.0, [&](const EventLogEntry& e) {
    if (const auto* t = get_if<TelemetrySnapshot>(e.message)) replayed.push_back(t->summary);
  });
  // Every tick's summary reaches the log, in order.
  const bool same_as_vehicle = recorded == r.dc_summaries;
  if (replayed != recorded || !same_as_vehicle) bad.push_back("replayed summaries differ from the recorded ones");
  if (replayed.empty() || replayed.back().mission_state != MissionState::Completed) {
    bad.push_back("replay does not end completed");
  }

  Outcome o;
  o.pass = bad.empty();
  o.detail = fmt("%d fuzzed messages; %zu commands in the hamburg log, each with one Ack; %zu summaries replayed",
                 kFuzz, commands, replayed.size());
  for (const auto& b : bad) o.detail += "; " + b;
  return o;
}

// ---- determinism ------------------------------------------------------------------

Outcome determinism() {
  const auto& a = hamburg().scripted;
  const auto& b = hamburg().scripted_again;
  Outcome o;
  o.pass = !a.log_text.empty() && a.log_text == b.log_text;
  o.detail = fmt("two seeded runs, %zu log bytes each, %s", a.log_text.size(),
                 o.pass ? "byte-identical" : "different");
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"hamburg_scenario", hamburg_scenario},
      {"mode_truth_table", mode_truth_table},
      {"zone_geometry_properties", zone_properties},
      {"lidar_oracle_equivalence", lidar_oracle},
      {"stopping_distance_numeric", stopping_distance_check},
      {"protocol_roundtrip_and_log", protocol_and_log},
      {"determinism", determinism},
  };
  int failures = 0;
  for (const auto& [name, fn] : criteria) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
