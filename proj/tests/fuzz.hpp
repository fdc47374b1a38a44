#pragma once

// Random WireMessages of every type for round-trip checks.

#include <random>
#include <string>

#include "dcage/protocol.hpp"

namespace fuzz {

using namespace dcage;
using namespace dcage::protocol;

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double real(double lo = -1e3, double hi = 1e3) {
    // Mix in awkward magnitudes now and then.
    switch (pick(8)) {
      case 0: return 0.0;
      case 1: return std::uniform_real_distribution<double>(-1e-9, 1e-9)(rng_);
      case 2: return std::uniform_real_distribution<double>(-1e12, 1e12)(rng_);
      default: return std::uniform_real_distribution<double>(lo, hi)(rng_);
    }
  }
  std::uint64_t u64(std::uint64_t hi = 1'000'000'000) { return std::uniform_int_distribution<std::uint64_t>(0, hi)(rng_); }
  std::int64_t i64() { return std::uniform_int_distribution<std::int64_t>(0, 4'000'000'000'000)(rng_); }
  std::size_t pick(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_); }
  bool coin() { return pick(2) == 1; }

  std::string text() {
    static const std::string alphabet =
        "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789 _-.:/\\\"'{}[]\t\n";
    static const std::string multibyte[] = {"\xc3\xa4", "\xc3\x9f", "\xe2\x86\x92", "\xf0\x9f\x9a\x97"};
    std::string s;
    const std::size_t n = pick(16);
    for (std::size_t i = 0; i < n; ++i) {
      if (pick(6) == 0) {
        s += multibyte[pick(4)];
      } else {
        s += alphabet[pick(alphabet.size())];
      }
    }
    return s;
  }

  template <typename E, std::size_t N>
  E of(const std::array<E, N>& options) {
    return options[pick(N)];
  }

  DrivingMode mode() { return kAllDrivingModes[pick(5)]; }

  VehicleStateSummary summary() {
    VehicleStateSummary s;
    s.vehicle_id = text();
    s.sensor_data = coin() ? Validity::Valid : Validity::Invalid;
    s.mission_state = of(std::array{MissionState::Inactive, MissionState::Active, MissionState::Blocked,
                                    MissionState::Completed});
    s.door_state = of(std::array{DoorState::Open, DoorState::Closed, DoorState::NoData});
    s.driving_mode = mode();
    s.cage_state = coin() ? CageState::Free : CageState::Occupied;
    s.timestamp_ms = i64();
    s.seq = u64();
    return s;
  }

  std::vector<Point2d> points(std::size_t max) {
    std::vector<Point2d> v(pick(max + 1));
    for (auto& p : v) p = {real(-50, 50), real(-50, 50)};
    return v;
  }

  ValidityVerdict verdict() {
    std::vector<FrameIssue> r;
    for (auto i : {FrameIssue::Stale, FrameIssue::Frozen, FrameIssue::Underexposed, FrameIssue::Overexposed}) {
      if (coin()) r.push_back(i);
    }
    return make_verdict(r);
  }

  CommandBody command() {
    switch (pick(5)) {
      case 0: return SetDrivingMode{mode()};
      case 1: return SetCageMode{coin() ? CageMode::Active : CageMode::Passive};
      case 2: return DoorCommand{coin() ? DoorAction::Open : DoorAction::Close};
      case 3: {
        AssignMission a;
        a.mission.mission_id = text();
        for (std::size_t i = 1 + pick(4); i > 0; --i) a.mission.waypoints.push_back(text());
        return a;
      }
      default: return ManualControl{{real(0, 5), real(-0.6, 0.6)}};
    }
  }

  Payload payload(std::size_t kind) {
    switch (kind) {
      case 0: return Register{text(), static_cast<std::int64_t>(1 + pick(100))};
      case 1: {
        TelemetrySnapshot t;
        t.summary = summary();
        t.pose = {real(), real(), real(-4, 4), real(0, 5), real(-0.6, 0.6)};
        t.zone_mode = mode();
        t.zone = points(40);
        t.scan = points(kMaxTelemetryScanPoints);
        t.offending = points(20);
        t.front_camera = verdict();
        t.back_camera = verdict();
        t.cage_mode = coin() ? CageMode::Active : CageMode::Passive;
        t.speed_cap = real(0, 5);
        if (coin()) {
          MissionData m{text(), {}, static_cast<std::int64_t>(pick(10))};
          for (std::size_t i = pick(5); i > 0; --i) m.waypoints.push_back(text());
          t.mission = m;
        }
        t.outbox_drops = u64();
        return t;
      }
      case 2: return Event{text(), text(), text()};
      case 3: return Command{command()};
      case 4: return Ack{u64(), of(std::array{AckOutcome::Accepted, AckOutcome::Rejected, AckOutcome::Timeout}), text()};
      default: {
        Error e;
        if (coin()) e.ref_seq = u64();
        e.reason = text();
        return e;
      }
    }
  }

  static constexpr std::size_t kKinds = 6;

  WireMessage message(std::size_t kind) { return WireMessage{text(), u64(), i64(), payload(kind)}; }

 private:
  std::mt19937_64 rng_;
};

}  // namespace fuzz
