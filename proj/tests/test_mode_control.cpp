#include <doctest.h>

#include "dcage/mode_control.hpp"
#include "oracles.hpp"

using namespace dcage;

namespace {

ModeInputs inputs(DrivingMode m, CageState cur, Validity cam, std::optional<DrivingMode> req = std::nullopt,
                  CageState req_state = CageState::Free, CageMode cage = CageMode::Active) {
  ModeInputs in;
  in.current_mode = m;
  in.cage_state_current = cur;
  in.camera_validity = cam;
  in.operator_request = req;
  if (req) in.cage_state_requested = req_state;
  in.cage_mode = cage;
  return in;
}

}  // namespace

TEST_CASE("reference transitions") {
  using enum DrivingMode;
  const auto es = step(inputs(FAD, CageState::Occupied, Validity::Valid));
  CHECK(es.new_mode == ES);
  CHECK(es.brake == Brake::Full);
  CHECK(es.speed_cap == 0.0);

  CHECK(step(inputs(ES, CageState::Free, Validity::Valid)).new_mode == ES);

  const auto lad = step(inputs(ES, CageState::Occupied, Validity::Valid, LAD, CageState::Free));
  CHECK(lad.new_mode == LAD);
  REQUIRE(lad.request_outcome);
  CHECK(lad.request_outcome->accepted);
  CHECK(lad.speed_cap == 1.0);

  CHECK(step(inputs(FAD, CageState::Free, Validity::Invalid)).new_mode == ES);
  CHECK(step(inputs(FAD, CageState::Occupied, Validity::Valid, std::nullopt, CageState::Free, CageMode::Passive))
            .new_mode == FAD);
}

TEST_CASE("requests rejected with reasons") {
  using enum DrivingMode;
  const auto occ = step(inputs(ES, CageState::Free, Validity::Valid, FAD, CageState::Occupied));
  CHECK(occ.new_mode == ES);
  CHECK(occ.request_outcome == RequestOutcome{false, reasons::kZoneOccupied});
  const auto cam = step(inputs(ES, CageState::Free, Validity::Invalid, LAD, CageState::Free));
  CHECK(cam.request_outcome == RequestOutcome{false, reasons::kCameraInvalid});
  const auto fs = step(inputs(LAD, CageState::Occupied, Validity::Valid, FAD, CageState::Free));
  CHECK(fs.new_mode == ES);
  CHECK(fs.request_outcome == RequestOutcome{false, reasons::kFailSafe});
  const auto human = step(inputs(ES, CageState::Occupied, Validity::Invalid, RMD, CageState::Occupied));
  CHECK(human.new_mode == RMD);
  CHECK(human.request_outcome->accepted);
}

TEST_CASE("speed caps") {
  CHECK(mode_speed_cap(DrivingMode::FAD) == 3.0);
  CHECK(mode_speed_cap(DrivingMode::LAD) == 1.0);
  CHECK(mode_speed_cap(DrivingMode::RMD) == 1.0);
  CHECK(mode_speed_cap(DrivingMode::IMD) == 0.0);
  CHECK(mode_speed_cap(DrivingMode::ES) == 0.0);
}

TEST_CASE("exhaustive truth table against the oracle") {
  std::size_t n = 0;
  for (int mode = 0; mode < 5; ++mode) {
    for (bool occ : {false, true}) {
      for (bool cam : {false, true}) {
        for (int req = -1; req < 5; ++req) {
          for (bool req_free : {false, true}) {
            if (req < 0 && !req_free) continue;
            for (bool active : {false, true}) {
              const oracle::ModeCase c{mode, occ, cam, req, req_free, active};
              const oracle::ModeExpect e = oracle::mode_oracle(c);
              std::optional<DrivingMode> r;
              if (req >= 0) r = kAllDrivingModes[static_cast<std::size_t>(req)];
              const ModeDecision d = step(inputs(kAllDrivingModes[static_cast<std::size_t>(mode)],
                                                 occ ? CageState::Occupied : CageState::Free,
                                                 cam ? Validity::Valid : Validity::Invalid, r,
                                                 req_free ? CageState::Free : CageState::Occupied,
                                                 active ? CageMode::Active : CageMode::Passive));
              CHECK(static_cast<int>(d.new_mode) == e.new_mode);
              CHECK((d.brake == Brake::Full) == e.brake_full);
              CHECK(d.request_outcome.has_value() == e.accepted.has_value());
              if (d.request_outcome && e.accepted) {
                CHECK(d.request_outcome->accepted == *e.accepted);
                CHECK(d.request_outcome->reason == e.reason);
              }
              CHECK(d.speed_cap == mode_speed_cap(d.new_mode));
              ++n;
            }
          }
        }
      }
    }
  }
  CHECK(n == 440);
}
