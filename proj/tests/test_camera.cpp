#include <doctest.h>

#include "dcage/camera_validator.hpp"
#include "dcage/errors.hpp"
#include "dcage/world.hpp"

using namespace dcage;

namespace {

CameraFrame flat(std::uint8_t value, std::uint64_t seq, std::int64_t t) {
  CameraFrame f;
  f.width = 8;
  f.height = 4;
  f.pixels.assign(32, value);
  f.seq = seq;
  f.timestamp_ms = t;
  return f;
}

}  // namespace

TEST_CASE("fresh synthetic frame is valid") {
  const CameraFrame a = synthesize_frame(CameraId::Front, 1, 0, 32, 24);
  const CameraFrame b = synthesize_frame(CameraId::Front, 2, 50, 32, 24);
  CHECK(mean_intensity(b) == doctest::Approx(128).epsilon(0.1));
  const std::vector<CameraFrame> hist{a};
  const ValidityVerdict v = validate_frame(b, hist, 60, CameraConfig{});
  CHECK(v.validity == Validity::Valid);
  CHECK(v.reasons.empty());
}

TEST_CASE("stale, frozen and exposure rules") {
  const CameraConfig cfg;
  CHECK(validate_frame(flat(128, 1, 0), {}, 2000, cfg).reasons == std::vector{FrameIssue::Stale});

  const std::vector<CameraFrame> hist{flat(128, 1, 0), flat(128, 2, 50)};
  const auto frozen = validate_frame(flat(128, 3, 100), hist, 100, cfg);
  CHECK(frozen.validity == Validity::Invalid);
  CHECK(frozen.reasons == std::vector{FrameIssue::Frozen});

  CameraFrame changed = flat(128, 3, 100);
  changed.pixels[17] = 129;
  CHECK(validate_frame(changed, hist, 100, cfg).validity == Validity::Valid);

  CameraConfig bright = cfg;
  bright.mean_high = 230;
  CHECK(validate_frame(flat(255, 1, 0), {}, 0, bright).reasons == std::vector{FrameIssue::Overexposed});
  CHECK(validate_frame(flat(0, 1, 0), {}, 0, cfg).reasons == std::vector{FrameIssue::Underexposed});
}

TEST_CASE("malformed buffer is an input error") {
  CameraFrame f = flat(128, 1, 0);
  f.pixels.pop_back();
  CHECK_THROWS_AS(validate_frame(f, {}, 0, CameraConfig{}), InputError);
}

TEST_CASE("verdict reasons have set semantics") {
  const auto a = make_verdict({FrameIssue::Overexposed, FrameIssue::Stale, FrameIssue::Stale});
  const auto b = make_verdict({FrameIssue::Stale, FrameIssue::Overexposed});
  CHECK(a == b);
  CHECK(a.validity == Validity::Invalid);
  CHECK(make_verdict({}).validity == Validity::Valid);
}
