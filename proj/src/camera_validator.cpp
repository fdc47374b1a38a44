#include "dcage/camera_validator.hpp"

#include <algorithm>
#include <numeric>

#include "dcage/errors.hpp"

namespace dcage {

namespace {

void check_buffer(const CameraFrame& f) {
  if (f.width <= 0 || f.height <= 0 ||
      f.pixels.size() != static_cast<std::size_t>(f.width) * static_cast<std::size_t>(f.height)) {
    throw InputError("camera frame buffer length does not match width x height");
  }
}

}  // namespace

void CameraConfig::validate() const {
  if (!(mean_low < mean_high)) throw ConfigError("mean_low must be below mean_high");
  if (frozen_repeat_count < 2) throw ConfigError("frozen_repeat_count must be at least 2");
  if (max_age_ms < 0) throw ConfigError("max_age_ms must be non-negative");
}

std::optional<FrameIssue> parse_frame_issue(std::string_view s) {
  for (auto r : {FrameIssue::Stale, FrameIssue::Frozen, FrameIssue::Underexposed, FrameIssue::Overexposed}) {
    if (s == to_string(r)) return r;
  }
  return std::nullopt;
}

bool ValidityVerdict::has(FrameIssue r) const { return std::find(reasons.begin(), reasons.end(), r) != reasons.end(); }

ValidityVerdict make_verdict(std::vector<FrameIssue> reasons) {
  std::sort(reasons.begin(), reasons.end());
  reasons.erase(std::unique(reasons.begin(), reasons.end()), reasons.end());
  ValidityVerdict v;
  v.validity = reasons.empty() ? Validity::Valid : Validity::Invalid;
  v.reasons = std::move(reasons);
  return v;
}

double mean_intensity(const CameraFrame& frame) {
  if (frame.pixels.empty()) return 0.0;
  const auto sum = std::accumulate(frame.pixels.begin(), frame.pixels.end(), std::uint64_t{0});
  return static_cast<double>(sum) / static_cast<double>(frame.pixels.size());
}

ValidityVerdict validate_frame(const CameraFrame& frame, std::span<const CameraFrame> history, std::int64_t now_ms,
                               const CameraConfig& cfg) {
  check_buffer(frame);
  std::vector<FrameIssue> reasons;

  if (now_ms - frame.timestamp_ms > cfg.max_age_ms) reasons.push_back(FrameIssue::Stale);

  const std::size_t needed = cfg.frozen_repeat_count - 1;
  if (history.size() >= needed) {
    const auto recent = history.last(needed);
    const bool identical = std::all_of(recent.begin(), recent.end(), [&](const CameraFrame& prev) {
      check_buffer(prev);
      return prev.width == frame.width && prev.height == frame.height && prev.pixels == frame.pixels;
    });
    if (identical) reasons.push_back(FrameIssue::Frozen);
  }

  const double mean = mean_intensity(frame);
  if (mean < cfg.mean_low) reasons.push_back(FrameIssue::Underexposed);
  if (mean > cfg.mean_high) reasons.push_back(FrameIssue::Overexposed);
  return make_verdict(std::move(reasons));
}

}  // namespace dcage
