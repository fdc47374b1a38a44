#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "dcage/driving_mode.hpp"

namespace dcage {

enum class CameraId { Front, Back };

constexpr std::string_view to_string(CameraId id) { return id == CameraId::Front ? "front" : "back"; }

constexpr std::optional<CameraId> parse_camera_id(std::string_view s) {
  if (s == "front") return CameraId::Front;
  if (s == "back") return CameraId::Back;
  return std::nullopt;
}

/// 8-bit grayscale frame, row-major.
struct CameraFrame {
  int width{0};
  int height{0};
  std::vector<std::uint8_t> pixels;
  std::int64_t timestamp_ms{0};
  std::uint64_t seq{0};
  CameraId camera_id{CameraId::Front};
};

struct CameraConfig {
  std::int64_t max_age_ms{500};
  std::size_t frozen_repeat_count{3};
  double mean_low{10.0};
  double mean_high{245.0};

  void validate() const;
};

// Declaration order is the canonical serialization order.
enum class FrameIssue { Stale, Frozen, Underexposed, Overexposed };

constexpr std::string_view to_string(FrameIssue r) {
  switch (r) {
    case FrameIssue::Stale: return "stale";
    case FrameIssue::Frozen: return "frozen";
    case FrameIssue::Underexposed: return "underexposed";
    case FrameIssue::Overexposed: return "overexposed";
  }
  return "";
}

std::optional<FrameIssue> parse_frame_issue(std::string_view s);

struct ValidityVerdict {
  Validity validity{Validity::Valid};
  std::vector<FrameIssue> reasons;  // sorted, unique

  bool has(FrameIssue r) const;
  bool operator==(const ValidityVerdict&) const = default;
};

/// Sorts and deduplicates reasons and derives validity from them.
ValidityVerdict make_verdict(std::vector<FrameIssue> reasons);

double mean_intensity(const CameraFrame& frame);

/// `history` holds earlier frames of the same camera ordered by seq (oldest
/// first), not including `frame`. Throws InputError when a buffer length does
/// not match width * height.
ValidityVerdict validate_frame(const CameraFrame& frame, std::span<const CameraFrame> history, std::int64_t now_ms,
                               const CameraConfig& cfg);

}  // namespace dcage
