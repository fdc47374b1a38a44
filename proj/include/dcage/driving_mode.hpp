#pragma once

#include <array>
#include <optional>
#include <string_view>

namespace dcage {

enum class DrivingMode { FAD, LAD, RMD, IMD, ES };

inline constexpr std::array<DrivingMode, 5> kAllDrivingModes{
    DrivingMode::FAD, DrivingMode::LAD, DrivingMode::RMD, DrivingMode::IMD, DrivingMode::ES};

/// Display names as shown in the vehicle state summary.
constexpr std::string_view to_string(DrivingMode m) {
  switch (m) {
    case DrivingMode::FAD: return "fully autonomous driving";
    case DrivingMode::LAD: return "limited autonomous driving";
    case DrivingMode::RMD: return "remote manual driving";
    case DrivingMode::IMD: return "in-place manual driving";
    case DrivingMode::ES: return "emergency stop";
  }
  return "";
}

constexpr std::string_view short_name(DrivingMode m) {
  switch (m) {
    case DrivingMode::FAD: return "FAD";
    case DrivingMode::LAD: return "LAD";
    case DrivingMode::RMD: return "RMD";
    case DrivingMode::IMD: return "IMD";
    case DrivingMode::ES: return "ES";
  }
  return "";
}

/// Accepts either the display name or the short code.
constexpr std::optional<DrivingMode> parse_driving_mode(std::string_view s) {
  for (auto m : kAllDrivingModes) {
    if (s == to_string(m) || s == short_name(m)) return m;
  }
  return std::nullopt;
}

constexpr bool is_autonomous(DrivingMode m) { return m == DrivingMode::FAD || m == DrivingMode::LAD; }

enum class CageState { Free, Occupied };

constexpr std::string_view to_string(CageState c) {
  return c == CageState::Free ? "safe zone free" : "safe zone occupied";
}

constexpr std::optional<CageState> parse_cage_state(std::string_view s) {
  if (s == "safe zone free") return CageState::Free;
  if (s == "safe zone occupied") return CageState::Occupied;
  return std::nullopt;
}

enum class CageMode { Active, Passive };

constexpr std::string_view to_string(CageMode c) { return c == CageMode::Active ? "active" : "passive"; }

constexpr std::optional<CageMode> parse_cage_mode(std::string_view s) {
  if (s == "active") return CageMode::Active;
  if (s == "passive") return CageMode::Passive;
  return std::nullopt;
}

enum class Validity { Valid, Invalid };

constexpr std::string_view to_string(Validity v) { return v == Validity::Valid ? "valid" : "invalid"; }

constexpr std::optional<Validity> parse_validity(std::string_view s) {
  if (s == "valid") return Validity::Valid;
  if (s == "invalid") return Validity::Invalid;
  return std::nullopt;
}

}  // namespace dcage
