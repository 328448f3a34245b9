#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>

namespace overtake {

/// High-level decisions. The integer codes are part of the model and trace
/// file formats and must not change.
enum class Action : std::uint8_t { Following = 0, Overtaking = 1, Aborting = 2 };

inline constexpr int kNumActions = 3;
inline constexpr std::array<Action, kNumActions> kAllActions{
    Action::Following, Action::Overtaking, Action::Aborting};

constexpr int action_code(Action a) { return static_cast<int>(a); }

constexpr std::optional<Action> action_from_code(int code) {
  if (code < 0 || code >= kNumActions) return std::nullopt;
  return static_cast<Action>(code);
}

constexpr std::string_view action_name(Action a) {
  switch (a) {
    case Action::Following: return "following";
    case Action::Overtaking: return "overtaking";
    case Action::Aborting: return "aborting";
  }
  return "unknown";
}

}  // namespace overtake
