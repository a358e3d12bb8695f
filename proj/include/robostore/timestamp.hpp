#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace robostore {

using uint128 = unsigned __int128;

// 128-bit microsecond timestamp. Zero means "unset, assign at write time".
class Timestamp {
 public:
  constexpr Timestamp() = default;
  constexpr explicit Timestamp(uint128 micros) : value_(micros) {}

  static constexpr Timestamp unset() { return Timestamp{}; }
  static constexpr Timestamp max() { return Timestamp{~uint128{0}}; }

  constexpr uint128 value() const { return value_; }
  constexpr bool is_set() const { return value_ != 0; }

  // Unsigned decimal, no sign, no leading zeros.
  std::string to_string() const;
  static std::optional<Timestamp> parse(std::string_view text);

  friend constexpr auto operator<=>(Timestamp, Timestamp) = default;

 private:
  uint128 value_ = 0;
};

// Per-node clock: every reading is max(source, last + 1), so readings on one
// node are strictly increasing even when the source stalls.
class LogicalClock {
 public:
  Timestamp next(Timestamp source);
  Timestamp next() { return next(Timestamp{}); }
  // Make later readings exceed an externally supplied timestamp.
  void observe(Timestamp seen);
  Timestamp last() const { return last_; }

 private:
  Timestamp last_{};
};

}  // namespace robostore
