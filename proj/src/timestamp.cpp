#include "robostore/timestamp.hpp"

#include <algorithm>

namespace robostore {

std::string Timestamp::to_string() const {
  if (value_ == 0) return "0";
  std::string digits;
  uint128 v = value_;
  while (v != 0) {
    digits.push_back(static_cast<char>('0' + static_cast<int>(v % 10)));
    v /= 10;
  }
  std::reverse(digits.begin(), digits.end());
  return digits;
}

std::optional<Timestamp> Timestamp::parse(std::string_view text) {
  if (text.empty() || text.size() > 39) return std::nullopt;
  uint128 v = 0;
  for (char c : text) {
    if (c < '0' || c > '9') return std::nullopt;
    const uint128 digit = static_cast<uint128>(c - '0');
    if (v > (~uint128{0} - digit) / 10) return std::nullopt;
    v = v * 10 + digit;
  }
  return Timestamp{v};
}

Timestamp LogicalClock::next(Timestamp source) {
  const Timestamp bumped{last_.value() + 1};
  last_ = std::max(source, bumped);
  return last_;
}

void LogicalClock::observe(Timestamp seen) { last_ = std::max(last_, seen); }

}  // namespace robostore
