#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace evtax {

/// An instant plus the UTC offset it was written with, so that
/// "2019-11-30T13:00:18+00:00" formats back to the same text.
struct Timestamp {
  std::int64_t utc_seconds = 0;
  std::int32_t offset_minutes = 0;

  friend bool operator==(const Timestamp& a, const Timestamp& b) {
    return a.utc_seconds == b.utc_seconds;
  }
  friend std::strong_ordering operator<=>(const Timestamp& a,
                                          const Timestamp& b) {
    return a.utc_seconds <=> b.utc_seconds;
  }
};

/// Accepts ISO 8601 ("2019-11-30T13:00:18+00:00", "...Z", no offset = UTC,
/// date only, optional fractional seconds which are dropped) and RFC 822
/// feed dates ("Sat, 30 Nov 2019 13:00:18 +0000" / "GMT").
std::optional<Timestamp> parse_timestamp(std::string_view text);

/// Always "YYYY-MM-DDTHH:MM:SS+HH:MM".
std::string format_timestamp(const Timestamp& ts);

std::int64_t days_from_civil(int year, unsigned month, unsigned day);

}  // namespace evtax
