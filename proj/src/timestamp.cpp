#include "evtax/timestamp.hpp"

#include <array>
#include <chrono>
#include <cstdio>
#include <cstdlib>

namespace evtax {

std::int64_t days_from_civil(int year, unsigned month, unsigned day) {
  using namespace std::chrono;
  return sys_days{std::chrono::year{year} / std::chrono::month{month} /
                  std::chrono::day{day}}
      .time_since_epoch()
      .count();
}

namespace {

bool read_int(std::string_view s, std::size_t pos, std::size_t width,
              int& out) {
  if (pos + width > s.size()) return false;
  int v = 0;
  for (std::size_t i = pos; i < pos + width; ++i) {
    if (s[i] < '0' || s[i] > '9') return false;
    v = v * 10 + (s[i] - '0');
  }
  out = v;
  return true;
}

bool valid_civil(int y, int mo, int d, int h, int mi, int se) {
  using namespace std::chrono;
  if (mo < 1 || mo > 12 || d < 1 || h > 23 || mi > 59 || se > 60) return false;
  return year_month_day{std::chrono::year{y}, std::chrono::month(mo),
                        std::chrono::day(d)}
      .ok();
}

std::optional<Timestamp> make(int y, int mo, int d, int h, int mi, int se,
                              int offset_minutes) {
  if (!valid_civil(y, mo, d, h, mi, se)) return std::nullopt;
  if (offset_minutes < -18 * 60 || offset_minutes > 18 * 60)
    return std::nullopt;
  std::int64_t local = days_from_civil(y, mo, d) * 86400 + h * 3600 +
                       mi * 60 + se;
  return Timestamp{local - std::int64_t{offset_minutes} * 60, offset_minutes};
}

// "+HH:MM", "+HHMM", "Z", "GMT", "UTC"
std::optional<int> parse_offset(std::string_view s) {
  if (s.empty() || s == "Z" || s == "GMT" || s == "UTC" || s == "UT")
    return 0;
  if (s[0] != '+' && s[0] != '-') return std::nullopt;
  int sign = s[0] == '-' ? -1 : 1;
  int hh = 0, mm = 0;
  if (s.size() == 6 && s[3] == ':') {
    if (!read_int(s, 1, 2, hh) || !read_int(s, 4, 2, mm)) return std::nullopt;
  } else if (s.size() == 5) {
    if (!read_int(s, 1, 2, hh) || !read_int(s, 3, 2, mm)) return std::nullopt;
  } else if (s.size() == 3) {
    if (!read_int(s, 1, 2, hh)) return std::nullopt;
  } else {
    return std::nullopt;
  }
  if (mm > 59) return std::nullopt;
  return sign * (hh * 60 + mm);
}

std::optional<Timestamp> parse_iso(std::string_view s) {
  int y, mo, d, h = 0, mi = 0, se = 0;
  if (s.size() < 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
  if (!read_int(s, 0, 4, y) || !read_int(s, 5, 2, mo) || !read_int(s, 8, 2, d))
    return std::nullopt;
  std::size_t pos = 10;
  if (pos == s.size()) return make(y, mo, d, 0, 0, 0, 0);
  if (s[pos] != 'T' && s[pos] != ' ') return std::nullopt;
  ++pos;
  if (!read_int(s, pos, 2, h) || pos + 2 >= s.size() || s[pos + 2] != ':' ||
      !read_int(s, pos + 3, 2, mi))
    return std::nullopt;
  pos += 5;
  if (pos < s.size() && s[pos] == ':') {
    if (!read_int(s, pos + 1, 2, se)) return std::nullopt;
    pos += 3;
  }
  if (pos < s.size() && s[pos] == '.') {
    ++pos;
    while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') ++pos;
  }
  auto off = parse_offset(s.substr(pos));
  if (!off) return std::nullopt;
  return make(y, mo, d, h, mi, se, *off);
}

std::optional<Timestamp> parse_rfc822(std::string_view s) {
  static constexpr std::array<std::string_view, 12> kMonths = {
      "Jan", "Feb", "Mar", "Apr", "May", "Jun",
      "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"};
  if (auto comma = s.find(','); comma != std::string_view::npos)
    s.remove_prefix(comma + 1);
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  // d[d] Mon yyyy hh:mm[:ss] zone
  std::size_t sp = s.find(' ');
  if (sp == std::string_view::npos || sp > 2) return std::nullopt;
  int d = 0;
  if (!read_int(s, 0, sp, d)) return std::nullopt;
  s.remove_prefix(sp + 1);
  if (s.size() < 4) return std::nullopt;
  int mo = 0;
  for (std::size_t i = 0; i < kMonths.size(); ++i)
    if (s.substr(0, 3) == kMonths[i]) mo = static_cast<int>(i) + 1;
  if (mo == 0 || s[3] != ' ') return std::nullopt;
  s.remove_prefix(4);
  int y = 0;
  if (!read_int(s, 0, 4, y) || s.size() < 10 || s[4] != ' ')
    return std::nullopt;
  s.remove_prefix(5);
  int h = 0, mi = 0, se = 0;
  if (!read_int(s, 0, 2, h) || s[2] != ':' || !read_int(s, 3, 2, mi))
    return std::nullopt;
  s.remove_prefix(5);
  if (!s.empty() && s[0] == ':') {
    if (!read_int(s, 1, 2, se)) return std::nullopt;
    s.remove_prefix(3);
  }
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  auto off = parse_offset(s);
  if (!off) return std::nullopt;
  return make(y, mo, d, h, mi, se, *off);
}

}  // namespace

std::optional<Timestamp> parse_timestamp(std::string_view text) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t'))
    text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t'))
    text.remove_suffix(1);
  if (text.empty()) return std::nullopt;
  if (text[0] >= '0' && text[0] <= '9' && text.size() >= 10 && text[4] == '-')
    return parse_iso(text);
  return parse_rfc822(text);
}

std::string format_timestamp(const Timestamp& ts) {
  using namespace std::chrono;
  std::int64_t local = ts.utc_seconds + std::int64_t{ts.offset_minutes} * 60;
  std::int64_t days = local / 86400;
  std::int64_t secs = local % 86400;
  if (secs < 0) {
    secs += 86400;
    --days;
  }
  year_month_day ymd{sys_days{std::chrono::days{days}}};
  int off = ts.offset_minutes;
  char sign = off < 0 ? '-' : '+';
  if (off < 0) off = -off;
  char buf[40];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02d%c%02d:%02d",
                static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()), static_cast<int>(secs / 3600),
                static_cast<int>(secs / 60 % 60), static_cast<int>(secs % 60),
                sign, off / 60, off % 60);
  return buf;
}

}  // namespace evtax
