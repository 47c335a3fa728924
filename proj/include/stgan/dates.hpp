#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "stgan/errors.hpp"

namespace stgan {

// Days since 1970-01-01 for a proleptic Gregorian date (Howard Hinnant's algorithm).
inline int64_t days_from_civil(int y, int m, int d) {
  y -= m <= 2;
  const int era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = unsigned(y - era * 400);
  const unsigned doy = (153u * unsigned(m + (m > 2 ? -3 : 9)) + 2u) / 5u + unsigned(d) - 1u;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return int64_t(era) * 146097 + int64_t(doe) - 719468;
}

// Parses "YYYYMMDD" into days since epoch.
inline int64_t parse_yyyymmdd(std::string_view s) {
  if (s.size() != 8) throw ParseError("expected YYYYMMDD date, got '" + std::string(s) + "'");
  for (char c : s)
    if (c < '0' || c > '9') throw ParseError("non-digit in date '" + std::string(s) + "'");
  int y = (s[0] - '0') * 1000 + (s[1] - '0') * 100 + (s[2] - '0') * 10 + (s[3] - '0');
  int m = (s[4] - '0') * 10 + (s[5] - '0');
  int d = (s[6] - '0') * 10 + (s[7] - '0');
  if (m < 1 || m > 12 || d < 1 || d > 31) throw ParseError("date out of range '" + std::string(s) + "'");
  return days_from_civil(y, m, d);
}

}  // namespace stgan
