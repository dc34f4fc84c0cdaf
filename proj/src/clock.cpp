#include "ttx/clock.hpp"

#include <charconv>
#include <cstdio>

#include "ttx/error.hpp"

namespace ttx {

Timestamp system_now() {
  return std::chrono::time_point_cast<Duration>(std::chrono::system_clock::now());
}

std::string format_timestamp(Timestamp t) {
  using namespace std::chrono;
  const auto day = floor<days>(t);
  const year_month_day ymd{day};
  const hh_mm_ss hms{t - day};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02d.%03dZ",
                static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()), static_cast<int>(hms.hours().count()),
                static_cast<int>(hms.minutes().count()),
                static_cast<int>(hms.seconds().count()),
                static_cast<int>(hms.subseconds().count()));
  return buf;
}

namespace {

int read_int(std::string_view text, std::size_t pos, std::size_t len) {
  int value = 0;
  if (pos + len > text.size()) fail(ErrorCode::validation_error, "truncated timestamp");
  auto [ptr, ec] = std::from_chars(text.data() + pos, text.data() + pos + len, value);
  if (ec != std::errc{} || ptr != text.data() + pos + len) {
    fail(ErrorCode::validation_error, "malformed timestamp: " + std::string(text));
  }
  return value;
}

}  // namespace

Timestamp parse_timestamp(std::string_view text) {
  using namespace std::chrono;
  // YYYY-MM-DDTHH:MM:SS[.mmm]Z
  if (text.size() < 20 || text[4] != '-' || text[7] != '-' || text[10] != 'T' ||
      text[13] != ':' || text[16] != ':' || text.back() != 'Z') {
    fail(ErrorCode::validation_error, "malformed timestamp: " + std::string(text));
  }
  const year_month_day ymd{year{read_int(text, 0, 4)},
                           month{static_cast<unsigned>(read_int(text, 5, 2))},
                           day{static_cast<unsigned>(read_int(text, 8, 2))}};
  if (!ymd.ok()) fail(ErrorCode::validation_error, "invalid date: " + std::string(text));
  int millis = 0;
  if (text.size() == 24 && text[19] == '.') {
    millis = read_int(text, 20, 3);
  } else if (text.size() != 20) {
    fail(ErrorCode::validation_error, "malformed timestamp: " + std::string(text));
  }
  return sys_days{ymd} + hours{read_int(text, 11, 2)} + minutes{read_int(text, 14, 2)} +
         seconds{read_int(text, 17, 2)} + milliseconds{millis};
}

}  // namespace ttx
