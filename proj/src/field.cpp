#include "latentprobe/field.hpp"

#include <charconv>

#include <fmt/format.h>

#include "latentprobe/error.hpp"
#include "latentprobe/time.hpp"

namespace latentprobe {

namespace {

bool read_int(std::string_view s, std::size_t pos, std::size_t len, int& out) {
  if (pos + len > s.size()) return false;
  const char* first = s.data() + pos;
  const char* last = first + len;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc{} && ptr == last;
}

}  // namespace

UtcInstant parse_utc(std::string_view text) {
  using namespace std::chrono;
  std::string_view s = text;
  if (!s.empty() && (s.back() == 'Z' || s.back() == 'z')) s.remove_suffix(1);

  int y = 0, mo = 0, d = 0, h = 0, mi = 0, sec = 0;
  bool ok = (s.size() == 16 || s.size() == 19) && read_int(s, 0, 4, y) && s[4] == '-' &&
            read_int(s, 5, 2, mo) && s[7] == '-' && read_int(s, 8, 2, d) &&
            (s[10] == 'T' || s[10] == ' ') && read_int(s, 11, 2, h) && s[13] == ':' &&
            read_int(s, 14, 2, mi);
  if (ok && s.size() == 19) ok = s[16] == ':' && read_int(s, 17, 2, sec);
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ok || !ymd.ok() || h > 23 || mi > 59 || sec > 59 || h < 0 || mi < 0 || sec < 0) {
    throw ValidationError(fmt::format("invalid UTC timestamp '{}'", text));
  }
  return sys_days{ymd} + hours{h} + minutes{mi} + seconds{sec};
}

std::string format_utc(UtcInstant t) {
  using namespace std::chrono;
  const auto day_start = floor<days>(t);
  const year_month_day ymd{day_start};
  const hh_mm_ss hms{t - day_start};
  return fmt::format("{:04d}-{:02d}-{:02d}T{:02d}:{:02d}:{:02d}Z", static_cast<int>(ymd.year()),
                     static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                     hms.hours().count(), hms.minutes().count(), hms.seconds().count());
}

std::string_view units_tag(Units u) {
  switch (u) {
    case Units::celsius: return "degC";
    case Units::kelvin: return "K";
    case Units::percent: return "percent";
    case Units::k_index: return "K-index";
    case Units::fraction: return "1";
  }
  return "1";
}

Units parse_units(std::string_view tag) {
  for (auto u : {Units::celsius, Units::kelvin, Units::percent, Units::k_index, Units::fraction}) {
    if (units_tag(u) == tag) return u;
  }
  throw ValidationError(fmt::format("unknown units tag '{}'", tag));
}

std::string describe(const FieldGrid& f) {
  std::string s = f.variable + "@" + (f.level_hpa ? std::to_string(*f.level_hpa) : "surface");
  if (f.time) s += " " + format_utc(*f.time);
  return s;
}

}  // namespace latentprobe
