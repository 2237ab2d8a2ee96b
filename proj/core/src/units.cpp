#include "flydram/units.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <string>

#include <fmt/format.h>

#include "flydram/errors.hpp"

namespace flydram {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace

Picos parse_latency(std::string_view text) {
  std::string_view s = trim(text);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = trim(s.substr(1, s.size() - 2));
  if (s.empty()) throw ValidationError("empty latency");

  std::size_t split = 0;
  while (split < s.size() &&
         (std::isdigit(static_cast<unsigned char>(s[split])) || s[split] == '.' || s[split] == '-' ||
          s[split] == '+'))
    ++split;
  std::string_view number = s.substr(0, split);
  std::string_view suffix = trim(s.substr(split));

  // Split "7.5" into integer and fractional digits so that decimal inputs
  // such as 13.125ns convert without binary rounding.
  bool negative = false;
  if (!number.empty() && (number.front() == '-' || number.front() == '+')) {
    negative = number.front() == '-';
    number.remove_prefix(1);
  }
  auto dot = number.find('.');
  std::string_view int_part = number.substr(0, dot);
  std::string_view frac_part = dot == std::string_view::npos ? std::string_view{} : number.substr(dot + 1);
  if ((int_part.empty() && frac_part.empty()) || frac_part.find('.') != std::string_view::npos)
    throw ValidationError(fmt::format("malformed latency '{}'", text));
  for (char c : int_part)
    if (!std::isdigit(static_cast<unsigned char>(c))) throw ValidationError(fmt::format("malformed latency '{}'", text));
  for (char c : frac_part)
    if (!std::isdigit(static_cast<unsigned char>(c))) throw ValidationError(fmt::format("malformed latency '{}'", text));

  int exponent = 0;  // power of ten that converts the unit to picoseconds
  if (suffix.empty() || suffix == "ps") exponent = 0;
  else if (suffix == "ns") exponent = 3;
  else if (suffix == "us") exponent = 6;
  else if (suffix == "ms") exponent = 9;
  else if (suffix == "s") exponent = 12;
  else throw ValidationError(fmt::format("unknown latency unit '{}' in '{}'", suffix, text));

  std::string digits(int_part);
  digits += frac_part;
  int scale = exponent - static_cast<int>(frac_part.size());
  while (scale < 0) {
    if (digits.empty() || digits.back() != '0')
      throw ValidationError(fmt::format("latency '{}' is not a whole number of picoseconds", text));
    digits.pop_back();
    ++scale;
  }
  digits.append(static_cast<std::size_t>(scale), '0');
  if (digits.empty()) digits = "0";

  Picos value = 0;
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value);
  if (ec != std::errc{} || ptr != digits.data() + digits.size())
    throw ValidationError(fmt::format("latency '{}' out of range", text));
  return negative ? -value : value;
}

std::string format_latency(Picos ps) {
  struct Unit {
    Picos scale;
    const char* name;
  };
  static constexpr Unit units[] = {{1'000'000'000, "ms"}, {1'000'000, "us"}, {1'000, "ns"}};
  Picos mag = ps < 0 ? -ps : ps;
  for (const auto& u : units) {
    if (mag >= u.scale) {
      Picos whole = mag / u.scale;
      Picos rem = mag % u.scale;
      std::string out = fmt::format("{}{}", ps < 0 ? "-" : "", whole);
      if (rem != 0) {
        int width = u.scale == 1000 ? 3 : u.scale == 1'000'000 ? 6 : 9;
        std::string frac = fmt::format("{:0{}}", rem, width);
        while (!frac.empty() && frac.back() == '0') frac.pop_back();
        out += "." + frac;
      }
      return out + u.name;
    }
  }
  return fmt::format("{}ps", ps);
}

}  // namespace flydram
