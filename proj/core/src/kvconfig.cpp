#include "flydram/kvconfig.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "flydram/errors.hpp"

namespace flydram {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool valid_key(std::string_view key) {
  if (key.empty()) return false;
  for (char c : key)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '-')) return false;
  return true;
}

}  // namespace

std::vector<std::string> split_list(std::string_view text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto comma = text.find(',', start);
    auto item = trim(text.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (!item.empty()) out.emplace_back(item);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

KvConfig KvConfig::parse(std::string_view text, std::string_view origin) {
  KvConfig cfg;
  cfg.origin_ = std::string(origin);
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;

    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ValidationError(fmt::format("{}:{}: expected 'key = value'", origin, line_no));
    auto key = trim(line.substr(0, eq));
    auto rest = trim(line.substr(eq + 1));
    if (!valid_key(key)) throw ValidationError(fmt::format("{}:{}: invalid key '{}'", origin, line_no, key));

    std::string value;
    if (!rest.empty() && rest.front() == '"') {
      auto close = rest.find('"', 1);
      if (close == std::string_view::npos)
        throw ValidationError(fmt::format("{}:{}: unterminated string", origin, line_no));
      value = std::string(rest.substr(1, close - 1));
      auto tail = trim(rest.substr(close + 1));
      if (!tail.empty() && tail.front() != '#')
        throw ValidationError(fmt::format("{}:{}: trailing text after string", origin, line_no));
    } else {
      auto hash = rest.find('#');
      value = std::string(trim(rest.substr(0, hash)));
    }
    if (cfg.has(key)) throw ValidationError(fmt::format("{}:{}: duplicate key '{}'", origin, line_no, key));
    cfg.entries_.emplace_back(std::string(key), std::move(value));
  }
  return cfg;
}

KvConfig KvConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError(fmt::format("cannot open config '{}'", path.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.string());
}

const std::string* KvConfig::find(std::string_view key) const {
  for (const auto& [k, v] : entries_)
    if (k == key) {
      consumed_.emplace(k);
      return &v;
    }
  return nullptr;
}

bool KvConfig::has(std::string_view key) const {
  for (const auto& [k, v] : entries_)
    if (k == key) return true;
  return false;
}

void KvConfig::set(std::string_view key, std::string value) {
  if (!valid_key(key)) throw ValidationError(fmt::format("invalid key '{}'", key));
  for (auto& [k, v] : entries_)
    if (k == key) {
      v = std::move(value);
      return;
    }
  entries_.emplace_back(std::string(key), std::move(value));
}

void KvConfig::merge(const KvConfig& other) {
  for (const auto& [k, v] : other.entries_) set(k, v);
}

std::string KvConfig::get_string(std::string_view key) const {
  if (const auto* v = find(key)) return *v;
  throw ValidationError(fmt::format("{}: missing key '{}'", origin_, key));
}

std::string KvConfig::get_string(std::string_view key, std::string_view fallback) const {
  if (const auto* v = find(key)) return *v;
  return std::string(fallback);
}

Picos KvConfig::get_latency(std::string_view key) const {
  try {
    return parse_latency(get_string(key));
  } catch (const ValidationError& e) {
    throw ValidationError(fmt::format("{}: key '{}': {}", origin_, key, e.what()));
  }
}

Picos KvConfig::get_latency(std::string_view key, Picos fallback) const {
  return has(key) ? get_latency(key) : fallback;
}

std::int64_t KvConfig::get_int(std::string_view key) const {
  auto text = get_string(key);
  std::int64_t value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size())
    throw ValidationError(fmt::format("{}: key '{}': '{}' is not an integer", origin_, key, text));
  return value;
}

std::int64_t KvConfig::get_int(std::string_view key, std::int64_t fallback) const {
  return has(key) ? get_int(key) : fallback;
}

std::uint64_t KvConfig::get_u64(std::string_view key, std::uint64_t fallback) const {
  if (!has(key)) return fallback;
  auto text = get_string(key);
  std::uint64_t value = 0;
  int base = 10;
  std::string_view digits = text;
  if (digits.size() > 2 && digits[0] == '0' && (digits[1] == 'x' || digits[1] == 'X')) {
    base = 16;
    digits.remove_prefix(2);
  }
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value, base);
  if (ec != std::errc{} || ptr != digits.data() + digits.size())
    throw ValidationError(fmt::format("{}: key '{}': '{}' is not an unsigned integer", origin_, key, text));
  return value;
}

double KvConfig::get_double(std::string_view key) const {
  auto text = get_string(key);
  try {
    std::size_t used = 0;
    double value = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument("trailing");
    return value;
  } catch (const std::exception&) {
    throw ValidationError(fmt::format("{}: key '{}': '{}' is not a number", origin_, key, text));
  }
}

double KvConfig::get_double(std::string_view key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

bool KvConfig::get_bool(std::string_view key, bool fallback) const {
  if (!has(key)) return fallback;
  auto text = get_string(key);
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ValidationError(fmt::format("{}: key '{}': '{}' is not a boolean", origin_, key, text));
}

std::vector<std::string> KvConfig::get_list(std::string_view key) const { return split_list(get_string(key)); }

void KvConfig::reject_unknown() const {
  std::string unknown;
  for (const auto& [k, v] : entries_)
    if (!consumed_.contains(k)) unknown += (unknown.empty() ? "" : ", ") + k;
  if (!unknown.empty()) throw ValidationError(fmt::format("{}: unknown key(s): {}", origin_, unknown));
}

std::string KvConfig::render() const {
  std::string out;
  for (const auto& [k, v] : entries_) out += fmt::format("{} = \"{}\"\n", k, v);
  return out;
}

}  // namespace flydram
