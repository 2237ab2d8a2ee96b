#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "flydram/units.hpp"

namespace flydram {

/// Flat `key = value` configuration shared by device specs, campaign plans and
/// CLI runs. Values may be bare tokens or double-quoted strings; `#` starts a
/// comment. Keys keep their file order so rendering is stable.
///
/// Every getter marks its key as consumed; `reject_unknown()` then turns any
/// key nobody asked for into a ValidationError, so typos never pass silently.
class KvConfig {
 public:
  KvConfig() = default;

  static KvConfig parse(std::string_view text, std::string_view origin = "<string>");
  static KvConfig load(const std::filesystem::path& path);

  bool has(std::string_view key) const;
  void set(std::string_view key, std::string value);
  /// Keys from `other` override ours (used for CLI overrides on top of a file).
  void merge(const KvConfig& other);

  std::string get_string(std::string_view key) const;
  std::string get_string(std::string_view key, std::string_view fallback) const;
  Picos get_latency(std::string_view key) const;
  Picos get_latency(std::string_view key, Picos fallback) const;
  std::int64_t get_int(std::string_view key) const;
  std::int64_t get_int(std::string_view key, std::int64_t fallback) const;
  std::uint64_t get_u64(std::string_view key, std::uint64_t fallback) const;
  double get_double(std::string_view key) const;
  double get_double(std::string_view key, double fallback) const;
  bool get_bool(std::string_view key, bool fallback) const;
  /// Comma-separated list, whitespace trimmed, empty items dropped.
  std::vector<std::string> get_list(std::string_view key) const;

  /// Throws ValidationError naming every key that no getter consumed.
  void reject_unknown() const;

  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

  /// Renders back to the file format; values are always quoted.
  std::string render() const;

 private:
  const std::string* find(std::string_view key) const;

  std::string origin_ = "<config>";
  std::vector<std::pair<std::string, std::string>> entries_;
  mutable std::set<std::string, std::less<>> consumed_;
};

std::vector<std::string> split_list(std::string_view text);

}  // namespace flydram
