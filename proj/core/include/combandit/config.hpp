#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace combandit {

/// Flat key=value configuration. Lines are `key = value`; `#` starts a
/// comment; later assignments win.
class ConfigMap {
 public:
  static ConfigMap parse(const std::string& text, const std::string& origin = "<string>");
  static ConfigMap load(const std::filesystem::path& path);

  void set(const std::string& key, const std::string& value);
  /// Applies one `key=value` override.
  void apply_override(const std::string& assignment);

  [[nodiscard]] bool contains(const std::string& key) const;
  [[nodiscard]] const std::map<std::string, std::string>& entries() const { return values_; }

  // Typed getters mark the key as consumed.
  std::string get_string(const std::string& key, const std::string& fallback);
  int get_int(const std::string& key, int fallback);
  std::int64_t get_int64(const std::string& key, std::int64_t fallback);
  std::uint64_t get_uint64(const std::string& key, std::uint64_t fallback);
  double get_double(const std::string& key, double fallback);
  bool get_bool(const std::string& key, bool fallback);
  std::vector<double> get_doubles(const std::string& key, const std::vector<double>& fallback);

  /// Throws ConfigError listing keys no getter has asked for.
  void require_all_consumed() const;

 private:
  const std::string* find(const std::string& key);

  std::map<std::string, std::string> values_;
  std::set<std::string> consumed_;
};

std::string trim(const std::string& s);

}  // namespace combandit
