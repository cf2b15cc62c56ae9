#include "combandit/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "combandit/errors.hpp"

namespace combandit {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

ConfigMap ConfigMap::parse(const std::string& text, const std::string& origin) {
  ConfigMap out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value, got '" +
                        line + "'");
    }
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
    out.set(key, trim(line.substr(eq + 1)));
  }
  return out;
}

ConfigMap ConfigMap::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path.string());
}

void ConfigMap::set(const std::string& key, const std::string& value) { values_[key] = value; }

void ConfigMap::apply_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || trim(assignment.substr(0, eq)).empty()) {
    throw ConfigError("override '" + assignment + "' is not of the form key=value");
  }
  set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

bool ConfigMap::contains(const std::string& key) const { return values_.count(key) > 0; }

const std::string* ConfigMap::find(const std::string& key) {
  consumed_.insert(key);
  const auto it = values_.find(key);
  return it == values_.end() ? nullptr : &it->second;
}

namespace {

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const char* begin = text.data();
  const char* end = begin + text.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError("config key '" + key + "': cannot parse '" + text + "' as a number");
  }
  return value;
}

}  // namespace

std::string ConfigMap::get_string(const std::string& key, const std::string& fallback) {
  const std::string* v = find(key);
  return v ? *v : fallback;
}

int ConfigMap::get_int(const std::string& key, int fallback) {
  const std::string* v = find(key);
  return v ? parse_number<int>(key, *v) : fallback;
}

std::int64_t ConfigMap::get_int64(const std::string& key, std::int64_t fallback) {
  const std::string* v = find(key);
  return v ? parse_number<std::int64_t>(key, *v) : fallback;
}

std::uint64_t ConfigMap::get_uint64(const std::string& key, std::uint64_t fallback) {
  const std::string* v = find(key);
  return v ? parse_number<std::uint64_t>(key, *v) : fallback;
}

double ConfigMap::get_double(const std::string& key, double fallback) {
  const std::string* v = find(key);
  return v ? parse_number<double>(key, *v) : fallback;
}

bool ConfigMap::get_bool(const std::string& key, bool fallback) {
  const std::string* v = find(key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1" || *v == "yes" || *v == "on") return true;
  if (*v == "false" || *v == "0" || *v == "no" || *v == "off") return false;
  throw ConfigError("config key '" + key + "': expected true/false, got '" + *v + "'");
}

std::vector<double> ConfigMap::get_doubles(const std::string& key,
                                           const std::vector<double>& fallback) {
  const std::string* v = find(key);
  if (!v) return fallback;
  std::vector<double> out;
  std::stringstream ss(*v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_number<double>(key, trim(item)));
  return out;
}

void ConfigMap::require_all_consumed() const {
  std::string unknown;
  for (const auto& [key, value] : values_) {
    if (!consumed_.count(key)) unknown += (unknown.empty() ? "" : ", ") + key;
  }
  if (!unknown.empty()) throw ConfigError("unknown config key(s): " + unknown);
}

}  // namespace combandit
