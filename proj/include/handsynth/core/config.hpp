#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace handsynth {

/// Flat `key = value` configuration with dotted keys. `#` starts a comment.
/// All lookup failures throw Error(ConfigError) naming the offending key.
class KeyValueConfig {
 public:
  KeyValueConfig() = default;

  static KeyValueConfig parse(const std::string& text);
  static KeyValueConfig load(const std::filesystem::path& path);

  /// Directory of the file the config was loaded from; relative paths resolve against it.
  const std::filesystem::path& base_dir() const { return base_dir_; }

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  void set(const std::string& key, const std::string& value) { values_[key] = value; }

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  long long get_int(const std::string& key, long long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<std::string> get_list(const std::string& key, const std::vector<std::string>& fallback) const;
  /// Relative values and fallbacks resolve against the config file's directory.
  std::filesystem::path get_path(const std::string& key, const std::filesystem::path& fallback) const;

  /// Throws ConfigError for the first key not in `known`.
  void require_known(const std::set<std::string>& known) const;

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::optional<std::string> raw(const std::string& key) const;

  std::map<std::string, std::string> values_;
  std::filesystem::path base_dir_;
};

}  // namespace handsynth
