#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace so3cli {

// Flat key=value run configuration.  Values arrive from three layers with
// increasing precedence: config file, repeated --set key=value overrides,
// then named command-line flags.  Every key must belong to the fixed
// allowlist; unknown keys are a usage error (exit code 2).
class RunConfig {
 public:
  // Throws std::runtime_error with a diagnostic on unknown keys, malformed
  // lines, or unreadable files.
  void load_file(const std::string& path);
  void set_pair(const std::string& pair);             // "key=value"
  void set(const std::string& key, const std::string& value);

  bool has(const std::string& key) const;
  std::string get_string(const std::string& key,
                         const std::string& fallback) const;
  long long get_int(const std::string& key, long long fallback) const;
  double get_double(const std::string& key, double fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;

  static const std::vector<std::string>& known_keys();

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace so3cli
