#include "config.hpp"

#include <algorithm>
#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <stdexcept>

namespace so3cli {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

}  // namespace

const std::vector<std::string>& RunConfig::known_keys() {
  static const std::vector<std::string> keys = {
      // shared
      "seed", "out", "spec", "samples", "tolerance", "jtable_cache",
      // verify
      "homo_lmax", "homo_pairs", "oracle_lmax", "oracle_samples",
      "schur_lmax", "schur_samples", "zred_l",
      // decorrelate
      "mode", "circle_n", "circle_ntheta", "circle_tau", "orbit_tau",
      "factor_sigma", "factor_quad", "factor_probes",
      // train
      "dataset", "ground_truth", "checkpoint", "epochs", "instances",
      "views", "dx", "hidden", "sigma_true", "lr_e", "lr_m", "beta", "alpha",
      "adagrad_eps", "pca_fraction", "holdout", "heldout_restarts",
      "heldout_steps", "heldout_lr",
      // sweep
      "instance", "sweep_steps", "sweep_from", "sweep_to",
  };
  return keys;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  const auto& keys = known_keys();
  if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
    throw std::runtime_error("unknown configuration key '" + key + "'");
  }
  values_[key] = value;
}

void RunConfig::set_pair(const std::string& pair) {
  const auto eq = pair.find('=');
  if (eq == std::string::npos) {
    throw std::runtime_error("expected key=value, got '" + pair + "'");
  }
  const std::string key = trim(pair.substr(0, eq));
  const std::string value = trim(pair.substr(eq + 1));
  if (key.empty()) {
    throw std::runtime_error("empty key in '" + pair + "'");
  }
  set(key, value);
}

void RunConfig::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open config file: " + path);
  }
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    try {
      set_pair(line);
    } catch (const std::runtime_error& e) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " +
                               e.what());
    }
  }
}

bool RunConfig::has(const std::string& key) const {
  return values_.count(key) > 0;
}

std::string RunConfig::get_string(const std::string& key,
                                  const std::string& fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

long long RunConfig::get_int(const std::string& key, long long fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  errno = 0;
  char* end = nullptr;
  const long long v = std::strtoll(it->second.c_str(), &end, 10);
  if (errno != 0 || end == it->second.c_str() || *end != '\0') {
    throw std::runtime_error("key '" + key + "' needs an integer, got '" +
                             it->second + "'");
  }
  return v;
}

double RunConfig::get_double(const std::string& key, double fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(it->second.c_str(), &end);
  if (errno != 0 || end == it->second.c_str() || *end != '\0') {
    throw std::runtime_error("key '" + key + "' needs a number, got '" +
                             it->second + "'");
  }
  return v;
}

std::uint64_t RunConfig::get_u64(const std::string& key,
                                 std::uint64_t fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  errno = 0;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(it->second.c_str(), &end, 10);
  if (errno != 0 || end == it->second.c_str() || *end != '\0') {
    throw std::runtime_error("key '" + key +
                             "' needs an unsigned integer, got '" +
                             it->second + "'");
  }
  return v;
}

}  // namespace so3cli
