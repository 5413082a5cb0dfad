#pragma once

#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace so3cli {

// Full-precision, locale-independent float formatting ("%.17g" through
// snprintf with the C locale) so report files are byte-identical across
// runs and machines.
inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string fmt(long long v) { return std::to_string(v); }
inline std::string fmt(int v) { return std::to_string(v); }

class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path) : out_(path, std::ios::binary) {
    if (!out_) {
      throw std::runtime_error("cannot open for writing: " + path);
    }
    path_ = path;
  }

  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i > 0) out_ << ',';
      out_ << cells[i];
    }
    out_ << '\n';
    if (!out_) {
      throw std::runtime_error("write failed: " + path_);
    }
  }

 private:
  std::ofstream out_;
  std::string path_;
};

}  // namespace so3cli
