#include "core/dataset.hpp"

#include "core/errors.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>

namespace so3rep {

namespace {

using RowMajorMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

void write_doubles(std::ofstream& out, const Eigen::MatrixXd& m) {
  RowMajorMatrix tmp = m;
  out.write(reinterpret_cast<const char*>(tmp.data()),
            static_cast<std::streamsize>(sizeof(double) * tmp.size()));
}

void read_doubles(std::ifstream& in, Eigen::MatrixXd& m,
                  const std::string& path) {
  RowMajorMatrix tmp(m.rows(), m.cols());
  in.read(reinterpret_cast<char*>(tmp.data()),
          static_cast<std::streamsize>(sizeof(double) * tmp.size()));
  if (!in) {
    throw IoError("dataset file truncated: " + path);
  }
  m = tmp;
}

void parse_header(std::ifstream& in, const std::string& path, int& n, int& v,
                  int& d) {
  std::string line;
  if (!std::getline(in, line)) {
    throw IoError("cannot read dataset header: " + path);
  }
  if (std::sscanf(line.c_str(), "DSET v1 N=%d V=%d D=%d", &n, &v, &d) != 3 ||
      n < 0 || v < 0 || d < 0) {
    throw IoError("not a DSET v1 file: " + path);
  }
}

}  // namespace

Eigen::VectorXd Dataset::view(int n, int v) const {
  if (n < 0 || n >= n_instances || v < 0 || v >= views) {
    throw std::out_of_range("dataset view index out of range");
  }
  return X.row(static_cast<Eigen::Index>(n) * views + v).transpose();
}

void save_dataset(const std::string& path, const Dataset& data) {
  if (data.X.rows() != static_cast<Eigen::Index>(data.n_instances) * data.views ||
      data.X.cols() != data.dx) {
    throw std::invalid_argument("dataset shape does not match its header");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError("cannot open for writing: " + path);
  }
  char header[96];
  std::snprintf(header, sizeof(header), "DSET v1 N=%d V=%d D=%d\n",
                data.n_instances, data.views, data.dx);
  out << header;
  write_doubles(out, data.X);
  if (!out) {
    throw IoError("write failed: " + path);
  }
}

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open: " + path);
  }
  Dataset data;
  parse_header(in, path, data.n_instances, data.views, data.dx);
  data.X.resize(static_cast<Eigen::Index>(data.n_instances) * data.views,
                data.dx);
  if (data.X.size() > 0) {
    read_doubles(in, data.X, path);
  }
  return data;
}

void read_dataset_header(const std::string& path, int& n, int& v, int& d) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open: " + path);
  }
  parse_header(in, path, n, v, d);
}

}  // namespace so3rep
