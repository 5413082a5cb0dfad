#pragma once

#include <string>

#include <Eigen/Dense>

namespace so3rep {

// A multi-view dataset: n_instances objects, `views` observations each,
// `dx` coordinates per observation.  Row n*views + v of X holds view v of
// instance n.
struct Dataset {
  int n_instances = 0;
  int views = 0;
  int dx = 0;
  Eigen::MatrixXd X;  // (n_instances * views) x dx

  Eigen::VectorXd view(int n, int v) const;
};

// On-disk layout: the ASCII line "DSET v1 N=<n> V=<v> D=<d>\n" followed by
// the rows of X as raw little-endian doubles, row-major.
void save_dataset(const std::string& path, const Dataset& data);
Dataset load_dataset(const std::string& path);

// Reads only the header line (cheap shape query).
void read_dataset_header(const std::string& path, int& n, int& v, int& d);

}  // namespace so3rep
