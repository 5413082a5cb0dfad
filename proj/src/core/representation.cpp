#include "core/representation.hpp"

#include <cctype>
#include <sstream>
#include <stdexcept>

namespace so3rep {

namespace {

void check_dim(const RepSpec& spec, Eigen::Index n, const char* who) {
  if (n != spec.dim()) {
    std::ostringstream msg;
    msg << who << ": vector length " << n
        << " does not match the representation dimension " << spec.dim();
    throw std::invalid_argument(msg.str());
  }
}

// Parses a non-negative decimal integer covering the whole token.
int parse_nonneg_int(const std::string& token, const std::string& context) {
  if (token.empty()) {
    throw std::invalid_argument("RepSpec: empty number in \"" + context +
                                "\"");
  }
  long value = 0;
  for (char ch : token) {
    if (!std::isdigit(static_cast<unsigned char>(ch))) {
      throw std::invalid_argument("RepSpec: \"" + token +
                                  "\" is not a non-negative integer (in \"" +
                                  context + "\")");
    }
    value = value * 10 + (ch - '0');
    if (value > 1000000) {
      throw std::invalid_argument("RepSpec: value out of range in \"" +
                                  context + "\"");
    }
  }
  return static_cast<int>(value);
}

}  // namespace

RepSpec::RepSpec(std::vector<int> weights) : weights_(std::move(weights)) {
  offsets_.reserve(weights_.size());
  for (int l : weights_) {
    if (l < 0) throw std::invalid_argument("RepSpec: weights must be >= 0");
    offsets_.push_back(dim_);
    dim_ += 2 * l + 1;
  }
}

RepSpec RepSpec::parse(const std::string& text) {
  if (text.empty()) {
    throw std::invalid_argument("RepSpec: empty specification string");
  }
  std::vector<int> weights;
  std::stringstream ss(text);
  std::string token;
  while (std::getline(ss, token, ',')) {
    const auto colon = token.find(':');
    if (colon == std::string::npos) {
      throw std::invalid_argument("RepSpec: token \"" + token +
                                  "\" is missing the ':' separator");
    }
    const int l = parse_nonneg_int(token.substr(0, colon), token);
    const int mult = parse_nonneg_int(token.substr(colon + 1), token);
    if (mult < 1) {
      throw std::invalid_argument("RepSpec: multiplicity must be >= 1 in \"" +
                                  token + "\"");
    }
    for (int k = 0; k < mult; ++k) weights.push_back(l);
  }
  if (weights.empty()) {
    throw std::invalid_argument("RepSpec: no blocks in \"" + text + "\"");
  }
  return RepSpec(std::move(weights));
}

std::string RepSpec::to_string() const {
  std::ostringstream out;
  std::size_t i = 0;
  while (i < weights_.size()) {
    std::size_t j = i;
    while (j < weights_.size() && weights_[j] == weights_[i]) ++j;
    if (i > 0) out << ',';
    out << weights_[i] << ':' << (j - i);
    i = j;
  }
  return out.str();
}

int RepSpec::max_weight() const {
  int m = 0;
  for (int l : weights_) m = std::max(m, l);
  return m;
}

Eigen::VectorXd block_apply(const JTable& jt, const RepSpec& spec,
                            const EulerZYZ& g, const Eigen::VectorXd& z) {
  check_dim(spec, z.size(), "block_apply");
  Eigen::VectorXd out(z.size());
  for (int b = 0; b < spec.block_count(); ++b) {
    const int off = spec.block_offset(b);
    const int d = spec.block_dim(b);
    out.segment(off, d) =
        wigner_apply(jt, spec.block_weight(b), g, z.segment(off, d));
  }
  return out;
}

EulerJacobian block_apply_jacobian(const JTable& jt, const RepSpec& spec,
                                   const EulerZYZ& g,
                                   const Eigen::VectorXd& z) {
  check_dim(spec, z.size(), "block_apply_jacobian");
  EulerJacobian jac;
  jac.d_g1.resize(z.size());
  jac.d_g2.resize(z.size());
  jac.d_g3.resize(z.size());
  for (int b = 0; b < spec.block_count(); ++b) {
    const int off = spec.block_offset(b);
    const int d = spec.block_dim(b);
    const EulerJacobian part = wigner_apply_jacobian(
        jt, spec.block_weight(b), g, z.segment(off, d));
    jac.d_g1.segment(off, d) = part.d_g1;
    jac.d_g2.segment(off, d) = part.d_g2;
    jac.d_g3.segment(off, d) = part.d_g3;
  }
  return jac;
}

Eigen::MatrixXd block_dense(const JTable& jt, const RepSpec& spec,
                            const EulerZYZ& g) {
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(spec.dim(), spec.dim());
  for (int b = 0; b < spec.block_count(); ++b) {
    const int off = spec.block_offset(b);
    const int d = spec.block_dim(b);
    M.block(off, off, d, d) = wigner_matrix(jt, spec.block_weight(b), g);
  }
  return M;
}

}  // namespace so3rep
