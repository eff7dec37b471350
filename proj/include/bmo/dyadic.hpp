#pragma once

// Dyadic geometry on the unit cube [0,1]^n and functions constant on the
// cubes of a fixed depth.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "bmo/error.hpp"

namespace bmo {

using Index3 = std::array<std::uint32_t, 3>;

/// Largest admissible depth for dimension n (desk-scale caps).
inline int depth_cap(int n) {
  switch (n) {
    case 1: return 21;
    case 2: return 10;
    case 3: return 6;
    default: return -1;
  }
}

inline void check_dimension(int n) {
  require(n >= 1 && n <= 3, ErrorKind::Cap, "dimension must be 1, 2 or 3, got " + std::to_string(n));
}

inline void check_caps(int n, int depth) {
  check_dimension(n);
  require(depth >= 0, ErrorKind::OutOfRange, "depth must be non-negative");
  require(depth <= depth_cap(n), ErrorKind::Cap,
          "depth " + std::to_string(depth) + " exceeds the cap " + std::to_string(depth_cap(n)) +
              " for n=" + std::to_string(n));
}

/// A dyadic subcube of [0,1]^n: side 2^-depth, lower corner index * 2^-depth.
struct DyadicCube {
  int n = 1;
  int depth = 0;
  Index3 index{};

  DyadicCube() = default;
  DyadicCube(int dim, int k, Index3 idx) : n(dim), depth(k), index(idx) {
    check_dimension(n);
    require(k >= 0 && k < 32, ErrorKind::OutOfRange, "cube depth out of range");
    const std::uint64_t side = std::uint64_t{1} << k;
    for (int a = 0; a < 3; ++a) {
      if (a < n) {
        require(idx[a] < side, ErrorKind::OutOfRange, "cube index outside [0, 2^depth)");
      } else {
        require(idx[a] == 0, ErrorKind::OutOfRange, "unused cube index components must be 0");
      }
    }
  }

  static DyadicCube unit(int dim) { return DyadicCube(dim, 0, {}); }

  double measure() const { return std::ldexp(1.0, -n * depth); }
  double side() const { return std::ldexp(1.0, -depth); }
  double lower(int axis) const { return std::ldexp(static_cast<double>(index[axis]), -depth); }

  /// Position in the flat order with the first axis fastest.
  std::size_t flat_index() const {
    std::size_t flat = 0;
    for (int a = n - 1; a >= 0; --a) flat = (flat << depth) | index[a];
    return flat;
  }

  static DyadicCube from_flat(int dim, int k, std::size_t flat) {
    Index3 idx{};
    const std::size_t mask = (std::size_t{1} << k) - 1;
    for (int a = 0; a < dim; ++a) {
      idx[a] = static_cast<std::uint32_t>(flat & mask);
      flat >>= k;
    }
    return DyadicCube(dim, k, idx);
  }

  /// Child b has bit a set when it takes the upper half along axis a.
  DyadicCube child(unsigned b) const {
    Index3 idx{};
    for (int a = 0; a < n; ++a) idx[a] = 2 * index[a] + ((b >> a) & 1u);
    return DyadicCube(n, depth + 1, idx);
  }

  std::vector<DyadicCube> children() const {
    std::vector<DyadicCube> out;
    out.reserve(std::size_t{1} << n);
    for (unsigned b = 0; b < (1u << n); ++b) out.push_back(child(b));
    return out;
  }

  bool contains(const DyadicCube& other) const {
    if (other.n != n || other.depth < depth) return false;
    const int shift = other.depth - depth;
    for (int a = 0; a < n; ++a)
      if ((other.index[a] >> shift) != index[a]) return false;
    return true;
  }

  std::string label() const {
    std::string s;
    for (int a = 0; a < n; ++a) {
      if (a) s += ':';
      s += std::to_string(index[a]);
    }
    return s;
  }

  friend bool operator==(const DyadicCube& x, const DyadicCube& y) {
    return x.n == y.n && x.depth == y.depth && x.index == y.index;
  }
};

/// Sums 2^n sibling values pairwise, first along axis 0, then axis 1, then axis 2.
inline double pairwise_sibling_sum(std::array<double, 8> v, int n) {
  const unsigned count = 1u << n;
  for (unsigned step = 1; step < count; step *= 2)
    for (unsigned i = 0; i < count; i += 2 * step) v[i] += v[i + step];
  return v[0];
}

/// A function on [0,1]^n that is constant on every dyadic cube of depth m.
/// Leaves are stored flat, lexicographic with the first axis fastest.
class DyadicSimpleFunction {
 public:
  DyadicSimpleFunction() : DyadicSimpleFunction(1, 0, std::vector<double>{0.0}) {}

  DyadicSimpleFunction(int n, int depth, std::vector<double> leaves)
      : n_(n), depth_(depth), leaves_(std::move(leaves)) {
    check_caps(n, depth);
    const std::size_t expected = std::size_t{1} << (n * depth);
    require(leaves_.size() == expected, ErrorKind::Parse,
            "expected " + std::to_string(expected) + " leaves, got " + std::to_string(leaves_.size()));
    for (double v : leaves_) require(std::isfinite(v), ErrorKind::Parse, "leaf values must be finite");
  }

  static DyadicSimpleFunction constant(int n, int depth, double c) {
    check_caps(n, depth);
    return DyadicSimpleFunction(n, depth, std::vector<double>(std::size_t{1} << (n * depth), c));
  }

  int dim() const { return n_; }
  int depth() const { return depth_; }
  std::size_t size() const { return leaves_.size(); }
  std::span<const double> leaves() const { return leaves_; }
  double leaf(std::size_t flat) const { return leaves_[flat]; }
  std::size_t side_count() const { return std::size_t{1} << depth_; }

  double at(const Index3& idx) const {
    std::size_t flat = 0;
    for (int a = n_ - 1; a >= 0; --a) flat = (flat << depth_) | idx[a];
    return leaves_[flat];
  }

  /// Same function represented on a finer mesh.
  DyadicSimpleFunction refined(int depth) const {
    require(depth >= depth_, ErrorKind::DepthMismatch, "refined() cannot coarsen");
    if (depth == depth_) return *this;
    check_caps(n_, depth);
    const int shift = depth - depth_;
    const std::size_t side = std::size_t{1} << depth;
    std::vector<double> out(std::size_t{1} << (n_ * depth));
    for (std::size_t flat = 0; flat < out.size(); ++flat) {
      std::size_t rest = flat, coarse = 0;
      std::size_t stride = 1;
      for (int a = 0; a < n_; ++a) {
        const std::size_t i = rest % side;
        rest /= side;
        coarse += (i >> shift) * stride;
        stride <<= depth_;
      }
      out[flat] = leaves_[coarse];
    }
    return DyadicSimpleFunction(n_, depth, std::move(out));
  }

  template <class Op>
  DyadicSimpleFunction map(Op op) const {
    std::vector<double> out(leaves_.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = op(leaves_[i]);
    return DyadicSimpleFunction(n_, depth_, std::move(out));
  }

  friend DyadicSimpleFunction operator-(const DyadicSimpleFunction& f, const DyadicSimpleFunction& g) {
    return combine(f, g, [](double a, double b) { return a - b; });
  }
  friend DyadicSimpleFunction operator+(const DyadicSimpleFunction& f, const DyadicSimpleFunction& g) {
    return combine(f, g, [](double a, double b) { return a + b; });
  }
  friend DyadicSimpleFunction operator*(double c, const DyadicSimpleFunction& f) {
    return f.map([c](double v) { return c * v; });
  }

  friend bool operator==(const DyadicSimpleFunction& f, const DyadicSimpleFunction& g) {
    return f.n_ == g.n_ && f.depth_ == g.depth_ && f.leaves_ == g.leaves_;
  }

 private:
  template <class Op>
  static DyadicSimpleFunction combine(const DyadicSimpleFunction& f, const DyadicSimpleFunction& g, Op op) {
    require(f.n_ == g.n_, ErrorKind::DimensionMismatch, "functions live in different dimensions");
    const int depth = std::max(f.depth_, g.depth_);
    const DyadicSimpleFunction a = f.refined(depth), b = g.refined(depth);
    std::vector<double> out(a.leaves_.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = op(a.leaves_[i], b.leaves_[i]);
    return DyadicSimpleFunction(f.n_, depth, std::move(out));
  }

  int n_;
  int depth_;
  std::vector<double> leaves_;
};

namespace detail {

// Mean of g(leaf) over the leaves covered by the cube at (level, idx), by
// pairwise reduction down the dyadic tree.
template <class Fn>
double tree_mean(const DyadicSimpleFunction& phi, int level, const Index3& idx, Fn&& g) {
  const int n = phi.dim();
  if (level == phi.depth()) return g(phi.at(idx));
  std::array<double, 8> vals{};
  for (unsigned b = 0; b < (1u << n); ++b) {
    Index3 c{};
    for (int a = 0; a < n; ++a) c[a] = 2 * idx[a] + ((b >> a) & 1u);
    vals[b] = tree_mean(phi, level + 1, c, g);
  }
  return std::ldexp(pairwise_sibling_sum(vals, n), -n);
}

inline void check_cube(const DyadicSimpleFunction& phi, const DyadicCube& J) {
  require(J.n == phi.dim(), ErrorKind::DimensionMismatch, "cube and function dimensions differ");
  require(J.depth <= phi.depth(), ErrorKind::DepthMismatch,
          "cube depth " + std::to_string(J.depth) + " exceeds function depth " + std::to_string(phi.depth()));
}

}  // namespace detail

/// Mean of phi over the dyadic cube J.
inline double average(const DyadicSimpleFunction& phi, const DyadicCube& J) {
  detail::check_cube(phi, J);
  return detail::tree_mean(phi, J.depth, J.index, [](double v) { return v; });
}

/// Mean of phi^2 over the dyadic cube J.
inline double second_moment(const DyadicSimpleFunction& phi, const DyadicCube& J) {
  detail::check_cube(phi, J);
  return detail::tree_mean(phi, J.depth, J.index, [](double v) { return v * v; });
}

/// Per-level means and second moments for every dyadic cube of depth <= m.
/// Level k is reduced from level k+1 with the same pairwise order that
/// average() uses, so both routes give bit-identical results.
class MomentPyramid {
 public:
  explicit MomentPyramid(const DyadicSimpleFunction& phi) : n_(phi.dim()), depth_(phi.depth()) {
    mean_.resize(depth_ + 1);
    square_.resize(depth_ + 1);
    mean_[depth_].assign(phi.leaves().begin(), phi.leaves().end());
    square_[depth_].resize(phi.size());
    for (std::size_t i = 0; i < phi.size(); ++i) square_[depth_][i] = phi.leaf(i) * phi.leaf(i);
    for (int k = depth_ - 1; k >= 0; --k) {
      mean_[k] = reduce(mean_[k + 1], k);
      square_[k] = reduce(square_[k + 1], k);
    }
  }

  int dim() const { return n_; }
  int depth() const { return depth_; }
  std::size_t count(int k) const { return mean_[k].size(); }
  double mean(int k, std::size_t flat) const { return mean_[k][flat]; }
  double square(int k, std::size_t flat) const { return square_[k][flat]; }
  double variance(int k, std::size_t flat) const {
    const double m = mean_[k][flat];
    return std::max(0.0, square_[k][flat] - m * m);
  }
  const std::vector<double>& level_means(int k) const { return mean_[k]; }

 private:
  std::vector<double> reduce(const std::vector<double>& fine, int k) const {
    const std::size_t side = std::size_t{1} << k;
    const std::size_t fine_side = side * 2;
    std::vector<double> out(std::size_t{1} << (n_ * k));
    for (std::size_t flat = 0; flat < out.size(); ++flat) {
      Index3 idx{};
      std::size_t rest = flat;
      for (int a = 0; a < n_; ++a) {
        idx[a] = static_cast<std::uint32_t>(rest % side);
        rest /= side;
      }
      std::array<double, 8> vals{};
      for (unsigned b = 0; b < (1u << n_); ++b) {
        std::size_t f = 0, stride = 1;
        for (int a = 0; a < n_; ++a) {
          f += (2 * idx[a] + ((b >> a) & 1u)) * stride;
          stride *= fine_side;
        }
        vals[b] = fine[f];
      }
      out[flat] = std::ldexp(pairwise_sibling_sum(vals, n_), -n_);
    }
    return out;
  }

  int n_;
  int depth_;
  std::vector<std::vector<double>> mean_;
  std::vector<std::vector<double>> square_;
};

/// Dyadic truncation of order m: leaves become the depth-m averages.
inline DyadicSimpleFunction truncate(const DyadicSimpleFunction& phi, int m) {
  require(m >= 0, ErrorKind::OutOfRange, "truncation order must be non-negative");
  const int depth = std::min(m, phi.depth());
  if (depth == phi.depth()) return phi;
  MomentPyramid pyr(phi);
  return DyadicSimpleFunction(phi.dim(), depth, pyr.level_means(depth));
}

/// Cut-off at height M: every leaf is clamped into [-M, M].
inline DyadicSimpleFunction clamp(const DyadicSimpleFunction& phi, double M) {
  require(M >= 0.0, ErrorKind::NegativeBound, "cut-off height must be non-negative");
  return phi.map([M](double v) { return std::min(M, std::max(-M, v)); });
}

/// L-infinity normalized Haar function of (2^-k, 2^-k+1): -1 on the left
/// half, +1 on the right half, 0 elsewhere; represented at the given depth.
inline DyadicSimpleFunction haar(int k, int depth) {
  require(k >= 1, ErrorKind::OutOfRange, "Haar order must be >= 1");
  require(depth >= k + 1, ErrorKind::DepthTooSmall,
          "Haar order " + std::to_string(k) + " needs depth >= " + std::to_string(k + 1));
  check_caps(1, depth);
  std::vector<double> leaves(std::size_t{1} << depth, 0.0);
  const std::size_t begin = std::size_t{1} << (depth - k);
  const std::size_t half = begin / 2;
  for (std::size_t i = begin; i < begin + half; ++i) leaves[i] = -1.0;
  for (std::size_t i = begin + half; i < 2 * begin; ++i) leaves[i] = 1.0;
  return DyadicSimpleFunction(1, depth, std::move(leaves));
}

inline DyadicSimpleFunction haar(int k) { return haar(k, k + 1); }

// DSF text format: line 1 = n, line 2 = m, then 2^{nm} leaf values.

inline void write_dsf(std::ostream& os, const DyadicSimpleFunction& phi) {
  os << phi.dim() << '\n' << phi.depth() << '\n';
  const auto old = os.precision(17);
  const std::size_t per_line = phi.side_count();
  for (std::size_t i = 0; i < phi.size(); ++i) {
    os << phi.leaf(i) << ((i + 1) % per_line == 0 || i + 1 == phi.size() ? '\n' : ' ');
  }
  os.precision(old);
}

inline std::string to_dsf(const DyadicSimpleFunction& phi) {
  std::ostringstream os;
  write_dsf(os, phi);
  return os.str();
}

inline DyadicSimpleFunction read_dsf(std::istream& is) {
  auto next_line = [&](const char* what) {
    std::string line;
    while (std::getline(is, line)) {
      if (line.find_first_not_of(" \t\r") != std::string::npos) return line;
    }
    fail(ErrorKind::Parse, std::string("missing ") + what + " line");
  };
  auto parse_int = [](const std::string& s, const char* what) {
    std::istringstream ss(s);
    long long v = 0;
    std::string rest;
    if (!(ss >> v) || (ss >> rest)) fail(ErrorKind::Parse, std::string("malformed ") + what + ": '" + s + "'");
    return v;
  };
  const long long n = parse_int(next_line("dimension"), "dimension");
  const long long m = parse_int(next_line("depth"), "depth");
  require(n >= 1 && n <= 3, ErrorKind::Parse, "dimension must be 1, 2 or 3");
  require(m >= 0 && m <= depth_cap(static_cast<int>(n)), ErrorKind::Parse, "depth out of range");
  const std::size_t expected = std::size_t{1} << (n * m);
  std::vector<double> leaves;
  leaves.reserve(expected);
  std::string token;
  while (is >> token) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(token, &used);
    } catch (const std::exception&) {
      fail(ErrorKind::Parse, "bad leaf value '" + token + "'");
    }
    require(used == token.size(), ErrorKind::Parse, "bad leaf value '" + token + "'");
    require(std::isfinite(v), ErrorKind::Parse, "non-finite leaf value '" + token + "'");
    leaves.push_back(v);
  }
  require(leaves.size() == expected, ErrorKind::Parse,
          "expected " + std::to_string(expected) + " leaves, found " + std::to_string(leaves.size()));
  return DyadicSimpleFunction(static_cast<int>(n), static_cast<int>(m), std::move(leaves));
}

inline DyadicSimpleFunction parse_dsf(const std::string& text) {
  std::istringstream is(text);
  return read_dsf(is);
}

inline DyadicSimpleFunction load_dsf(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::Parse, "cannot open DSF file " + path);
  return read_dsf(in);
}

}  // namespace bmo
