#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "mixmps/state.h"

namespace mixmps::testing {

/// Seeded source of random complex data for property tests.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo = -1.0, double hi = 1.0) {
    return std::uniform_real_distribution<double>(lo, hi)(rng_);
  }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  bool coin(double p = 0.5) { return uniform(0.0, 1.0) < p; }
  cplx complex() { return {uniform(), uniform()}; }

  Matrix matrix(Index rows, Index cols) {
    Matrix m(rows, cols);
    for (Index j = 0; j < cols; ++j) {
      for (Index i = 0; i < rows; ++i) m(i, j) = complex();
    }
    return m;
  }
  Matrix hermitian(Index d) {
    const Matrix m = matrix(d, d);
    return 0.5 * (m + m.adjoint());
  }
  Tensor tensor(std::vector<std::string> labels, std::vector<Index> dims) {
    Tensor t(std::move(labels), std::move(dims));
    for (Index k = 0; k < t.size(); ++k) t.data()[k] = complex();
    return t;
  }

  /// Random MPS with interior bonds of extent chi (clipped by the physical
  /// dimensions on either side).
  State mps(Rep rep, const System& sys, Index chi) {
    const int n = sys.size();
    std::vector<Index> left(static_cast<std::size_t>(n + 1), 1);
    std::vector<Index> right(static_cast<std::size_t>(n + 1), 1);
    for (int k = 0; k < n; ++k) {
      left[static_cast<std::size_t>(k + 1)] = left[static_cast<std::size_t>(k)] * phys_dim(rep, sys[k]);
    }
    for (int k = n - 1; k >= 0; --k) {
      right[static_cast<std::size_t>(k)] = right[static_cast<std::size_t>(k + 1)] * phys_dim(rep, sys[k]);
    }
    std::vector<Index> bonds(static_cast<std::size_t>(n + 1), 1);
    for (int k = 1; k < n; ++k) {
      const auto u = static_cast<std::size_t>(k);
      bonds[u] = std::min({chi, left[u], right[u]});
    }
    std::vector<Tensor> ts;
    for (int k = 0; k < n; ++k) {
      const auto u = static_cast<std::size_t>(k);
      ts.push_back(tensor({"l", "p", "r"}, {bonds[u], phys_dim(rep, sys[k]), bonds[u + 1]}));
    }
    return State(rep, sys, std::move(ts));
  }

  SiteKind kind(int max_boson = 3) {
    switch (integer(0, 2)) {
      case 0:
        return SiteKind::qubit();
      case 1:
        return SiteKind::boson(integer(2, max_boson));
      default:
        return SiteKind::fermion();
    }
  }

  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

template <typename Derived>
double max_abs(const Eigen::MatrixBase<Derived>& m) {
  return m.size() ? m.cwiseAbs().maxCoeff() : 0.0;
}

}  // namespace mixmps::testing
