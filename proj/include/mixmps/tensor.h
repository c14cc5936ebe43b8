#pragma once

#include <complex>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace mixmps {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using Index = Eigen::Index;

class TensorError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Dense complex tensor with labeled indices.
///
/// Storage is column-major: the first label varies fastest. Element
/// (i0, i1, ..., ik) lives at i0 + d0 * (i1 + d1 * (i2 + ...)). Every module
/// reshapes through this rule, so a tensor with labels (a, b, c) can be viewed
/// as an (da*db) x dc matrix or a da x (db*dc) matrix without copying.
class Tensor {
 public:
  Tensor() = default;
  Tensor(std::vector<std::string> labels, std::vector<Index> dims);
  Tensor(std::vector<std::string> labels, std::vector<Index> dims,
         std::vector<cplx> data);

  /// Wraps a matrix as a two-index tensor (row label first).
  static Tensor from_matrix(const Matrix& m, std::string row_label,
                            std::string col_label);

  const std::vector<std::string>& labels() const { return labels_; }
  const std::vector<Index>& dims() const { return dims_; }
  std::size_t rank() const { return labels_.size(); }
  Index size() const { return static_cast<Index>(data_.size()); }
  bool has_label(std::string_view label) const;
  std::size_t position(std::string_view label) const;
  Index dim(std::string_view label) const { return dims_[position(label)]; }

  const cplx* data() const { return data_.data(); }
  cplx* data() { return data_.data(); }
  const std::vector<cplx>& values() const { return data_; }

  cplx& at(std::initializer_list<Index> idx);
  cplx at(std::initializer_list<Index> idx) const;

  /// Column-major view with the first `row_rank` labels as the row index.
  Eigen::Map<const Matrix> matrix(std::size_t row_rank) const;
  Eigen::Map<Matrix> matrix(std::size_t row_rank);

  Tensor permuted(const std::vector<std::string>& order) const;
  Tensor relabeled(const std::string& from, const std::string& to) const;
  Tensor reshaped(std::vector<std::string> labels, std::vector<Index> dims) const;

  double norm() const;
  bool all_finite() const;

  Tensor& operator*=(cplx s);
  Tensor& operator+=(const Tensor& other);
  friend Tensor operator*(cplx s, Tensor t) { return t *= s; }
  friend Tensor operator+(Tensor a, const Tensor& b) { return a += b; }

 private:
  void check_invariants() const;

  std::vector<std::string> labels_;
  std::vector<Index> dims_;
  std::vector<cplx> data_;
};

using LabelPair = std::pair<std::string, std::string>;

/// Sums over each (label in a, label in b) pair. The result carries the free
/// labels of `a` followed by the free labels of `b`.
Tensor contract(const Tensor& a, const Tensor& b,
                const std::vector<LabelPair>& pairs);

struct TruncationLimits {
  double cutoff = 0.0;
  Index maxdim = std::numeric_limits<int>::max();

  void validate() const;
};

struct SvdSplit {
  Tensor u;                    // row labels + bond label
  std::vector<double> s;       // descending
  Tensor v;                    // bond label + remaining labels
  double discarded = 0.0;      // dropped weight / total weight
};

/// Factorizes t = U diag(S) V across the given row labels, truncating per
/// `limits`. The new index is named `bond` on both factors.
SvdSplit svd_split(const Tensor& t, const std::vector<std::string>& row_labels,
                   const TruncationLimits& limits,
                   const std::string& bond = "bond");

/// exp(m) by scaling and squaring with a Pade approximant.
Matrix matrix_exponential(const Matrix& m);

}  // namespace mixmps
