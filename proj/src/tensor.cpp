#include "mixmps/tensor.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include <unsupported/Eigen/MatrixFunctions>

#include "mixmps/linalg.h"

namespace mixmps {

namespace {

Index product(const std::vector<Index>& dims) {
  return std::accumulate(dims.begin(), dims.end(), Index{1},
                         std::multiplies<Index>());
}

}  // namespace

Tensor::Tensor(std::vector<std::string> labels, std::vector<Index> dims)
    : labels_(std::move(labels)), dims_(std::move(dims)) {
  if (labels_.size() != dims_.size()) {
    throw TensorError("tensor: label and extent counts differ");
  }
  data_.assign(static_cast<std::size_t>(product(dims_)), cplx(0.0));
  check_invariants();
}

Tensor::Tensor(std::vector<std::string> labels, std::vector<Index> dims,
               std::vector<cplx> data)
    : labels_(std::move(labels)), dims_(std::move(dims)), data_(std::move(data)) {
  if (labels_.size() != dims_.size()) {
    throw TensorError("tensor: label and extent counts differ");
  }
  check_invariants();
}

Tensor Tensor::from_matrix(const Matrix& m, std::string row_label,
                           std::string col_label) {
  return Tensor({std::move(row_label), std::move(col_label)}, {m.rows(), m.cols()},
                std::vector<cplx>(m.data(), m.data() + m.size()));
}

void Tensor::check_invariants() const {
  for (Index d : dims_) {
    if (d < 1) throw TensorError("tensor: extents must be positive");
  }
  if (static_cast<Index>(data_.size()) != product(dims_)) {
    throw TensorError("tensor: data size does not match the product of extents");
  }
  std::set<std::string_view> seen;
  for (const auto& l : labels_) {
    if (!seen.insert(l).second) {
      throw TensorError("tensor: duplicate label '" + l + "'");
    }
  }
}

bool Tensor::has_label(std::string_view label) const {
  return std::find(labels_.begin(), labels_.end(), label) != labels_.end();
}

std::size_t Tensor::position(std::string_view label) const {
  auto it = std::find(labels_.begin(), labels_.end(), label);
  if (it == labels_.end()) {
    throw TensorError("tensor: unknown label '" + std::string(label) + "'");
  }
  return static_cast<std::size_t>(it - labels_.begin());
}

cplx& Tensor::at(std::initializer_list<Index> idx) {
  if (idx.size() != dims_.size()) throw TensorError("tensor: wrong index count");
  Index offset = 0;
  Index stride = 1;
  std::size_t k = 0;
  for (Index i : idx) {
    if (i < 0 || i >= dims_[k]) throw TensorError("tensor: index out of range");
    offset += i * stride;
    stride *= dims_[k++];
  }
  return data_[static_cast<std::size_t>(offset)];
}

cplx Tensor::at(std::initializer_list<Index> idx) const {
  return const_cast<Tensor*>(this)->at(idx);
}

Eigen::Map<const Matrix> Tensor::matrix(std::size_t row_rank) const {
  if (row_rank > dims_.size()) throw TensorError("tensor: row rank too large");
  Index rows = 1;
  for (std::size_t k = 0; k < row_rank; ++k) rows *= dims_[k];
  return Eigen::Map<const Matrix>(data_.data(), rows, size() / rows);
}

Eigen::Map<Matrix> Tensor::matrix(std::size_t row_rank) {
  if (row_rank > dims_.size()) throw TensorError("tensor: row rank too large");
  Index rows = 1;
  for (std::size_t k = 0; k < row_rank; ++k) rows *= dims_[k];
  return Eigen::Map<Matrix>(data_.data(), rows, size() / rows);
}

Tensor Tensor::permuted(const std::vector<std::string>& order) const {
  if (order.size() != labels_.size()) {
    throw TensorError("permute: label count mismatch");
  }
  std::vector<std::size_t> perm(order.size());
  for (std::size_t k = 0; k < order.size(); ++k) perm[k] = position(order[k]);
  bool identity = true;
  for (std::size_t k = 0; k < perm.size(); ++k) identity = identity && perm[k] == k;
  if (identity) return *this;

  const std::size_t r = perm.size();
  std::vector<Index> new_dims(r);
  std::vector<Index> old_strides(r);
  Index stride = 1;
  for (std::size_t k = 0; k < r; ++k) {
    old_strides[k] = stride;
    stride *= dims_[k];
  }
  std::vector<Index> src_stride(r);
  for (std::size_t k = 0; k < r; ++k) {
    new_dims[k] = dims_[perm[k]];
    src_stride[k] = old_strides[perm[k]];
  }
  std::vector<cplx> out(data_.size());
  std::vector<Index> counter(r, 0);
  Index src = 0;
  const Index n = size();
  // Walk the output in storage order, tracking the source offset incrementally.
  const Index inner = new_dims[0];
  const Index inner_stride = src_stride[0];
  for (Index dst = 0; dst < n; dst += inner) {
    const cplx* s = data_.data() + src;
    cplx* d = out.data() + dst;
    for (Index i = 0; i < inner; ++i) d[i] = s[i * inner_stride];
    for (std::size_t k = 1; k < r; ++k) {
      if (++counter[k] < new_dims[k]) {
        src += src_stride[k];
        break;
      }
      src -= (new_dims[k] - 1) * src_stride[k];
      counter[k] = 0;
    }
  }
  std::vector<std::string> new_labels(order.begin(), order.end());
  return Tensor(std::move(new_labels), std::move(new_dims), std::move(out));
}

Tensor Tensor::relabeled(const std::string& from, const std::string& to) const {
  Tensor out = *this;
  out.labels_[position(from)] = to;
  out.check_invariants();
  return out;
}

Tensor Tensor::reshaped(std::vector<std::string> labels,
                        std::vector<Index> dims) const {
  return Tensor(std::move(labels), std::move(dims), data_);
}

double Tensor::norm() const {
  double acc = 0.0;
  for (const auto& v : data_) acc += std::norm(v);
  return std::sqrt(acc);
}

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](const cplx& v) {
    return std::isfinite(v.real()) && std::isfinite(v.imag());
  });
}

Tensor& Tensor::operator*=(cplx s) {
  for (auto& v : data_) v *= s;
  return *this;
}

Tensor& Tensor::operator+=(const Tensor& other) {
  const Tensor aligned = other.permuted(labels_);
  if (aligned.dims_ != dims_) throw TensorError("tensor sum: extent mismatch");
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += aligned.data_[k];
  return *this;
}

Tensor contract(const Tensor& a, const Tensor& b,
                const std::vector<LabelPair>& pairs) {
  std::vector<std::string> a_paired, b_paired;
  for (const auto& [la, lb] : pairs) {
    if (a.dim(la) != b.dim(lb)) {
      throw TensorError("contract: extent mismatch between '" + la + "' and '" +
                        lb + "'");
    }
    a_paired.push_back(la);
    b_paired.push_back(lb);
  }
  auto is_in = [](const std::vector<std::string>& v, const std::string& s) {
    return std::find(v.begin(), v.end(), s) != v.end();
  };
  std::vector<std::string> a_free, b_free;
  std::vector<Index> out_dims;
  for (const auto& l : a.labels()) {
    if (!is_in(a_paired, l)) {
      a_free.push_back(l);
      out_dims.push_back(a.dim(l));
    }
  }
  for (const auto& l : b.labels()) {
    if (!is_in(b_paired, l)) {
      b_free.push_back(l);
      out_dims.push_back(b.dim(l));
    }
  }
  std::vector<std::string> a_order = a_free;
  a_order.insert(a_order.end(), a_paired.begin(), a_paired.end());
  std::vector<std::string> b_order = b_paired;
  b_order.insert(b_order.end(), b_free.begin(), b_free.end());

  const Tensor ap = a.permuted(a_order);
  const Tensor bp = b.permuted(b_order);
  const auto am = ap.matrix(a_free.size());
  const auto bm = bp.matrix(b_paired.size());

  std::vector<std::string> out_labels = a_free;
  out_labels.insert(out_labels.end(), b_free.begin(), b_free.end());
  Tensor out(std::move(out_labels), std::move(out_dims));
  out.matrix(a_free.size()).noalias() = am * bm;
  return out;
}

void TruncationLimits::validate() const {
  if (!(cutoff >= 0.0)) throw TensorError("limits: cutoff must be non-negative");
  if (maxdim < 1) throw TensorError("limits: maxdim must be at least 1");
}

SvdSplit svd_split(const Tensor& t, const std::vector<std::string>& row_labels,
                   const TruncationLimits& limits, const std::string& bond) {
  limits.validate();
  if (row_labels.empty() || row_labels.size() >= t.rank()) {
    throw TensorError("svd_split: row labels must be a nonempty proper subset");
  }
  std::vector<std::string> order = row_labels;
  std::vector<Index> row_dims, col_dims;
  std::vector<std::string> col_labels;
  for (const auto& l : row_labels) row_dims.push_back(t.dim(l));
  for (const auto& l : t.labels()) {
    if (std::find(row_labels.begin(), row_labels.end(), l) == row_labels.end()) {
      order.push_back(l);
      col_labels.push_back(l);
      col_dims.push_back(t.dim(l));
    }
  }
  if (order.size() != t.rank()) {
    throw TensorError("svd_split: duplicate row labels");
  }
  const Tensor p = t.permuted(order);
  auto res = linalg::truncated_svd(p.matrix(row_labels.size()), limits);
  const Index k = res.s.size();

  std::vector<std::string> u_labels = row_labels;
  u_labels.push_back(bond);
  std::vector<Index> u_dims = row_dims;
  u_dims.push_back(k);
  std::vector<std::string> v_labels{bond};
  v_labels.insert(v_labels.end(), col_labels.begin(), col_labels.end());
  std::vector<Index> v_dims{k};
  v_dims.insert(v_dims.end(), col_dims.begin(), col_dims.end());

  SvdSplit out;
  out.u = Tensor(std::move(u_labels), std::move(u_dims),
                 std::vector<cplx>(res.u.data(), res.u.data() + res.u.size()));
  out.v = Tensor(std::move(v_labels), std::move(v_dims),
                 std::vector<cplx>(res.vh.data(), res.vh.data() + res.vh.size()));
  out.s.assign(res.s.data(), res.s.data() + k);
  out.discarded = res.discarded;
  return out;
}

Matrix matrix_exponential(const Matrix& m) {
  if (m.rows() != m.cols()) {
    throw TensorError("matrix_exponential: matrix must be square");
  }
  if (m.size() == 0) return m;
  return m.exp();
}

}  // namespace mixmps
