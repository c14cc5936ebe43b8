#include "mixmps/linalg.h"

#include <algorithm>
#include <cmath>

#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>

namespace mixmps::linalg {

namespace {

bool run_gesdd(Matrix& a, Svd& out) {
  const lapack_int m = static_cast<lapack_int>(a.rows());
  const lapack_int n = static_cast<lapack_int>(a.cols());
  const lapack_int k = std::min(m, n);
  out.u.resize(m, k);
  out.s.resize(k);
  out.vh.resize(k, n);
  lapack_int info = LAPACKE_zgesdd(LAPACK_COL_MAJOR, 'S', m, n, a.data(), m,
                                   out.s.data(), out.u.data(), m,
                                   out.vh.data(), k);
  return info == 0;
}

bool run_gesvd(Matrix& a, Svd& out) {
  const lapack_int m = static_cast<lapack_int>(a.rows());
  const lapack_int n = static_cast<lapack_int>(a.cols());
  const lapack_int k = std::min(m, n);
  out.u.resize(m, k);
  out.s.resize(k);
  out.vh.resize(k, n);
  std::vector<double> superb(static_cast<std::size_t>(std::max<lapack_int>(1, k)));
  lapack_int info = LAPACKE_zgesvd(LAPACK_COL_MAJOR, 'S', 'S', m, n, a.data(), m,
                                   out.s.data(), out.u.data(), m,
                                   out.vh.data(), k, superb.data());
  return info == 0;
}

}  // namespace

Svd svd(const Matrix& m) {
  if (m.rows() == 0 || m.cols() == 0) {
    throw TensorError("svd: empty matrix");
  }
  if (!m.allFinite()) {
    throw TensorError("svd: matrix has non-finite entries");
  }
  Svd out;
  Matrix work = m;
  if (run_gesdd(work, out)) return out;
  // gesdd occasionally fails to converge on highly degenerate spectra.
  work = m;
  if (run_gesvd(work, out)) return out;
  Eigen::BDCSVD<Matrix> fallback(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (fallback.info() != Eigen::Success) {
    throw TensorError("svd: singular value decomposition failed to converge");
  }
  out.u = fallback.matrixU();
  out.s = fallback.singularValues();
  out.vh = fallback.matrixV().adjoint();
  return out;
}

std::pair<Index, double> truncation_rank(const Eigen::VectorXd& s,
                                         const TruncationLimits& limits) {
  const Index n = s.size();
  if (n == 0) return {0, 0.0};
  // tail[k] = sum_{j >= k} s_j^2, summed from the small end.
  std::vector<double> tail(static_cast<std::size_t>(n + 1), 0.0);
  for (Index j = n - 1; j >= 0; --j) {
    tail[static_cast<std::size_t>(j)] =
        tail[static_cast<std::size_t>(j + 1)] + s[j] * s[j];
  }
  const double total = tail[0];
  if (total == 0.0) return {1, 0.0};

  Index keep = 1;
  while (keep < n && tail[static_cast<std::size_t>(keep)] > limits.cutoff * total) {
    ++keep;
  }
  keep = std::min(keep, limits.maxdim);
  // Degenerate values straddling the cut stay together.
  while (keep < n && keep < limits.maxdim &&
         s[keep] > 0.0 && s[keep] >= s[keep - 1] * (1.0 - 1e-12)) {
    ++keep;
  }
  return {keep, tail[static_cast<std::size_t>(keep)] / total};
}

TruncatedSvd truncated_svd(const Matrix& m, const TruncationLimits& limits) {
  Svd full = svd(m);
  auto [keep, discarded] = truncation_rank(full.s, limits);
  TruncatedSvd out;
  if (full.s.size() > 0 && full.s[0] == 0.0) {
    out.u = full.u.leftCols(1);
    out.s = Eigen::VectorXd::Zero(1);
    out.vh = full.vh.topRows(1);
    return out;
  }
  out.u = full.u.leftCols(keep);
  out.s = full.s.head(keep);
  out.vh = full.vh.topRows(keep);
  out.discarded = discarded;
  return out;
}

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

Matrix kron(const std::vector<Matrix>& factors) {
  Matrix out = Matrix::Identity(1, 1);
  for (const auto& f : factors) out = kron(out, f);
  return out;
}

std::pair<Matrix, Matrix> thin_qr(const Matrix& m) {
  const Index k = std::min(m.rows(), m.cols());
  Eigen::HouseholderQR<Matrix> qr(m);
  Matrix q = qr.householderQ() * Matrix::Identity(m.rows(), k);
  Matrix r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  return {std::move(q), std::move(r)};
}

bool is_identity(const Matrix& m, double tol) {
  if (m.rows() != m.cols()) return false;
  for (Index j = 0; j < m.cols(); ++j) {
    for (Index i = 0; i < m.rows(); ++i) {
      const cplx expected = (i == j) ? cplx(1.0) : cplx(0.0);
      if (std::abs(m(i, j) - expected) > tol) return false;
    }
  }
  return true;
}

}  // namespace mixmps::linalg
