#pragma once

#include <vector>

#include "mixmps/tensor.h"

namespace mixmps::linalg {

struct Svd {
  Matrix u;
  Eigen::VectorXd s;
  Matrix vh;
};

/// Thin SVD, singular values descending. Throws TensorError when LAPACK fails
/// to converge.
Svd svd(const Matrix& m);

/// Number of singular values to keep under `limits`, and the discarded
/// relative weight. Ties at the cut are kept while maxdim allows.
std::pair<Index, double> truncation_rank(const Eigen::VectorXd& s,
                                         const TruncationLimits& limits);

struct TruncatedSvd {
  Matrix u;
  Eigen::VectorXd s;
  Matrix vh;
  double discarded = 0.0;
};

TruncatedSvd truncated_svd(const Matrix& m, const TruncationLimits& limits);

Matrix kron(const Matrix& a, const Matrix& b);
Matrix kron(const std::vector<Matrix>& factors);

/// Thin QR: m = q * r with q having orthonormal columns.
std::pair<Matrix, Matrix> thin_qr(const Matrix& m);

bool is_identity(const Matrix& m, double tol = 0.0);

}  // namespace mixmps::linalg
