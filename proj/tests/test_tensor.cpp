#include <doctest.h>

#include "mixmps/linalg.h"
#include "mixmps/tensor.h"
#include "support.h"

using namespace mixmps;
using mixmps::testing::Gen;
using mixmps::testing::max_abs;

namespace {

Matrix pauli_x() {
  Matrix x(2, 2);
  x << 0, 1, 1, 0;
  return x;
}

// Direct summation over the shared index, independent of contract().
Tensor triple_loop(const Tensor& a, const Tensor& b) {
  // a(i, j), b(j, k) -> (i, k)
  const Index di = a.dims()[0], dj = a.dims()[1], dk = b.dims()[1];
  Tensor out({"i", "k"}, {di, dk});
  for (Index i = 0; i < di; ++i) {
    for (Index k = 0; k < dk; ++k) {
      cplx s = 0.0;
      for (Index j = 0; j < dj; ++j) s += a.at({i, j}) * b.at({j, k});
      out.at({i, k}) = s;
    }
  }
  return out;
}

double rel_diff(const Tensor& a, const Tensor& b) {
  double num = 0.0, den = 0.0;
  for (Index k = 0; k < a.size(); ++k) {
    num += std::norm(a.data()[k] - b.data()[k]);
    den += std::norm(b.data()[k]);
  }
  return std::sqrt(num / std::max(den, 1e-300));
}

}  // namespace

TEST_CASE("tensor layout is column-major") {
  Tensor t({"a", "b"}, {2, 3});
  for (Index k = 0; k < 6; ++k) t.data()[k] = double(k);
  CHECK(t.at({1, 0}) == cplx(1.0));
  CHECK(t.at({0, 1}) == cplx(2.0));
  CHECK(t.matrix(1)(1, 2) == cplx(5.0));
  const Tensor p = t.permuted({"b", "a"});
  CHECK(p.at({2, 1}) == t.at({1, 2}));
}

TEST_CASE("tensor invariants are enforced") {
  CHECK_THROWS_AS(Tensor({"a", "a"}, {2, 2}), TensorError);
  CHECK_THROWS_AS(Tensor({"a"}, {2}, std::vector<cplx>(3)), TensorError);
  CHECK_THROWS_AS(Tensor({"a"}, {0}), TensorError);
}

TEST_CASE("contract: identity and X squared") {
  const Tensor id = Tensor::from_matrix(Matrix::Identity(2, 2), "r", "c");
  Tensor v({"c"}, {2}, {cplx(0.3, 0.1), cplx(-2.0, 0.5)});
  const Tensor w = contract(id, v, {{"c", "c"}});
  CHECK(w.labels() == std::vector<std::string>{"r"});
  CHECK(std::abs(w.at({1}) - v.at({1})) < 1e-15);

  const Tensor x1 = Tensor::from_matrix(pauli_x(), "r", "m");
  const Tensor x2 = Tensor::from_matrix(pauli_x(), "m", "c");
  const Tensor xx = contract(x1, x2, {{"m", "m"}});
  CHECK(max_abs(Matrix(xx.matrix(1)) - Matrix::Identity(2, 2)) < 1e-15);
}

TEST_CASE("contract errors") {
  Tensor a({"i", "j"}, {2, 3});
  Tensor b({"j", "k"}, {4, 2});
  CHECK_THROWS_AS(contract(a, b, {{"j", "j"}}), TensorError);
  CHECK_THROWS_AS(contract(a, b, {{"q", "j"}}), TensorError);
}

TEST_CASE("contract matches a triple loop and is associative") {
  Gen gen(11);
  for (int trial = 0; trial < 20; ++trial) {
    const Index d1 = gen.integer(1, 5), d2 = gen.integer(1, 5), d3 = gen.integer(1, 5),
                d4 = gen.integer(1, 5);
    const Tensor a = gen.tensor({"i", "j"}, {d1, d2});
    const Tensor b = gen.tensor({"j", "k"}, {d2, d3});
    const Tensor c = gen.tensor({"k", "l"}, {d3, d4});
    CHECK(rel_diff(contract(a, b, {{"j", "j"}}), triple_loop(a, b)) < 1e-12);
    const Tensor left = contract(contract(a, b, {{"j", "j"}}), c, {{"k", "k"}});
    const Tensor right = contract(a, contract(b, c, {{"k", "k"}}), {{"j", "j"}});
    CHECK(rel_diff(left, right) < 1e-12);
  }
}

TEST_CASE("contract is bilinear") {
  Gen gen(12);
  const Tensor a = gen.tensor({"x", "y", "z"}, {2, 3, 4});
  const Tensor a2 = gen.tensor({"x", "y", "z"}, {2, 3, 4});
  const Tensor b = gen.tensor({"z", "y", "w"}, {4, 3, 2});
  const cplx alpha(0.3, -1.2), beta(2.0, 0.5);
  const Tensor lhs = contract(alpha * a + beta * a2, b, {{"y", "y"}, {"z", "z"}});
  const Tensor rhs = alpha * contract(a, b, {{"y", "y"}, {"z", "z"}}) +
                     beta * contract(a2, b, {{"y", "y"}, {"z", "z"}});
  CHECK(rel_diff(lhs, rhs) < 1e-13);
}

TEST_CASE("svd_split: rank one and Bell pair") {
  Tensor prod({"a", "b"}, {2, 2}, {1.0, 2.0, 3.0, 6.0});
  const auto s1 = svd_split(prod, {"a"}, {1e-30, 100});
  CHECK(s1.s.size() == 1);
  CHECK(s1.discarded < 1e-30);

  const double h = 1.0 / std::sqrt(2.0);
  Tensor bell({"a", "b"}, {2, 2}, {h, 0.0, 0.0, h});
  const auto s2 = svd_split(bell, {"a"}, {});
  REQUIRE(s2.s.size() == 2);
  CHECK(std::abs(s2.s[0] - h) < 1e-15);
  CHECK(std::abs(s2.s[1] - h) < 1e-15);
}

TEST_CASE("svd_split: known spectrum with cutoff and maxdim") {
  // Permutations and phases keep the spectrum exact in floating point.
  Matrix q1 = Matrix::Zero(3, 3), q2 = Matrix::Zero(3, 3);
  q1(0, 2) = cplx(0, 1);
  q1(1, 0) = -1.0;
  q1(2, 1) = 1.0;
  q2(0, 1) = 1.0;
  q2(1, 2) = cplx(0, -1);
  q2(2, 0) = 1.0;
  Eigen::Vector3d sv(1.0, 0.1, 1e-20);
  const Matrix m = q1 * sv.cast<cplx>().asDiagonal() * q2.adjoint();
  const Tensor t = Tensor::from_matrix(m, "a", "b");
  const auto split = svd_split(t, {"a"}, {1e-30, 2});
  REQUIRE(split.s.size() == 2);
  CHECK(std::abs(split.s[0] - 1.0) < 1e-12);
  CHECK(std::abs(split.s[1] - 0.1) < 1e-12);
  const double expected = 1e-40 / (1.0 + 0.01 + 1e-40);
  CHECK(split.discarded == doctest::Approx(expected).epsilon(1e-3));
}

TEST_CASE("svd_split: reconstruction, ordering, isometries") {
  Gen gen(14);
  for (int trial = 0; trial < 10; ++trial) {
    const Tensor t = gen.tensor({"a", "b", "c"}, {gen.integer(1, 4), gen.integer(1, 4),
                                                  gen.integer(1, 4)});
    const auto split = svd_split(t, {"a", "c"}, {});
    for (std::size_t k = 1; k < split.s.size(); ++k) CHECK(split.s[k - 1] >= split.s[k]);
    Tensor us = split.u;
    const Index rows = us.size() / static_cast<Index>(split.s.size());
    for (Index col = 0; col < static_cast<Index>(split.s.size()); ++col) {
      for (Index row = 0; row < rows; ++row) us.data()[row + rows * col] *= split.s[static_cast<std::size_t>(col)];
    }
    const Tensor back = contract(us, split.v, {{"bond", "bond"}}).permuted({"a", "b", "c"});
    CHECK(rel_diff(back, t) < 1e-12);
    const Matrix u = split.u.matrix(2);
    CHECK(max_abs(Matrix(u.adjoint() * u) - Matrix::Identity(u.cols(), u.cols())) < 1e-12);
    const Matrix v = split.v.matrix(1);
    CHECK(max_abs(Matrix(v * v.adjoint()) - Matrix::Identity(v.rows(), v.rows())) < 1e-12);
  }
}

TEST_CASE("svd_split: ties at the cut are kept up to maxdim") {
  Tensor t = Tensor::from_matrix(Eigen::Vector4cd(1.0, 0.5, 0.5, 0.5).asDiagonal().toDenseMatrix(), "a", "b");
  const auto keep_all = svd_split(t, {"a"}, {0.3, 10});
  CHECK(keep_all.s.size() == 4);
  const auto capped = svd_split(t, {"a"}, {0.3, 3});
  CHECK(capped.s.size() == 3);
}

TEST_CASE("svd_split: zero tensor and bad row sets") {
  Tensor zero({"a", "b"}, {3, 2});
  const auto split = svd_split(zero, {"a"}, {});
  REQUIRE(split.s.size() == 1);
  CHECK(split.s[0] == 0.0);
  CHECK(split.discarded == 0.0);
  CHECK_THROWS_AS(svd_split(zero, {}, {}), TensorError);
  CHECK_THROWS_AS(svd_split(zero, {"a", "b"}, {}), TensorError);
}

TEST_CASE("truncation limits validation") {
  CHECK_THROWS(TruncationLimits{-1.0, 5}.validate());
  CHECK_THROWS(TruncationLimits{0.0, 0}.validate());
  CHECK_NOTHROW(TruncationLimits{1e-10, 1}.validate());
}

TEST_CASE("matrix_exponential: closed forms") {
  CHECK(max_abs(matrix_exponential(Matrix::Zero(3, 3)) - Matrix::Identity(3, 3)) < 1e-15);
  const Matrix arg = cplx(0.0, -M_PI / 2.0) * pauli_x();
  CHECK(max_abs(matrix_exponential(arg) - cplx(0.0, -1.0) * pauli_x()) < 1e-14);
  CHECK_THROWS(matrix_exponential(Matrix::Zero(2, 3)));
}

TEST_CASE("matrix_exponential: Taylor oracle and unitary covariance") {
  Gen gen(15);
  for (int trial = 0; trial < 20; ++trial) {
    Matrix m = gen.matrix(4, 4);
    m /= m.operatorNorm();
    Matrix taylor = Matrix::Identity(4, 4), term = Matrix::Identity(4, 4);
    for (int k = 1; k <= 30; ++k) {
      term = term * m / double(k);
      taylor += term;
    }
    CHECK(max_abs(matrix_exponential(m) - taylor) < 1e-12);

    const auto [u, r] = linalg::thin_qr(gen.matrix(4, 4));
    const Matrix lhs = matrix_exponential(u * m * u.adjoint());
    const Matrix rhs = u * matrix_exponential(m) * u.adjoint();
    CHECK(max_abs(lhs - rhs) < 1e-10);
  }
}

TEST_CASE("matrix_exponential: large norm stays accurate") {
  Gen gen(16);
  const Matrix h = gen.hermitian(4);
  const Matrix m = cplx(0.0, 10.0 / h.operatorNorm()) * h;
  const Matrix u = matrix_exponential(m);
  CHECK(max_abs(Matrix(u * u.adjoint()) - Matrix::Identity(4, 4)) < 1e-12);
}
