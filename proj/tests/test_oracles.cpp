#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <algorithm>

#include "mixmps/oracles/covariance.h"
#include "mixmps/oracles/dense.h"
#include "mixmps/parser.h"
#include "support.h"

using namespace mixmps;
using namespace mixmps::oracles;
using mixmps::testing::Gen;
using mixmps::testing::max_abs;

namespace {

System q(int n) { return System::uniform(SiteKind::qubit(), n); }

std::string num(double x) { return std::to_string(x); }

std::string hopping(int n, double t, const std::string& c) {
  return num(t) + "*sum(i=1.." + std::to_string(n - 1) + ", dag(" + c + ")(i)" + c +
         "(i+1) + dag(" + c + ")(i+1)" + c + "(i))";
}

Matrix dense_covariance(const DenseState& s, const std::string& c) {
  const int n = s.system.size();
  Matrix out(n, n);
  for (int i = 1; i <= n; ++i) {
    for (int j = 1; j <= n; ++j) {
      out(i - 1, j - 1) = dense_expect(
          s, parse("dag(" + c + ")(" + std::to_string(i) + ")" + c + "(" + std::to_string(j) + ")"));
    }
  }
  return out;
}

}  // namespace

TEST_CASE("anticommutation of embedded fermions across a qubit") {
  const System sys({SiteKind::fermion(), SiteKind::qubit(), SiteKind::fermion(), SiteKind::fermion()});
  const std::vector<int> fs{1, 3, 4};
  const Index d = hilbert_dim(sys);
  for (int i : fs) {
    for (int j : fs) {
      const Sparse ci = embed(parse("C(" + std::to_string(i) + ")"), sys);
      const Sparse cj = embed(parse("C(" + std::to_string(j) + ")"), sys);
      const Matrix cjd = Matrix(cj).adjoint();
      const Matrix anti = Matrix(ci) * cjd + cjd * Matrix(ci);
      const Matrix expected = (i == j ? 1.0 : 0.0) * Matrix::Identity(d, d);
      CHECK(max_abs(anti - expected) < 1e-15);
      CHECK(max_abs(Matrix(ci * cj + cj * ci)) < 1e-15);
    }
  }
}

TEST_CASE("amplitude damping spectrum") {
  const double gamma = 0.7;
  const auto gen = dense_generator(parse(num(gamma) + "*Dissipator(Sm)(1)"), q(1), Rep::Mixed);
  Eigen::ComplexEigenSolver<Matrix> es(Matrix(gen.superoperator()));
  std::vector<double> ev;
  for (Index k = 0; k < 4; ++k) {
    CHECK(std::abs(es.eigenvalues()[k].imag()) < 1e-14);
    ev.push_back(es.eigenvalues()[k].real());
  }
  std::sort(ev.begin(), ev.end());
  CHECK(ev[0] == doctest::Approx(-gamma));
  CHECK(ev[1] == doctest::Approx(-gamma / 2));
  CHECK(ev[2] == doctest::Approx(-gamma / 2));
  CHECK(std::abs(ev[3]) < 1e-14);
}

TEST_CASE("single qubit decay: closed form") {
  const auto gen = dense_generator(parse("0.5*Dissipator(Sm)(1)"), q(1), Rep::Mixed);
  const DenseState up = dense_product_state(Rep::Mixed, q(1), {"Up"});
  for (double t : {0.3, 1.0, 4.0}) {
    const DenseState s = dense_evolve(gen, up, t, 0.1);
    const double z = dense_expect(s, parse("Z(1)")).real();
    CHECK(std::abs(z - (2.0 * std::exp(-0.5 * t) - 1.0)) < 1e-10);
  }
}

TEST_CASE("dense evolution agrees with the exponential of the superoperator") {
  Gen g(71);
  const std::string l =
      "-1i*(X(1)X(2) + 0.5*Z(2)Z(3) + 0.2*Y(3)) + 0.3*Dissipator(Sm)(1) + 0.1*Dissipator(X(2) + Z(3))";
  const auto gen = dense_generator(parse(l), q(3), Rep::Mixed);
  const DenseState s0 = dense_product_state(Rep::Mixed, q(3), {"+", "Up", "Dn"});
  const DenseState s = dense_evolve(gen, s0, 0.8, 0.1);
  const Vector expected = matrix_exponential(0.8 * Matrix(gen.superoperator())) * s0.vectorized();
  CHECK(max_abs(s.vectorized() - expected) < 1e-9);
  CHECK(std::abs(s.rho.trace() - 1.0) < 1e-10);
  CHECK(max_abs(s.rho - s.rho.adjoint()) < 1e-10);

  const Matrix random = g.hermitian(8);
  CHECK(max_abs(gen.apply(random) - gen.apply(random).adjoint()) < 1e-12);
}

TEST_CASE("covariance equations are affine") {
  Gen g(72);
  for (auto model : {CovarianceModel::fermion_dephasing(5, 0.3),
                     CovarianceModel::boson_source(5, 0.2, 3),
                     CovarianceModel::xx_boundary(5, 1.0, 0.4, 0.7, -0.2)}) {
    const Matrix a = g.hermitian(5), b = g.hermitian(5);
    const Matrix zero = Matrix::Zero(5, 5);
    const Matrix lhs = model.derivative(a + b) + model.derivative(zero);
    CHECK(max_abs(lhs - model.derivative(a) - model.derivative(b)) < 1e-13);
    // Hermitian data stays Hermitian.
    const Matrix d = model.derivative(a);
    CHECK(max_abs(d - d.adjoint()) < 1e-13);
  }
}

TEST_CASE("covariance: fermion dephasing against the dense oracle") {
  const int n = 4;
  const double gamma = 0.5;
  const System sys = System::uniform(SiteKind::fermion(), n);
  const std::string l = "-1i*" + hopping(n, -1.0, "C") + " + " + num(4 * gamma) +
                        "*sum(i=1.." + std::to_string(n) + ", Dissipator(N)(i))";
  const auto gen = dense_generator(parse(l), sys, Rep::Mixed);
  const DenseState s0 = dense_product_state(Rep::Mixed, sys, {"Emp", "Occ", "Emp", "Occ"});
  const CovarianceModel model = CovarianceModel::fermion_dephasing(n, gamma);
  const Matrix c0 = dense_covariance(s0, "C");
  for (double t : {0.5, 1.5}) {
    const Matrix c = covariance_evolve(model, c0, t, 0.05);
    const Matrix d = dense_covariance(dense_evolve(gen, s0, t, 0.05), "C");
    CHECK(max_abs(c - d) < 1e-8);
  }
}

TEST_CASE("covariance: fermion source against the dense oracle") {
  const int n = 4;
  const System sys = System::uniform(SiteKind::fermion(), n);
  const std::string l = "-1i*" + hopping(n, 1.0, "C") + " + " + num(2 * 0.3) + "*Dissipator(dag(C))(2)";
  const auto gen = dense_generator(parse(l), sys, Rep::Mixed);
  const DenseState s0 = dense_product_state(Rep::Mixed, sys, {"Emp", "Emp", "Emp", "Emp"});
  const Matrix c = covariance_evolve(CovarianceModel::fermion_source(n, 0.3, 2), Matrix::Zero(n, n),
                                     1.2, 0.05);
  CHECK(max_abs(c - dense_covariance(dense_evolve(gen, s0, 1.2, 0.05), "C")) < 1e-8);
}

TEST_CASE("covariance: boson source against a truncated dense model") {
  const int n = 3;
  const System sys = System::uniform(SiteKind::boson(5), n);
  const std::string l = "-1i*" + hopping(n, 1.0, "A") + " + " + num(2 * 0.1) + "*Dissipator(dag(A))(1)";
  const auto gen = dense_generator(parse(l), sys, Rep::Mixed);
  const DenseState s0 = dense_product_state(Rep::Mixed, sys, {"0", "0", "0"});
  const Matrix c = covariance_evolve(CovarianceModel::boson_source(n, 0.1, 1), Matrix::Zero(n, n),
                                     1.0, 0.05);
  // Occupations stay far below the cutoff of four quanta.
  CHECK(max_abs(c - dense_covariance(dense_evolve(gen, s0, 1.0, 0.05), "A")) < 1e-3);
}

TEST_CASE("covariance: XX chain with boundary driving against the dense oracle") {
  const int n = 4;
  const double el = 1.0, ml = 0.6, er = 0.8, mr = -0.4;
  const std::string l = "-1i*sum(i=1..3, X(i)X(i+1) + Y(i)Y(i+1)) + " +
                        num(el * (1 + ml) / 2) + "*Dissipator(Sp)(1) + " +
                        num(el * (1 - ml) / 2) + "*Dissipator(Sm)(1) + " +
                        num(er * (1 + mr) / 2) + "*Dissipator(Sp)(4) + " +
                        num(er * (1 - mr) / 2) + "*Dissipator(Sm)(4)";
  const auto gen = dense_generator(parse(l), q(n), Rep::Mixed);
  const DenseState s0 = dense_product_state(Rep::Mixed, q(n), {"FullyMixed", "FullyMixed",
                                                                "FullyMixed", "FullyMixed"});
  const CovarianceModel model = CovarianceModel::xx_boundary(n, el, ml, er, mr);
  const Matrix c0 = 0.5 * Matrix::Identity(n, n);
  const auto cs = covariance_trajectory(model, c0, {0.5, 2.0}, 0.05);
  double now = 0.0;
  DenseState s = s0;
  for (std::size_t k = 0; k < cs.size(); ++k) {
    const double t = k == 0 ? 0.5 : 2.0;
    s = dense_evolve(gen, s, t - now, 0.05);
    now = t;
    for (int site = 1; site <= n; ++site) {
      const double z = dense_expect(s, parse("Z(" + std::to_string(site) + ")")).real();
      CHECK(std::abs(xx_magnetization(cs[k], site) - z) < 1e-8);
    }
    const double j = dense_expect(s, parse("X(1)Y(2) - Y(1)X(2)")).real();
    CHECK(std::abs(xx_current(cs[k], 1) - j) < 1e-8);
  }
}

TEST_CASE("covariance: unbiased XX chain keeps the infinite temperature state") {
  const CovarianceModel model = CovarianceModel::xx_boundary(6, 1.0, 0.0, 1.0, 0.0);
  const Matrix c0 = 0.5 * Matrix::Identity(6, 6);
  CHECK(max_abs(covariance_evolve(model, c0, 3.0, 0.1) - c0) < 1e-12);
  CHECK_THROWS(covariance_evolve(model, Matrix::Zero(5, 5), 1.0, 0.1));
}
