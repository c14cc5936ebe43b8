#include <doctest.h>

#include "mixmps/measurement.h"
#include "mixmps/oracles/dense.h"
#include "mixmps/parser.h"
#include "random_expr.h"
#include "support.h"

using namespace mixmps;
using mixmps::testing::Gen;
using mixmps::testing::max_abs;

namespace {

System q(int n) { return System::uniform(SiteKind::qubit(), n); }

State ghz(Rep rep, int n) {
  const double h = 1.0 / std::sqrt(2.0);
  const State g = add({{h, product_state(Rep::Pure, q(n), "Up")},
                       {h, product_state(Rep::Pure, q(n), "Dn")}},
                      {});
  return rep == Rep::Pure ? g : mix(g);
}

oracles::DenseState dense_of(const State& s) {
  if (s.rep() == Rep::Pure) return {Rep::Pure, s.system(), to_dense(s), {}};
  return {Rep::Mixed, s.system(), {}, density_matrix(s)};
}

}  // namespace

TEST_CASE("expectation examples") {
  const State up = product_state(Rep::Mixed, q(1), "Up");
  CHECK(std::abs(expect(up, parse("Z(1)")) - 1.0) < 1e-15);
  const State plus = product_state(Rep::Pure, q(1), "+");
  CHECK(std::abs(expect(plus, parse("X(1)")) - 1.0) < 1e-15);
  CHECK(std::abs(expect(plus, parse("Z(1)"))) < 1e-15);
  CHECK(std::abs(expect(ghz(Rep::Mixed, 4), parse("Z(1)Z(4)")) - 1.0) < 1e-12);
  CHECK(std::abs(expect(ghz(Rep::Mixed, 4), parse("X(1)X(2)X(3)X(4)")) - 1.0) < 1e-12);
  CHECK_THROWS(expect(up, parse("Dissipator(Sm)(1)")));
}

TEST_CASE("expectations match the dense oracle on random states") {
  Gen gen(61);
  for (int trial = 0; trial < 40; ++trial) {
    const auto obs = testing::random_observable(gen);
    INFO(obs.text);
    const Rep rep = trial % 2 ? Rep::Mixed : Rep::Pure;
    const State s = gen.mps(rep, obs.system, 3);
    const cplx expected = oracles::dense_expect(dense_of(s), obs.expr);
    CHECK(std::abs(expect(s, obs.expr) - expected) < 1e-11 * std::max(1.0, std::abs(expected)));
  }
}

TEST_CASE("expect_sites skips kinds without the operator") {
  const System sys({SiteKind::qubit(), SiteKind::boson(3), SiteKind::fermion()});
  const State s = product_state(Rep::Mixed, sys, std::vector<std::string>{"Up", "2", "Occ"});
  const auto n = expect_sites(s, parse("N"));
  REQUIRE(n.size() == 3);
  CHECK(!n[0]);
  CHECK(std::abs(*n[1] - 2.0) < 1e-14);
  CHECK(std::abs(*n[2] - 1.0) < 1e-14);
  const auto z = expect_sites(s, parse("Z"));
  CHECK(std::abs(*z[0] - 1.0) < 1e-14);
  CHECK(!z[1]);
  CHECK(!z[2]);
}

TEST_CASE("correlation matrices") {
  const State g = ghz(Rep::Mixed, 3);
  const Matrix zz = correlation_matrix(g, parse("Z"), parse("Z"));
  CHECK(max_abs(zz - Matrix::Ones(3, 3)) < 1e-12);

  Gen gen(62);
  const System f = System::uniform(SiteKind::fermion(), 4);
  for (Rep rep : {Rep::Pure, Rep::Mixed}) {
    const State s = gen.mps(rep, f, 4);
    const Matrix c = correlation_matrix(s, parse("dag(C)"), parse("C"));
    const auto d = dense_of(s);
    for (int i = 1; i <= 4; ++i) {
      for (int j = 1; j <= 4; ++j) {
        const OpExpr e = parse("dag(C)(" + std::to_string(i) + ")C(" + std::to_string(j) + ")");
        const cplx expected = oracles::dense_expect(d, e);
        CHECK(std::abs(c(i - 1, j - 1) - expected) < 1e-11 * std::max(1.0, std::abs(expected)));
      }
    }
    if (rep == Rep::Pure) CHECK(max_abs(c - c.adjoint()) < 1e-10 * std::max(1.0, max_abs(c)));
  }
}

TEST_CASE("trace, purity, Renyi-2") {
  const State fm = product_state(Rep::Mixed, q(3), "FullyMixed");
  CHECK(std::abs(trace(fm) - 1.0) < 1e-15);
  CHECK(std::abs(purity(fm) - 0.125) < 1e-14);
  CHECK(std::abs(renyi2(fm) - 3.0 * std::log(2.0)) < 1e-13);
  CHECK(std::abs(purity(ghz(Rep::Mixed, 4)) - 1.0) < 1e-12);
  CHECK(purity(ghz(Rep::Pure, 4)) == 1.0);
  CHECK(trace_error(fm) < 1e-15);

  Gen gen(63);
  for (int trial = 0; trial < 10; ++trial) {
    // Convex mixtures of pure states have purity at most one.
    const State a = mix(gen.mps(Rep::Pure, q(3), 2));
    const State b = mix(gen.mps(Rep::Pure, q(3), 2));
    const State rho = add({{1.0 / trace(a), a}, {1.0 / trace(b), b}}, {});
    const double p = purity(rho);
    CHECK(p <= 1.0 + 1e-12);
    CHECK(p >= 0.125 - 1e-12);
    const Matrix d = density_matrix(rho);
    const double exact = (d * d).trace().real() / std::norm(d.trace());
    CHECK(std::abs(p - exact) < 1e-12);
  }
}

TEST_CASE("operator-space entanglement entropy") {
  CHECK(std::abs(osee(ghz(Rep::Pure, 4), 2) - std::log(2.0)) < 1e-12);
  // mix(GHZ) carries one ket and one bra Bell pair across each bond.
  CHECK(std::abs(osee(ghz(Rep::Mixed, 4), 2) - std::log(4.0)) < 1e-12);
  CHECK(std::abs(osee(product_state(Rep::Mixed, q(4), "+"), 1)) < 1e-12);
  CHECK_THROWS(osee(ghz(Rep::Pure, 4), 0));
  CHECK_THROWS(osee(ghz(Rep::Pure, 4), 4));

  Gen gen(64);
  const State s = gen.mps(Rep::Mixed, q(5), 6);
  for (int bond = 1; bond < 5; ++bond) {
    const double ref = osee(s, bond);
    for (int c = 0; c < 5; ++c) CHECK(std::abs(osee(orthogonalize(s, c), bond) - ref) < 1e-10);
    CHECK(osee(scaled(s, 3.7), bond) == doctest::Approx(ref).epsilon(1e-10));
  }
}

TEST_CASE("Measurer reuses environments") {
  Gen gen(65);
  const State s = gen.mps(Rep::Mixed, q(5), 4);
  const Measurer m(s);
  const auto d = dense_of(s);
  for (int i = 1; i <= 5; ++i) {
    for (int j = i + 1; j <= 5; ++j) {
      const OpExpr e = parse("X(" + std::to_string(i) + ")Y(" + std::to_string(j) + ")");
      CHECK(std::abs(m.expect(e) - oracles::dense_expect(d, e)) < 1e-11);
    }
  }
  CHECK(std::abs(m.trace() - d.rho.trace()) < 1e-11);
}
