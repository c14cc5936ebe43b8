#include <doctest.h>

#include "mixmps/measurement.h"
#include "mixmps/oracles/dense.h"
#include "mixmps/parser.h"
#include "mixmps/state.h"
#include "support.h"

using namespace mixmps;
using mixmps::testing::Gen;
using mixmps::testing::max_abs;

namespace {

const System q(int n) { return System::uniform(SiteKind::qubit(), n); }

OpExpr op(const std::string& text) { return parse(text); }

void check_gauge(const State& s) {
  REQUIRE(s.center());
  const int c = *s.center();
  for (int k = 0; k < s.size(); ++k) {
    if (k == c) continue;
    const Tensor& t = s.site(k);
    const Matrix m = k < c ? Matrix(t.matrix(2)) : Matrix(t.matrix(1));
    const Matrix gram = k < c ? Matrix(m.adjoint() * m) : Matrix(m * m.adjoint());
    CHECK(max_abs(gram - Matrix::Identity(gram.rows(), gram.cols())) < 1e-12);
  }
}

State ghz(int n) {
  const State up = product_state(Rep::Pure, q(n), "Up");
  const State dn = product_state(Rep::Pure, q(n), "Dn");
  const double h = 1.0 / std::sqrt(2.0);
  return add({{h, up}, {h, dn}}, {});
}

}  // namespace

TEST_CASE("product states") {
  const State fm = product_state(Rep::Mixed, q(1), "FullyMixed");
  CHECK(std::abs(trace(fm) - 1.0) < 1e-15);
  CHECK(std::abs(purity(fm) - 0.5) < 1e-15);

  const State up = product_state(Rep::Pure, q(3), "Up");
  CHECK(std::abs(trace(up) - 1.0) < 1e-15);
  CHECK(up.bond_dims() == std::vector<Index>{1, 1});
  CHECK(std::abs(expect(up, op("Z(2)")) - 1.0) < 1e-15);

  const System hybrid({SiteKind::qubit(), SiteKind::boson(4), SiteKind::fermion()});
  const State h = product_state(Rep::Mixed, hybrid, std::vector<std::string>{"+", "1", "FullyMixed"});
  CHECK(std::abs(trace(h) - 1.0) < 1e-14);
  CHECK(std::abs(expect(h, op("N(2)")) - 1.0) < 1e-14);
  CHECK(std::abs(expect(h, op("X(1)")) - 1.0) < 1e-14);

  CHECK_THROWS(product_state(Rep::Pure, q(2), "FullyMixed"));
  CHECK_THROWS(product_state(Rep::Pure, q(2), "Occ"));
  CHECK_THROWS(product_state(Rep::Pure, q(2), std::vector<std::string>{"Up", "Up", "Up"}));
}

TEST_CASE("GHZ by linear combination") {
  const State g = ghz(10);
  CHECK(std::abs(expect(g, op("Z(1)Z(2)")) - 1.0) < 1e-12);
  CHECK(std::abs(expect(g, op("Z(1)"))) < 1e-12);
  CHECK(std::abs(trace(g) - 1.0) < 1e-12);
  CHECK(g.max_bond_dim() == 2);
  CHECK(std::abs(osee(g, 5) - std::log(2.0)) < 1e-12);
}

TEST_CASE("add: dense oracle, zero weight, commutativity") {
  Gen gen(31);
  const System sys = q(4);
  for (int trial = 0; trial < 10; ++trial) {
    const State a = gen.mps(Rep::Pure, sys, 3), b = gen.mps(Rep::Pure, sys, 2);
    const cplx ca = gen.complex(), cb = gen.complex();
    const Vector expected = ca * to_dense(a) + cb * to_dense(b);
    CHECK(max_abs(to_dense(add({{ca, a}, {cb, b}}, {})) - expected) < 1e-12);
    CHECK(max_abs(to_dense(add({{cb, b}, {ca, a}}, {})) - expected) < 1e-12);
    CHECK(max_abs(to_dense(add({{1.0, a}, {0.0, b}}, {})) - to_dense(a)) < 1e-12);
  }
  CHECK_THROWS(add({{1.0, product_state(Rep::Pure, q(2), "Up")},
                    {1.0, product_state(Rep::Mixed, q(2), "Up")}}, {}));
  CHECK_THROWS(add({{1.0, product_state(Rep::Pure, q(2), "Up")},
                    {1.0, product_state(Rep::Pure, q(3), "Up")}}, {}));
}

TEST_CASE("mix") {
  const State up = product_state(Rep::Pure, q(1), "Up");
  const Vector v = to_dense(mix(up));
  CHECK(max_abs(v - Eigen::Vector4cd(1, 0, 0, 0)) < 1e-15);
  const State g = ghz(4);
  const State m = mix(g);
  CHECK(std::abs(purity(m) - 1.0) < 1e-12);
  CHECK(std::abs(expect(m, op("Z(1)Z(2)")) - 1.0) < 1e-12);
  for (std::size_t k = 0; k < g.bond_dims().size(); ++k) {
    CHECK(m.bond_dims()[k] == g.bond_dims()[k] * g.bond_dims()[k]);
  }
  const auto dense = oracles::dense_mix(oracles::DenseState{Rep::Pure, q(4), to_dense(g), {}});
  CHECK(max_abs(density_matrix(m) - dense.rho) < 1e-12);
  CHECK_THROWS(mix(m));

  Gen gen(32);
  for (int trial = 0; trial < 5; ++trial) {
    const State psi = gen.mps(Rep::Pure, q(3), 2);
    CHECK(std::abs(trace(mix(psi)) - to_dense(psi).squaredNorm()) < 1e-12);
  }
}

TEST_CASE("partial trace") {
  const State m = mix(ghz(2));
  const State r = partial_trace(m, {1});
  CHECK(r.size() == 1);
  CHECK(max_abs(density_matrix(r) - 0.5 * Matrix::Identity(2, 2)) < 1e-12);

  const System hybrid({SiteKind::qubit(), SiteKind::boson(3), SiteKind::fermion()});
  const State p = product_state(Rep::Mixed, hybrid, std::vector<std::string>{"+", "2", "Occ"});
  const State kept = partial_trace(p, {1, 3});
  const State direct =
      product_state(Rep::Mixed, System({SiteKind::qubit(), SiteKind::fermion()}),
                    std::vector<std::string>{"+", "Occ"});
  CHECK(max_abs(to_dense(kept) - to_dense(direct)) < 1e-14);

  Gen gen(33);
  const System sys = q(4);
  for (int trial = 0; trial < 5; ++trial) {
    const State rho = gen.mps(Rep::Mixed, sys, 4);
    const oracles::DenseState d{Rep::Mixed, sys, {}, density_matrix(rho)};
    const std::vector<int> keep = trial % 2 ? std::vector<int>{2, 4} : std::vector<int>{1, 2, 3};
    const State pt = partial_trace(rho, keep);
    CHECK(max_abs(density_matrix(pt) - oracles::dense_partial_trace(d, keep).rho) < 1e-12);
    CHECK(std::abs(trace(pt) - trace(rho)) < 1e-12);
  }
  CHECK_THROWS(partial_trace(ghz(2), {1}));
  CHECK_THROWS(partial_trace(m, {}));
}

TEST_CASE("orthogonalize: gram identities and invariance") {
  Gen gen(34);
  const System sys({SiteKind::qubit(), SiteKind::boson(3), SiteKind::fermion(), SiteKind::qubit(),
                    SiteKind::qubit()});
  for (Rep rep : {Rep::Pure, Rep::Mixed}) {
    const State s = gen.mps(rep, sys, 5);
    const Vector v = to_dense(s);
    for (int c = 0; c < sys.size(); ++c) {
      const State o = orthogonalize(s, c);
      CHECK(*o.center() == c);
      check_gauge(o);
      CHECK(max_abs(to_dense(o) - v) < 1e-12 * std::max(1.0, max_abs(v)));
    }
  }
}

TEST_CASE("compress") {
  const State p = product_state(Rep::Mixed, q(4), "+");
  CHECK(max_abs(to_dense(compress(p, {})) - to_dense(p)) < 1e-14);

  // Best rank-1 approximation of GHZ keeps one branch: fidelity 1/2.
  const State g = ghz(6);
  const State g1 = compress(g, {0.0, 1});
  CHECK(g1.max_bond_dim() == 1);
  const cplx overlap = to_dense(g).dot(to_dense(g1));
  CHECK(std::abs(std::norm(overlap) / to_dense(g1).squaredNorm() - 0.5) < 1e-12);

  Gen gen(35);
  for (int trial = 0; trial < 5; ++trial) {
    const State s = gen.mps(Rep::Pure, q(5), 4);
    double disc = -1.0;
    const State c = compress(s, {}, &disc);
    CHECK(max_abs(to_dense(c) - to_dense(s)) < 1e-12 * std::max(1.0, max_abs(to_dense(s))));
    CHECK(disc < 1e-20);
    check_gauge(c);
    const State small = compress(s, {0.0, 2});
    CHECK(small.max_bond_dim() <= 2);
  }
}

TEST_CASE("graph states") {
  const TruncationLimits lim{};
  const State empty = graph_state(Rep::Pure, 3, {}, lim);
  CHECK(max_abs(to_dense(empty) - to_dense(product_state(Rep::Pure, q(3), "+"))) < 1e-14);

  const State two = graph_state(Rep::Pure, 2, {{1, 2}}, lim);
  Vector expected(4);
  expected << 0.5, 0.5, 0.5, -0.5;
  CHECK(max_abs(to_dense(two) - expected) < 1e-14);
  CHECK(std::abs(expect(two, op("X(1)Z(2)")) - 1.0) < 1e-12);

  const auto edges = complete_graph_edges(4);
  CHECK(edges.size() == 6);
  const State g4 = graph_state(Rep::Mixed, 4, edges, lim);
  const auto dense = oracles::dense_graph_state(Rep::Mixed, 4, edges);
  CHECK(max_abs(density_matrix(g4) - dense.rho) < 1e-12);
  // Stabilizer of vertex 1 on the complete graph: X_1 Z_2 Z_3 Z_4.
  CHECK(std::abs(expect(g4, op("X(1)Z(2)Z(3)Z(4)")) - 1.0) < 1e-12);

  const State g8 = graph_state(Rep::Mixed, 8, complete_graph_edges(8), {1e-14, 64});
  CHECK(g8.max_bond_dim() <= 4);
  CHECK_THROWS(graph_state(Rep::Pure, 3, {{1, 4}}, lim));
  CHECK_THROWS(graph_state(Rep::Pure, 3, {{2, 2}}, lim));
}
