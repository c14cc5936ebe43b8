#include <doctest.h>

#include "mixmps/evolution.h"
#include "mixmps/measurement.h"
#include "mixmps/oracles/dense.h"
#include "mixmps/parser.h"
#include "support.h"

using namespace mixmps;
using mixmps::testing::Gen;
using mixmps::testing::max_abs;

namespace {

System q(int n) { return System::uniform(SiteKind::qubit(), n); }

// Elementary symmetric polynomials of the substeps.
std::vector<cplx> elementary(const std::vector<cplx>& a) {
  std::vector<cplx> e(a.size() + 1, 0.0);
  e[0] = 1.0;
  for (const cplx& x : a) {
    for (std::size_t k = e.size() - 1; k > 0; --k) e[k] += x * e[k - 1];
  }
  return e;
}

EvolutionPlan plan_for(const std::string& evolver, const System& sys, Rep rep, double t,
                       double tau, int order) {
  EvolutionPlan p;
  p.evolver = lower_evolver(parse(evolver), sys, rep);
  p.duration = t;
  p.time_step = tau;
  p.order = order;
  return p;
}

double decay_error(double tau, int order, WVariant v) {
  const std::string l = "-1i*(0.4*X(1)X(2) + 0.3*Z(1)) + 0.5*Dissipator(Sm)(1) + 0.2*Dissipator(Z)(2)";
  EvolutionPlan p = plan_for(l, q(2), Rep::Mixed, 0.4, tau, order);
  p.variant = v;
  const State s0 = product_state(Rep::Mixed, q(2), std::vector<std::string>{"Up", "+"});
  const State s = evolve(s0, p);
  const auto gen = oracles::dense_generator(parse(l), q(2), Rep::Mixed);
  const Matrix exact = matrix_exponential(0.4 * Matrix(gen.superoperator()));
  return max_abs(to_dense(s) - exact * to_dense(s0));
}

}  // namespace

TEST_CASE("substep coefficients reproduce the Taylor polynomial") {
  const double fact[] = {1, 1, 2, 6, 24};
  for (int order : {1, 2, 4}) {
    const auto a = substep_coefficients(order);
    CHECK(static_cast<int>(a.size()) == order);
    const auto e = elementary(a);
    for (int k = 0; k <= order; ++k) {
      CHECK(std::abs(e[static_cast<std::size_t>(k)] - 1.0 / fact[k]) < 1e-14);
    }
  }
  CHECK_THROWS(substep_coefficients(3));
  CHECK_THROWS(substep_coefficients(0));
}

TEST_CASE("zero evolver leaves the state unchanged") {
  Gen gen(51);
  const State s = gen.mps(Rep::Mixed, q(3), 4);
  EvolutionPlan p;
  p.evolver = TermSum{Rep::Mixed, q(3), {}};
  p.duration = 1.0;
  int calls = 0;
  const State out = evolve(s, p, [&](const State&, double) { ++calls; });
  CHECK(max_abs(to_dense(out) - to_dense(s)) < 1e-12 * std::max(1.0, max_abs(to_dense(s))));
  CHECK(calls == 11);
}

TEST_CASE("single-site decay: one large step equals many small ones") {
  const System one = q(1);
  const std::string l = "Dissipator(Sm)(1)";
  const State up = product_state(Rep::Mixed, one, "Up");
  const State big = evolve(up, plan_for(l, one, Rep::Mixed, 5.0, 5.0, 1));
  const State small = evolve(up, plan_for(l, one, Rep::Mixed, 5.0, 0.05, 1));
  // A single-site evolver is integrated exactly by W^II.
  const double pz = std::exp(-5.0);
  CHECK(std::abs(expect(big, parse("Z(1)")) - (2.0 * pz - 1.0)) < 1e-12);
  CHECK(max_abs(to_dense(big) - to_dense(small)) < 1e-12);
}

TEST_CASE("order 2 error scales with tau squared, order 4 beats it") {
  const double e1 = decay_error(0.1, 2, WVariant::WII);
  const double e2 = decay_error(0.05, 2, WVariant::WII);
  CHECK(std::log2(e1 / e2) == doctest::Approx(2.0).epsilon(0.15));
  CHECK(decay_error(0.05, 4, WVariant::WII) < e2);
  const double w1 = decay_error(0.1, 1, WVariant::WI);
  const double w2 = decay_error(0.05, 1, WVariant::WI);
  CHECK(std::log2(w1 / w2) == doctest::Approx(1.0).epsilon(0.15));
}

TEST_CASE("measure period and a final partial step") {
  const State up = product_state(Rep::Mixed, q(1), "Up");
  EvolutionPlan p = plan_for("Dissipator(Sm)(1)", q(1), Rep::Mixed, 1.05, 0.1, 2);
  p.measure_period = 5;
  std::vector<double> times;
  EvolutionStats stats;
  evolve(up, p, [&](const State&, double t) { times.push_back(t); }, &stats);
  REQUIRE(times.size() == 4);
  CHECK(times[1] == doctest::Approx(0.5));
  CHECK(times[2] == doctest::Approx(1.0));
  CHECK(times.back() == doctest::Approx(1.05));
  CHECK(stats.steps == 11);
  CHECK(observation_times(1.05, 0.1, 5) == times);
  CHECK(observation_times(1.0, 0.1, 3).size() == 5);
}

TEST_CASE("evolution preserves trace (Mixed) and norm (Pure)") {
  Gen gen(52);
  const std::string h = "-1i*sum(i=1..3, X(i)X(i+1) + 0.7*Y(i)Y(i+1) + 0.3*Z(i))";
  State psi = gen.mps(Rep::Pure, q(4), 2);
  psi = scaled(psi, 1.0 / std::sqrt(trace(psi).real()));
  // The norm is kept only up to the step error; the Mixed trace exactly.
  const State pe = evolve(psi, plan_for(h, q(4), Rep::Pure, 0.5, 0.05, 4));
  CHECK(std::abs(trace(pe).real() - 1.0) < 1e-6);

  const State rho = product_state(Rep::Mixed, q(4), "+");
  const State re = evolve(rho, plan_for(h + " + 0.3*sum(i=1..4, Dissipator(Sm)(i))", q(4),
                                        Rep::Mixed, 0.5, 0.05, 4));
  CHECK(std::abs(trace(re) - 1.0) < 1e-12);
}

TEST_CASE("evolution matches the dense oracle") {
  const System sys({SiteKind::qubit(), SiteKind::boson(3), SiteKind::fermion()});
  const std::string l =
      "-1i*(0.5*X(1)N(2) + 0.3*(A(2) + dag(A)(2)) + N(3)) + 0.4*Dissipator(A)(2) + "
      "0.2*Dissipator(C)(3)";
  const State s0 =
      product_state(Rep::Mixed, sys, std::vector<std::string>{"+", "1", "Occ"});
  const State s = evolve(s0, plan_for(l, sys, Rep::Mixed, 1.0, 0.02, 4));
  const auto gen = oracles::dense_generator(parse(l), sys, Rep::Mixed);
  const auto d0 = oracles::dense_product_state(Rep::Mixed, sys, {"+", "1", "Occ"});
  const auto d = oracles::dense_evolve(gen, d0, 1.0, 0.01);
  CHECK(max_abs(density_matrix(s) - d.rho) < 1e-6);
}

TEST_CASE("gates: involutions, channels and errors") {
  const TruncationLimits lim{};
  const State up = product_state(Rep::Pure, q(2), "Up");
  CHECK(max_abs(to_dense(apply_gates(up, parse("X(1)X(1)"), lim)) - to_dense(up)) < 1e-14);

  const State rho = product_state(Rep::Mixed, q(1), "Up");
  const State dep = apply_gates(rho, parse("0.99*Gate(Id)(1) + 0.01*Gate(X)(1)"), lim);
  CHECK(std::abs(expect(dep, parse("Z(1)")) - 0.98) < 1e-14);
  CHECK(std::abs(trace(dep) - 1.0) < 1e-14);

  const State plus = product_state(Rep::Pure, q(2), "+");
  const State cz = apply_gates(plus, parse("CZ(1, 2)"), lim);
  Vector expected(4);
  expected << 0.5, 0.5, 0.5, -0.5;
  CHECK(max_abs(to_dense(cz) - expected) < 1e-14);

  CHECK_THROWS(apply_gates(up, parse("0.5*Gate(Id)(1) + 0.5*Gate(X)(1)"), lim));
  CHECK_THROWS(apply_gates(product_state(Rep::Pure, q(4), "Up"),
                           parse("controlled(controlled(controlled(X)))(1, 2, 3, 4)"), lim));
}

TEST_CASE("gates: non-adjacent supports match the dense oracle") {
  Gen gen(53);
  const std::string circuit =
      "H(1)H(3)CZ(1, 4)controlled(X)(4, 2)Swap(1, 3)controlled(controlled(X))(3, 1, 4)"
      "(0.9*Gate(Id)(2) + 0.1*Gate(Z)(2))";
  for (int trial = 0; trial < 5; ++trial) {
    const State s = gen.mps(Rep::Mixed, q(4), 4);
    const State out = apply_gates(s, parse(circuit), {});
    const auto d = oracles::dense_apply_gates(
        oracles::DenseState{Rep::Mixed, q(4), {}, density_matrix(s)}, parse(circuit));
    CHECK(max_abs(density_matrix(out) - d.rho) < 1e-11 * std::max(1.0, max_abs(d.rho)));
    CHECK(std::abs(trace(out) - trace(s)) < 1e-11 * std::abs(trace(s)));
  }
}
