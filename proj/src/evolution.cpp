#include "mixmps/evolution.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace mixmps {

namespace {

// Third-order cross term sum_{j<k} a_j^2 a_k of an ordered composition.
cplx cross_term(const std::vector<cplx>& a) {
  cplx s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    for (std::size_t j = 0; j < k; ++j) s += a[j] * a[j] * a[k];
  }
  return s;
}

std::vector<cplx> order4() {
  // Roots of 1 + x + x^2/2 + x^3/6 + x^4/24 via the companion matrix of the
  // monic polynomial x^4 + 4x^3 + 12x^2 + 24x + 24.
  Eigen::Matrix4cd companion = Eigen::Matrix4cd::Zero();
  const double coeffs[4] = {24.0, 24.0, 12.0, 4.0};
  for (int k = 1; k < 4; ++k) companion(k, k - 1) = 1.0;
  for (int k = 0; k < 4; ++k) companion(k, 3) = -coeffs[k];
  Eigen::ComplexEigenSolver<Eigen::Matrix4cd> solver(companion);
  std::vector<cplx> a;
  for (int k = 0; k < 4; ++k) {
    const cplx root = solver.eigenvalues()[k];
    // One Newton step on the original polynomial polishes the root.
    const cplx p = 24.0 + root * (24.0 + root * (12.0 + root * (4.0 + root)));
    const cplx dp = 24.0 + root * (24.0 + root * (12.0 + 4.0 * root));
    a.push_back(-1.0 / (root - p / dp));
  }
  std::sort(a.begin(), a.end(), [](cplx x, cplx y) {
    return x.real() != y.real() ? x.real() < y.real() : x.imag() < y.imag();
  });
  // Among all orderings, take the one with the smallest third-order cross term.
  std::vector<int> perm{0, 1, 2, 3};
  std::vector<cplx> best;
  double best_norm = INFINITY;
  do {
    std::vector<cplx> trial;
    for (int k : perm) trial.push_back(a[static_cast<std::size_t>(k)]);
    const double norm = std::abs(cross_term(trial));
    if (norm < best_norm - 1e-12) {
      best_norm = norm;
      best = trial;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

void check_finite(const State& s, double t) {
  for (int k = 0; k < s.size(); ++k) {
    if (!s.site(k).all_finite()) {
      throw std::runtime_error("state became non-finite at t = " + std::to_string(t) +
                               " (site " + std::to_string(k + 1) + ")");
    }
  }
}

}  // namespace

std::vector<cplx> substep_coefficients(int order) {
  switch (order) {
    case 1:
      return {cplx(1.0, 0.0)};
    case 2:
      return {cplx(0.5, 0.5), cplx(0.5, -0.5)};
    case 4: {
      static const std::vector<cplx> coeffs = order4();
      return coeffs;
    }
    default:
      throw std::invalid_argument("unsupported substep order " + std::to_string(order) +
                                  " (expected 1, 2 or 4)");
  }
}

namespace {

// Number of full steps and the length of a final partial step (0 if none).
std::pair<int, double> split_duration(double duration, double time_step) {
  const int full = static_cast<int>(std::floor(duration / time_step + 1e-9));
  double rest = duration - full * time_step;
  if (rest < 1e-9 * time_step) rest = 0.0;
  return {full, rest};
}

}  // namespace

std::vector<double> observation_times(double duration, double time_step, int measure_period) {
  const auto [full, rest] = split_duration(duration, time_step);
  const int total = full + (rest > 0.0 ? 1 : 0);
  std::vector<double> times{0.0};
  for (int k = 0; k < total; ++k) {
    if (k + 1 == total || (k + 1) % measure_period == 0) {
      times.push_back(k == full ? duration : (k + 1) * time_step);
    }
  }
  return times;
}

State evolve(State s, const EvolutionPlan& plan, const Observer& observer,
             EvolutionStats* stats) {
  if (!(plan.time_step > 0.0)) throw std::invalid_argument("time_step must be positive");
  if (!(plan.duration >= 0.0)) throw std::invalid_argument("duration must be non-negative");
  if (plan.measure_period < 1) throw std::invalid_argument("measure_period must be >= 1");
  if (plan.evolver.rep != s.rep() || !(plan.evolver.system == s.system())) {
    throw std::invalid_argument("evolver was lowered for a different system or representation");
  }
  plan.limits.validate();
  const std::vector<cplx> coeffs = substep_coefficients(plan.order);

  const auto [full, rest] = split_duration(plan.duration, plan.time_step);

  auto build = [&](double tau) {
    std::vector<Mpo> ws;
    for (const cplx a : coeffs) ws.push_back(w_mpo(plan.evolver, a * tau, plan.variant));
    return ws;
  };
  const std::vector<Mpo> step = full > 0 ? build(plan.time_step) : std::vector<Mpo>{};
  const std::vector<Mpo> last = rest > 0.0 ? build(rest) : std::vector<Mpo>{};

  EvolutionStats local;
  local.max_bond_dim = s.max_bond_dim();
  double t = 0.0;
  if (observer) observer(s, t);
  const int total = full + (rest > 0.0 ? 1 : 0);
  for (int k = 0; k < total; ++k) {
    const bool partial = k == full;
    const auto& ws = partial ? last : step;
    for (const Mpo& w : ws) {
      double disc = 0.0;
      s = apply_mpo(w, s, plan.limits, &disc);
      local.discarded += disc;
      local.max_bond_dim = std::max(local.max_bond_dim, s.max_bond_dim());
    }
    t = partial ? plan.duration : (k + 1) * plan.time_step;
    ++local.steps;
    check_finite(s, t);
    const bool is_last = k + 1 == total;
    if (observer && (is_last || (k + 1) % plan.measure_period == 0)) observer(s, t);
  }
  if (stats) *stats = local;
  return s;
}

}  // namespace mixmps
