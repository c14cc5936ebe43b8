#pragma once

#include <functional>
#include <vector>

#include "mixmps/mpo.h"

namespace mixmps {

/// Complex substeps a_k with prod_k (1 + a_k x) equal to the Taylor
/// polynomial of exp(x) of the given order (1, 2 or 4).
std::vector<cplx> substep_coefficients(int order);

struct EvolutionPlan {
  TermSum evolver;
  double duration = 0.0;
  double time_step = 0.1;
  int order = 4;
  WVariant variant = WVariant::WII;
  TruncationLimits limits;
  int measure_period = 1;  // observer every k full steps
};

/// Called with the current state and time at t = 0, every measure_period
/// steps, and after the last step.
using Observer = std::function<void(const State&, double)>;

struct EvolutionStats {
  int steps = 0;
  double discarded = 0.0;  // summed over all compressions
  Index max_bond_dim = 1;
};

/// Repeated application of W(a_k tau) for every substep. A final shorter step
/// covers a duration that is not a multiple of the time step. Throws
/// std::runtime_error when the state stops being finite.
State evolve(State s, const EvolutionPlan& plan, const Observer& observer = {},
             EvolutionStats* stats = nullptr);

/// Times at which evolve() calls its observer.
std::vector<double> observation_times(double duration, double time_step, int measure_period);

/// Applies a product of gates left to right. Factors are indexed operators
/// (unitaries, Pure or Mixed) or sums of weighted Gate(E) nodes (Kraus maps,
/// Mixed only). Non-adjacent supports are routed with swaps.
State apply_gates(State s, const OpExpr& gates, const TruncationLimits& limits,
                  const OperatorRegistry& registry = OperatorRegistry::builtin(),
                  double* discarded = nullptr);

}  // namespace mixmps
