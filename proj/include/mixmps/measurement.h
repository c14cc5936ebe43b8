#pragma once

#include <optional>
#include <vector>

#include "mixmps/mpo.h"

namespace mixmps {

/// Caches left/right environments of one state so that many observables can
/// be evaluated cheaply. Mixed states are contracted with the vectorized
/// identity on every site; Pure states with their conjugate.
class Measurer {
 public:
  explicit Measurer(const State& s);

  const State& state() const { return state_; }

  /// Raw expectation value (not divided by the trace).
  cplx expect(const TermSum& ts) const;
  cplx expect(const OpExpr& expr,
              const OperatorRegistry& registry = OperatorRegistry::builtin()) const;

  /// <op(k)> for every site; absent where op is undefined for the site kind.
  std::vector<std::optional<cplx>> expect_sites(
      const OpExpr& op, const OperatorRegistry& registry = OperatorRegistry::builtin()) const;

  /// Entry (i, j) is <A(i) B(j)>; the diagonal is <(A B)(i)>.
  Matrix correlation_matrix(const OpExpr& a, const OpExpr& b,
                            const OperatorRegistry& registry = OperatorRegistry::builtin()) const;

  /// Tr(rho) for Mixed, <psi|psi> for Pure.
  cplx trace() const;

 private:
  cplx term_value(const Term& t) const;

  State state_;
  std::vector<Matrix> left_;   // left_[k]: environment of sites < k
  std::vector<Matrix> right_;  // right_[k]: environment of sites >= k
};

cplx expect(const State& s, const OpExpr& expr,
            const OperatorRegistry& registry = OperatorRegistry::builtin());
std::vector<std::optional<cplx>> expect_sites(
    const State& s, const OpExpr& op,
    const OperatorRegistry& registry = OperatorRegistry::builtin());
Matrix correlation_matrix(const State& s, const OpExpr& a, const OpExpr& b,
                          const OperatorRegistry& registry = OperatorRegistry::builtin());

cplx trace(const State& s);
/// <<rho|rho>> for Mixed; for Pure the squared norm squared (|psi|^4).
cplx trace2(const State& s);
/// trace2 / trace^2 for Mixed; 1 for Pure.
double purity(const State& s);
double renyi2(const State& s);
/// Entanglement entropy of the normalized MPS across bond b (1..N-1), natural log.
double osee(const State& s, int bond);
double trace_error(const State& s);

}  // namespace mixmps
