#pragma once

#include <map>
#include <vector>

#include "mixmps/opexpr.h"
#include "mixmps/state.h"

namespace mixmps {

/// One factor of an operator string: a local matrix on a 0-based site.
struct LocalFactor {
  int site = 0;
  Matrix matrix;
};

/// coef * (product of factors), identity on sites without a factor.
struct Term {
  cplx coef{1.0, 0.0};
  std::vector<LocalFactor> factors;  // strictly increasing sites
};

/// Sum of operator strings on the physical space of a representation
/// (d per site for Pure, d*d for Mixed). Jordan-Wigner strings are explicit.
struct TermSum {
  Rep rep = Rep::Pure;
  System system{std::vector<SiteKind>{SiteKind::qubit()}};
  std::vector<Term> terms;
};

class LoweringError : public ExprError {
 public:
  using ExprError::ExprError;
};

/// Operator strings on the Hilbert space (d per site) for a channel-free
/// expression, Jordan-Wigner strings included.
std::vector<Term> hilbert_terms(const OpExpr& expr, const System& system,
                                const OperatorRegistry& registry = OperatorRegistry::builtin());

/// Pure: the bare operator. Mixed: left multiplication A -> A (x) I.
TermSum lower_observable(const OpExpr& expr, const System& system, Rep rep,
                         const OperatorRegistry& registry = OperatorRegistry::builtin());

/// Pure: the expression itself (conventionally -i H). Mixed: plain terms
/// c h -> c (h (x) I - I (x) h^T); Dissipator(L) -> L (x) conj(L)
/// - 1/2 (L^dag L) (x) I - 1/2 I (x) (L^dag L)^T.
TermSum lower_evolver(const OpExpr& expr, const System& system, Rep rep,
                      const OperatorRegistry& registry = OperatorRegistry::builtin());

/// Dense matrix of a TermSum on the full space (site 1 most significant).
Matrix dense_matrix(const TermSum& ts);

/// Matrix product operator. Site tensors carry labels ("l", "o", "i", "r"):
/// left bond, output (row) index, input (column) index, right bond.
class Mpo {
 public:
  Mpo(Rep rep, System system, std::vector<Tensor> tensors);

  Rep rep() const { return rep_; }
  const System& system() const { return system_; }
  int size() const { return system_.size(); }
  const Tensor& site(int k) const { return tensors_[static_cast<std::size_t>(k)]; }
  std::vector<Index> bond_dims() const;

 private:
  Rep rep_;
  System system_;
  std::vector<Tensor> tensors_;
};

/// Finite-state-machine construction followed by deparallelization.
Mpo mpo_from_terms(const TermSum& ts);

enum class WVariant { WI, WII };

/// First-order MPO approximant of exp(tau * sum of terms).
Mpo w_mpo(const TermSum& ts, cplx tau, WVariant variant);

/// Dense matrix of an MPO (site 1 most significant).
Matrix dense_matrix(const Mpo& m);

/// Zip-up application followed by compress(). The summed discarded weight is
/// stored in `discarded` when given.
State apply_mpo(const Mpo& m, const State& s, const TruncationLimits& limits,
                double* discarded = nullptr);

}  // namespace mixmps
