#pragma once

#include <Eigen/SparseCore>
#include <utility>
#include <vector>

#include "mixmps/opexpr.h"
#include "mixmps/state.h"

/// Exact reference computations on the full Hilbert space. Nothing here calls
/// the MPO, lowering or evolution code; operators are built from the
/// registry's local matrices with an explicit Jordan-Wigner Fock embedding.
namespace mixmps::oracles {

using Sparse = Eigen::SparseMatrix<cplx>;

/// Largest Hilbert dimension a DenseState may have (Mixed stores D x D).
inline constexpr Index kMaxHilbertDim = 1024;
/// Largest superoperator dimension that may be materialized.
inline constexpr Index kMaxSuperDim = 20000;

Index hilbert_dim(const System& system);

/// Operator on the full Hilbert space (site 1 most significant). Multi-site
/// blocks are read in the Jordan-Wigner basis of their listed sites.
Sparse embed(const OpExpr& expr, const System& system,
             const OperatorRegistry& registry = OperatorRegistry::builtin());

struct DenseState {
  Rep rep = Rep::Pure;
  System system;
  Vector psi;  // Pure
  Matrix rho;  // Mixed, D x D

  /// Pure: psi. Mixed: vec(rho) with the per-site (ket, bra) index pairs
  /// interleaved, matching to_dense(State).
  Vector vectorized() const;
};

DenseState dense_product_state(Rep rep, const System& system,
                               const std::vector<std::string>& names);
DenseState dense_mix(const DenseState& s);
/// CZ on every edge of |+>^n, then mixed if requested.
DenseState dense_graph_state(Rep rep, int n, const std::vector<std::pair<int, int>>& edges);
/// Reduced density matrix on the kept sites (1-based, any order, sorted
/// internally).
DenseState dense_partial_trace(const DenseState& s, std::vector<int> keep);

/// Raw expectation: <psi|O|psi> or Tr(O rho).
cplx dense_expect(const DenseState& s, const OpExpr& obs,
                  const OperatorRegistry& registry = OperatorRegistry::builtin());

/// d/dt rho = G rho - rho G + sum_k c_k (L_k rho L_k^+ - {L_k^+ L_k, rho}/2)
/// for Mixed; d/dt psi = G psi for Pure.
struct DenseGenerator {
  Rep rep = Rep::Mixed;
  System system;
  Sparse g;
  std::vector<std::pair<cplx, Sparse>> jumps;

  Vector apply(const Vector& v) const;  // Pure
  Matrix apply(const Matrix& rho) const;  // Mixed
  /// Superoperator in the interleaved vectorization (Pure: G itself).
  Sparse superoperator() const;
};

/// A (x) I in the interleaved vectorization: left multiplication by a full
/// Hilbert-space operator.
Sparse dense_left_multiplication(const Sparse& op, const System& system);

DenseGenerator dense_generator(const OpExpr& evolver, const System& system, Rep rep,
                               const OperatorRegistry& registry = OperatorRegistry::builtin());

/// Classic RK4 from 0 to t. The step is halved until two successive results
/// agree to `tol` (max-abs, relative to the state norm).
DenseState dense_evolve(const DenseGenerator& gen, const DenseState& s0, double t, double dt, double tol = 1e-10);

/// rho -> sum_i w_i E_i rho E_i^+ with each local E_i acting on `sites`
/// (1-based) in the Jordan-Wigner basis of those sites.
DenseState dense_channel(const DenseState& s, const std::vector<std::pair<cplx, Matrix>>& kraus,
                         const std::vector<int>& sites);

/// Applies a product of gates and channels left to right with the same
/// layer semantics as apply_gates.
DenseState dense_apply_gates(const DenseState& s, const OpExpr& gates,
                             const OperatorRegistry& registry = OperatorRegistry::builtin());

}  // namespace mixmps::oracles
