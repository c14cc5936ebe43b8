#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mixmps/sites.h"
#include "mixmps/tensor.h"

namespace mixmps {

enum class Rep { Pure, Mixed };

std::string rep_name(Rep rep);
Rep parse_rep(const std::string& text);

/// Ordered sequence of site kinds. Sites are numbered 1..N in expressions
/// and 0..N-1 in C++ accessors.
class System {
 public:
  explicit System(std::vector<SiteKind> sites);
  static System uniform(const SiteKind& kind, int n);

  int size() const { return static_cast<int>(sites_.size()); }
  const SiteKind& operator[](int k) const { return sites_[static_cast<std::size_t>(k)]; }
  const std::vector<SiteKind>& sites() const { return sites_; }

  friend bool operator==(const System&, const System&) = default;

 private:
  std::vector<SiteKind> sites_;
};

/// Matrix product state. Site tensors carry labels ("l", "p", "r"); the
/// physical extent is d (Pure) or d*d (Mixed, combined index i*d + j with i
/// the ket index). Boundary bonds have extent 1.
class State {
 public:
  State(Rep rep, System system, std::vector<Tensor> tensors,
        std::optional<int> center = std::nullopt);

  Rep rep() const { return rep_; }
  const System& system() const { return system_; }
  int size() const { return system_.size(); }
  const Tensor& site(int k) const { return tensors_[static_cast<std::size_t>(k)]; }
  const std::vector<Tensor>& tensors() const { return tensors_; }
  std::vector<Tensor> take_tensors() && { return std::move(tensors_); }

  /// 0-based orthogonality center, if known.
  std::optional<int> center() const { return center_; }

  Index phys_dim(int k) const;
  /// Extents of the N-1 internal bonds.
  std::vector<Index> bond_dims() const;
  Index max_bond_dim() const;

 private:
  Rep rep_;
  System system_;
  std::vector<Tensor> tensors_;
  std::optional<int> center_;
};

/// Physical extent of one site for a representation.
Index phys_dim(Rep rep, const SiteKind& kind);

/// Product state from one name for all sites or one name per site.
State product_state(Rep rep, const System& system, const std::vector<std::string>& names);
State product_state(Rep rep, const System& system, const std::string& name);

/// Multiplies the state by a scalar (absorbed into one site tensor).
State scaled(const State& s, cplx c);

/// Sum of c_k * s_k by direct-sum MPS construction followed by compress().
State add(const std::vector<std::pair<cplx, State>>& terms, const TruncationLimits& limits);

/// |psi><psi| as a vectorized density matrix.
State mix(const State& s);

/// Traces out every site not listed in `keep` (1-based).
State partial_trace(const State& s, const std::vector<int>& keep);

/// Moves the orthogonality center to site c (0-based) by QR sweeps.
State orthogonalize(State s, int c);

/// SVD sweep truncating every bond. When the center is the last site the
/// sweep runs right to left and leaves the center at 0; otherwise it runs
/// left to right and leaves the center at N-1. The summed discarded weight is
/// stored in `discarded` when given.
State compress(State s, const TruncationLimits& limits, double* discarded = nullptr);

/// Full coefficient vector, site 1 most significant. Mixed states give the
/// site-interleaved vectorization (i1 j1)(i2 j2)...
Vector to_dense(const State& s);

/// Density matrix in the product basis (site 1 most significant). For Pure
/// states this is |psi><psi|.
Matrix density_matrix(const State& s);

/// Graph state: CZ on every edge applied to |+>^n in lexicographic edge
/// order. Vertices are 1-based. Mixed graph states are mix() of the pure one.
State graph_state(Rep rep, int n, std::vector<std::pair<int, int>> edges,
                  const TruncationLimits& limits);
std::vector<std::pair<int, int>> complete_graph_edges(int n);

}  // namespace mixmps
