#include <algorithm>
#include <cmath>

#include <spdlog/spdlog.h>

#include "mixmps/evolution.h"
#include "mixmps/linalg.h"

namespace mixmps {

namespace {

OpExpr remap_sites(const OpExpr& e, const std::vector<int>& support) {
  if (e.kind() == NodeKind::Indexed) {
    std::vector<int> sites;
    for (int s : e.sites()) {
      const auto it = std::find(support.begin(), support.end(), s);
      sites.push_back(static_cast<int>(it - support.begin()) + 1);
    }
    return OpExpr::indexed(e.child(), std::move(sites));
  }
  switch (e.kind()) {
    case NodeKind::Named:
      return e;
    case NodeKind::Scale:
      return OpExpr::scale(e.scalar(), remap_sites(e.child(), support));
    case NodeKind::Sum:
    case NodeKind::Prod: {
      std::vector<OpExpr> out;
      for (const auto& c : e.children()) out.push_back(remap_sites(c, support));
      return e.kind() == NodeKind::Sum ? OpExpr::sum(std::move(out)) : OpExpr::prod(std::move(out));
    }
    case NodeKind::Gate:
      return OpExpr::gate(remap_sites(e.child(), support));
    default:
      throw LoweringError("unsupported node in a gate: " + to_string(e));
  }
}

// Dense Hilbert-space matrix of an expression on its (sorted) support, with
// the support sites treated as neighbours.
Matrix support_matrix(const OpExpr& e, const std::vector<int>& support, const System& system,
                      const OperatorRegistry& registry) {
  std::vector<SiteKind> kinds;
  for (int s : support) kinds.push_back(system[s - 1]);
  const System sub(kinds);
  TermSum ts{Rep::Pure, sub, hilbert_terms(remap_sites(e, support), sub, registry)};
  return dense_matrix(ts);
}

void collect_kraus(const OpExpr& e, cplx c, std::vector<std::pair<cplx, OpExpr>>& out) {
  switch (e.kind()) {
    case NodeKind::Scale:
      collect_kraus(e.child(), c * e.scalar(), out);
      return;
    case NodeKind::Sum:
      for (const auto& t : e.children()) collect_kraus(t, c, out);
      return;
    case NodeKind::Gate:
      if (contains_channel(e.child())) throw LoweringError("nested Gate: " + to_string(e));
      out.emplace_back(c, e.child());
      return;
    default:
      throw LoweringError("a channel must be a weighted sum of Gate(...) terms: " + to_string(e));
  }
}

// sum_k w_k E_k (x) conj(E_k) with the per-site (ket, bra) index grouping.
Matrix channel_superoperator(const std::vector<std::pair<cplx, Matrix>>& kraus,
                             const std::vector<SiteKind>& kinds) {
  const std::size_t n = kinds.size();
  Index dim = 1;
  for (const auto& k : kinds) dim *= k.dim;
  const Index sdim = dim * dim;
  // Interleaved index -> (ket, bra) global indices.
  std::vector<Index> ket(static_cast<std::size_t>(sdim)), bra(static_cast<std::size_t>(sdim));
  for (Index idx = 0; idx < sdim; ++idx) {
    Index rest = idx, i = 0, j = 0, stride = 1;
    for (std::size_t k = n; k-- > 0;) {
      const Index d = kinds[k].dim;
      const Index pair = rest % (d * d);
      rest /= d * d;
      i += (pair / d) * stride;
      j += (pair % d) * stride;
      stride *= d;
    }
    ket[static_cast<std::size_t>(idx)] = i;
    bra[static_cast<std::size_t>(idx)] = j;
  }
  Matrix s = Matrix::Zero(sdim, sdim);
  for (const auto& [w, e] : kraus) {
    const Matrix ec = e.conjugate();
    for (Index c = 0; c < sdim; ++c) {
      const Index ic = ket[static_cast<std::size_t>(c)], jc = bra[static_cast<std::size_t>(c)];
      for (Index r = 0; r < sdim; ++r) {
        s(r, c) += w * e(ket[static_cast<std::size_t>(r)], ic) * ec(bra[static_cast<std::size_t>(r)], jc);
      }
    }
  }
  return s;
}

class Chain {
 public:
  Chain(State s, TruncationLimits limits) : rep_(s.rep()), limits_(limits) {
    kinds_ = s.system().sites();
    center_ = s.center();
    ts_ = std::move(s).take_tensors();
  }

  State finish() && { return State(rep_, System(kinds_), std::move(ts_), center_); }
  double discarded() const { return discarded_; }
  Rep rep() const { return rep_; }
  const std::vector<SiteKind>& kinds() const { return kinds_; }

  void move_center(int c) {
    if (center_ && *center_ == c) return;
    State st(rep_, System(kinds_), std::move(ts_), center_);
    st = orthogonalize(std::move(st), c);
    center_ = st.center();
    ts_ = std::move(st).take_tensors();
  }

  void move_center_into(int a, int b) {
    if (center_ && *center_ >= a && *center_ <= b) return;
    move_center(center_ && *center_ > b ? b : a);
  }

  // Applies g (kron order, first site most significant) to sites a..a+k-1.
  void apply(int a, int k, const Matrix& g) {
    if (k == 1) {
      move_center(a);
      Tensor& t = ts_[static_cast<std::size_t>(a)];
      const Tensor p = t.permuted({"p", "l", "r"});
      Tensor out = p;
      out.matrix(1) = g * p.matrix(1);
      t = out.permuted({"l", "p", "r"});
      return;
    }
    move_center_into(a, a + k - 1);
    Tensor th = theta(a, k);
    std::vector<std::string> order;
    for (int j = k - 1; j >= 0; --j) order.push_back("p" + std::to_string(j));
    order.push_back("l");
    order.push_back("r");
    Tensor p = th.permuted(order);
    Tensor out = p;
    out.matrix(static_cast<std::size_t>(k)) = g * p.matrix(static_cast<std::size_t>(k));
    split(a, k, out.permuted(th.labels()), true);
  }

  // Exchanges sites j and j+1 (with the fermionic sign on Fermion pairs).
  void swap(int j, bool moving_right) {
    move_center_into(j, j + 1);
    const Tensor th = theta(j, 2);
    Tensor sw = th.permuted({"l", "p1", "p0", "r"});
    const SiteKind a = kinds_[static_cast<std::size_t>(j)];
    const SiteKind b = kinds_[static_cast<std::size_t>(j + 1)];
    if (a.type == SiteType::Fermion && b.type == SiteType::Fermion) {
      const Index l = sw.dims()[0], d1 = sw.dims()[1], d0 = sw.dims()[2], r = sw.dims()[3];
      for (Index ri = 0; ri < r; ++ri) {
        for (Index q0 = 0; q0 < d0; ++q0) {
          for (Index q1 = 0; q1 < d1; ++q1) {
            if (!odd_pair(q0, q1)) continue;
            cplx* col = sw.data() + l * (q1 + d1 * (q0 + d0 * ri));
            for (Index li = 0; li < l; ++li) col[li] = -col[li];
          }
        }
      }
    }
    std::swap(kinds_[static_cast<std::size_t>(j)], kinds_[static_cast<std::size_t>(j + 1)]);
    split(j, 2, sw.reshaped({"l", "p0", "p1", "r"}, sw.dims()), moving_right);
  }

 private:
  // Sign exponent of a fermionic swap for local indices of the two sites.
  bool odd_pair(Index q0, Index q1) const {
    if (rep_ == Rep::Pure) return q0 == 1 && q1 == 1;
    const bool ket = (q0 / 2 == 1) && (q1 / 2 == 1);
    const bool bra = (q0 % 2 == 1) && (q1 % 2 == 1);
    return ket != bra;
  }

  Tensor theta(int a, int k) const {
    Tensor th = ts_[static_cast<std::size_t>(a)].relabeled("p", "p0").relabeled("r", "b");
    for (int j = 1; j < k; ++j) {
      const Tensor next = ts_[static_cast<std::size_t>(a + j)]
                              .relabeled("l", "b")
                              .relabeled("p", "p" + std::to_string(j));
      th = contract(th, next, {{"b", "b"}});
      if (j + 1 < k) th = th.relabeled("r", "b");
    }
    return th;
  }

  void split(int a, int k, Tensor th, bool center_right) {
    for (int j = 0; j + 1 < k; ++j) {
      const std::vector<std::string> rows{"l", "p" + std::to_string(j)};
      SvdSplit res = svd_split(th, rows, limits_, "b");
      discarded_ += res.discarded;
      const Index kept = static_cast<Index>(res.s.size());
      Tensor u = std::move(res.u);
      Tensor v = std::move(res.v);
      const bool last = j + 2 == k;
      if (last && !center_right) {
        auto m = u.matrix(2);
        for (Index c = 0; c < kept; ++c) m.col(c) *= res.s[static_cast<std::size_t>(c)];
      } else {
        auto m = v.matrix(1);
        for (Index r = 0; r < kept; ++r) m.row(r) *= res.s[static_cast<std::size_t>(r)];
      }
      ts_[static_cast<std::size_t>(a + j)] =
          u.reshaped({"l", "p", "r"}, {u.dims()[0], u.dims()[1], kept});
      th = v.relabeled("b", "l");
      if (last) {
        const Tensor t = th.permuted({"l", "p" + std::to_string(j + 1), "r"});
        ts_[static_cast<std::size_t>(a + j + 1)] = t.reshaped({"l", "p", "r"}, t.dims());
      }
    }
    center_ = center_right ? a + k - 1 : a + k - 2;
  }

  Rep rep_;
  TruncationLimits limits_;
  std::vector<SiteKind> kinds_;
  std::vector<Tensor> ts_;
  std::optional<int> center_;
  double discarded_ = 0.0;
};

std::vector<OpExpr> layer_factors(const OpExpr& e) {
  if (e.kind() == NodeKind::Prod) return e.children();
  if (e.kind() == NodeKind::Scale && e.child().kind() == NodeKind::Prod &&
      !e.child().children().empty()) {
    std::vector<OpExpr> out = e.child().children();
    out.front() = e.scalar() * out.front();
    return out;
  }
  return {e};
}

void apply_factor(Chain& chain, const OpExpr& factor, const System& system,
                  const OperatorRegistry& registry) {
  const std::set<int> site_set = sites_of(factor);
  if (site_set.empty()) {
    throw LoweringError("gate factor has no site indices: " + to_string(factor));
  }
  const std::vector<int> support(site_set.begin(), site_set.end());
  for (int s : support) {
    if (s > system.size()) {
      throw LoweringError("site " + std::to_string(s) + " is out of range in " + to_string(factor));
    }
  }
  std::vector<SiteKind> kinds;
  for (int s : support) kinds.push_back(system[s - 1]);
  const int k = static_cast<int>(support.size());

  Matrix g;
  if (contains_kind(factor, NodeKind::Gate)) {
    if (chain.rep() != Rep::Mixed) {
      throw LoweringError("Gate channels need a Mixed state: " + to_string(factor));
    }
    if (k > 2) throw LoweringError("channels on more than 2 sites are not supported");
    std::vector<std::pair<cplx, OpExpr>> terms;
    collect_kraus(factor, cplx(1.0), terms);
    std::vector<std::pair<cplx, Matrix>> kraus;
    Index dim = 1;
    for (const auto& kind : kinds) dim *= kind.dim;
    Matrix completeness = Matrix::Zero(dim, dim);
    for (const auto& [w, e] : terms) {
      Matrix m = support_matrix(e, support, system, registry);
      if (matrix_parity(m, kinds) != Parity::Even) {
        throw LoweringError("Kraus operators on Fermion sites must be parity even: " + to_string(e));
      }
      completeness += w * m.adjoint() * m;
      kraus.emplace_back(w, std::move(m));
    }
    if ((completeness - Matrix::Identity(dim, dim)).cwiseAbs().maxCoeff() > 1e-10) {
      spdlog::warn("channel {} is not trace preserving (sum w E^dag E != I)", to_string(factor));
    }
    g = channel_superoperator(kraus, kinds);
  } else {
    if (k > 3) throw LoweringError("gates on more than 3 sites are not supported");
    const Matrix u = support_matrix(factor, support, system, registry);
    if (matrix_parity(u, kinds) != Parity::Even) {
      throw LoweringError("gates on Fermion sites must be parity even: " + to_string(factor));
    }
    g = chain.rep() == Rep::Pure ? u : channel_superoperator({{cplx(1.0), u}}, kinds);
  }

  const int a = support.front() - 1;
  std::vector<std::pair<int, int>> moves;  // (target, original)
  for (int j = 1; j < k; ++j) {
    const int from = support[static_cast<std::size_t>(j)] - 1;
    const int to = a + j;
    for (int q = from - 1; q >= to; --q) chain.swap(q, false);
    moves.emplace_back(to, from);
  }
  chain.apply(a, k, g);
  for (auto it = moves.rbegin(); it != moves.rend(); ++it) {
    for (int q = it->first; q < it->second; ++q) chain.swap(q, true);
  }
}

}  // namespace

State apply_gates(State s, const OpExpr& gates, const TruncationLimits& limits,
                  const OperatorRegistry& registry, double* discarded) {
  limits.validate();
  const System system = s.system();
  OpExpr e;
  try {
    e = push_indices(gates, registry);
  } catch (const std::invalid_argument& err) {
    throw LoweringError(err.what());
  }
  if (contains_kind(e, NodeKind::Dissipator)) {
    throw LoweringError("Dissipator nodes cannot be applied as gates");
  }
  Chain chain(std::move(s), limits);
  for (const OpExpr& factor : layer_factors(e)) apply_factor(chain, factor, system, registry);
  if (discarded) *discarded = chain.discarded();
  return std::move(chain).finish();
}

State graph_state(Rep rep, int n, std::vector<std::pair<int, int>> edges,
                  const TruncationLimits& limits) {
  for (auto& [a, b] : edges) {
    if (a < 1 || b < 1 || a > n || b > n || a == b) {
      throw std::invalid_argument("graph_state: invalid edge (" + std::to_string(a) + ", " +
                                  std::to_string(b) + ")");
    }
    if (a > b) std::swap(a, b);
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  const System sys = System::uniform(SiteKind::qubit(), n);
  State s = product_state(Rep::Pure, sys, "+");
  // All CZ(a, b) sharing the lower vertex a form one controlled Z string,
  // an MPO of bond dimension 2; no swaps are needed.
  const OpExpr id = OpExpr::named("Id"), z = OpExpr::named("Z");
  for (std::size_t k = 0; k < edges.size();) {
    const int a = edges[k].first;
    OpExpr string = z(edges[k].second);
    for (++k; k < edges.size() && edges[k].first == a; ++k) string = string * z(edges[k].second);
    const OpExpr gate = 0.5 * (id(a) + z(a)) + 0.5 * (id(a) - z(a)) * string;
    s = apply_mpo(mpo_from_terms(lower_observable(gate, sys, Rep::Pure)), s, limits);
  }
  return rep == Rep::Pure ? s : mix(s);
}

}  // namespace mixmps
