#include "mixmps/oracles/dense.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace mixmps::oracles {

namespace {

using Triplet = Eigen::Triplet<cplx>;

void check_dim(Index d) {
  if (d > kMaxHilbertDim) {
    throw std::invalid_argument("dense oracle: Hilbert dimension " + std::to_string(d) +
                                " exceeds the cap " + std::to_string(kMaxHilbertDim));
  }
}

std::vector<int> digits_of(Index x, const System& sys) {
  std::vector<int> dig(static_cast<std::size_t>(sys.size()));
  for (int k = sys.size() - 1; k >= 0; --k) {
    dig[static_cast<std::size_t>(k)] = static_cast<int>(x % sys[k].dim);
    x /= sys[k].dim;
  }
  return dig;
}

Index index_of(const std::vector<int>& dig, const System& sys) {
  Index x = 0;
  for (int k = 0; k < sys.size(); ++k) x = x * sys[k].dim + dig[static_cast<std::size_t>(k)];
  return x;
}

// Number of occupied Fermion sites strictly before site k (0-based).
int fermions_before(const std::vector<int>& dig, const System& sys, int k) {
  int n = 0;
  for (int j = 0; j < k; ++j) {
    if (sys[j].type == SiteType::Fermion) n += dig[static_cast<std::size_t>(j)];
  }
  return n;
}

// Embeds a block matrix on the listed sites (0-based). Entry (n, m) of the
// block stands for the Fock operator
//   prod_j R_j(n_j) |0><0|_block prod_{j reversed} R_j(m_j)^+,
// where R_j(n) is (c_j^+)^n with the global Jordan-Wigner string on Fermion
// sites and |n><0| elsewhere.
Sparse embed_block(const Matrix& block, const std::vector<int>& sites, const System& sys) {
  const Index dim = hilbert_dim(sys);
  const std::size_t k = sites.size();
  std::vector<int> bd(k);
  for (std::size_t j = 0; j < k; ++j) bd[j] = sys[sites[j]].dim;
  std::vector<Triplet> trips;
  for (Index x = 0; x < dim; ++x) {
    std::vector<int> dig = digits_of(x, sys);
    // Annihilation: in the reversed product the first listed site acts first.
    double sign = 1.0;
    Index m = 0;
    for (std::size_t j = 0; j < k; ++j) m = m * bd[j] + dig[static_cast<std::size_t>(sites[j])];
    for (std::size_t j = 0; j < k; ++j) {
      const int s = sites[j];
      if (sys[s].type == SiteType::Fermion && dig[static_cast<std::size_t>(s)] == 1) {
        if (fermions_before(dig, sys, s) % 2) sign = -sign;
      }
      dig[static_cast<std::size_t>(s)] = 0;
    }
    for (Index n = 0; n < block.rows(); ++n) {
      const cplx v = block(n, m);
      if (v == cplx(0.0)) continue;
      std::vector<int> out = dig;
      double s2 = sign;
      Index rest = n;
      std::vector<int> nd(k);
      for (std::size_t j = k; j-- > 0;) {
        nd[j] = static_cast<int>(rest % bd[j]);
        rest /= bd[j];
      }
      // Creation operators: the last listed site acts first.
      for (std::size_t j = k; j-- > 0;) {
        const int s = sites[j];
        if (sys[s].type == SiteType::Fermion && nd[j] == 1) {
          if (fermions_before(out, sys, s) % 2) s2 = -s2;
        }
        out[static_cast<std::size_t>(s)] = nd[j];
      }
      trips.emplace_back(index_of(out, sys), x, s2 * v);
    }
  }
  Sparse op(dim, dim);
  op.setFromTriplets(trips.begin(), trips.end());
  return op;
}

Sparse identity(Index dim) {
  Sparse id(dim, dim);
  id.setIdentity();
  return id;
}

Sparse embed_rec(const OpExpr& e, const System& sys, const OperatorRegistry& reg) {
  const Index dim = hilbert_dim(sys);
  switch (e.kind()) {
    case NodeKind::Indexed: {
      std::vector<int> sites;
      std::vector<SiteKind> kinds;
      for (int s : e.sites()) {
        if (s < 1 || s > sys.size()) {
          throw std::invalid_argument("dense oracle: site " + std::to_string(s) +
                                      " out of range");
        }
        sites.push_back(s - 1);
        kinds.push_back(sys[s - 1]);
      }
      return embed_block(local_matrix(e.child(), kinds, reg), sites, sys);
    }
    case NodeKind::Scale:
      return e.scalar() * embed_rec(e.child(), sys, reg);
    case NodeKind::Sum: {
      Sparse acc(dim, dim);
      for (const auto& c : e.children()) acc += embed_rec(c, sys, reg);
      return acc;
    }
    case NodeKind::Prod: {
      Sparse acc = identity(dim);
      for (const auto& c : e.children()) acc = (acc * embed_rec(c, sys, reg)).pruned();
      return acc;
    }
    case NodeKind::Dag:
      return Sparse(embed_rec(e.child(), sys, reg).adjoint());
    case NodeKind::Exp: {
      const Matrix m = Matrix(embed_rec(e.child(), sys, reg));
      return matrix_exponential(m).sparseView(0.0, 0.0);
    }
    default:
      throw std::invalid_argument("dense oracle: cannot embed " + to_string(e));
  }
}

// Flattens sums and scales at the top of an expression.
void top_terms(const OpExpr& e, cplx c, std::vector<std::pair<cplx, OpExpr>>& out) {
  if (e.kind() == NodeKind::Sum) {
    for (const auto& ch : e.children()) top_terms(ch, c, out);
  } else if (e.kind() == NodeKind::Scale) {
    top_terms(e.child(), c * e.scalar(), out);
  } else {
    out.emplace_back(c, e);
  }
}

// Dissipator(L) or Indexed(Dissipator(L), sites): the jump operator L.
std::optional<OpExpr> jump_operator(const OpExpr& e) {
  if (e.kind() == NodeKind::Dissipator) return e.child();
  if (e.kind() == NodeKind::Indexed && e.child().kind() == NodeKind::Dissipator) {
    return OpExpr::indexed(e.child().child(), e.sites());
  }
  return std::nullopt;
}

// Kraus list of a channel factor: weighted Gate nodes, possibly inside an
// index applied to the whole sum.
void kraus_terms(const OpExpr& e, cplx w, const std::vector<int>* sites,
                 std::vector<std::pair<cplx, OpExpr>>& out) {
  switch (e.kind()) {
    case NodeKind::Sum:
      for (const auto& c : e.children()) kraus_terms(c, w, sites, out);
      return;
    case NodeKind::Scale:
      kraus_terms(e.child(), w * e.scalar(), sites, out);
      return;
    case NodeKind::Indexed:
      kraus_terms(e.child(), w, &e.sites(), out);
      return;
    case NodeKind::Gate:
      out.emplace_back(w, sites ? OpExpr::indexed(e.child(), *sites) : e.child());
      return;
    default:
      throw std::invalid_argument("dense oracle: not a channel term: " + to_string(e));
  }
}

// Row-major vec index (i * D + j) to the interleaved site ordering.
std::vector<Index> interleave_map(const System& sys) {
  const Index dim = hilbert_dim(sys);
  std::vector<Index> map(static_cast<std::size_t>(dim * dim));
  for (Index i = 0; i < dim; ++i) {
    const auto di = digits_of(i, sys);
    for (Index j = 0; j < dim; ++j) {
      const auto dj = digits_of(j, sys);
      Index v = 0;
      for (int k = 0; k < sys.size(); ++k) {
        const Index d = sys[k].dim;
        v = v * d * d + di[static_cast<std::size_t>(k)] * d + dj[static_cast<std::size_t>(k)];
      }
      map[static_cast<std::size_t>(i * dim + j)] = v;
    }
  }
  return map;
}

Sparse kron(const Sparse& a, const Sparse& b) {
  std::vector<Triplet> trips;
  trips.reserve(static_cast<std::size_t>(a.nonZeros() * b.nonZeros()));
  for (Index ka = 0; ka < a.outerSize(); ++ka) {
    for (Sparse::InnerIterator ia(a, ka); ia; ++ia) {
      for (Index kb = 0; kb < b.outerSize(); ++kb) {
        for (Sparse::InnerIterator ib(b, kb); ib; ++ib) {
          trips.emplace_back(ia.row() * b.rows() + ib.row(), ia.col() * b.cols() + ib.col(),
                             ia.value() * ib.value());
        }
      }
    }
  }
  Sparse out(a.rows() * b.rows(), a.cols() * b.cols());
  out.setFromTriplets(trips.begin(), trips.end());
  return out;
}

double state_norm(const DenseState& s) {
  return s.rep == Rep::Pure ? s.psi.norm() : s.rho.norm();
}

DenseState rk4(const DenseGenerator& gen, const DenseState& s0, double t, int steps) {
  DenseState s = s0;
  const double h = t / steps;
  for (int n = 0; n < steps; ++n) {
    if (s.rep == Rep::Pure) {
      const Vector k1 = gen.apply(s.psi);
      const Vector k2 = gen.apply(Vector(s.psi + 0.5 * h * k1));
      const Vector k3 = gen.apply(Vector(s.psi + 0.5 * h * k2));
      const Vector k4 = gen.apply(Vector(s.psi + h * k3));
      s.psi += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    } else {
      const Matrix k1 = gen.apply(s.rho);
      const Matrix k2 = gen.apply(Matrix(s.rho + 0.5 * h * k1));
      const Matrix k3 = gen.apply(Matrix(s.rho + 0.5 * h * k2));
      const Matrix k4 = gen.apply(Matrix(s.rho + h * k3));
      s.rho += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
  }
  return s;
}

}  // namespace

Index hilbert_dim(const System& system) {
  Index d = 1;
  for (const auto& k : system.sites()) {
    d *= k.dim;
    check_dim(d);
  }
  return d;
}

Sparse embed(const OpExpr& expr, const System& system, const OperatorRegistry& registry) {
  if (contains_channel(expr)) {
    throw std::invalid_argument("dense oracle: channel node in an operator");
  }
  return embed_rec(expr, system, registry);
}

Vector DenseState::vectorized() const {
  if (rep == Rep::Pure) return psi;
  const Index dim = rho.rows();
  const auto map = interleave_map(system);
  Vector v(dim * dim);
  for (Index i = 0; i < dim; ++i) {
    for (Index j = 0; j < dim; ++j) v[map[static_cast<std::size_t>(i * dim + j)]] = rho(i, j);
  }
  return v;
}

DenseState dense_product_state(Rep rep, const System& system,
                               const std::vector<std::string>& names) {
  if (names.size() != 1 && static_cast<int>(names.size()) != system.size()) {
    throw std::invalid_argument("dense_product_state: expected 1 or N names");
  }
  hilbert_dim(system);
  DenseState s{rep, system, Vector::Ones(1), Matrix::Ones(1, 1)};
  for (int k = 0; k < system.size(); ++k) {
    const auto local =
        named_state(system[k], names.size() == 1 ? names[0] : names[static_cast<std::size_t>(k)]);
    if (rep == Rep::Pure) {
      if (!local.vector) throw std::invalid_argument("dense_product_state: mixed local state");
      Vector next(s.psi.size() * local.vector->size());
      for (Index a = 0; a < s.psi.size(); ++a) {
        next.segment(a * local.vector->size(), local.vector->size()) = s.psi[a] * *local.vector;
      }
      s.psi = next;
    } else {
      const Matrix& d = local.density;
      Matrix next(s.rho.rows() * d.rows(), s.rho.cols() * d.cols());
      for (Index a = 0; a < s.rho.rows(); ++a) {
        for (Index b = 0; b < s.rho.cols(); ++b) {
          next.block(a * d.rows(), b * d.cols(), d.rows(), d.cols()) = s.rho(a, b) * d;
        }
      }
      s.rho = next;
    }
  }
  if (rep == Rep::Pure) s.rho.resize(0, 0);
  else s.psi.resize(0);
  return s;
}

DenseState dense_mix(const DenseState& s) {
  if (s.rep != Rep::Pure) throw std::invalid_argument("dense_mix: state already Mixed");
  return DenseState{Rep::Mixed, s.system, Vector(), s.psi * s.psi.adjoint()};
}

DenseState dense_graph_state(Rep rep, int n, const std::vector<std::pair<int, int>>& edges) {
  const System sys = System::uniform(SiteKind::qubit(), n);
  const Index dim = hilbert_dim(sys);
  Vector psi = Vector::Constant(dim, std::pow(0.5, 0.5 * n));
  for (Index x = 0; x < dim; ++x) {
    const auto dig = digits_of(x, sys);
    int flips = 0;
    for (const auto& [a, b] : edges) {
      if (a < 1 || b < 1 || a > n || b > n || a == b) {
        throw std::invalid_argument("dense_graph_state: bad edge");
      }
      flips += dig[static_cast<std::size_t>(a - 1)] * dig[static_cast<std::size_t>(b - 1)];
    }
    if (flips % 2) psi[x] = -psi[x];
  }
  DenseState s{Rep::Pure, sys, psi, Matrix()};
  return rep == Rep::Mixed ? dense_mix(s) : s;
}

DenseState dense_partial_trace(const DenseState& s, std::vector<int> keep) {
  if (s.rep != Rep::Mixed) throw std::invalid_argument("dense_partial_trace: Pure input");
  std::sort(keep.begin(), keep.end());
  keep.erase(std::unique(keep.begin(), keep.end()), keep.end());
  if (keep.empty()) throw std::invalid_argument("dense_partial_trace: empty keep set");
  std::vector<SiteKind> kinds;
  for (int k : keep) kinds.push_back(s.system[k - 1]);
  const System sub(kinds);
  const Index dim = s.rho.rows();
  Matrix out = Matrix::Zero(hilbert_dim(sub), hilbert_dim(sub));
  std::vector<bool> kept(static_cast<std::size_t>(s.system.size()), false);
  for (int k : keep) kept[static_cast<std::size_t>(k - 1)] = true;
  for (Index i = 0; i < dim; ++i) {
    const auto di = digits_of(i, s.system);
    for (Index j = 0; j < dim; ++j) {
      const auto dj = digits_of(j, s.system);
      bool diag = true;
      std::vector<int> si, sj;
      for (int k = 0; k < s.system.size(); ++k) {
        const auto u = static_cast<std::size_t>(k);
        if (kept[u]) {
          si.push_back(di[u]);
          sj.push_back(dj[u]);
        } else if (di[u] != dj[u]) {
          diag = false;
          break;
        }
      }
      if (diag) out(index_of(si, sub), index_of(sj, sub)) += s.rho(i, j);
    }
  }
  return DenseState{Rep::Mixed, sub, Vector(), out};
}

cplx dense_expect(const DenseState& s, const OpExpr& obs, const OperatorRegistry& registry) {
  const Sparse o = embed(obs, s.system, registry);
  if (s.rep == Rep::Pure) return s.psi.dot(o * s.psi);
  return (o * s.rho).trace();
}

Vector DenseGenerator::apply(const Vector& v) const { return g * v; }

Matrix DenseGenerator::apply(const Matrix& rho) const {
  Sparse left = g, right = g;
  for (const auto& [c, l] : jumps) {
    const Sparse ldl = Sparse(l.adjoint()) * l;
    left -= 0.5 * c * ldl;
    right += 0.5 * c * ldl;
  }
  Matrix out = left * rho;
  out -= rho * right;
  for (const auto& [c, l] : jumps) {
    const Matrix lr = l * rho;
    out += c * (lr * Sparse(l.adjoint()));
  }
  return out;
}

Sparse DenseGenerator::superoperator() const {
  const Index dim = g.rows();
  if (rep == Rep::Pure) return g;
  if (dim * dim > kMaxSuperDim) {
    throw std::invalid_argument("dense oracle: superoperator dimension " +
                                std::to_string(dim * dim) + " exceeds the cap");
  }
  const Sparse id = identity(dim);
  Sparse s = kron(g, id) - kron(id, Sparse(g.transpose()));
  for (const auto& [c, l] : jumps) {
    const Sparse ldl = Sparse(l.adjoint()) * l;
    s += c * (kron(l, Sparse(l.conjugate())) - 0.5 * kron(ldl, id) -
              0.5 * kron(id, Sparse(ldl.transpose())));
  }
  const auto map = interleave_map(system);
  std::vector<Triplet> trips;
  for (Index k = 0; k < s.outerSize(); ++k) {
    for (Sparse::InnerIterator it(s, k); it; ++it) {
      trips.emplace_back(map[static_cast<std::size_t>(it.row())],
                         map[static_cast<std::size_t>(it.col())], it.value());
    }
  }
  Sparse out(s.rows(), s.cols());
  out.setFromTriplets(trips.begin(), trips.end());
  return out;
}

Sparse dense_left_multiplication(const Sparse& op, const System& system) {
  const Index dim = hilbert_dim(system);
  if (dim * dim > kMaxSuperDim) {
    throw std::invalid_argument("dense oracle: superoperator dimension exceeds the cap");
  }
  const Sparse s = kron(op, identity(dim));
  const auto map = interleave_map(system);
  std::vector<Triplet> trips;
  for (Index k = 0; k < s.outerSize(); ++k) {
    for (Sparse::InnerIterator it(s, k); it; ++it) {
      trips.emplace_back(map[static_cast<std::size_t>(it.row())],
                         map[static_cast<std::size_t>(it.col())], it.value());
    }
  }
  Sparse out(s.rows(), s.cols());
  out.setFromTriplets(trips.begin(), trips.end());
  return out;
}

DenseGenerator dense_generator(const OpExpr& evolver, const System& system, Rep rep,
                               const OperatorRegistry& registry) {
  const Index dim = hilbert_dim(system);
  DenseGenerator gen{rep, system, Sparse(dim, dim), {}};
  std::vector<std::pair<cplx, OpExpr>> terms;
  top_terms(evolver, 1.0, terms);
  for (const auto& [c, t] : terms) {
    if (auto l = jump_operator(t)) {
      if (rep == Rep::Pure) throw std::invalid_argument("dense oracle: Dissipator under Pure");
      gen.jumps.emplace_back(c, embed(*l, system, registry));
    } else {
      gen.g += c * embed(t, system, registry);
    }
  }
  return gen;
}

DenseState dense_evolve(const DenseGenerator& gen, const DenseState& s0, double t, double dt, double tol) {
  if (gen.rep != s0.rep) throw std::invalid_argument("dense_evolve: representation mismatch");
  if (t == 0.0) return s0;
  int steps = std::max(1, static_cast<int>(std::ceil(t / dt - 1e-9)));
  DenseState prev = rk4(gen, s0, t, steps);
  for (int round = 0; round < 14; ++round) {
    steps *= 2;
    DenseState next = rk4(gen, s0, t, steps);
    const double scale = std::max(1.0, state_norm(next));
    const double diff = next.rep == Rep::Pure ? (next.psi - prev.psi).cwiseAbs().maxCoeff()
                                              : (next.rho - prev.rho).cwiseAbs().maxCoeff();
    if (diff <= tol * scale) return next;
    prev = std::move(next);
  }
  throw std::runtime_error("dense_evolve: RK4 did not converge");
}

DenseState dense_channel(const DenseState& s, const std::vector<std::pair<cplx, Matrix>>& kraus,
                         const std::vector<int>& sites) {
  if (s.rep != Rep::Mixed) throw std::invalid_argument("dense_channel: Pure input");
  std::vector<int> zero_based;
  for (int k : sites) zero_based.push_back(k - 1);
  DenseState out = s;
  out.rho.setZero();
  for (const auto& [w, e] : kraus) {
    const Sparse full = embed_block(e, zero_based, s.system);
    const Matrix er = full * s.rho;
    out.rho += w * Matrix((full.conjugate() * er.transpose()).transpose());
  }
  return out;
}

DenseState dense_apply_gates(const DenseState& s, const OpExpr& gates,
                             const OperatorRegistry& registry) {
  std::vector<OpExpr> factors;
  if (gates.kind() == NodeKind::Prod) {
    factors = gates.children();
  } else if (gates.kind() == NodeKind::Scale && gates.child().kind() == NodeKind::Prod) {
    factors = gates.child().children();
    factors.front() = gates.scalar() * factors.front();
  } else {
    factors = {gates};
  }
  DenseState out = s;
  for (const auto& f : factors) {
    if (contains_kind(f, NodeKind::Gate)) {
      if (out.rep != Rep::Mixed) throw std::invalid_argument("dense oracle: channel on Pure");
      std::vector<std::pair<cplx, OpExpr>> terms;
      kraus_terms(f, 1.0, nullptr, terms);
      Matrix acc = Matrix::Zero(out.rho.rows(), out.rho.cols());
      for (const auto& [w, e] : terms) {
        const Sparse full = embed(e, out.system, registry);
        const Matrix er = full * out.rho;
        acc += w * Matrix((full.conjugate() * er.transpose()).transpose());
      }
      out.rho = acc;
    } else {
      const Sparse u = embed(f, out.system, registry);
      if (out.rep == Rep::Pure) {
        out.psi = u * out.psi;
      } else {
        const Matrix ur = u * out.rho;
        out.rho = (u.conjugate() * ur.transpose()).transpose();
      }
    }
  }
  return out;
}

}  // namespace mixmps::oracles
