#include <algorithm>

#include "mixmps/linalg.h"
#include "mixmps/mpo.h"

namespace mixmps {

namespace {

// A single-site operator in a fermionic product, before Jordan-Wigner.
struct FOp {
  int site = 0;
  Matrix m;
  bool odd = false;
};

struct FTerm {
  cplx coef{1.0, 0.0};
  std::vector<FOp> ops;  // product order, leftmost acts last
};

struct Leaf {
  std::vector<int> sites;  // 0-based, listed order
  OpExpr op;
};

struct RawTerm {
  cplx coef{1.0, 0.0};
  std::vector<Leaf> leaves;
};

std::vector<RawTerm> expand(const OpExpr& e, const System& system) {
  switch (e.kind()) {
    case NodeKind::Scale: {
      auto out = expand(e.child(), system);
      for (auto& t : out) t.coef *= e.scalar();
      return out;
    }
    case NodeKind::Sum: {
      std::vector<RawTerm> out;
      for (const auto& c : e.children()) {
        auto part = expand(c, system);
        out.insert(out.end(), part.begin(), part.end());
      }
      return out;
    }
    case NodeKind::Prod: {
      std::vector<RawTerm> out{RawTerm{}};
      for (const auto& c : e.children()) {
        const auto part = expand(c, system);
        std::vector<RawTerm> next;
        for (const auto& a : out) {
          for (const auto& b : part) {
            RawTerm t{a.coef * b.coef, a.leaves};
            t.leaves.insert(t.leaves.end(), b.leaves.begin(), b.leaves.end());
            next.push_back(std::move(t));
          }
        }
        out = std::move(next);
      }
      return out;
    }
    case NodeKind::Indexed: {
      Leaf leaf;
      for (int s : e.sites()) {
        if (s > system.size()) {
          throw LoweringError("site " + std::to_string(s) + " is out of range 1.." +
                              std::to_string(system.size()) + " in " + to_string(e));
        }
        leaf.sites.push_back(s - 1);
      }
      leaf.op = e.child();
      return {RawTerm{cplx(1.0), {leaf}}};
    }
    case NodeKind::Dissipator:
    case NodeKind::Gate:
      throw LoweringError("Dissipator and Gate are not allowed here: " + to_string(e));
    default:
      throw LoweringError("operator needs site indices: " + to_string(e));
  }
}

// Splits a dense block into per-site components of definite parity.
std::vector<std::pair<Matrix, std::vector<bool>>> parity_components(
    const Matrix& m, const std::vector<SiteKind>& kinds) {
  std::vector<std::pair<Matrix, std::vector<bool>>> comps{{m, std::vector<bool>(kinds.size())}};
  const double scale = std::max(m.cwiseAbs().maxCoeff(), 1e-300);
  for (std::size_t k = 0; k < kinds.size(); ++k) {
    if (kinds[k].type != SiteType::Fermion) continue;
    std::vector<Matrix> ps;
    for (std::size_t j = 0; j < kinds.size(); ++j) {
      ps.push_back(j == k ? parity_operator(kinds[j])
                          : Matrix::Identity(kinds[j].dim, kinds[j].dim));
    }
    const Matrix p = linalg::kron(ps);
    std::vector<std::pair<Matrix, std::vector<bool>>> next;
    for (auto& [c, par] : comps) {
      const Matrix conj = p * c * p;
      const Matrix even = 0.5 * (c + conj);
      const Matrix odd = 0.5 * (c - conj);
      if (even.cwiseAbs().maxCoeff() > 1e-14 * scale) next.emplace_back(even, par);
      if (odd.cwiseAbs().maxCoeff() > 1e-14 * scale) {
        auto flipped = par;
        flipped[k] = true;
        next.emplace_back(odd, flipped);
      }
    }
    comps = std::move(next);
  }
  return comps;
}

// m = sum over products of kron(A_1, ..., A_k).
void operator_products(const Matrix& m, const std::vector<Index>& dims, std::size_t at,
                       std::vector<Matrix>& prefix, std::vector<std::vector<Matrix>>& out) {
  const Index d = dims[at];
  if (at + 1 == dims.size()) {
    prefix.push_back(m);
    out.push_back(prefix);
    prefix.pop_back();
    return;
  }
  Index rest = 1;
  for (std::size_t j = at + 1; j < dims.size(); ++j) rest *= dims[j];
  Matrix r(d * d, rest * rest);
  for (Index o1 = 0; o1 < d; ++o1) {
    for (Index i1 = 0; i1 < d; ++i1) {
      for (Index o2 = 0; o2 < rest; ++o2) {
        for (Index i2 = 0; i2 < rest; ++i2) {
          r(o1 * d + i1, o2 * rest + i2) = m(o1 * rest + o2, i1 * rest + i2);
        }
      }
    }
  }
  const auto svd = linalg::svd(r);
  if (svd.s.size() == 0 || svd.s[0] == 0.0) return;
  for (Index a = 0; a < svd.s.size(); ++a) {
    if (svd.s[a] <= 1e-14 * svd.s[0]) break;
    Matrix first(d, d);
    for (Index o1 = 0; o1 < d; ++o1) {
      for (Index i1 = 0; i1 < d; ++i1) first(o1, i1) = svd.u(o1 * d + i1, a) * svd.s[a];
    }
    Matrix tail(rest, rest);
    for (Index o2 = 0; o2 < rest; ++o2) {
      for (Index i2 = 0; i2 < rest; ++i2) tail(o2, i2) = svd.vh(a, o2 * rest + i2);
    }
    prefix.push_back(first);
    operator_products(tail, dims, at + 1, prefix, out);
    prefix.pop_back();
  }
}

bool odd_matrix(const Matrix& m, const SiteKind& kind, const std::string& what) {
  switch (matrix_parity(m, {kind})) {
    case Parity::Even:
      return false;
    case Parity::Odd:
      return true;
    case Parity::Mixed:
      break;
  }
  throw LoweringError("operator " + what + " has mixed fermion parity");
}

// Alternatives (sums of fermionic products) for one indexed leaf.
std::vector<FTerm> leaf_alternatives(const Leaf& leaf, const System& system,
                                     const OperatorRegistry& registry) {
  std::vector<SiteKind> kinds;
  for (int s : leaf.sites) kinds.push_back(system[s]);
  Matrix m;
  try {
    m = local_matrix(leaf.op, kinds, registry);
  } catch (const ExprError& e) {
    throw LoweringError(std::string(e.what()) + " (in " + to_string(leaf.op) + ")");
  }
  if (leaf.sites.size() == 1) {
    const bool odd = odd_matrix(m, kinds[0], to_string(leaf.op));
    return {FTerm{cplx(1.0), {FOp{leaf.sites[0], m, odd}}}};
  }
  std::vector<Index> dims;
  for (const auto& k : kinds) dims.push_back(k.dim);
  std::vector<FTerm> out;
  for (const auto& [comp, parity] : parity_components(m, kinds)) {
    std::vector<std::vector<Matrix>> products;
    std::vector<Matrix> prefix;
    operator_products(comp, dims, 0, prefix, products);
    for (auto& prod : products) {
      // Kronecker product in listed order -> fermionic product in listed order.
      FTerm t;
      int later_odd = 0;
      std::vector<FOp> ops(prod.size());
      for (std::size_t j = prod.size(); j-- > 0;) {
        Matrix a = prod[j];
        if (later_odd % 2 == 1) a = a * parity_operator(kinds[j]);
        ops[j] = FOp{leaf.sites[j], a, static_cast<bool>(parity[j])};
        if (parity[j]) ++later_odd;
      }
      t.ops = std::move(ops);
      out.push_back(std::move(t));
    }
  }
  return out;
}

Term jordan_wigner(FTerm t, const System& system) {
  // Stable insertion sort by site; swapping two odd operators flips the sign.
  auto& ops = t.ops;
  for (std::size_t i = 1; i < ops.size(); ++i) {
    std::size_t j = i;
    while (j > 0 && ops[j - 1].site > ops[j].site) {
      if (ops[j - 1].odd && ops[j].odd) t.coef = -t.coef;
      std::swap(ops[j - 1], ops[j]);
      --j;
    }
  }
  std::vector<FOp> merged;
  for (auto& op : ops) {
    if (!merged.empty() && merged.back().site == op.site) {
      merged.back().m = merged.back().m * op.m;
      merged.back().odd = merged.back().odd != op.odd;
    } else {
      merged.push_back(std::move(op));
    }
  }
  Term out;
  out.coef = t.coef;
  int later_odd = 0;
  std::size_t next = merged.size();
  std::vector<LocalFactor> rev;
  for (int site = system.size() - 1; site >= 0; --site) {
    const SiteKind& kind = system[site];
    Matrix m;
    bool has = false;
    bool odd_here = false;
    if (next > 0 && merged[next - 1].site == site) {
      --next;
      m = merged[next].m;
      odd_here = merged[next].odd;
      has = true;
    }
    if (later_odd % 2 == 1 && kind.type == SiteType::Fermion) {
      m = has ? Matrix(m * parity_operator(kind)) : parity_operator(kind);
      has = true;
    }
    if (odd_here) ++later_odd;
    if (has && !linalg::is_identity(m, 0.0)) rev.push_back(LocalFactor{site, m});
  }
  out.factors.assign(rev.rbegin(), rev.rend());
  return out;
}

Matrix kron_id_right(const Matrix& a) {
  return linalg::kron(a, Matrix::Identity(a.rows(), a.cols()));
}

Matrix kron_id_left_transposed(const Matrix& a) {
  return linalg::kron(Matrix::Identity(a.rows(), a.cols()), a.transpose());
}

// Site-wise pairing of two Hilbert strings into one vectorized string.
Term pair_terms(const Term& ket, const Term& bra, cplx coef, const System& system,
                bool conj_bra) {
  Term out;
  out.coef = coef;
  std::size_t a = 0, b = 0;
  while (a < ket.factors.size() || b < bra.factors.size()) {
    const int sa = a < ket.factors.size() ? ket.factors[a].site : system.size();
    const int sb = b < bra.factors.size() ? bra.factors[b].site : system.size();
    const int site = std::min(sa, sb);
    const Index d = system[site].dim;
    Matrix left = Matrix::Identity(d, d);
    Matrix right = Matrix::Identity(d, d);
    if (sa == site) left = ket.factors[a++].matrix;
    if (sb == site) {
      right = conj_bra ? Matrix(bra.factors[b].matrix.conjugate())
                       : Matrix(bra.factors[b].matrix.transpose());
      ++b;
    }
    out.factors.push_back(LocalFactor{site, linalg::kron(left, right)});
  }
  return out;
}

Term adjoint(const Term& t) {
  Term out;
  out.coef = std::conj(t.coef);
  for (const auto& f : t.factors) out.factors.push_back(LocalFactor{f.site, f.matrix.adjoint()});
  return out;
}

// Product of two Hilbert strings (a acts after b).
Term multiply(const Term& a, const Term& b) {
  Term out;
  out.coef = a.coef * b.coef;
  std::size_t i = 0, j = 0;
  while (i < a.factors.size() || j < b.factors.size()) {
    const int sa = i < a.factors.size() ? a.factors[i].site : INT32_MAX;
    const int sb = j < b.factors.size() ? b.factors[j].site : INT32_MAX;
    if (sa == sb) {
      out.factors.push_back(LocalFactor{sa, a.factors[i++].matrix * b.factors[j++].matrix});
    } else if (sa < sb) {
      out.factors.push_back(a.factors[i++]);
    } else {
      out.factors.push_back(b.factors[j++]);
    }
  }
  return out;
}

void collect_evolver(const OpExpr& e, cplx c, std::vector<std::pair<cplx, OpExpr>>& plain,
                     std::vector<std::pair<cplx, OpExpr>>& dissipators) {
  switch (e.kind()) {
    case NodeKind::Scale:
      collect_evolver(e.child(), c * e.scalar(), plain, dissipators);
      return;
    case NodeKind::Sum:
      for (const auto& t : e.children()) collect_evolver(t, c, plain, dissipators);
      return;
    case NodeKind::Dissipator:
      if (contains_channel(e.child())) {
        throw LoweringError("nested Dissipator or Gate: " + to_string(e));
      }
      dissipators.emplace_back(c, e.child());
      return;
    default:
      if (contains_kind(e, NodeKind::Gate)) {
        throw LoweringError("Gate nodes cannot appear in an evolver: " + to_string(e));
      }
      if (contains_kind(e, NodeKind::Dissipator)) {
        throw LoweringError("Dissipator must be a term of the evolver sum: " + to_string(e));
      }
      plain.emplace_back(c, e);
  }
}

}  // namespace

std::vector<Term> hilbert_terms(const OpExpr& expr, const System& system,
                                const OperatorRegistry& registry) {
  if (contains_channel(expr)) {
    throw LoweringError("Dissipator and Gate are not allowed here: " + to_string(expr));
  }
  OpExpr e;
  try {
    e = push_indices(expr, registry);
  } catch (const std::invalid_argument& err) {
    throw LoweringError(err.what());
  }
  std::vector<Term> out;
  for (const RawTerm& raw : expand(e, system)) {
    if (raw.coef == cplx(0.0)) continue;
    std::vector<FTerm> alts{FTerm{raw.coef, {}}};
    for (const Leaf& leaf : raw.leaves) {
      const auto options = leaf_alternatives(leaf, system, registry);
      std::vector<FTerm> next;
      for (const auto& a : alts) {
        for (const auto& b : options) {
          FTerm t{a.coef * b.coef, a.ops};
          t.ops.insert(t.ops.end(), b.ops.begin(), b.ops.end());
          next.push_back(std::move(t));
        }
      }
      alts = std::move(next);
    }
    for (auto& t : alts) out.push_back(jordan_wigner(std::move(t), system));
  }
  return out;
}

TermSum lower_observable(const OpExpr& expr, const System& system, Rep rep,
                         const OperatorRegistry& registry) {
  TermSum ts{rep, system, hilbert_terms(expr, system, registry)};
  if (rep == Rep::Mixed) {
    for (auto& t : ts.terms) {
      for (auto& f : t.factors) f.matrix = kron_id_right(f.matrix);
    }
  }
  return ts;
}

TermSum lower_evolver(const OpExpr& expr, const System& system, Rep rep,
                      const OperatorRegistry& registry) {
  std::vector<std::pair<cplx, OpExpr>> plain, dissipators;
  OpExpr e;
  try {
    e = push_indices(expr, registry);
  } catch (const std::invalid_argument& err) {
    throw LoweringError(err.what());
  }
  collect_evolver(e, cplx(1.0), plain, dissipators);
  if (rep == Rep::Pure && !dissipators.empty()) {
    throw LoweringError("Dissipator terms need a Mixed state");
  }
  TermSum ts{rep, system, {}};
  for (const auto& [c, p] : plain) {
    for (Term t : hilbert_terms(p, system, registry)) {
      t.coef *= c;
      if (rep == Rep::Pure) {
        ts.terms.push_back(std::move(t));
        continue;
      }
      Term ket = t;
      for (auto& f : ket.factors) f.matrix = kron_id_right(f.matrix);
      Term bra = t;
      bra.coef = -t.coef;
      for (auto& f : bra.factors) f.matrix = kron_id_left_transposed(f.matrix);
      ts.terms.push_back(std::move(ket));
      ts.terms.push_back(std::move(bra));
    }
  }
  for (const auto& [rate, l_expr] : dissipators) {
    const std::vector<Term> ls = hilbert_terms(l_expr, system, registry);
    for (const Term& la : ls) {
      for (const Term& lb : ls) {
        const cplx jump = rate * la.coef * std::conj(lb.coef);
        if (jump != cplx(0.0)) ts.terms.push_back(pair_terms(la, lb, jump, system, true));
        // (L^dag L) collects conj(c_a) c_b l_a^dag l_b.
        Term prod = multiply(adjoint(la), lb);
        const cplx anti = -0.5 * rate * prod.coef;
        if (anti == cplx(0.0)) continue;
        prod.coef = 1.0;
        const Term identity{};
        ts.terms.push_back(pair_terms(prod, identity, anti, system, false));
        ts.terms.push_back(pair_terms(identity, prod, anti, system, false));
      }
    }
  }
  return ts;
}

Matrix dense_matrix(const TermSum& ts) {
  const int n = ts.system.size();
  Index dim = 1;
  std::vector<Index> dims;
  for (int k = 0; k < n; ++k) {
    dims.push_back(phys_dim(ts.rep, ts.system[k]));
    dim *= dims.back();
  }
  Matrix out = Matrix::Zero(dim, dim);
  for (const auto& t : ts.terms) {
    std::vector<Matrix> factors;
    std::size_t f = 0;
    for (int k = 0; k < n; ++k) {
      if (f < t.factors.size() && t.factors[f].site == k) {
        factors.push_back(t.factors[f++].matrix);
      } else {
        factors.push_back(Matrix::Identity(dims[static_cast<std::size_t>(k)],
                                           dims[static_cast<std::size_t>(k)]));
      }
    }
    out += t.coef * linalg::kron(factors);
  }
  return out;
}

}  // namespace mixmps
