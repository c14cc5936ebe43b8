#include "mixmps/opexpr.h"

#include <cmath>
#include <cstdio>

#include "mixmps/linalg.h"

namespace mixmps {

OpExpr::OpExpr() : OpExpr(make(OpNode{NodeKind::Sum, {}, {}, cplx(1.0), {}})) {}

OpExpr OpExpr::make(OpNode node) {
  return OpExpr(std::make_shared<const OpNode>(std::move(node)));
}

OpExpr OpExpr::named(std::string name) {
  OpNode n;
  n.kind = NodeKind::Named;
  n.name = std::move(name);
  return make(std::move(n));
}

OpExpr OpExpr::indexed(OpExpr expr, std::vector<int> sites) {
  if (sites.empty()) throw ExprError("indexing needs at least one site");
  for (std::size_t a = 0; a < sites.size(); ++a) {
    if (sites[a] < 1) {
      throw ExprError("site index " + std::to_string(sites[a]) + " is below 1");
    }
    for (std::size_t b = 0; b < a; ++b) {
      if (sites[a] == sites[b]) {
        throw ExprError("duplicate site " + std::to_string(sites[a]) + " in index list");
      }
    }
  }
  OpNode n;
  n.kind = NodeKind::Indexed;
  n.sites = std::move(sites);
  n.children = {std::move(expr)};
  return make(std::move(n));
}

OpExpr OpExpr::scale(cplx c, OpExpr expr) {
  OpNode n;
  n.kind = NodeKind::Scale;
  n.scalar = c;
  n.children = {std::move(expr)};
  return make(std::move(n));
}

namespace {

OpExpr with_children(NodeKind kind, std::vector<OpExpr> children) {
  switch (kind) {
    case NodeKind::Sum:
      return OpExpr::sum(std::move(children));
    case NodeKind::Prod:
      return OpExpr::prod(std::move(children));
    case NodeKind::TensorProd:
      return OpExpr::tensor(std::move(children));
    case NodeKind::Dag:
      return OpExpr::dag_node(std::move(children.front()));
    case NodeKind::Exp:
      return OpExpr::exp(std::move(children.front()));
    case NodeKind::Controlled:
      return OpExpr::controlled(std::move(children.front()));
    case NodeKind::Dissipator:
      return OpExpr::dissipator(std::move(children.front()));
    case NodeKind::Gate:
      return OpExpr::gate(std::move(children.front()));
    default:
      throw ExprError("with_children: unsupported node kind");
  }
}

}  // namespace

OpExpr OpExpr::sum(std::vector<OpExpr> terms) {
  OpNode n;
  n.kind = NodeKind::Sum;
  n.children = std::move(terms);
  return make(std::move(n));
}

OpExpr OpExpr::prod(std::vector<OpExpr> factors) {
  OpNode n;
  n.kind = NodeKind::Prod;
  n.children = std::move(factors);
  return make(std::move(n));
}

OpExpr OpExpr::tensor(std::vector<OpExpr> factors) {
  if (factors.size() < 2) throw ExprError("tensor needs at least two factors");
  OpNode n;
  n.kind = NodeKind::TensorProd;
  n.children = std::move(factors);
  return make(std::move(n));
}

#define MIXMPS_UNARY_FACTORY(fn, K)      \
  OpExpr OpExpr::fn(OpExpr expr) {       \
    OpNode n;                            \
    n.kind = NodeKind::K;                \
    n.children = {std::move(expr)};      \
    return make(std::move(n));           \
  }

MIXMPS_UNARY_FACTORY(dag_node, Dag)
MIXMPS_UNARY_FACTORY(exp, Exp)
MIXMPS_UNARY_FACTORY(controlled, Controlled)
MIXMPS_UNARY_FACTORY(dissipator, Dissipator)
MIXMPS_UNARY_FACTORY(gate, Gate)

#undef MIXMPS_UNARY_FACTORY

bool operator==(const OpExpr& a, const OpExpr& b) {
  if (a.node_ == b.node_) return true;
  if (a.kind() != b.kind() || a.name() != b.name() || a.sites() != b.sites() ||
      a.scalar() != b.scalar() || a.children().size() != b.children().size()) {
    return false;
  }
  for (std::size_t k = 0; k < a.children().size(); ++k) {
    if (!(a.children()[k] == b.children()[k])) return false;
  }
  return true;
}

// ---- canonical arithmetic --------------------------------------------------

namespace {

std::vector<OpExpr> flatten(const OpExpr& e, NodeKind kind) {
  if (e.kind() == kind) return e.children();
  return {e};
}

OpExpr collapse(NodeKind kind, std::vector<OpExpr> items) {
  if (items.size() == 1) return items.front();
  return kind == NodeKind::Sum ? OpExpr::sum(std::move(items))
                               : OpExpr::prod(std::move(items));
}

}  // namespace

OpExpr operator+(const OpExpr& a, const OpExpr& b) {
  std::vector<OpExpr> terms = flatten(a, NodeKind::Sum);
  for (auto& t : flatten(b, NodeKind::Sum)) terms.push_back(t);
  return collapse(NodeKind::Sum, std::move(terms));
}

OpExpr operator-(const OpExpr& a) { return cplx(-1.0) * a; }

OpExpr operator-(const OpExpr& a, const OpExpr& b) { return a + (-b); }

OpExpr operator*(cplx c, const OpExpr& a) {
  if (a.kind() == NodeKind::Scale) return OpExpr::scale(c * a.scalar(), a.child());
  return OpExpr::scale(c, a);
}

OpExpr operator*(const OpExpr& a, const OpExpr& b) {
  cplx c(1.0);
  bool scaled = false;
  auto strip = [&](const OpExpr& e) -> OpExpr {
    if (e.kind() != NodeKind::Scale) return e;
    c *= e.scalar();
    scaled = true;
    return e.child();
  };
  const OpExpr x = strip(a);
  const OpExpr y = strip(b);
  std::vector<OpExpr> factors = flatten(x, NodeKind::Prod);
  for (auto& f : flatten(y, NodeKind::Prod)) factors.push_back(f);
  OpExpr p = collapse(NodeKind::Prod, std::move(factors));
  return scaled ? OpExpr::scale(c, p) : p;
}

OpExpr operator/(const OpExpr& a, cplx c) {
  if (c == cplx(0.0)) throw ExprError("division of an operator by zero");
  return (1.0 / c) * a;
}

// ---- dag -------------------------------------------------------------------

OpExpr dag(const OpExpr& e) {
  switch (e.kind()) {
    case NodeKind::Named:
      return OpExpr::dag_node(e);
    case NodeKind::Indexed:
      return OpExpr::indexed(dag(e.child()), e.sites());
    case NodeKind::Scale:
      return OpExpr::scale(std::conj(e.scalar()), dag(e.child()));
    case NodeKind::Sum: {
      std::vector<OpExpr> out;
      for (const auto& c : e.children()) out.push_back(dag(c));
      return OpExpr::sum(std::move(out));
    }
    case NodeKind::Prod: {
      std::vector<OpExpr> out;
      for (auto it = e.children().rbegin(); it != e.children().rend(); ++it) {
        out.push_back(dag(*it));
      }
      return OpExpr::prod(std::move(out));
    }
    case NodeKind::TensorProd: {
      std::vector<OpExpr> out;
      for (const auto& c : e.children()) out.push_back(dag(c));
      return OpExpr::tensor(std::move(out));
    }
    case NodeKind::Dag:
      return e.child();
    case NodeKind::Exp:
      return OpExpr::exp(dag(e.child()));
    case NodeKind::Controlled:
      return OpExpr::controlled(dag(e.child()));
    case NodeKind::Dissipator:
    case NodeKind::Gate:
      throw ExprError("dag of a Dissipator or Gate is not defined");
  }
  throw ExprError("dag: unknown node");
}

// ---- printing --------------------------------------------------------------

namespace {

std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string format_scalar(cplx c) {
  std::string out = "(" + format_real(c.real());
  const double im = c.imag();
  out += std::signbit(im) ? "-" : "+";
  out += format_real(std::abs(im)) + "i)";
  return out;
}

// Expressions that print as a single primary and can take a postfix index.
bool is_primary(const OpExpr& e) {
  switch (e.kind()) {
    case NodeKind::Named:
    case NodeKind::Indexed:
    case NodeKind::TensorProd:
    case NodeKind::Dag:
    case NodeKind::Exp:
    case NodeKind::Controlled:
    case NodeKind::Dissipator:
    case NodeKind::Gate:
      return true;
    case NodeKind::Sum:
    case NodeKind::Prod:
      return e.children().empty();
    case NodeKind::Scale:
      return false;
  }
  return false;
}

void print(const OpExpr& e, std::string& out);

void print_wrapped(const OpExpr& e, std::string& out) {
  if (is_primary(e)) {
    print(e, out);
  } else {
    out += "(";
    print(e, out);
    out += ")";
  }
}

void print_unary(const char* fn, const OpExpr& e, std::string& out) {
  out += fn;
  out += "(";
  print(e.child(), out);
  out += ")";
}

void print(const OpExpr& e, std::string& out) {
  switch (e.kind()) {
    case NodeKind::Named:
      out += e.name();
      return;
    case NodeKind::Indexed: {
      print_wrapped(e.child(), out);
      out += "(";
      for (std::size_t k = 0; k < e.sites().size(); ++k) {
        if (k) out += ", ";
        out += std::to_string(e.sites()[k]);
      }
      out += ")";
      return;
    }
    case NodeKind::Scale:
      out += format_scalar(e.scalar());
      out += "*";
      // A product after the scalar must stay grouped so the scale wraps it.
      if (e.child().kind() == NodeKind::Scale) {
        out += "(";
        print(e.child(), out);
        out += ")";
      } else if (e.child().kind() == NodeKind::Prod && !e.child().children().empty()) {
        print(e.child(), out);
      } else {
        print_wrapped(e.child(), out);
      }
      return;
    case NodeKind::Sum:
      if (e.children().empty()) {
        out += "sum(k=1..0, Id)";
        return;
      }
      for (std::size_t k = 0; k < e.children().size(); ++k) {
        if (k) out += " + ";
        const OpExpr& c = e.children()[k];
        if (c.kind() == NodeKind::Sum && !c.children().empty()) {
          out += "(";
          print(c, out);
          out += ")";
        } else {
          print(c, out);
        }
      }
      return;
    case NodeKind::Prod:
      if (e.children().empty()) {
        out += "prod(k=1..0, Id)";
        return;
      }
      for (std::size_t k = 0; k < e.children().size(); ++k) {
        if (k) out += "*";
        print_wrapped(e.children()[k], out);
      }
      return;
    case NodeKind::TensorProd:
      out += "tensor(";
      for (std::size_t k = 0; k < e.children().size(); ++k) {
        if (k) out += ", ";
        print(e.children()[k], out);
      }
      out += ")";
      return;
    case NodeKind::Dag:
      print_unary("dag", e, out);
      return;
    case NodeKind::Exp:
      print_unary("exp", e, out);
      return;
    case NodeKind::Controlled:
      print_unary("controlled", e, out);
      return;
    case NodeKind::Dissipator:
      print_unary("Dissipator", e, out);
      return;
    case NodeKind::Gate:
      print_unary("Gate", e, out);
      return;
  }
}

}  // namespace

std::string to_string(const OpExpr& e) {
  std::string out;
  print(e, out);
  return out;
}

// ---- structure queries -----------------------------------------------------

bool is_generic(const OpExpr& e) {
  switch (e.kind()) {
    case NodeKind::Named:
    case NodeKind::TensorProd:
      return true;
    case NodeKind::Indexed:
      return false;
    case NodeKind::Sum:
    case NodeKind::Prod:
      for (const auto& c : e.children()) {
        if (is_generic(c)) return true;
      }
      return false;
    default:
      return is_generic(e.child());
  }
}

int generic_support(const OpExpr& e, const OperatorRegistry& registry) {
  switch (e.kind()) {
    case NodeKind::Named:
      return registry.support(e.name());
    case NodeKind::Indexed:
      throw ExprError("indexed expression where a generic operator is expected: " +
                      to_string(e));
    case NodeKind::Controlled:
      return generic_support(e.child(), registry) + 1;
    case NodeKind::TensorProd: {
      int k = 0;
      for (const auto& c : e.children()) k += generic_support(c, registry);
      return k;
    }
    case NodeKind::Sum:
    case NodeKind::Prod: {
      if (e.children().empty()) {
        throw ExprError("cannot infer the support of an empty sum or product");
      }
      const int k = generic_support(e.children().front(), registry);
      for (const auto& c : e.children()) {
        if (generic_support(c, registry) != k) {
          throw ExprError("generic operators with different supports combined: " +
                          to_string(e));
        }
      }
      return k;
    }
    default:
      return generic_support(e.child(), registry);
  }
}

std::set<int> sites_of(const OpExpr& e) {
  std::set<int> out;
  if (e.kind() == NodeKind::Indexed) {
    out.insert(e.sites().begin(), e.sites().end());
    return out;
  }
  for (const auto& c : e.children()) {
    auto s = sites_of(c);
    out.insert(s.begin(), s.end());
  }
  return out;
}

bool contains_kind(const OpExpr& e, NodeKind kind) {
  if (e.kind() == kind) return true;
  for (const auto& c : e.children()) {
    if (contains_kind(c, kind)) return true;
  }
  return false;
}

// ---- index normalization ---------------------------------------------------

namespace {

OpExpr push_into(const OpExpr& g, const std::vector<int>& sites,
                 const OperatorRegistry& registry) {
  auto need_support = [&](int k) {
    if (k != static_cast<int>(sites.size())) {
      throw ExprError("operator " + to_string(g) + " acts on " + std::to_string(k) +
                      " site(s) but is indexed with " + std::to_string(sites.size()));
    }
  };
  switch (g.kind()) {
    case NodeKind::Named:
      need_support(registry.support(g.name()));
      return OpExpr::indexed(g, sites);
    case NodeKind::Dag:
      if (g.child().kind() != NodeKind::Named) return push_into(dag(g.child()), sites, registry);
      need_support(registry.support(g.child().name()));
      return OpExpr::indexed(g, sites);
    case NodeKind::Exp:
    case NodeKind::Controlled:
      need_support(generic_support(g, registry));
      return OpExpr::indexed(g, sites);
    case NodeKind::Scale:
      return OpExpr::scale(g.scalar(), push_into(g.child(), sites, registry));
    case NodeKind::Sum:
    case NodeKind::Prod: {
      std::vector<OpExpr> out;
      for (const auto& c : g.children()) out.push_back(push_into(c, sites, registry));
      return g.kind() == NodeKind::Sum ? OpExpr::sum(std::move(out))
                                       : OpExpr::prod(std::move(out));
    }
    case NodeKind::TensorProd: {
      need_support(generic_support(g, registry));
      std::vector<OpExpr> out;
      std::size_t at = 0;
      for (const auto& c : g.children()) {
        const auto k = static_cast<std::size_t>(generic_support(c, registry));
        std::vector<int> part(sites.begin() + static_cast<std::ptrdiff_t>(at),
                              sites.begin() + static_cast<std::ptrdiff_t>(at + k));
        out.push_back(push_into(c, part, registry));
        at += k;
      }
      return OpExpr::prod(std::move(out));
    }
    case NodeKind::Dissipator:
      return OpExpr::dissipator(push_into(g.child(), sites, registry));
    case NodeKind::Gate:
      return OpExpr::gate(push_into(g.child(), sites, registry));
    case NodeKind::Indexed:
      throw ExprError("an indexed expression cannot be indexed again: " + to_string(g));
  }
  throw ExprError("push_indices: unknown node");
}

}  // namespace

OpExpr push_indices(const OpExpr& e, const OperatorRegistry& registry) {
  switch (e.kind()) {
    case NodeKind::Indexed:
      return push_into(e.child(), e.sites(), registry);
    case NodeKind::Named:
      return e;
    case NodeKind::Scale:
      return OpExpr::scale(e.scalar(), push_indices(e.child(), registry));
    default: {
      std::vector<OpExpr> out;
      for (const auto& c : e.children()) out.push_back(push_indices(c, registry));
      return with_children(e.kind(), std::move(out));
    }
  }
}

// ---- dense local matrices --------------------------------------------------

Parity matrix_parity(const Matrix& m, const std::vector<SiteKind>& kinds) {
  bool any_fermion = false;
  std::vector<Matrix> ps;
  for (const auto& k : kinds) {
    any_fermion = any_fermion || k.type == SiteType::Fermion;
    ps.push_back(parity_operator(k));
  }
  if (!any_fermion) return Parity::Even;
  const Matrix p = linalg::kron(ps);
  const Matrix conj = p * m * p;
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  const double tol = 1e-12 * scale;
  if ((conj - m).cwiseAbs().maxCoeff() <= tol) return Parity::Even;
  if ((conj + m).cwiseAbs().maxCoeff() <= tol) return Parity::Odd;
  return Parity::Mixed;
}

namespace {

Index total_dim(const std::vector<SiteKind>& kinds) {
  Index d = 1;
  for (const auto& k : kinds) d *= k.dim;
  return d;
}

Matrix local(const OpExpr& e, const std::vector<SiteKind>& kinds,
             const OperatorRegistry& registry) {
  const Index dim = total_dim(kinds);
  switch (e.kind()) {
    case NodeKind::Named:
      return registry.lookup(e.name(), kinds).matrix;
    case NodeKind::Dag:
      return local(e.child(), kinds, registry).adjoint();
    case NodeKind::Scale:
      return e.scalar() * local(e.child(), kinds, registry);
    case NodeKind::Sum: {
      Matrix m = Matrix::Zero(dim, dim);
      for (const auto& c : e.children()) m += local(c, kinds, registry);
      return m;
    }
    case NodeKind::Prod: {
      Matrix m = Matrix::Identity(dim, dim);
      for (const auto& c : e.children()) m = m * local(c, kinds, registry);
      return m;
    }
    case NodeKind::TensorProd: {
      if (generic_support(e, registry) != static_cast<int>(kinds.size())) {
        throw ExprError("tensor product support does not match the site count");
      }
      Matrix m = Matrix::Identity(dim, dim);
      std::size_t at = 0;
      for (const auto& c : e.children()) {
        const auto k = static_cast<std::size_t>(generic_support(c, registry));
        std::vector<SiteKind> part(kinds.begin() + static_cast<std::ptrdiff_t>(at),
                                   kinds.begin() + static_cast<std::ptrdiff_t>(at + k));
        const Matrix block = local(c, part, registry);
        const Parity parity = matrix_parity(block, part);
        if (parity == Parity::Mixed) {
          throw ExprError("tensor factor " + to_string(c) +
                          " has mixed fermion parity");
        }
        std::vector<Matrix> factors;
        for (std::size_t s = 0; s < at; ++s) {
          factors.push_back(parity == Parity::Odd
                                ? parity_operator(kinds[s])
                                : Matrix::Identity(kinds[s].dim, kinds[s].dim));
        }
        factors.push_back(block);
        for (std::size_t s = at + k; s < kinds.size(); ++s) {
          factors.push_back(Matrix::Identity(kinds[s].dim, kinds[s].dim));
        }
        m = m * linalg::kron(factors);
        at += k;
      }
      return m;
    }
    case NodeKind::Exp:
      return matrix_exponential(local(e.child(), kinds, registry));
    case NodeKind::Controlled: {
      if (kinds.empty() || kinds.front().type != SiteType::Qubit) {
        throw ExprError("controlled operators need a Qubit control site");
      }
      std::vector<SiteKind> rest(kinds.begin() + 1, kinds.end());
      const Matrix u = local(e.child(), rest, registry);
      Matrix m = Matrix::Zero(dim, dim);
      const Index h = u.rows();
      m.topLeftCorner(h, h).setIdentity();
      m.bottomRightCorner(h, h) = u;
      return m;
    }
    case NodeKind::Indexed:
      throw ExprError("indexed expression inside a local operator: " + to_string(e));
    case NodeKind::Dissipator:
    case NodeKind::Gate:
      throw ExprError("Dissipator and Gate have no operator matrix: " + to_string(e));
  }
  throw ExprError("local_matrix: unknown node");
}

}  // namespace

Matrix local_matrix(const OpExpr& e, const std::vector<SiteKind>& kinds,
                    const OperatorRegistry& registry, Index max_dim) {
  if (kinds.empty()) throw ExprError("local_matrix needs at least one site");
  double log_dim = 0.0;
  for (const auto& k : kinds) log_dim += std::log(static_cast<double>(k.dim));
  if (log_dim > std::log(static_cast<double>(max_dim)) + 1e-9) {
    throw ExprError("local operator dimension exceeds the limit of " +
                    std::to_string(max_dim));
  }
  const int k = generic_support(e, registry);
  if (k != static_cast<int>(kinds.size())) {
    throw ExprError("operator " + to_string(e) + " acts on " + std::to_string(k) +
                    " site(s), got " + std::to_string(kinds.size()));
  }
  try {
    return local(e, kinds, registry);
  } catch (const ExprError&) {
    throw;
  } catch (const std::invalid_argument& err) {
    throw ExprError(err.what());
  }
}

}  // namespace mixmps
