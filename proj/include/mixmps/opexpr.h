#pragma once

#include <memory>
#include <set>
#include <string>
#include <vector>

#include "mixmps/sites.h"
#include "mixmps/tensor.h"

namespace mixmps {

enum class NodeKind {
  Named,       // generic operator by name, e.g. X
  Indexed,     // expr applied to sites, e.g. X(3)
  Scale,       // complex * expr
  Sum,         // empty sum is the zero operator
  Prod,        // operator product, leftmost factor acts last
  TensorProd,  // tensor(a, b): generic ops on consecutive conceptual sites
  Dag,
  Exp,
  Controlled,  // one extra control qubit in front
  Dissipator,
  Gate,
};

class OpExpr;

struct OpNode {
  NodeKind kind = NodeKind::Named;
  std::string name;
  std::vector<int> sites;  // 1-based
  cplx scalar{1.0, 0.0};
  std::vector<OpExpr> children;
};

/// Immutable handle to an operator-expression tree.
///
/// The factory functions build nodes verbatim. The arithmetic operators build
/// canonical trees: sums and products are flattened, scalars are pulled out of
/// products and nested scales are folded. The parser produces canonical trees.
class OpExpr {
 public:
  OpExpr();  // zero operator (empty Sum)

  static OpExpr named(std::string name);
  static OpExpr indexed(OpExpr expr, std::vector<int> sites);
  static OpExpr scale(cplx c, OpExpr expr);
  static OpExpr sum(std::vector<OpExpr> terms);
  static OpExpr prod(std::vector<OpExpr> factors);
  static OpExpr tensor(std::vector<OpExpr> factors);
  static OpExpr dag_node(OpExpr expr);
  static OpExpr exp(OpExpr expr);
  static OpExpr controlled(OpExpr expr);
  static OpExpr dissipator(OpExpr expr);
  static OpExpr gate(OpExpr expr);

  NodeKind kind() const { return node_->kind; }
  const std::string& name() const { return node_->name; }
  const std::vector<int>& sites() const { return node_->sites; }
  cplx scalar() const { return node_->scalar; }
  const std::vector<OpExpr>& children() const { return node_->children; }
  const OpExpr& child() const { return node_->children.front(); }

  /// Indexing sugar: X(3), Swap(1, 2).
  template <typename... Ints>
  OpExpr operator()(Ints... sites) const {
    return indexed(*this, std::vector<int>{static_cast<int>(sites)...});
  }

  friend bool operator==(const OpExpr& a, const OpExpr& b);

 private:
  explicit OpExpr(std::shared_ptr<const OpNode> node) : node_(std::move(node)) {}
  static OpExpr make(OpNode node);

  std::shared_ptr<const OpNode> node_;
};

OpExpr operator+(const OpExpr& a, const OpExpr& b);
OpExpr operator-(const OpExpr& a, const OpExpr& b);
OpExpr operator-(const OpExpr& a);
OpExpr operator*(const OpExpr& a, const OpExpr& b);
OpExpr operator*(cplx c, const OpExpr& a);
inline OpExpr operator*(double c, const OpExpr& a) { return cplx(c) * a; }
inline OpExpr operator*(const OpExpr& a, cplx c) { return c * a; }
OpExpr operator/(const OpExpr& a, cplx c);

/// Conjugate transpose pushed through the tree: anti-linear on scalars,
/// reverses products, leaves Dag only around named operators.
/// Throws std::invalid_argument for Dissipator and Gate nodes.
OpExpr dag(const OpExpr& e);

/// DSL text that parses back to the same tree.
std::string to_string(const OpExpr& e);

/// True when the expression is not yet bound to sites (e.g. X, exp(X)).
bool is_generic(const OpExpr& e);

/// Number of conceptual sites a generic expression acts on.
int generic_support(const OpExpr& e, const OperatorRegistry& registry);

/// 1-based sites referenced by indexed sub-expressions.
std::set<int> sites_of(const OpExpr& e);

bool contains_kind(const OpExpr& e, NodeKind kind);
inline bool contains_channel(const OpExpr& e) {
  return contains_kind(e, NodeKind::Dissipator) || contains_kind(e, NodeKind::Gate);
}

/// Pushes indices inward so that Indexed nodes wrap only named operators or
/// dense blocks (Exp, Controlled, multi-site names). Dissipator and Gate end
/// up outside their indexed arguments.
OpExpr push_indices(const OpExpr& e, const OperatorRegistry& registry);

class ExprError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Dense matrix of a generic expression on consecutive conceptual sites of the
/// given kinds (Kronecker order: first site most significant). TensorProd
/// factors are joined with Jordan-Wigner signs on Fermion sites.
Matrix local_matrix(const OpExpr& e, const std::vector<SiteKind>& kinds,
                    const OperatorRegistry& registry,
                    Index max_dim = 4096);

enum class Parity { Even, Odd, Mixed };

/// Fermion parity of a matrix on the given sites (Even when no Fermion site).
Parity matrix_parity(const Matrix& m, const std::vector<SiteKind>& kinds);

}  // namespace mixmps
