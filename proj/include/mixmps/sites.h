#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mixmps/tensor.h"

namespace mixmps {

enum class SiteType { Qubit, Boson, Fermion };

/// Local Hilbert space of one site.
///
/// Basis orderings: Qubit (Up, Dn) = (|0>, |1>) with Z = diag(1, -1);
/// Boson(d) Fock states 0..d-1; Fermion (Emp, Occ).
struct SiteKind {
  SiteType type = SiteType::Qubit;
  int dim = 2;

  static SiteKind qubit() { return {SiteType::Qubit, 2}; }
  static SiteKind boson(int d);
  static SiteKind fermion() { return {SiteType::Fermion, 2}; }

  /// "Qubit", "Boson(4)", "Fermion"; parse() accepts the same spelling.
  std::string name() const;
  static SiteKind parse(const std::string& text);

  friend bool operator==(const SiteKind&, const SiteKind&) = default;
};

/// A named local state: either a normalized vector or (FullyMixed) a density
/// matrix with unit trace.
struct LocalState {
  std::optional<Vector> vector;
  Matrix density;
};

/// Resolves "Up", "Dn", "+", "-", "0", "1", ..., "Emp", "Occ", "FullyMixed".
/// Throws std::invalid_argument for unknown names.
LocalState named_state(const SiteKind& kind, const std::string& name);

struct OperatorDef {
  std::string name;
  int support = 1;
  Matrix matrix;
  bool fermionic = false;  // odd fermion parity
};

using OperatorTable = std::map<std::string, OperatorDef>;

/// Predefined operators for one site kind.
OperatorTable builtin_operators(const SiteKind& kind);

/// Parity operator F = diag(1, -1) on Fermion sites, identity elsewhere.
Matrix parity_operator(const SiteKind& kind);

/// Built-in plus user-defined operators, looked up by name and the kinds of
/// the sites an operator acts on.
class OperatorRegistry {
 public:
  OperatorRegistry() = default;

  /// Registers a custom operator acting on `support` sites of type `type`.
  /// The matrix dimension must equal dim^support for the site kinds it is
  /// later used with.
  void define(SiteType type, OperatorDef def);

  bool knows(const std::string& name) const;
  std::vector<std::string> names() const;

  /// Support (number of sites) of an operator name, independent of kind.
  int support(const std::string& name) const;

  /// Operator on the given site kinds (one entry per site of its support).
  OperatorDef lookup(const std::string& name,
                     const std::vector<SiteKind>& kinds) const;
  bool defined_for(const std::string& name, const SiteKind& kind) const;

  static const OperatorRegistry& builtin();

 private:
  struct Custom {
    SiteType type;
    OperatorDef def;
  };
  std::vector<Custom> custom_;
};

}  // namespace mixmps
