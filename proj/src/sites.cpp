#include "mixmps/sites.h"

#include <cmath>
#include <regex>
#include <set>

namespace mixmps {

namespace {

Matrix diag(std::initializer_list<double> values) {
  Matrix m = Matrix::Zero(static_cast<Index>(values.size()),
                          static_cast<Index>(values.size()));
  Index k = 0;
  for (double v : values) {
    m(k, k) = v;
    ++k;
  }
  return m;
}

Vector basis(int dim, int k) {
  Vector v = Vector::Zero(dim);
  v[k] = 1.0;
  return v;
}

LocalState pure(Vector v) {
  LocalState out;
  out.density = v * v.adjoint();
  out.vector = std::move(v);
  return out;
}

const std::set<std::string>& builtin_names() {
  static const std::set<std::string> names{"Id", "X", "Y", "Z", "Sp", "Sm", "H",
                                           "Swap", "CZ", "A", "N", "C", "F"};
  return names;
}

}  // namespace

SiteKind SiteKind::boson(int d) {
  if (d < 2) throw std::invalid_argument("Boson(d) requires d >= 2");
  return {SiteType::Boson, d};
}

std::string SiteKind::name() const {
  switch (type) {
    case SiteType::Qubit:
      return "Qubit";
    case SiteType::Fermion:
      return "Fermion";
    case SiteType::Boson:
      return "Boson(" + std::to_string(dim) + ")";
  }
  return "?";
}

SiteKind SiteKind::parse(const std::string& text) {
  if (text == "Qubit") return qubit();
  if (text == "Fermion") return fermion();
  static const std::regex boson_re(R"(\s*Boson\s*\(\s*(\d+)\s*\)\s*)");
  std::smatch m;
  if (std::regex_match(text, m, boson_re)) return boson(std::stoi(m[1].str()));
  throw std::invalid_argument("unknown site kind '" + text + "'");
}

LocalState named_state(const SiteKind& kind, const std::string& name) {
  const int d = kind.dim;
  if (name == "FullyMixed") {
    LocalState out;
    out.density = Matrix::Identity(d, d) / static_cast<double>(d);
    return out;
  }
  switch (kind.type) {
    case SiteType::Qubit: {
      const double r = 1.0 / std::sqrt(2.0);
      if (name == "Up" || name == "0") return pure(basis(2, 0));
      if (name == "Dn" || name == "1") return pure(basis(2, 1));
      if (name == "+") return pure((basis(2, 0) + basis(2, 1)) * r);
      if (name == "-") return pure((basis(2, 0) - basis(2, 1)) * r);
      break;
    }
    case SiteType::Fermion:
      if (name == "Emp" || name == "0") return pure(basis(2, 0));
      if (name == "Occ" || name == "1") return pure(basis(2, 1));
      break;
    case SiteType::Boson: {
      static const std::regex digits(R"(\d+)");
      if (std::regex_match(name, digits)) {
        const int n = std::stoi(name);
        if (n < d) return pure(basis(d, n));
      }
      break;
    }
  }
  throw std::invalid_argument("unknown state '" + name + "' for site kind " +
                              kind.name());
}

Matrix parity_operator(const SiteKind& kind) {
  if (kind.type == SiteType::Fermion) return diag({1.0, -1.0});
  return Matrix::Identity(kind.dim, kind.dim);
}

OperatorTable builtin_operators(const SiteKind& kind) {
  OperatorTable table;
  auto add = [&](const std::string& name, Matrix m, bool fermionic = false,
                 int support = 1) {
    table[name] = OperatorDef{name, support, std::move(m), fermionic};
  };
  const int d = kind.dim;
  add("Id", Matrix::Identity(d, d));
  switch (kind.type) {
    case SiteType::Qubit: {
      const cplx i(0.0, 1.0);
      Matrix x(2, 2), y(2, 2), sp(2, 2), h(2, 2);
      x << 0, 1, 1, 0;
      y << 0, -i, i, 0;
      sp << 0, 1, 0, 0;
      h << 1, 1, 1, -1;
      add("X", x);
      add("Y", y);
      add("Z", diag({1.0, -1.0}));
      add("Sp", sp);
      add("Sm", sp.adjoint());
      add("H", h / std::sqrt(2.0));
      Matrix swap = Matrix::Zero(4, 4);
      swap(0, 0) = swap(1, 2) = swap(2, 1) = swap(3, 3) = 1.0;
      add("Swap", swap, false, 2);
      add("CZ", diag({1.0, 1.0, 1.0, -1.0}), false, 2);
      break;
    }
    case SiteType::Boson: {
      Matrix a = Matrix::Zero(d, d);
      Matrix n = Matrix::Zero(d, d);
      for (int k = 1; k < d; ++k) {
        a(k - 1, k) = std::sqrt(static_cast<double>(k));
        n(k, k) = k;
      }
      add("A", a);
      add("N", n);
      break;
    }
    case SiteType::Fermion: {
      Matrix c = Matrix::Zero(2, 2);
      c(0, 1) = 1.0;
      add("C", c, true);
      add("N", diag({0.0, 1.0}));
      add("F", diag({1.0, -1.0}));
      break;
    }
  }
  return table;
}

void OperatorRegistry::define(SiteType type, OperatorDef def) {
  if (def.support < 1) {
    throw std::invalid_argument("operator '" + def.name + "': support must be >= 1");
  }
  if (def.matrix.rows() != def.matrix.cols()) {
    throw std::invalid_argument("operator '" + def.name + "': matrix must be square");
  }
  if (def.fermionic && type != SiteType::Fermion) {
    throw std::invalid_argument("operator '" + def.name +
                                "': only Fermion operators may be fermionic");
  }
  if (builtin_names().count(def.name) != 0) {
    throw std::invalid_argument("operator '" + def.name + "' shadows a built-in");
  }
  custom_.push_back({type, std::move(def)});
}

bool OperatorRegistry::knows(const std::string& name) const {
  if (builtin_names().count(name) != 0) return true;
  for (const auto& c : custom_) {
    if (c.def.name == name) return true;
  }
  return false;
}

std::vector<std::string> OperatorRegistry::names() const {
  std::vector<std::string> out(builtin_names().begin(), builtin_names().end());
  for (const auto& c : custom_) out.push_back(c.def.name);
  return out;
}

int OperatorRegistry::support(const std::string& name) const {
  if (name == "Swap" || name == "CZ") return 2;
  if (builtin_names().count(name) != 0) return 1;
  for (const auto& c : custom_) {
    if (c.def.name == name) return c.def.support;
  }
  throw std::invalid_argument("unknown operator '" + name + "'");
}

OperatorDef OperatorRegistry::lookup(const std::string& name,
                                     const std::vector<SiteKind>& kinds) const {
  const int k = support(name);
  if (static_cast<int>(kinds.size()) != k) {
    throw std::invalid_argument("operator '" + name + "' acts on " +
                                std::to_string(k) + " site(s), got " +
                                std::to_string(kinds.size()));
  }
  for (const auto& c : custom_) {
    if (c.def.name != name || c.type != kinds.front().type) continue;
    Index dim = 1;
    for (const auto& kind : kinds) {
      if (kind.type != c.type) {
        throw std::invalid_argument("operator '" + name +
                                    "' is not defined for site kind " + kind.name());
      }
      dim *= kind.dim;
    }
    if (dim != c.def.matrix.rows()) {
      throw std::invalid_argument("operator '" + name +
                                  "': matrix dimension does not match the sites");
    }
    return c.def;
  }
  if (builtin_names().count(name) == 0) {
    throw std::invalid_argument("operator '" + name +
                                "' is not defined for site kind " +
                                kinds.front().name());
  }
  if (k == 2) {
    for (const auto& kind : kinds) {
      if (kind.type != SiteType::Qubit) {
        throw std::invalid_argument("operator '" + name +
                                    "' is not defined for site kind " + kind.name());
      }
    }
  }
  const OperatorTable table = builtin_operators(kinds.front());
  auto it = table.find(name);
  if (it == table.end()) {
    throw std::invalid_argument("operator '" + name +
                                "' is not defined for site kind " +
                                kinds.front().name());
  }
  return it->second;
}

bool OperatorRegistry::defined_for(const std::string& name,
                                   const SiteKind& kind) const {
  if (!knows(name) || support(name) != 1) return false;
  try {
    lookup(name, {kind});
    return true;
  } catch (const std::invalid_argument&) {
    return false;
  }
}

const OperatorRegistry& OperatorRegistry::builtin() {
  static const OperatorRegistry registry;
  return registry;
}

}  // namespace mixmps
