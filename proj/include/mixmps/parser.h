#pragma once

#include <map>
#include <string>
#include <variant>

#include "mixmps/opexpr.h"

namespace mixmps {

class ParseError : public ExprError {
 public:
  ParseError(const std::string& message, int line, int column);
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

/// Result of evaluating DSL text: a complex number or an operator expression.
using Value = std::variant<cplx, OpExpr>;

/// Named values visible to the parser. Operator names not bound here are
/// resolved against the registry; `im` and `pi` are predefined.
struct Environment {
  std::map<std::string, Value> values;
  const OperatorRegistry* registry = &OperatorRegistry::builtin();
};

/// Evaluates an expression. Scalars fold eagerly; sum()/prod() expand.
Value evaluate(const std::string& text, const Environment& env = {});

/// Like evaluate() but requires an operator result.
OpExpr parse(const std::string& text, const Environment& env = {});

/// Like evaluate() but requires a scalar result.
cplx parse_scalar(const std::string& text, const Environment& env = {});

}  // namespace mixmps
