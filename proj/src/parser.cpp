#include "mixmps/parser.h"

#include <cctype>
#include <cmath>
#include <memory>
#include <numbers>
#include <optional>
#include <vector>

namespace mixmps {

ParseError::ParseError(const std::string& message, int line, int column)
    : ExprError("line " + std::to_string(line) + ", column " + std::to_string(column) +
                ": " + message),
      line_(line),
      column_(column) {}

namespace {

// ---- lexer -----------------------------------------------------------------

enum class Tok { Number, Ident, Punct, End };

struct Token {
  Tok kind = Tok::End;
  std::string text;
  cplx number{};
  bool i_suffix = false;  // "2i": imaginary, or 2*i inside sum(i=..)
  int line = 1;
  int column = 1;
};

std::vector<Token> lex(const std::string& src) {
  std::vector<Token> out;
  int line = 1;
  int col = 1;
  std::size_t k = 0;
  auto advance = [&](std::size_t n) {
    for (std::size_t j = 0; j < n; ++j) {
      if (src[k] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
      ++k;
    }
  };
  while (k < src.size()) {
    const char c = src[k];
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance(1);
      continue;
    }
    Token t;
    t.line = line;
    t.column = col;
    const bool starts_number =
        std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '.' && k + 1 < src.size() && src[k + 1] != '.' &&
         std::isdigit(static_cast<unsigned char>(src[k + 1])));
    if (starts_number) {
      std::size_t j = k;
      while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
      // "1..3" is a range, not a decimal point.
      if (j < src.size() && src[j] == '.' && !(j + 1 < src.size() && src[j + 1] == '.')) {
        ++j;
        while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
      }
      if (j < src.size() && (src[j] == 'e' || src[j] == 'E')) {
        std::size_t e = j + 1;
        if (e < src.size() && (src[e] == '+' || src[e] == '-')) ++e;
        if (e < src.size() && std::isdigit(static_cast<unsigned char>(src[e]))) {
          while (e < src.size() && std::isdigit(static_cast<unsigned char>(src[e]))) ++e;
          j = e;
        }
      }
      const double v = std::stod(src.substr(k, j - k));
      bool imaginary = false;
      if (j < src.size() && src[j] == 'i' &&
          !(j + 1 < src.size() &&
            (std::isalnum(static_cast<unsigned char>(src[j + 1])) || src[j + 1] == '_'))) {
        imaginary = true;
        ++j;
      }
      t.kind = Tok::Number;
      t.number = imaginary ? cplx(0.0, v) : cplx(v, 0.0);
      t.i_suffix = imaginary;
      t.text = src.substr(k, j - k);
      advance(j - k);
      out.push_back(t);
      continue;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = k;
      while (j < src.size() &&
             (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_')) {
        ++j;
      }
      t.kind = Tok::Ident;
      t.text = src.substr(k, j - k);
      advance(j - k);
      out.push_back(t);
      continue;
    }
    if (c == '.' && k + 1 < src.size() && src[k + 1] == '.') {
      t.kind = Tok::Punct;
      t.text = "..";
      advance(2);
      out.push_back(t);
      continue;
    }
    if (std::string("+-*/^(),=").find(c) != std::string::npos) {
      t.kind = Tok::Punct;
      t.text = std::string(1, c);
      advance(1);
      out.push_back(t);
      continue;
    }
    throw ParseError(std::string("unexpected character '") + c + "'", line, col);
  }
  Token end;
  end.line = line;
  end.column = col;
  out.push_back(end);
  return out;
}

// ---- syntax tree -----------------------------------------------------------

enum class Syn { Number, Name, Unary, Binary, Call, Range };

struct SynNode {
  Syn kind;
  int line = 1;
  int column = 1;
  cplx number{};
  bool i_suffix = false;
  std::string text;  // name, operator, or range variable
  std::vector<std::unique_ptr<SynNode>> kids;
};

using SynPtr = std::unique_ptr<SynNode>;

SynPtr node(Syn kind, const Token& at) {
  auto n = std::make_unique<SynNode>();
  n->kind = kind;
  n->line = at.line;
  n->column = at.column;
  return n;
}

class SyntaxParser {
 public:
  explicit SyntaxParser(std::vector<Token> toks) : toks_(std::move(toks)) {}

  SynPtr parse_all() {
    SynPtr e = expr();
    if (peek().kind != Tok::End) fail("unexpected '" + peek().text + "'");
    return e;
  }

 private:
  const Token& peek(std::size_t ahead = 0) const {
    return toks_[std::min(pos_ + ahead, toks_.size() - 1)];
  }
  bool is(const char* punct, std::size_t ahead = 0) const {
    return peek(ahead).kind == Tok::Punct && peek(ahead).text == punct;
  }
  [[noreturn]] void fail(const std::string& msg) const {
    const Token& t = peek();
    throw ParseError(t.kind == Tok::End ? msg + " at end of input" : msg, t.line,
                     t.column);
  }
  void expect(const char* punct) {
    if (!is(punct)) fail(std::string("expected '") + punct + "'");
    ++pos_;
  }

  SynPtr binary(const Token& at, const std::string& op, SynPtr l, SynPtr r) {
    auto n = node(Syn::Binary, at);
    n->text = op;
    n->kids.push_back(std::move(l));
    n->kids.push_back(std::move(r));
    return n;
  }

  SynPtr expr() {
    SynPtr l = term();
    while (is("+") || is("-")) {
      const Token op = peek();
      ++pos_;
      l = binary(op, op.text, std::move(l), term());
    }
    return l;
  }

  SynPtr term() {
    SynPtr l = unary();
    for (;;) {
      if (is("*") || is("/")) {
        const Token op = peek();
        ++pos_;
        l = binary(op, op.text, std::move(l), unary());
      } else if (peek().kind == Tok::Ident || peek().kind == Tok::Number ||
                 is("(")) {
        const Token at = peek();
        l = binary(at, "*", std::move(l), power());
      } else {
        return l;
      }
    }
  }

  SynPtr unary() {
    if (is("-") || is("+")) {
      const Token op = peek();
      ++pos_;
      auto n = node(Syn::Unary, op);
      n->text = op.text;
      n->kids.push_back(unary());
      return n;
    }
    return power();
  }

  SynPtr power() {
    SynPtr base = postfix();
    if (is("^")) {
      const Token op = peek();
      ++pos_;
      return binary(op, "^", std::move(base), unary());
    }
    return base;
  }

  SynPtr postfix() {
    SynPtr p = primary();
    while (is("(")) {
      const Token at = peek();
      ++pos_;
      auto call = node(Syn::Call, at);
      call->kids.push_back(std::move(p));
      if (!is(")")) {
        call->kids.push_back(argument());
        while (is(",")) {
          ++pos_;
          call->kids.push_back(argument());
        }
      }
      expect(")");
      p = std::move(call);
    }
    return p;
  }

  SynPtr argument() {
    if (peek().kind == Tok::Ident && is("=", 1)) {
      const Token var = peek();
      pos_ += 2;
      auto r = node(Syn::Range, var);
      r->text = var.text;
      r->kids.push_back(expr());
      expect("..");
      r->kids.push_back(expr());
      return r;
    }
    return expr();
  }

  SynPtr primary() {
    const Token t = peek();
    if (t.kind == Tok::Number) {
      ++pos_;
      auto n = node(Syn::Number, t);
      n->number = t.number;
      n->i_suffix = t.i_suffix;
      return n;
    }
    if (t.kind == Tok::Ident) {
      ++pos_;
      auto n = node(Syn::Name, t);
      n->text = t.text;
      return n;
    }
    if (is("(")) {
      ++pos_;
      SynPtr e = expr();
      expect(")");
      return e;
    }
    fail(t.kind == Tok::End ? "expected an expression" : "unexpected '" + t.text + "'");
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

// ---- evaluation ------------------------------------------------------------

struct Scope {
  const Scope* parent = nullptr;
  std::string name;
  cplx value{};
};

class Evaluator {
 public:
  explicit Evaluator(const Environment& env) : env_(env) {}

  Value eval(const SynNode& n, const Scope* scope) const {
    switch (n.kind) {
      case Syn::Number:
        if (n.i_suffix) {
          // Inside sum(i=..) or prod(i=..), "2i" multiplies the variable.
          for (const Scope* s = scope; s != nullptr; s = s->parent) {
            if (s->name == "i") return n.number.imag() * s->value;
          }
        }
        return n.number;
      case Syn::Name:
        return lookup(n, scope);
      case Syn::Unary: {
        Value v = eval(*n.kids[0], scope);
        if (n.text == "+") return v;
        if (auto* c = std::get_if<cplx>(&v)) return -*c;
        return -std::get<OpExpr>(v);
      }
      case Syn::Binary:
        return binary(n, eval(*n.kids[0], scope), eval(*n.kids[1], scope));
      case Syn::Call:
        return call(n, scope);
      case Syn::Range:
        fail(n, "a range is only allowed as the first argument of sum or prod");
    }
    fail(n, "unknown syntax node");
  }

 private:
  [[noreturn]] static void fail(const SynNode& n, const std::string& msg) {
    throw ParseError(msg, n.line, n.column);
  }

  Value lookup(const SynNode& n, const Scope* scope) const {
    for (const Scope* s = scope; s != nullptr; s = s->parent) {
      if (s->name == n.text) return s->value;
    }
    auto it = env_.values.find(n.text);
    if (it != env_.values.end()) return it->second;
    if (n.text == "im") return cplx(0.0, 1.0);
    if (n.text == "pi") return cplx(std::numbers::pi, 0.0);
    if (env_.registry != nullptr && env_.registry->knows(n.text)) {
      return OpExpr::named(n.text);
    }
    fail(n, "unknown name '" + n.text + "'");
  }

  static cplx scalar(const SynNode& n, const Value& v, const char* what) {
    if (auto* c = std::get_if<cplx>(&v)) return *c;
    fail(n, std::string(what) + " expects a number, got an operator");
  }

  static OpExpr op(const SynNode& n, const Value& v, const char* what) {
    if (auto* e = std::get_if<OpExpr>(&v)) return *e;
    fail(n, std::string(what) + " expects an operator, got a number");
  }

  static long long integer(const SynNode& n, const Value& v) {
    const cplx c = scalar(n, v, "an index");
    const double r = std::round(c.real());
    if (c.imag() != 0.0 || std::abs(c.real() - r) > 1e-9) {
      fail(n, "expected an integer value");
    }
    return static_cast<long long>(r);
  }

  Value binary(const SynNode& n, const Value& a, const Value& b) const {
    const auto* ca = std::get_if<cplx>(&a);
    const auto* cb = std::get_if<cplx>(&b);
    const std::string& o = n.text;
    if (o == "^") {
      const cplx base = scalar(n, a, "'^'");
      const cplx expo = scalar(n, b, "'^'");
      if (expo.imag() == 0.0 && base.imag() == 0.0 &&
          (base.real() >= 0.0 || expo.real() == std::round(expo.real()))) {
        return cplx(std::pow(base.real(), expo.real()), 0.0);
      }
      return std::pow(base, expo);
    }
    if (ca && cb) {
      if (o == "+") return *ca + *cb;
      if (o == "-") return *ca - *cb;
      if (o == "*") return *ca * *cb;
      if (*cb == cplx(0.0)) fail(n, "division by zero");
      return *ca / *cb;
    }
    if (o == "+" || o == "-") {
      if (ca || cb) fail(n, "cannot add a number and an operator");
      const OpExpr& x = std::get<OpExpr>(a);
      const OpExpr& y = std::get<OpExpr>(b);
      return o == "+" ? x + y : x - y;
    }
    if (o == "*") {
      if (ca) return *ca * std::get<OpExpr>(b);
      if (cb) return *cb * std::get<OpExpr>(a);
      return std::get<OpExpr>(a) * std::get<OpExpr>(b);
    }
    if (!cb) fail(n, "only division by a number is supported");
    if (*cb == cplx(0.0)) fail(n, "division by zero");
    return std::get<OpExpr>(a) / *cb;
  }

  Value iterate(const SynNode& n, const Scope* scope, bool is_sum) const {
    if (n.kids.size() != 3 || n.kids[1]->kind != Syn::Range) {
      fail(n, std::string(is_sum ? "sum" : "prod") + " expects (var=a..b, expr)");
    }
    const SynNode& range = *n.kids[1];
    const long long lo = integer(range, eval(*range.kids[0], scope));
    const long long hi = integer(range, eval(*range.kids[1], scope));
    std::optional<Value> acc;
    for (long long k = lo; k <= hi; ++k) {
      Scope inner{scope, range.text, cplx(static_cast<double>(k), 0.0)};
      Value v = eval(*n.kids[2], &inner);
      if (!acc) {
        acc = std::move(v);
        continue;
      }
      const bool acc_scalar = std::holds_alternative<cplx>(*acc);
      const bool v_scalar = std::holds_alternative<cplx>(v);
      if (is_sum && acc_scalar != v_scalar) {
        fail(n, "sum mixes numbers and operators");
      }
      if (is_sum) {
        if (acc_scalar) {
          acc = std::get<cplx>(*acc) + std::get<cplx>(v);
        } else {
          acc = std::get<OpExpr>(*acc) + std::get<OpExpr>(v);
        }
      } else if (acc_scalar && v_scalar) {
        acc = std::get<cplx>(*acc) * std::get<cplx>(v);
      } else if (acc_scalar) {
        acc = std::get<cplx>(*acc) * std::get<OpExpr>(v);
      } else if (v_scalar) {
        acc = std::get<cplx>(v) * std::get<OpExpr>(*acc);
      } else {
        acc = std::get<OpExpr>(*acc) * std::get<OpExpr>(v);
      }
    }
    if (!acc) return is_sum ? OpExpr() : OpExpr::prod({});
    return *acc;
  }

  Value call(const SynNode& n, const Scope* scope) const {
    const SynNode& callee = *n.kids[0];
    const std::size_t argc = n.kids.size() - 1;
    if (callee.kind == Syn::Name && !shadowed(callee.text, scope)) {
      const std::string& f = callee.text;
      if (f == "sum" || f == "prod") return iterate(n, scope, f == "sum");
      if (is_function(f)) {
        std::vector<Value> args;
        for (std::size_t k = 1; k < n.kids.size(); ++k) {
          if (n.kids[k]->kind == Syn::Range) fail(*n.kids[k], "unexpected range");
          args.push_back(eval(*n.kids[k], scope));
        }
        return apply(n, f, args);
      }
    }
    const Value target = eval(callee, scope);
    std::vector<Value> args;
    for (std::size_t k = 1; k < n.kids.size(); ++k) {
      if (n.kids[k]->kind == Syn::Range) fail(*n.kids[k], "unexpected range");
      args.push_back(eval(*n.kids[k], scope));
    }
    if (const auto* c = std::get_if<cplx>(&target)) {
      // A number followed by a parenthesized factor is a product.
      if (argc != 1) fail(n, "a number cannot be indexed");
      Value product = args.front();
      if (auto* pc = std::get_if<cplx>(&product)) return *c * *pc;
      return *c * std::get<OpExpr>(product);
    }
    const OpExpr& g = std::get<OpExpr>(target);
    if (!is_generic(g)) {
      if (argc == 1 && std::holds_alternative<OpExpr>(args.front())) {
        return g * std::get<OpExpr>(args.front());
      }
      fail(n, "only generic operators can be indexed: " + to_string(g));
    }
    std::vector<int> sites;
    for (std::size_t k = 0; k < argc; ++k) {
      sites.push_back(static_cast<int>(integer(*n.kids[k + 1], args[k])));
    }
    try {
      return OpExpr::indexed(g, std::move(sites));
    } catch (const ExprError& e) {
      fail(n, e.what());
    }
  }

  bool shadowed(const std::string& name, const Scope* scope) const {
    for (const Scope* s = scope; s != nullptr; s = s->parent) {
      if (s->name == name) return true;
    }
    return env_.values.count(name) != 0;
  }

  static bool is_function(const std::string& f) {
    static const char* const names[] = {
        "dag",  "exp", "controlled", "Dissipator", "Gate", "tensor", "sqrt",
        "abs",  "real", "imag",      "conj",       "sin",  "cos",    "tan",
        "log",  "div", "mod"};
    for (const char* name : names) {
      if (f == name) return true;
    }
    return false;
  }

  Value apply(const SynNode& n, const std::string& f, const std::vector<Value>& args) const {
    auto need = [&](std::size_t k) {
      if (args.size() != k) {
        fail(n, f + " expects " + std::to_string(k) + " argument(s)");
      }
    };
    if (f == "tensor") {
      if (args.size() < 2) fail(n, "tensor expects at least two operators");
      std::vector<OpExpr> parts;
      for (const auto& a : args) {
        OpExpr e = op(n, a, "tensor");
        if (!is_generic(e)) fail(n, "tensor expects generic operators");
        parts.push_back(std::move(e));
      }
      return OpExpr::tensor(std::move(parts));
    }
    if (f == "div" || f == "mod") {
      need(2);
      const long long a = integer(n, args[0]);
      const long long b = integer(n, args[1]);
      if (b == 0) fail(n, "division by zero");
      long long q = a / b;
      if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
      return cplx(static_cast<double>(f == "div" ? q : a - q * b), 0.0);
    }
    need(1);
    const Value& v = args.front();
    if (f == "dag") {
      if (auto* c = std::get_if<cplx>(&v)) return std::conj(*c);
      try {
        return dag(std::get<OpExpr>(v));
      } catch (const ExprError& e) {
        fail(n, e.what());
      }
    }
    if (f == "exp" || f == "controlled") {
      if (auto* c = std::get_if<cplx>(&v)) {
        if (f == "exp") return std::exp(*c);
        fail(n, "controlled expects an operator");
      }
      const OpExpr& e = std::get<OpExpr>(v);
      if (!is_generic(e)) {
        fail(n, f + " expects a generic operator; index the result instead");
      }
      return f == "exp" ? OpExpr::exp(e) : OpExpr::controlled(e);
    }
    if (f == "Dissipator") return OpExpr::dissipator(op(n, v, "Dissipator"));
    if (f == "Gate") return OpExpr::gate(op(n, v, "Gate"));
    const cplx c = scalar(n, v, f.c_str());
    if (f == "sqrt") {
      if (c.imag() == 0.0 && c.real() >= 0.0) return cplx(std::sqrt(c.real()), 0.0);
      return std::sqrt(c);
    }
    if (f == "abs") return cplx(std::abs(c), 0.0);
    if (f == "real") return cplx(c.real(), 0.0);
    if (f == "imag") return cplx(c.imag(), 0.0);
    if (f == "conj") return std::conj(c);
    if (f == "sin") return std::sin(c);
    if (f == "cos") return std::cos(c);
    if (f == "tan") return std::tan(c);
    return std::log(c);
  }

  const Environment& env_;
};

}  // namespace

Value evaluate(const std::string& text, const Environment& env) {
  SyntaxParser parser(lex(text));
  const SynPtr tree = parser.parse_all();
  return Evaluator(env).eval(*tree, nullptr);
}

OpExpr parse(const std::string& text, const Environment& env) {
  Value v = evaluate(text, env);
  if (auto* e = std::get_if<OpExpr>(&v)) return *e;
  throw ParseError("expected an operator expression, got a number", 1, 1);
}

cplx parse_scalar(const std::string& text, const Environment& env) {
  Value v = evaluate(text, env);
  if (auto* c = std::get_if<cplx>(&v)) return *c;
  throw ParseError("expected a number, got an operator expression", 1, 1);
}

}  // namespace mixmps
