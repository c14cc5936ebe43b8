#include "mixmps/measurement.h"

#include <cmath>

#include "mixmps/linalg.h"

namespace mixmps {

namespace {

using Slice = Eigen::Map<const Matrix, 0, Eigen::OuterStride<>>;

Slice slice(const Tensor& t, Index p) {
  const Index l = t.dims()[0], d = t.dims()[1], r = t.dims()[2];
  return Slice(t.data() + l * p, l, r, Eigen::OuterStride<>(l * d));
}

// Vectorized identity of a site in the Mixed representation.
Vector identity_vector(const SiteKind& kind) {
  const Index d = kind.dim;
  Vector v = Vector::Zero(d * d);
  for (Index i = 0; i < d; ++i) v[i * d + i] = 1.0;
  return v;
}

// sum_p w_p T[:, p, :]
Matrix weighted_slices(const Tensor& t, const Vector& w) {
  Matrix m = Matrix::Zero(t.dims()[0], t.dims()[2]);
  for (Index p = 0; p < t.dims()[1]; ++p) {
    if (w[p] != cplx(0.0)) m += w[p] * slice(t, p);
  }
  return m;
}

// T'[:, p, :] = sum_q o(p, q) T[:, q, :]
Tensor apply_local(const Tensor& t, const Matrix& o) {
  const Tensor p = t.permuted({"p", "l", "r"});
  Tensor out = p;
  out.matrix(1) = o * p.matrix(1);
  return out.permuted({"l", "p", "r"});
}

Matrix pure_left_step(const Matrix& env, const Tensor& bra, const Tensor& ket) {
  Matrix out = Matrix::Zero(bra.dims()[2], ket.dims()[2]);
  for (Index p = 0; p < bra.dims()[1]; ++p) {
    out.noalias() += slice(bra, p).adjoint() * env * slice(ket, p);
  }
  return out;
}

Matrix pure_right_step(const Matrix& env, const Tensor& t) {
  Matrix out = Matrix::Zero(t.dims()[0], t.dims()[0]);
  for (Index p = 0; p < t.dims()[1]; ++p) {
    out.noalias() += slice(t, p) * env * slice(t, p).adjoint();
  }
  return out;
}

}  // namespace

Measurer::Measurer(const State& s) : state_(s) {
  const int n = s.size();
  left_.resize(static_cast<std::size_t>(n + 1));
  right_.resize(static_cast<std::size_t>(n + 1));
  left_[0] = Matrix::Ones(1, 1);
  right_[static_cast<std::size_t>(n)] = Matrix::Ones(1, 1);
  if (s.rep() == Rep::Mixed) {
    for (int k = 0; k < n; ++k) {
      const Matrix e = weighted_slices(s.site(k), identity_vector(s.system()[k]));
      left_[static_cast<std::size_t>(k + 1)] = left_[static_cast<std::size_t>(k)] * e;
    }
    for (int k = n - 1; k >= 0; --k) {
      const Matrix e = weighted_slices(s.site(k), identity_vector(s.system()[k]));
      right_[static_cast<std::size_t>(k)] = e * right_[static_cast<std::size_t>(k + 1)];
    }
  } else {
    for (int k = 0; k < n; ++k) {
      left_[static_cast<std::size_t>(k + 1)] =
          pure_left_step(left_[static_cast<std::size_t>(k)], s.site(k), s.site(k));
    }
    for (int k = n - 1; k >= 0; --k) {
      right_[static_cast<std::size_t>(k)] =
          pure_right_step(right_[static_cast<std::size_t>(k + 1)], s.site(k));
    }
  }
}

cplx Measurer::trace() const {
  const Matrix& l = left_.back();
  return l.size() == 1 ? l(0, 0) : l.trace();
}

cplx Measurer::term_value(const Term& t) const {
  if (t.factors.empty()) return t.coef * trace();
  const int first = t.factors.front().site;
  const int last = t.factors.back().site;
  std::size_t f = 0;
  if (state_.rep() == Rep::Mixed) {
    Matrix v = left_[static_cast<std::size_t>(first)];
    for (int k = first; k <= last; ++k) {
      Vector w = identity_vector(state_.system()[k]);
      if (f < t.factors.size() && t.factors[f].site == k) {
        w = (w.transpose() * t.factors[f++].matrix).transpose();
      }
      v = v * weighted_slices(state_.site(k), w);
    }
    return t.coef * (v * right_[static_cast<std::size_t>(last + 1)])(0, 0);
  }
  Matrix env = left_[static_cast<std::size_t>(first)];
  for (int k = first; k <= last; ++k) {
    const Tensor& ket = state_.site(k);
    if (f < t.factors.size() && t.factors[f].site == k) {
      env = pure_left_step(env, ket, apply_local(ket, t.factors[f++].matrix));
    } else {
      env = pure_left_step(env, ket, ket);
    }
  }
  return t.coef * (env * right_[static_cast<std::size_t>(last + 1)]).trace();
}

cplx Measurer::expect(const TermSum& ts) const {
  if (ts.rep != state_.rep() || !(ts.system == state_.system())) {
    throw std::invalid_argument("expect: observable lowered for a different system");
  }
  cplx acc = 0.0;
  for (const auto& t : ts.terms) acc += term_value(t);
  return acc;
}

cplx Measurer::expect(const OpExpr& expr, const OperatorRegistry& registry) const {
  return expect(lower_observable(expr, state_.system(), state_.rep(), registry));
}

std::vector<std::optional<cplx>> Measurer::expect_sites(const OpExpr& op,
                                                        const OperatorRegistry& registry) const {
  std::vector<std::optional<cplx>> out;
  for (int k = 0; k < state_.size(); ++k) {
    try {
      local_matrix(op, {state_.system()[k]}, registry);
    } catch (const std::invalid_argument&) {
      out.emplace_back(std::nullopt);
      continue;
    }
    out.emplace_back(expect(op(k + 1), registry));
  }
  return out;
}

Matrix Measurer::correlation_matrix(const OpExpr& a, const OpExpr& b,
                                    const OperatorRegistry& registry) const {
  const int n = state_.size();
  Matrix out(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) out(i, j) = expect(a(i + 1) * b(j + 1), registry);
  }
  return out;
}

cplx expect(const State& s, const OpExpr& expr, const OperatorRegistry& registry) {
  return Measurer(s).expect(expr, registry);
}

std::vector<std::optional<cplx>> expect_sites(const State& s, const OpExpr& op,
                                              const OperatorRegistry& registry) {
  return Measurer(s).expect_sites(op, registry);
}

Matrix correlation_matrix(const State& s, const OpExpr& a, const OpExpr& b,
                          const OperatorRegistry& registry) {
  return Measurer(s).correlation_matrix(a, b, registry);
}

namespace {

double norm2(const State& s) {
  const int c = s.center() ? *s.center() : 0;
  const State o = orthogonalize(s, c);
  const double n = o.site(c).norm();
  return n * n;
}

}  // namespace

cplx trace(const State& s) {
  if (s.rep() == Rep::Pure) return norm2(s);
  return Measurer(s).trace();
}

cplx trace2(const State& s) {
  const double n2 = norm2(s);
  return s.rep() == Rep::Pure ? n2 * n2 : n2;
}

double purity(const State& s) {
  if (s.rep() == Rep::Pure) return 1.0;
  const cplx t = trace(s);
  return trace2(s).real() / std::norm(t);
}

double renyi2(const State& s) { return -std::log(purity(s)); }

double osee(const State& s, int bond) {
  if (bond < 1 || bond >= s.size()) {
    throw std::invalid_argument("osee: bond " + std::to_string(bond) + " out of range 1.." +
                                std::to_string(s.size() - 1));
  }
  const State o = orthogonalize(s, bond - 1);
  const auto sv = linalg::svd(o.site(bond - 1).matrix(2)).s;
  const double total = sv.squaredNorm();
  if (total == 0.0) return 0.0;
  double entropy = 0.0;
  for (Index k = 0; k < sv.size(); ++k) {
    const double p = sv[k] * sv[k] / total;
    if (p > 0.0) entropy -= p * std::log(p);
  }
  return entropy;
}

double trace_error(const State& s) { return std::abs(trace(s) - 1.0); }

}  // namespace mixmps
