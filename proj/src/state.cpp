#include "mixmps/state.h"

#include <algorithm>
#include <set>

#include "mixmps/linalg.h"

namespace mixmps {

namespace {

const std::vector<std::string> kSiteLabels{"l", "p", "r"};

Tensor site_tensor(Index l, Index p, Index r) {
  return Tensor(kSiteLabels, {l, p, r});
}

Tensor site_tensor(Index l, Index p, Index r, const Matrix& m) {
  return Tensor(kSiteLabels, {l, p, r}, std::vector<cplx>(m.data(), m.data() + m.size()));
}

Index dl(const Tensor& t) { return t.dims()[0]; }
Index dp(const Tensor& t) { return t.dims()[1]; }
Index dr(const Tensor& t) { return t.dims()[2]; }

// Left-multiplies the left bond of t by m (t_new[a,p,r] = sum_l m[a,l] t[l,p,r]).
Tensor absorb_left(const Matrix& m, const Tensor& t) {
  const Matrix out = m * t.matrix(1);
  return site_tensor(m.rows(), dp(t), dr(t), out);
}

// Right-multiplies the right bond of t by m.
Tensor absorb_right(const Tensor& t, const Matrix& m) {
  const Matrix out = t.matrix(2) * m;
  return site_tensor(dl(t), dp(t), m.cols(), out);
}

void left_qr_step(std::vector<Tensor>& ts, std::size_t k) {
  auto [q, r] = linalg::thin_qr(ts[k].matrix(2));
  const Index kept = q.cols();
  ts[k] = site_tensor(dl(ts[k]), dp(ts[k]), kept, q);
  ts[k + 1] = absorb_left(r, ts[k + 1]);
}

void right_qr_step(std::vector<Tensor>& ts, std::size_t k) {
  auto [q, r] = linalg::thin_qr(ts[k].matrix(1).adjoint());
  const Index kept = q.cols();
  const Matrix qh = q.adjoint();
  ts[k] = site_tensor(kept, dp(ts[k]), dr(ts[k]), qh);
  ts[k - 1] = absorb_right(ts[k - 1], r.adjoint());
}

}  // namespace

std::string rep_name(Rep rep) { return rep == Rep::Pure ? "Pure" : "Mixed"; }

Rep parse_rep(const std::string& text) {
  if (text == "Pure") return Rep::Pure;
  if (text == "Mixed") return Rep::Mixed;
  throw std::invalid_argument("unknown representation '" + text +
                              "' (expected Pure or Mixed)");
}

System::System(std::vector<SiteKind> sites) : sites_(std::move(sites)) {
  if (sites_.empty()) throw std::invalid_argument("a system needs at least one site");
}

System System::uniform(const SiteKind& kind, int n) {
  if (n < 1) throw std::invalid_argument("a system needs at least one site");
  return System(std::vector<SiteKind>(static_cast<std::size_t>(n), kind));
}

Index phys_dim(Rep rep, const SiteKind& kind) {
  return rep == Rep::Pure ? kind.dim : kind.dim * kind.dim;
}

State::State(Rep rep, System system, std::vector<Tensor> tensors, std::optional<int> center)
    : rep_(rep), system_(std::move(system)), tensors_(std::move(tensors)), center_(center) {
  const int n = system_.size();
  if (static_cast<int>(tensors_.size()) != n) {
    throw std::invalid_argument("state: tensor count does not match the system size");
  }
  for (int k = 0; k < n; ++k) {
    const Tensor& t = tensors_[static_cast<std::size_t>(k)];
    if (t.labels() != kSiteLabels) {
      throw std::invalid_argument("state: site tensors must carry labels (l, p, r)");
    }
    if (dp(t) != mixmps::phys_dim(rep_, system_[k])) {
      throw std::invalid_argument("state: physical extent mismatch at site " +
                                  std::to_string(k + 1));
    }
    if (k == 0 && dl(t) != 1) throw std::invalid_argument("state: left boundary bond must be 1");
    if (k == n - 1 && dr(t) != 1) {
      throw std::invalid_argument("state: right boundary bond must be 1");
    }
    if (k > 0 && dl(t) != dr(tensors_[static_cast<std::size_t>(k - 1)])) {
      throw std::invalid_argument("state: bond mismatch between sites " +
                                  std::to_string(k) + " and " + std::to_string(k + 1));
    }
  }
  if (center_ && (*center_ < 0 || *center_ >= n)) {
    throw std::invalid_argument("state: center out of range");
  }
}

Index State::phys_dim(int k) const { return dp(site(k)); }

std::vector<Index> State::bond_dims() const {
  std::vector<Index> out;
  for (int k = 0; k + 1 < size(); ++k) out.push_back(dr(site(k)));
  return out;
}

Index State::max_bond_dim() const {
  Index m = 1;
  for (Index b : bond_dims()) m = std::max(m, b);
  return m;
}

State product_state(Rep rep, const System& system, const std::vector<std::string>& names) {
  if (names.size() == 1 && system.size() != 1) {
    return product_state(rep, system, names.front());
  }
  if (static_cast<int>(names.size()) != system.size()) {
    throw std::invalid_argument("product_state: " + std::to_string(names.size()) +
                                " names for " + std::to_string(system.size()) + " sites");
  }
  std::vector<Tensor> ts;
  for (int k = 0; k < system.size(); ++k) {
    const SiteKind& kind = system[k];
    const LocalState ls = named_state(kind, names[static_cast<std::size_t>(k)]);
    const int d = kind.dim;
    if (rep == Rep::Pure) {
      if (!ls.vector) {
        throw std::invalid_argument("state '" + names[static_cast<std::size_t>(k)] +
                                    "' is mixed and needs a Mixed representation");
      }
      ts.push_back(site_tensor(1, d, 1, *ls.vector));
    } else {
      Tensor t = site_tensor(1, static_cast<Index>(d) * d, 1);
      for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) t.data()[i * d + j] = ls.density(i, j);
      }
      ts.push_back(std::move(t));
    }
  }
  std::optional<int> center;
  if (rep == Rep::Pure) center = 0;
  return State(rep, system, std::move(ts), center);
}

State product_state(Rep rep, const System& system, const std::string& name) {
  return product_state(
      rep, system, std::vector<std::string>(static_cast<std::size_t>(system.size()), name));
}

State scaled(const State& s, cplx c) {
  std::vector<Tensor> ts = s.tensors();
  const std::size_t k = s.center() ? static_cast<std::size_t>(*s.center()) : 0;
  ts[k] *= c;
  return State(s.rep(), s.system(), std::move(ts), s.center());
}

State add(const std::vector<std::pair<cplx, State>>& terms, const TruncationLimits& limits) {
  if (terms.empty()) throw std::invalid_argument("add: no states given");
  const State& first = terms.front().second;
  for (const auto& [c, s] : terms) {
    if (s.rep() != first.rep() || !(s.system() == first.system())) {
      throw std::invalid_argument("add: states differ in representation or system");
    }
  }
  const int n = first.size();
  std::vector<Tensor> ts;
  if (n == 1) {
    Tensor t = site_tensor(1, first.phys_dim(0), 1);
    for (const auto& [c, s] : terms) t += c * s.site(0);
    ts.push_back(std::move(t));
  } else {
    for (int k = 0; k < n; ++k) {
      const Index d = first.phys_dim(k);
      Index l_total = 0;
      Index r_total = 0;
      for (const auto& term : terms) {
        l_total += dl(term.second.site(k));
        r_total += dr(term.second.site(k));
      }
      if (k == 0) l_total = 1;
      if (k == n - 1) r_total = 1;
      Tensor t = site_tensor(l_total, d, r_total);
      Index l_off = 0;
      Index r_off = 0;
      for (const auto& [c, s] : terms) {
        const Tensor& src = s.site(k);
        const cplx w = (k == 0) ? c : cplx(1.0);
        for (Index r = 0; r < dr(src); ++r) {
          for (Index p = 0; p < d; ++p) {
            for (Index l = 0; l < dl(src); ++l) {
              const Index lt = (k == 0) ? l : l + l_off;
              const Index rt = (k == n - 1) ? r : r + r_off;
              t.data()[lt + l_total * (p + d * rt)] +=
                  w * src.data()[l + dl(src) * (p + d * r)];
            }
          }
        }
        l_off += dl(src);
        r_off += dr(src);
      }
      ts.push_back(std::move(t));
    }
  }
  return compress(State(first.rep(), first.system(), std::move(ts)), limits);
}

State mix(const State& s) {
  if (s.rep() != Rep::Pure) throw std::invalid_argument("mix: state is already mixed");
  std::vector<Tensor> ts;
  for (int k = 0; k < s.size(); ++k) {
    const Tensor& t = s.site(k);
    const Index l = dl(t), d = dp(t), r = dr(t);
    Tensor out = site_tensor(l * l, d * d, r * r);
    for (Index ra = 0; ra < r; ++ra) {
      for (Index rb = 0; rb < r; ++rb) {
        for (Index i = 0; i < d; ++i) {
          for (Index j = 0; j < d; ++j) {
            for (Index la = 0; la < l; ++la) {
              const cplx a = t.data()[la + l * (i + d * ra)];
              for (Index lb = 0; lb < l; ++lb) {
                const cplx b = std::conj(t.data()[lb + l * (j + d * rb)]);
                out.data()[(la * l + lb) + l * l * ((i * d + j) + d * d * (ra * r + rb))] =
                    a * b;
              }
            }
          }
        }
      }
    }
    ts.push_back(std::move(out));
  }
  return State(Rep::Mixed, s.system(), std::move(ts), s.center());
}

State partial_trace(const State& s, const std::vector<int>& keep) {
  if (s.rep() != Rep::Mixed) throw std::invalid_argument("partial_trace needs a Mixed state");
  if (keep.empty()) throw std::invalid_argument("partial_trace: keep is empty");
  std::set<int> kept(keep.begin(), keep.end());
  for (int k : kept) {
    if (k < 1 || k > s.size()) {
      throw std::invalid_argument("partial_trace: site " + std::to_string(k) +
                                  " out of range");
    }
  }
  std::vector<Tensor> ts;
  std::vector<SiteKind> kinds;
  Matrix pending = Matrix::Identity(1, 1);
  for (int k = 0; k < s.size(); ++k) {
    const Tensor& t = s.site(k);
    if (kept.count(k + 1) != 0) {
      ts.push_back(absorb_left(pending, t));
      kinds.push_back(s.system()[k]);
      pending = Matrix::Identity(dr(t), dr(t));
      continue;
    }
    const Index d = s.system()[k].dim;
    Matrix traced = Matrix::Zero(dl(t), dr(t));
    for (Index i = 0; i < d; ++i) {
      const Index p = i * d + i;
      for (Index r = 0; r < dr(t); ++r) {
        for (Index l = 0; l < dl(t); ++l) traced(l, r) += t.data()[l + dl(t) * (p + dp(t) * r)];
      }
    }
    pending = pending * traced;
  }
  ts.back() = absorb_right(ts.back(), pending);
  return State(Rep::Mixed, System(std::move(kinds)), std::move(ts));
}

State orthogonalize(State s, int c) {
  const int n = s.size();
  if (c < 0 || c >= n) throw std::invalid_argument("orthogonalize: center out of range");
  const Rep rep = s.rep();
  System system = s.system();
  const std::optional<int> old = s.center();
  std::vector<Tensor> ts = std::move(s).take_tensors();
  const int left_from = old ? std::min(*old, c) : 0;
  const int right_from = old ? std::max(*old, c) : n - 1;
  for (int k = left_from; k < c; ++k) left_qr_step(ts, static_cast<std::size_t>(k));
  for (int k = right_from; k > c; --k) right_qr_step(ts, static_cast<std::size_t>(k));
  return State(rep, std::move(system), std::move(ts), c);
}

State compress(State s, const TruncationLimits& limits, double* discarded) {
  limits.validate();
  const int n = s.size();
  double total = 0.0;
  if (n == 1) {
    if (discarded) *discarded = 0.0;
    return orthogonalize(std::move(s), 0);
  }
  const bool right_to_left = s.center() && *s.center() == n - 1;
  if (!right_to_left) s = orthogonalize(std::move(s), 0);
  const Rep rep = s.rep();
  System system = s.system();
  std::vector<Tensor> ts = std::move(s).take_tensors();
  if (right_to_left) {
    for (int k = n - 1; k > 0; --k) {
      Tensor& t = ts[static_cast<std::size_t>(k)];
      auto res = linalg::truncated_svd(t.matrix(1), limits);
      total += res.discarded;
      const Index kept = res.s.size();
      t = site_tensor(kept, dp(t), dr(t), res.vh);
      const Matrix us = res.u * res.s.cast<cplx>().asDiagonal();
      ts[static_cast<std::size_t>(k - 1)] = absorb_right(ts[static_cast<std::size_t>(k - 1)], us);
    }
    if (discarded) *discarded = total;
    return State(rep, std::move(system), std::move(ts), 0);
  }
  for (int k = 0; k + 1 < n; ++k) {
    Tensor& t = ts[static_cast<std::size_t>(k)];
    auto res = linalg::truncated_svd(t.matrix(2), limits);
    total += res.discarded;
    const Index kept = res.s.size();
    t = site_tensor(dl(t), dp(t), kept, res.u);
    const Matrix sv = res.s.cast<cplx>().asDiagonal() * res.vh;
    ts[static_cast<std::size_t>(k + 1)] = absorb_left(sv, ts[static_cast<std::size_t>(k + 1)]);
  }
  if (discarded) *discarded = total;
  return State(rep, std::move(system), std::move(ts), n - 1);
}

Vector to_dense(const State& s) {
  Matrix acc = Matrix::Identity(1, 1);
  for (int k = 0; k < s.size(); ++k) {
    const Tensor& t = s.site(k);
    const Index l = dl(t), d = dp(t), r = dr(t);
    Matrix next(acc.rows() * d, r);
    for (Index p = 0; p < d; ++p) {
      Eigen::Map<const Matrix, 0, Eigen::OuterStride<>> slice(t.data() + l * p, l, r,
                                                             Eigen::OuterStride<>(l * d));
      const Matrix part = acc * slice;
      for (Index a = 0; a < acc.rows(); ++a) next.row(a * d + p) = part.row(a);
    }
    acc = std::move(next);
  }
  return acc.col(0);
}

Matrix density_matrix(const State& s) {
  const Vector v = to_dense(s);
  if (s.rep() == Rep::Pure) return v * v.adjoint();
  Index dim = 1;
  for (const auto& k : s.system().sites()) dim *= k.dim;
  Matrix rho(dim, dim);
  const int n = s.size();
  for (Index idx = 0; idx < v.size(); ++idx) {
    Index rest = idx;
    Index row = 0, col = 0, stride = 1;
    for (int k = n - 1; k >= 0; --k) {
      const Index d = s.system()[k].dim;
      const Index pair = rest % (d * d);
      rest /= d * d;
      row += (pair / d) * stride;
      col += (pair % d) * stride;
      stride *= d;
    }
    rho(row, col) = v[idx];
  }
  return rho;
}

std::vector<std::pair<int, int>> complete_graph_edges(int n) {
  std::vector<std::pair<int, int>> out;
  for (int a = 1; a <= n; ++a) {
    for (int b = a + 1; b <= n; ++b) out.emplace_back(a, b);
  }
  return out;
}

}  // namespace mixmps
