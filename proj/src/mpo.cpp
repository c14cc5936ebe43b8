#include <algorithm>
#include <limits>
#include <cmath>

#include "fsm.h"
#include "mixmps/linalg.h"

namespace mixmps {

namespace detail {

void SiteGrid::add(Index r, Index c, const Matrix& m) {
  Matrix& cell = at(r, c);
  if (cell.size() == 0) {
    cell = m;
  } else {
    cell += m;
  }
}

namespace {

double cell_norm2(const Matrix& m) { return m.size() == 0 ? 0.0 : m.squaredNorm(); }

cplx cell_dot(const Matrix& a, const Matrix& b) {
  if (a.size() == 0 || b.size() == 0) return 0.0;
  return (a.array().conjugate() * b.array()).sum();
}

// Column j of g equals lambda * column i (within tolerance)?
bool proportional_cols(const SiteGrid& g, Index i, Index j, cplx& lambda) {
  double ni = 0.0, nj = 0.0;
  cplx dot = 0.0;
  for (Index r = 0; r < g.rows; ++r) {
    ni += cell_norm2(g.at(r, i));
    nj += cell_norm2(g.at(r, j));
    dot += cell_dot(g.at(r, i), g.at(r, j));
  }
  if (ni == 0.0 || nj == 0.0) return false;
  lambda = dot / ni;
  double resid = 0.0;
  for (Index r = 0; r < g.rows; ++r) {
    const Matrix& a = g.at(r, i);
    const Matrix& b = g.at(r, j);
    if (a.size() == 0 && b.size() == 0) continue;
    if (a.size() == 0) {
      resid += b.squaredNorm();
    } else if (b.size() == 0) {
      resid += std::norm(lambda) * a.squaredNorm();
    } else {
      resid += (b - lambda * a).squaredNorm();
    }
  }
  return resid <= 1e-26 * nj;
}

bool proportional_rows(const SiteGrid& g, Index i, Index j, cplx& lambda) {
  double ni = 0.0, nj = 0.0;
  cplx dot = 0.0;
  for (Index c = 0; c < g.cols; ++c) {
    ni += cell_norm2(g.at(i, c));
    nj += cell_norm2(g.at(j, c));
    dot += cell_dot(g.at(i, c), g.at(j, c));
  }
  if (ni == 0.0 || nj == 0.0) return false;
  lambda = dot / ni;
  double resid = 0.0;
  for (Index c = 0; c < g.cols; ++c) {
    const Matrix& a = g.at(i, c);
    const Matrix& b = g.at(j, c);
    if (a.size() == 0 && b.size() == 0) continue;
    if (a.size() == 0) {
      resid += b.squaredNorm();
    } else if (b.size() == 0) {
      resid += std::norm(lambda) * a.squaredNorm();
    } else {
      resid += (b - lambda * a).squaredNorm();
    }
  }
  return resid <= 1e-26 * nj;
}

bool zero_col(const SiteGrid& g, Index c) {
  for (Index r = 0; r < g.rows; ++r) {
    if (cell_norm2(g.at(r, c)) != 0.0) return false;
  }
  return true;
}

bool zero_row(const SiteGrid& g, Index r) {
  for (Index c = 0; c < g.cols; ++c) {
    if (cell_norm2(g.at(r, c)) != 0.0) return false;
  }
  return true;
}

SiteGrid erase_col(const SiteGrid& g, Index j) {
  SiteGrid out(g.rows, g.cols - 1, g.d);
  for (Index r = 0; r < g.rows; ++r) {
    for (Index c = 0, k = 0; c < g.cols; ++c) {
      if (c == j) continue;
      out.at(r, k++) = g.at(r, c);
    }
  }
  return out;
}

SiteGrid erase_row(const SiteGrid& g, Index j) {
  SiteGrid out(g.rows - 1, g.cols, g.d);
  for (Index r = 0, k = 0; r < g.rows; ++r) {
    if (r == j) continue;
    for (Index c = 0; c < g.cols; ++c) out.at(k, c) = g.at(r, c);
    ++k;
  }
  return out;
}

bool mergeable(BondState s, bool keep_boundary) {
  return !keep_boundary || s == BondState::Lane;
}

// One pass of pruning and merging; returns true when anything changed.
bool simplify(Fsm& fsm, bool keep_boundary) {
  bool changed = false;
  const std::size_t nb = fsm.bonds.size();
  // Zero states.
  for (std::size_t b = 0; b < nb; ++b) {
    SiteGrid& left = fsm.sites[b];
    SiteGrid& right = fsm.sites[b + 1];
    for (Index j = left.cols - 1; j >= 0; --j) {
      if (!mergeable(fsm.bonds[b][static_cast<std::size_t>(j)], keep_boundary)) continue;
      if (left.cols == 1) break;
      if (zero_col(left, j) || zero_row(right, j)) {
        left = erase_col(left, j);
        right = erase_row(right, j);
        fsm.bonds[b].erase(fsm.bonds[b].begin() + j);
        changed = true;
      }
    }
  }
  // Left to right: proportional columns.
  for (std::size_t b = 0; b < nb; ++b) {
    SiteGrid& left = fsm.sites[b];
    SiteGrid& right = fsm.sites[b + 1];
    for (Index j = left.cols - 1; j >= 1; --j) {
      if (!mergeable(fsm.bonds[b][static_cast<std::size_t>(j)], keep_boundary)) continue;
      for (Index i = 0; i < j; ++i) {
        if (!mergeable(fsm.bonds[b][static_cast<std::size_t>(i)], keep_boundary)) continue;
        cplx lambda;
        if (!proportional_cols(left, i, j, lambda)) continue;
        for (Index c = 0; c < right.cols; ++c) {
          if (!right.empty(j, c)) right.add(i, c, lambda * right.at(j, c));
        }
        left = erase_col(left, j);
        right = erase_row(right, j);
        fsm.bonds[b].erase(fsm.bonds[b].begin() + j);
        changed = true;
        break;
      }
    }
  }
  // Right to left: proportional rows.
  for (std::size_t b = nb; b-- > 0;) {
    SiteGrid& left = fsm.sites[b];
    SiteGrid& right = fsm.sites[b + 1];
    for (Index j = right.rows - 1; j >= 1; --j) {
      if (!mergeable(fsm.bonds[b][static_cast<std::size_t>(j)], keep_boundary)) continue;
      for (Index i = 0; i < j; ++i) {
        if (!mergeable(fsm.bonds[b][static_cast<std::size_t>(i)], keep_boundary)) continue;
        cplx lambda;
        if (!proportional_rows(right, i, j, lambda)) continue;
        for (Index r = 0; r < left.rows; ++r) {
          if (!left.empty(r, j)) left.add(r, i, lambda * left.at(r, j));
        }
        left = erase_col(left, j);
        right = erase_row(right, j);
        fsm.bonds[b].erase(fsm.bonds[b].begin() + j);
        changed = true;
        break;
      }
    }
  }
  return changed;
}

}  // namespace

Fsm build_fsm(const TermSum& ts, bool keep_boundary) {
  const int n = ts.system.size();
  std::vector<Index> dims;
  for (int k = 0; k < n; ++k) dims.push_back(phys_dim(ts.rep, ts.system[k]));
  auto identity = [&](int k) {
    return Matrix::Identity(dims[static_cast<std::size_t>(k)], dims[static_cast<std::size_t>(k)]);
  };

  Fsm fsm;
  if (n == 1) {
    SiteGrid g(1, 1, dims[0]);
    for (const auto& t : ts.terms) {
      g.add(0, 0, t.factors.empty() ? Matrix(t.coef * identity(0))
                                    : Matrix(t.coef * t.factors.front().matrix));
    }
    if (g.empty(0, 0)) g.at(0, 0) = Matrix::Zero(dims[0], dims[0]);
    fsm.sites.push_back(std::move(g));
    return fsm;
  }

  // Lane ids per bond.
  fsm.bonds.assign(static_cast<std::size_t>(n - 1), {BondState::Init, BondState::Final});
  std::vector<std::vector<Index>> lane_of(ts.terms.size());
  for (std::size_t t = 0; t < ts.terms.size(); ++t) {
    const auto& f = ts.terms[t].factors;
    if (f.size() < 2) continue;
    for (int b = f.front().site; b < f.back().site; ++b) {
      lane_of[t].push_back(static_cast<Index>(fsm.bonds[static_cast<std::size_t>(b)].size()));
      fsm.bonds[static_cast<std::size_t>(b)].push_back(BondState::Lane);
    }
  }
  constexpr Index kInit = 0, kFinal = 1;
  for (int k = 0; k < n; ++k) {
    const Index rows = k == 0 ? 1 : static_cast<Index>(fsm.bonds[static_cast<std::size_t>(k - 1)].size());
    const Index cols = k == n - 1 ? 1 : static_cast<Index>(fsm.bonds[static_cast<std::size_t>(k)].size());
    fsm.sites.emplace_back(rows, cols, dims[static_cast<std::size_t>(k)]);
  }
  // Row/column positions of init and final at each site boundary.
  auto row_final = [](int k) { return k == 0 ? Index{-1} : kFinal; };
  auto col_final = [&](int k) { return k == n - 1 ? Index{0} : kFinal; };
  for (int k = 0; k < n; ++k) {
    SiteGrid& g = fsm.sites[static_cast<std::size_t>(k)];
    if (k < n - 1) g.at(kInit, kInit) = identity(k);
    if (k > 0) g.at(row_final(k), col_final(k)) = identity(k);
  }
  for (std::size_t t = 0; t < ts.terms.size(); ++t) {
    const Term& term = ts.terms[t];
    const auto& f = term.factors;
    if (term.coef == cplx(0.0)) continue;
    if (f.empty()) {
      fsm.sites[0].add(kInit, col_final(0), term.coef * identity(0));
      continue;
    }
    if (f.size() == 1) {
      const int k = f.front().site;
      fsm.sites[static_cast<std::size_t>(k)].add(kInit, col_final(k), term.coef * f.front().matrix);
      continue;
    }
    const int first = f.front().site;
    const int last = f.back().site;
    std::size_t next = 0;
    for (int k = first; k <= last; ++k) {
      Matrix m;
      if (next < f.size() && f[next].site == k) {
        m = f[next++].matrix;
      } else {
        m = identity(k);
      }
      SiteGrid& g = fsm.sites[static_cast<std::size_t>(k)];
      const Index row = k == first ? kInit : lane_of[t][static_cast<std::size_t>(k - 1 - first)];
      const Index col = k == last ? col_final(k) : lane_of[t][static_cast<std::size_t>(k - first)];
      g.add(row, col, k == first ? Matrix(term.coef * m) : m);
    }
  }
  for (int pass = 0; pass < 8; ++pass) {
    if (!simplify(fsm, keep_boundary)) break;
  }
  return fsm;
}

Tensor grid_to_tensor(const SiteGrid& g) {
  const Index d = g.d;
  Tensor t({"l", "o", "i", "r"}, {g.rows, d, d, g.cols});
  cplx* data = t.data();
  for (Index r = 0; r < g.rows; ++r) {
    for (Index c = 0; c < g.cols; ++c) {
      const Matrix& m = g.at(r, c);
      if (m.size() == 0) continue;
      for (Index i = 0; i < d; ++i) {
        for (Index o = 0; o < d; ++o) data[r + g.rows * (o + d * (i + d * c))] = m(o, i);
      }
    }
  }
  return t;
}

}  // namespace detail

Mpo::Mpo(Rep rep, System system, std::vector<Tensor> tensors)
    : rep_(rep), system_(std::move(system)), tensors_(std::move(tensors)) {
  const int n = system_.size();
  if (static_cast<int>(tensors_.size()) != n) {
    throw std::invalid_argument("mpo: tensor count does not match the system size");
  }
  for (int k = 0; k < n; ++k) {
    const Tensor& t = tensors_[static_cast<std::size_t>(k)];
    const Index d = phys_dim(rep_, system_[k]);
    if (t.rank() != 4 || t.labels() != std::vector<std::string>{"l", "o", "i", "r"}) {
      throw std::invalid_argument("mpo: site tensors must carry labels (l, o, i, r)");
    }
    if (t.dims()[1] != d || t.dims()[2] != d) {
      throw std::invalid_argument("mpo: physical extent mismatch at site " +
                                  std::to_string(k + 1));
    }
    if ((k == 0 && t.dims()[0] != 1) || (k == n - 1 && t.dims()[3] != 1)) {
      throw std::invalid_argument("mpo: boundary bonds must be 1");
    }
    if (k > 0 && t.dims()[0] != tensors_[static_cast<std::size_t>(k - 1)].dims()[3]) {
      throw std::invalid_argument("mpo: bond mismatch at site " + std::to_string(k + 1));
    }
  }
}

std::vector<Index> Mpo::bond_dims() const {
  std::vector<Index> out;
  for (int k = 0; k + 1 < size(); ++k) out.push_back(site(k).dims()[3]);
  return out;
}

Mpo mpo_from_terms(const TermSum& ts) {
  detail::Fsm fsm = detail::build_fsm(ts, false);
  std::vector<Tensor> tensors;
  for (const auto& g : fsm.sites) tensors.push_back(detail::grid_to_tensor(g));
  return Mpo(ts.rep, ts.system, std::move(tensors));
}

Matrix dense_matrix(const Mpo& m) {
  // acc[b] is the operator on the sites so far, ending in right bond state b.
  std::vector<Matrix> acc{Matrix::Identity(1, 1)};
  for (int k = 0; k < m.size(); ++k) {
    const Tensor& w = m.site(k);
    const Index wl = w.dims()[0], d = w.dims()[1], wr = w.dims()[3];
    const Index prev = acc.front().rows();
    std::vector<Matrix> next(static_cast<std::size_t>(wr), Matrix::Zero(prev * d, prev * d));
    for (Index r = 0; r < wr; ++r) {
      for (Index l = 0; l < wl; ++l) {
        Matrix local(d, d);
        for (Index i = 0; i < d; ++i) {
          for (Index o = 0; o < d; ++o) local(o, i) = w.data()[l + wl * (o + d * (i + d * r))];
        }
        if (local.isZero(0.0)) continue;
        next[static_cast<std::size_t>(r)] += linalg::kron(acc[static_cast<std::size_t>(l)], local);
      }
    }
    acc = std::move(next);
  }
  return acc.front();
}

State apply_mpo(const Mpo& m, const State& s, const TruncationLimits& limits, double* discarded) {
  limits.validate();
  if (m.rep() != s.rep() || !(m.system() == s.system())) {
    throw std::invalid_argument("apply_mpo: operator and state differ in system or representation");
  }
  const int n = s.size();
  State start = orthogonalize(s, 0);
  // The zip-up truncates in a non-orthogonal gauge, so it keeps a margin;
  // the final compression enforces the requested limits.
  TruncationLimits zip = limits;
  zip.cutoff = limits.cutoff / 10.0;
  zip.maxdim = limits.maxdim > std::numeric_limits<Index>::max() / 2 ? limits.maxdim : 2 * limits.maxdim;
  double total = 0.0;
  std::vector<Tensor> out;
  out.reserve(static_cast<std::size_t>(n));
  Tensor carry({"nl", "wl", "l"}, {1, 1, 1}, {cplx(1.0)});
  for (int k = 0; k < n; ++k) {
    const Tensor theta = contract(carry, start.site(k), {{"l", "l"}});  // nl wl p r
    const Tensor w = m.site(k).relabeled("r", "wr");
    Tensor full = contract(theta, w, {{"wl", "l"}, {"p", "i"}});       // nl r o wr
    if (k == n - 1) {
      const Tensor t = full.permuted({"nl", "o", "r", "wr"});
      out.push_back(t.reshaped({"l", "p", "r"}, {t.dims()[0], t.dims()[1], 1}));
      break;
    }
    full = full.permuted({"nl", "o", "wr", "r"});
    const Index nl = full.dims()[0], o = full.dims()[1], wr = full.dims()[2], r = full.dims()[3];
    auto res = linalg::truncated_svd(full.matrix(2), zip);
    total += res.discarded;
    const Index kept = res.s.size();
    out.emplace_back(std::vector<std::string>{"l", "p", "r"}, std::vector<Index>{nl, o, kept},
                     std::vector<cplx>(res.u.data(), res.u.data() + res.u.size()));
    const Matrix sv = res.s.cast<cplx>().asDiagonal() * res.vh;
    carry = Tensor({"nl", "wl", "l"}, {kept, wr, r},
                   std::vector<cplx>(sv.data(), sv.data() + sv.size()));
  }
  double tail = 0.0;
  State result = compress(State(s.rep(), s.system(), std::move(out), n - 1), limits, &tail);
  if (discarded) *discarded = total + tail;
  return result;
}

}  // namespace mixmps
