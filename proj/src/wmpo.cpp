#include <algorithm>

#include "fsm.h"

namespace mixmps {

namespace {

using detail::BondState;
using detail::SiteGrid;

Index find_state(const std::vector<BondState>& bond, BondState s) {
  auto it = std::find(bond.begin(), bond.end(), s);
  if (it == bond.end()) throw std::logic_error("w_mpo: bond lost its init or final state");
  return static_cast<Index>(it - bond.begin());
}

std::vector<Index> lanes(const std::vector<BondState>& bond) {
  std::vector<Index> out;
  for (std::size_t k = 0; k < bond.size(); ++k) {
    if (bond[k] == BondState::Lane) out.push_back(static_cast<Index>(k));
  }
  return out;
}

Matrix cell_or_zero(const SiteGrid& g, Index r, Index c) {
  if (g.empty(r, c)) return Matrix::Zero(g.d, g.d);
  return g.at(r, c);
}

bool is_zero(const Matrix& m) { return m.isZero(0.0); }

// Lower-left block of exp([[x, 0], [y, x]]).
Matrix corner2(const Matrix& x, const Matrix& y) {
  const Index d = x.rows();
  Matrix big = Matrix::Zero(2 * d, 2 * d);
  big.topLeftCorner(d, d) = x;
  big.bottomRightCorner(d, d) = x;
  big.block(d, 0, d, d) = y;
  return matrix_exponential(big).block(d, 0, d, d);
}

}  // namespace

Mpo w_mpo(const TermSum& ts, cplx tau, WVariant variant) {
  const int n = ts.system.size();
  const detail::Fsm fsm = detail::build_fsm(ts, true);
  const cplx sq = std::sqrt(tau);
  std::vector<Tensor> tensors;
  for (int k = 0; k < n; ++k) {
    const SiteGrid& g = fsm.sites[static_cast<std::size_t>(k)];
    const Index d = g.d;
    const Matrix id = Matrix::Identity(d, d);
    const bool first = k == 0;
    const bool last = k == n - 1;
    const Index init_row = first ? 0 : find_state(fsm.bonds[static_cast<std::size_t>(k - 1)], BondState::Init);
    const Index final_col = last ? 0 : find_state(fsm.bonds[static_cast<std::size_t>(k)], BondState::Final);
    const std::vector<Index> row_lanes =
        first ? std::vector<Index>{} : lanes(fsm.bonds[static_cast<std::size_t>(k - 1)]);
    const std::vector<Index> col_lanes =
        last ? std::vector<Index>{} : lanes(fsm.bonds[static_cast<std::size_t>(k)]);

    const Matrix td = tau * cell_or_zero(g, init_row, final_col);
    SiteGrid w(1 + static_cast<Index>(row_lanes.size()), 1 + static_cast<Index>(col_lanes.size()), d);
    if (variant == WVariant::WI) {
      w.at(0, 0) = id + td;
      for (std::size_t b = 0; b < col_lanes.size(); ++b) {
        w.at(0, static_cast<Index>(b + 1)) = sq * cell_or_zero(g, init_row, col_lanes[b]);
      }
      for (std::size_t a = 0; a < row_lanes.size(); ++a) {
        w.at(static_cast<Index>(a + 1), 0) = sq * cell_or_zero(g, row_lanes[a], final_col);
        for (std::size_t b = 0; b < col_lanes.size(); ++b) {
          w.at(static_cast<Index>(a + 1), static_cast<Index>(b + 1)) =
              cell_or_zero(g, row_lanes[a], col_lanes[b]);
        }
      }
    } else {
      w.at(0, 0) = matrix_exponential(td);
      std::vector<Matrix> cs, bs;
      for (Index lane : col_lanes) cs.push_back(sq * cell_or_zero(g, init_row, lane));
      for (Index lane : row_lanes) bs.push_back(sq * cell_or_zero(g, lane, final_col));
      for (std::size_t b = 0; b < cs.size(); ++b) {
        w.at(0, static_cast<Index>(b + 1)) = is_zero(cs[b]) ? Matrix::Zero(d, d) : corner2(td, cs[b]);
      }
      for (std::size_t a = 0; a < bs.size(); ++a) {
        w.at(static_cast<Index>(a + 1), 0) = is_zero(bs[a]) ? Matrix::Zero(d, d) : corner2(td, bs[a]);
        for (std::size_t b = 0; b < cs.size(); ++b) {
          const Matrix aa = cell_or_zero(g, row_lanes[a], col_lanes[b]);
          if (is_zero(aa) && (is_zero(bs[a]) || is_zero(cs[b]))) continue;
          // Blocks ordered (00, 01, 10, 11) over two auxiliary bits.
          Matrix x = Matrix::Zero(4 * d, 4 * d);
          for (Index q = 0; q < 4; ++q) x.block(q * d, q * d, d, d) = td;
          x.block(2 * d, 0, d, d) = bs[a];
          x.block(3 * d, d, d, d) = bs[a];
          x.block(d, 0, d, d) = cs[b];
          x.block(3 * d, 2 * d, d, d) = cs[b];
          x.block(3 * d, 0, d, d) = aa;
          w.at(static_cast<Index>(a + 1), static_cast<Index>(b + 1)) =
              matrix_exponential(x).block(3 * d, 0, d, d);
        }
      }
    }
    tensors.push_back(detail::grid_to_tensor(w));
  }
  return Mpo(ts.rep, ts.system, std::move(tensors));
}

}  // namespace mixmps
