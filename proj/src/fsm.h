#pragma once

#include <vector>

#include "mixmps/mpo.h"

namespace mixmps::detail {

enum class BondState { Init, Final, Lane };

/// Operator-valued matrix of one MPO site; empty cells are zero.
struct SiteGrid {
  Index rows = 0;
  Index cols = 0;
  Index d = 0;
  std::vector<Matrix> cells;  // row-major, rows * cols

  SiteGrid(Index r, Index c, Index dim)
      : rows(r), cols(c), d(dim), cells(static_cast<std::size_t>(r * c)) {}

  Matrix& at(Index r, Index c) { return cells[static_cast<std::size_t>(r * cols + c)]; }
  const Matrix& at(Index r, Index c) const {
    return cells[static_cast<std::size_t>(r * cols + c)];
  }
  bool empty(Index r, Index c) const { return at(r, c).size() == 0; }
  void add(Index r, Index c, const Matrix& m);
};

/// Site grids plus the role of every internal bond state.
struct Fsm {
  std::vector<SiteGrid> sites;
  std::vector<std::vector<BondState>> bonds;  // N-1 entries
};

/// Finite-state-machine MPO. With `keep_boundary` the init and final states
/// stay in every bond and are never merged (needed for W approximants).
Fsm build_fsm(const TermSum& ts, bool keep_boundary);

Tensor grid_to_tensor(const SiteGrid& g);

}  // namespace mixmps::detail
