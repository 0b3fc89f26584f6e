#pragma once

#include <cstddef>
#include <vector>

#include "irnn/cells.hpp"
#include "irnn/numerics.hpp"

namespace irnn {

/// One training window: T_p warmup steps followed by T_f horizon steps.
///
/// u[t-1], y[t-1] hold u_t, y_t for t = 1..T. e_stored[t-1] holds the stored
/// innovation e_t for t = 1..T_p; step t of the recursion consumes e_{t-1}
/// (e_0 = 0), so e_stored[T_p-1] is kept for completeness but never read.
struct Trajectory {
  std::vector<Vector> u;
  std::vector<Vector> y;
  std::vector<Vector> e_stored;
  std::size_t t_past = 0;    // T_p
  std::size_t t_future = 0;  // T_f
  std::size_t start = 0;     // provenance: row index of u_1 in the source series

  std::size_t length() const noexcept { return t_past + t_future; }

  /// Throws ShapeError when lengths or vector dims are inconsistent with `dims`.
  void validate(Dims dims) const;
  /// Sets every stored innovation to zero (length T_p, dim n_y).
  void reset_innovations(std::size_t n_y);
};

}  // namespace irnn
