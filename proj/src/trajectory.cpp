#include "irnn/trajectory.hpp"

#include <string>

#include "irnn/errors.hpp"

namespace irnn {

void Trajectory::validate(Dims dims) const {
  const std::size_t T = length();
  if (t_past < 1) throw ShapeError("trajectory: T_p must be at least 1");
  if (u.size() != T || y.size() != T)
    throw ShapeError("trajectory: |u| = " + std::to_string(u.size()) + ", |y| = " +
                     std::to_string(y.size()) + ", expected T_p + T_f = " + std::to_string(T));
  if (e_stored.size() != t_past)
    throw ShapeError("trajectory: |e_stored| = " + std::to_string(e_stored.size()) +
                     ", expected T_p = " + std::to_string(t_past));
  for (std::size_t t = 0; t < T; ++t) {
    if (u[t].dim() != dims.n_u)
      throw ShapeError("trajectory: u_" + std::to_string(t + 1) + " has dim " +
                       std::to_string(u[t].dim()) + ", expected n_u = " + std::to_string(dims.n_u));
    if (y[t].dim() != dims.n_y)
      throw ShapeError("trajectory: y_" + std::to_string(t + 1) + " has dim " +
                       std::to_string(y[t].dim()) + ", expected n_y = " + std::to_string(dims.n_y));
  }
  for (std::size_t t = 0; t < t_past; ++t)
    if (e_stored[t].dim() != dims.n_y)
      throw ShapeError("trajectory: e_" + std::to_string(t + 1) + " has wrong dim");
}

void Trajectory::reset_innovations(std::size_t n_y) { e_stored.assign(t_past, Vector(n_y)); }

}  // namespace irnn
