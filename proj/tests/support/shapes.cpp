#include "shapes.hpp"

#include <cmath>
#include <stdexcept>

namespace testutil {

using namespace plate;

GridPtr box_grid(int cells, double side, int dim) {
  return build_grid(dim, cells, BoxSpec{side});
}

Support rect_support(const GridPtr& grid, double cx, double cy, double wx, double wy) {
  if (grid->dim != 2) throw std::invalid_argument("rect_support: 2-d only");
  return from_predicate(grid, [&](const std::array<double, 4>& p) {
    return std::abs(p[0] - cx) < 0.5 * wx && std::abs(p[1] - cy) < 0.5 * wy;
  });
}

Support disk_support(const GridPtr& grid, double radius) {
  return make_shape(grid, ShapeSpec{BallShape{grid->center(), radius}});
}

Support one_node_support(const GridPtr& grid, const std::array<double, 4>& at) {
  std::array<int, 4> idx{};
  for (int d = 0; d < grid->dim; ++d)
    idx[d] = static_cast<int>(std::lround((at[d] - grid->origin[d]) / grid->h));
  const std::size_t node = grid->encode(idx);
  if (!grid->mask[node]) throw std::invalid_argument("one_node_support: node not masked");
  std::vector<std::uint8_t> bits(grid->node_count, 0);
  bits[node] = 1;
  return Support(grid, std::move(bits));
}

std::size_t node_at(const GridPtr& grid, int ix, int iy) {
  return grid->encode({ix, iy, 0, 0});
}

}  // namespace testutil
