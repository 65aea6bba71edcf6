#pragma once

// Shared geometry builders for the test binaries.

#include "plate/grid.hpp"

namespace testutil {

plate::GridPtr box_grid(int cells, double side, int dim = 2);

/// Open axis-aligned rectangle (2-d) of the given widths around a center.
plate::Support rect_support(const plate::GridPtr& grid, double cx, double cy,
                            double wx, double wy);

/// Centered disk.
plate::Support disk_support(const plate::GridPtr& grid, double radius);

/// Single active node nearest to the given point.
plate::Support one_node_support(const plate::GridPtr& grid,
                                const std::array<double, 4>& at);

/// Linear index of the lattice node with the given per-axis indices (2-d).
std::size_t node_at(const plate::GridPtr& grid, int ix, int iy);

}  // namespace testutil
