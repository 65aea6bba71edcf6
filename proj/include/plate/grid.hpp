#pragma once

// Uniform Cartesian grids over simple containers (box / ball), nodal fields
// with zero extension outside the container, and node-set supports.

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <variant>
#include <vector>

namespace plate {

struct BoxSpec  { double side;   };
struct BallSpec { double radius; };
using ContainerSpec = std::variant<BoxSpec, BallSpec>;

/// Lebesgue measure of the container region.
double container_measure(int dim, const ContainerSpec& c);

class Grid {
 public:
  int dim = 0;              // spatial dimension n
  int cells = 0;            // cells per side N
  double h = 0.0;           // lattice spacing
  ContainerSpec container;
  int nodes_per_side = 0;   // N + 1
  std::size_t node_count = 0;
  std::array<double, 4> origin{};        // coordinate of node index 0, per axis
  std::array<std::size_t, 4> stride{};   // linear-index stride per axis
  std::vector<std::uint8_t> mask;        // 1 for nodes strictly inside the container
  std::vector<std::size_t> mask_nodes;   // sorted linear indices of masked nodes
  double cell_volume = 0.0;              // h^n

  double coord(std::size_t node, int axis) const {
    return origin[axis] + static_cast<double>(index(node, axis)) * h;
  }
  int index(std::size_t node, int axis) const {
    return static_cast<int>((node / stride[axis]) % static_cast<std::size_t>(nodes_per_side));
  }
  std::size_t encode(const std::array<int, 4>& idx) const {
    std::size_t lin = 0;
    for (int d = 0; d < dim; ++d) lin += static_cast<std::size_t>(idx[d]) * stride[d];
    return lin;
  }
  void decode(std::size_t node, std::array<int, 4>& idx) const {
    for (int d = 0; d < dim; ++d)
      idx[d] = static_cast<int>((node / stride[d]) % static_cast<std::size_t>(nodes_per_side));
  }
  bool in_lattice(const std::array<int, 4>& idx) const {
    for (int d = 0; d < dim; ++d)
      if (idx[d] < 0 || idx[d] >= nodes_per_side) return false;
    return true;
  }
  std::array<double, 4> center() const;    // container center point
  std::string describe() const;
};

using GridPtr = std::shared_ptr<const Grid>;

/// Build an immutable grid. dim must be in [2, max_dim]; max_dim caps memory
/// (default 4). cells >= 4. Throws std::invalid_argument on violation.
GridPtr build_grid(int dim, int cells, const ContainerSpec& container, int max_dim = 4);

// ---------------------------------------------------------------------------

/// Nodal scalar field; values are identically zero outside the container mask.
class Field {
 public:
  explicit Field(GridPtr grid);
  Field(GridPtr grid, std::vector<double> values, bool validate = true);

  const Grid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }
  double max_abs() const;

 private:
  GridPtr grid_;
  std::vector<double> values_;
};

/// Set of active nodes; always a subset of the container mask.
class Support {
 public:
  Support(GridPtr grid, std::vector<std::uint8_t> active);

  const Grid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  bool active(std::size_t node) const { return active_[node] != 0; }
  const std::vector<std::uint8_t>& bits() const { return active_; }
  const std::vector<std::size_t>& nodes() const { return nodes_; }
  std::size_t size() const { return nodes_.size(); }
  bool empty() const { return nodes_.empty(); }
  double volume() const;
  /// Index bounding box [lo, hi] per axis; empty support gives lo > hi.
  void bounding_box(std::array<int, 4>& lo, std::array<int, 4>& hi) const;
  bool operator==(const Support& other) const;

 private:
  GridPtr grid_;
  std::vector<std::uint8_t> active_;
  std::vector<std::size_t> nodes_;
};

// ---------------------------------------------------------------------------

/// (2n+1)-point Laplacian of v at every masked node, zero elsewhere.
/// Reads v as zero outside the lattice.
Field laplacian_apply(const Field& v);

struct Energies {
  double dirichlet = 0.0;   // sum over lattice edges of squared forward differences, h^n weight
  double laplacian = 0.0;   // sum over masked nodes of (lap v)^2, h^n weight
  double l2 = 0.0;          // sum of v^2, h^n weight
};
Energies discrete_norms(const Field& v);

/// Nodes where |v| > delta. delta < 0 selects the default 1e-8 * max|v|.
Support support_of(const Field& v, double delta = -1.0);

/// Face-adjacency components, sorted by decreasing volume (ties: first seen).
std::vector<Support> connected_components(const Support& s);

struct TransformResult {
  Support support;
  bool clipped = false;   // true when the scaled/translated set leaves the container
};

/// Nearest-cell rasterization of  x -> scale * x + translation  applied to the
/// active set: an output node p is active iff (p - translation)/scale falls in
/// an active input cell. `clipped` reports whether the continuum image of any
/// active cell center leaves the container interior.
TransformResult transform_support(const Support& s, double scale,
                                  const std::array<double, 4>& translation);

// ---------------------------------------------------------------------------

struct BallShape    { std::array<double, 4> center; double radius; };
struct EllipseShape { std::array<double, 4> center; std::array<double, 4> semiaxes; };
struct AnnulusShape { std::array<double, 4> center; double r_inner; double r_outer; };
struct UnionShape;
using ShapeSpec = std::variant<BallShape, EllipseShape, AnnulusShape, UnionShape>;
struct UnionShape { std::vector<std::variant<BallShape, EllipseShape, AnnulusShape>> parts; };

/// Rasterize a shape: a node is active iff it lies in the (open) shape region.
/// Throws std::invalid_argument if the shape does not fit inside the container
/// or is malformed (e.g. annulus with r_inner >= r_outer).
Support make_shape(const GridPtr& grid, const ShapeSpec& shape);

/// Generic rasterizer used by make_shape and by tests; predicate receives the
/// node coordinates (dim entries used).
Support from_predicate(const GridPtr& grid,
                       const std::function<bool(const std::array<double, 4>&)>& inside);

}  // namespace plate
