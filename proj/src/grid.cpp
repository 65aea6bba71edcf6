#include "plate/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <sstream>
#include <stdexcept>

namespace plate {

namespace {

double ball_volume_gamma(int n, double r) {
  // omega_n r^n via the Gamma function; grid-local (theory has the closed forms).
  return std::pow(M_PI, 0.5 * n) / std::tgamma(0.5 * n + 1.0) * std::pow(r, n);
}

bool inside_container(const Grid& g, const std::array<double, 4>& x) {
  if (const auto* box = std::get_if<BoxSpec>(&g.container)) {
    for (int d = 0; d < g.dim; ++d)
      if (!(x[d] > 0.0 && x[d] < box->side)) return false;
    return true;
  }
  const auto& ball = std::get<BallSpec>(g.container);
  double s = 0.0;
  for (int d = 0; d < g.dim; ++d) s += x[d] * x[d];
  return s < ball.radius * ball.radius;
}

}  // namespace

double container_measure(int dim, const ContainerSpec& c) {
  if (const auto* box = std::get_if<BoxSpec>(&c)) return std::pow(box->side, dim);
  return ball_volume_gamma(dim, std::get<BallSpec>(c).radius);
}

std::array<double, 4> Grid::center() const {
  std::array<double, 4> c{};
  for (int d = 0; d < dim; ++d) c[d] = origin[d] + 0.5 * cells * h;
  return c;
}

std::string Grid::describe() const {
  std::ostringstream os;
  if (const auto* box = std::get_if<BoxSpec>(&container))
    os << "box side=" << box->side;
  else
    os << "ball radius=" << std::get<BallSpec>(container).radius;
  os << " dim=" << dim << " N=" << cells << " h=" << h;
  return os.str();
}

GridPtr build_grid(int dim, int cells, const ContainerSpec& container, int max_dim) {
  if (max_dim < 2) throw std::invalid_argument("build_grid: max_dim must be >= 2");
  if (dim < 2 || dim > max_dim)
    throw std::invalid_argument("build_grid: dim " + std::to_string(dim) +
                                " outside [2, " + std::to_string(max_dim) + "]");
  if (dim > 4) throw std::invalid_argument("build_grid: dim > 4 not supported");
  if (cells < 4)
    throw std::invalid_argument("build_grid: need at least 4 cells per side");

  double extent = 0.0;
  if (const auto* box = std::get_if<BoxSpec>(&container)) {
    if (!(box->side > 0.0)) throw std::invalid_argument("build_grid: box side must be positive");
    extent = box->side;
  } else {
    const auto& ball = std::get<BallSpec>(container);
    if (!(ball.radius > 0.0)) throw std::invalid_argument("build_grid: ball radius must be positive");
    extent = 2.0 * ball.radius;
  }

  auto g = std::make_shared<Grid>();
  g->dim = dim;
  g->cells = cells;
  g->container = container;
  g->h = extent / cells;
  g->nodes_per_side = cells + 1;
  g->node_count = 1;
  for (int d = 0; d < dim; ++d) {
    g->stride[d] = g->node_count;
    g->node_count *= static_cast<std::size_t>(g->nodes_per_side);
  }
  for (int d = 0; d < dim; ++d)
    g->origin[d] = std::holds_alternative<BoxSpec>(container)
                       ? 0.0
                       : -std::get<BallSpec>(container).radius;
  g->cell_volume = std::pow(g->h, dim);

  g->mask.assign(g->node_count, 0);
  std::array<int, 4> idx{};
  std::array<double, 4> x{};
  for (std::size_t node = 0; node < g->node_count; ++node) {
    g->decode(node, idx);
    for (int d = 0; d < dim; ++d) x[d] = g->origin[d] + idx[d] * g->h;
    if (inside_container(*g, x)) {
      // stencils assume masked nodes are lattice-interior
      for (int d = 0; d < dim; ++d)
        if (idx[d] < 1 || idx[d] > cells - 1)
          throw std::logic_error("build_grid: masked node on the lattice face");
      g->mask[node] = 1;
      g->mask_nodes.push_back(node);
    }
  }
  if (g->mask_nodes.empty())
    throw std::invalid_argument("build_grid: container has no interior nodes at N=" +
                                std::to_string(cells));
  return g;
}

// ---------------------------------------------------------------------------

Field::Field(GridPtr grid) : grid_(std::move(grid)), values_(grid_->node_count, 0.0) {}

Field::Field(GridPtr grid, std::vector<double> values, bool validate)
    : grid_(std::move(grid)), values_(std::move(values)) {
  if (values_.size() != grid_->node_count)
    throw std::invalid_argument("Field: value count does not match the grid");
  if (!validate) return;
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i]))
      throw std::invalid_argument("Field: non-finite value at node " + std::to_string(i));
    if (!grid_->mask[i] && values_[i] != 0.0)
      throw std::invalid_argument("Field: nonzero value outside the container at node " +
                                  std::to_string(i));
  }
}

double Field::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

Support::Support(GridPtr grid, std::vector<std::uint8_t> active)
    : grid_(std::move(grid)), active_(std::move(active)) {
  if (active_.size() != grid_->node_count)
    throw std::invalid_argument("Support: bit count does not match the grid");
  for (std::size_t i = 0; i < active_.size(); ++i) {
    if (active_[i] && !grid_->mask[i])
      throw std::invalid_argument("Support: active node outside the container at node " +
                                  std::to_string(i));
    if (active_[i]) nodes_.push_back(i);
  }
}

double Support::volume() const {
  return static_cast<double>(nodes_.size()) * grid_->cell_volume;
}

void Support::bounding_box(std::array<int, 4>& lo, std::array<int, 4>& hi) const {
  lo.fill(grid_->nodes_per_side);
  hi.fill(-1);
  std::array<int, 4> idx{};
  for (std::size_t node : nodes_) {
    grid_->decode(node, idx);
    for (int d = 0; d < grid_->dim; ++d) {
      lo[d] = std::min(lo[d], idx[d]);
      hi[d] = std::max(hi[d], idx[d]);
    }
  }
}

bool Support::operator==(const Support& other) const {
  if (grid_.get() != other.grid_.get()) {
    const Grid& a = *grid_;
    const Grid& b = *other.grid_;
    if (a.dim != b.dim || a.cells != b.cells || a.h != b.h || a.origin != b.origin)
      return false;
  }
  return active_ == other.active_;
}

// ---------------------------------------------------------------------------

Field laplacian_apply(const Field& v) {
  const Grid& g = v.grid();
  const double inv_h2 = 1.0 / (g.h * g.h);
  const double diag = 2.0 * g.dim;
  std::vector<double> out(g.node_count, 0.0);
  const std::vector<double>& x = v.values();
  for (std::size_t node : g.mask_nodes) {
    double s = -diag * x[node];
    for (int d = 0; d < g.dim; ++d)
      s += x[node + g.stride[d]] + x[node - g.stride[d]];
    out[node] = s * inv_h2;
  }
  return Field(v.grid_ptr(), std::move(out), false);
}

Energies discrete_norms(const Field& v) {
  const Grid& g = v.grid();
  const std::vector<double>& x = v.values();
  Energies e;

  // forward differences over every lattice edge (zero extension is implicit:
  // unmasked endpoints hold zeros by the Field invariant)
  double dsum = 0.0;
  std::array<int, 4> idx{};
  for (int d = 0; d < g.dim; ++d) {
    const std::size_t st = g.stride[d];
    for (std::size_t node = 0; node < g.node_count; ++node) {
      g.decode(node, idx);
      if (idx[d] >= g.cells) continue;
      const double diff = x[node + st] - x[node];
      dsum += diff * diff;
    }
  }
  e.dirichlet = dsum * std::pow(g.h, g.dim - 2);

  const double inv_h2 = 1.0 / (g.h * g.h);
  const double diag = 2.0 * g.dim;
  double lsum = 0.0;
  for (std::size_t node : g.mask_nodes) {
    double s = -diag * x[node];
    for (int d = 0; d < g.dim; ++d)
      s += x[node + g.stride[d]] + x[node - g.stride[d]];
    s *= inv_h2;
    lsum += s * s;
  }
  e.laplacian = lsum * g.cell_volume;

  double l2 = 0.0;
  for (double xv : x) l2 += xv * xv;
  e.l2 = l2 * g.cell_volume;
  return e;
}

Support support_of(const Field& v, double delta) {
  const Grid& g = v.grid();
  if (delta < 0.0) delta = 1e-8 * v.max_abs();
  std::vector<std::uint8_t> bits(g.node_count, 0);
  for (std::size_t node : g.mask_nodes)
    if (std::abs(v[node]) > delta) bits[node] = 1;
  return Support(v.grid_ptr(), std::move(bits));
}

std::vector<Support> connected_components(const Support& s) {
  const Grid& g = s.grid();
  std::vector<std::uint8_t> seen(g.node_count, 0);
  std::vector<Support> out;
  std::deque<std::size_t> queue;
  for (std::size_t seed : s.nodes()) {
    if (seen[seed]) continue;
    std::vector<std::uint8_t> bits(g.node_count, 0);
    queue.push_back(seed);
    seen[seed] = 1;
    while (!queue.empty()) {
      std::size_t node = queue.front();
      queue.pop_front();
      bits[node] = 1;
      for (int d = 0; d < g.dim; ++d) {
        for (std::size_t nbr : {node + g.stride[d], node - g.stride[d]}) {
          // masked nodes are lattice-interior, so both neighbors exist
          if (s.active(nbr) && !seen[nbr]) {
            seen[nbr] = 1;
            queue.push_back(nbr);
          }
        }
      }
    }
    out.emplace_back(s.grid_ptr(), std::move(bits));
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const Support& a, const Support& b) { return a.size() > b.size(); });
  return out;
}

TransformResult transform_support(const Support& s, double scale,
                                  const std::array<double, 4>& translation) {
  if (!(scale > 0.0)) throw std::invalid_argument("transform_support: scale must be positive");
  const Grid& g = s.grid();
  const GridPtr& gp = s.grid_ptr();

  bool clipped = false;
  std::array<int, 4> idx{};
  std::array<double, 4> y{};
  for (std::size_t node : s.nodes()) {
    g.decode(node, idx);
    for (int d = 0; d < g.dim; ++d)
      y[d] = scale * (g.origin[d] + idx[d] * g.h) + translation[d];
    if (!inside_container(g, y)) {
      clipped = true;
      break;
    }
  }

  std::vector<std::uint8_t> bits(g.node_count, 0);
  for (std::size_t node : g.mask_nodes) {
    bool ok = true;
    std::array<int, 4> src{};
    for (int d = 0; d < g.dim; ++d) {
      const double q = (g.origin[d] + g.index(node, d) * g.h - translation[d]) / scale;
      const long i = std::lround((q - g.origin[d]) / g.h);
      if (i < 0 || i > g.cells) { ok = false; break; }
      src[d] = static_cast<int>(i);
    }
    if (ok && s.active(g.encode(src))) bits[node] = 1;
  }
  return TransformResult{Support(gp, std::move(bits)), clipped};
}

// ---------------------------------------------------------------------------

namespace {

struct Extent { std::array<double, 4> lo{}, hi{}; };

Extent shape_extent(int dim, const BallShape& b) {
  Extent e;
  for (int d = 0; d < dim; ++d) { e.lo[d] = b.center[d] - b.radius; e.hi[d] = b.center[d] + b.radius; }
  return e;
}
Extent shape_extent(int dim, const EllipseShape& el) {
  Extent e;
  for (int d = 0; d < dim; ++d) { e.lo[d] = el.center[d] - el.semiaxes[d]; e.hi[d] = el.center[d] + el.semiaxes[d]; }
  return e;
}
Extent shape_extent(int dim, const AnnulusShape& a) {
  Extent e;
  for (int d = 0; d < dim; ++d) { e.lo[d] = a.center[d] - a.r_outer; e.hi[d] = a.center[d] + a.r_outer; }
  return e;
}

void check_fits(const Grid& g, const Extent& e) {
  bool ok = true;
  if (const auto* box = std::get_if<BoxSpec>(&g.container)) {
    for (int d = 0; d < g.dim; ++d)
      if (e.lo[d] < 0.0 || e.hi[d] > box->side) ok = false;
  } else {
    const double r = std::get<BallSpec>(g.container).radius;
    double s = 0.0;
    for (int d = 0; d < g.dim; ++d) {
      const double m = std::max(std::abs(e.lo[d]), std::abs(e.hi[d]));
      s += m * m;
    }
    ok = std::sqrt(s) <= r;  // bounding-box corner inside the ball (conservative)
  }
  if (!ok) {
    std::ostringstream os;
    os << "make_shape: shape extent [";
    for (int d = 0; d < g.dim; ++d) os << (d ? "," : "") << e.lo[d] << ".." << e.hi[d];
    os << "] does not fit inside " << g.describe();
    throw std::invalid_argument(os.str());
  }
}

bool point_in(int dim, const BallShape& b, const std::array<double, 4>& x) {
  double s = 0.0;
  for (int d = 0; d < dim; ++d) s += (x[d] - b.center[d]) * (x[d] - b.center[d]);
  return s < b.radius * b.radius;
}
bool point_in(int dim, const EllipseShape& el, const std::array<double, 4>& x) {
  double s = 0.0;
  for (int d = 0; d < dim; ++d) {
    const double t = (x[d] - el.center[d]) / el.semiaxes[d];
    s += t * t;
  }
  return s < 1.0;
}
bool point_in(int dim, const AnnulusShape& a, const std::array<double, 4>& x) {
  double s = 0.0;
  for (int d = 0; d < dim; ++d) s += (x[d] - a.center[d]) * (x[d] - a.center[d]);
  return s > a.r_inner * a.r_inner && s < a.r_outer * a.r_outer;
}

void validate_shape(const Grid& g, const BallShape& b) {
  if (!(b.radius > 0.0)) throw std::invalid_argument("make_shape: ball radius must be positive");
  check_fits(g, shape_extent(g.dim, b));
}
void validate_shape(const Grid& g, const EllipseShape& el) {
  for (int d = 0; d < g.dim; ++d)
    if (!(el.semiaxes[d] > 0.0))
      throw std::invalid_argument("make_shape: ellipse semiaxes must be positive");
  check_fits(g, shape_extent(g.dim, el));
}
void validate_shape(const Grid& g, const AnnulusShape& a) {
  if (!(a.r_inner >= 0.0) || !(a.r_outer > a.r_inner))
    throw std::invalid_argument("make_shape: annulus needs 0 <= r_inner < r_outer");
  check_fits(g, shape_extent(g.dim, a));
}

}  // namespace

Support from_predicate(const GridPtr& grid,
                       const std::function<bool(const std::array<double, 4>&)>& inside) {
  const Grid& g = *grid;
  std::vector<std::uint8_t> bits(g.node_count, 0);
  std::array<int, 4> idx{};
  std::array<double, 4> x{};
  for (std::size_t node : g.mask_nodes) {
    g.decode(node, idx);
    for (int d = 0; d < g.dim; ++d) x[d] = g.origin[d] + idx[d] * g.h;
    if (inside(x)) bits[node] = 1;
  }
  return Support(grid, std::move(bits));
}

Support make_shape(const GridPtr& grid, const ShapeSpec& shape) {
  const Grid& g = *grid;
  if (const auto* u = std::get_if<UnionShape>(&shape)) {
    if (u->parts.empty()) throw std::invalid_argument("make_shape: empty union");
    for (const auto& part : u->parts)
      std::visit([&](const auto& p) { validate_shape(g, p); }, part);
    return from_predicate(grid, [&](const std::array<double, 4>& x) {
      for (const auto& part : u->parts)
        if (std::visit([&](const auto& p) { return point_in(g.dim, p, x); }, part)) return true;
      return false;
    });
  }
  return std::visit(
      [&](const auto& p) -> Support {
        if constexpr (!std::is_same_v<std::decay_t<decltype(p)>, UnionShape>) {
          validate_shape(g, p);
          return from_predicate(
              grid, [&](const std::array<double, 4>& x) { return point_in(g.dim, p, x); });
        } else {
          throw std::logic_error("unreachable");
        }
      },
      shape);
}

}  // namespace plate
