// Grids, fields, supports, discrete energies, rasterization, and transforms.

#include <array>
#include <cmath>
#include <stdexcept>

#include <doctest.h>

#include "plate/grid.hpp"
#include "shapes.hpp"

using namespace plate;

TEST_CASE("build_grid: box geometry and mask") {
  auto g = build_grid(2, 6, BoxSpec{3.0});
  CHECK(g->h == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(g->nodes_per_side == 7);
  CHECK(g->node_count == 49);
  CHECK(g->origin[0] == 0.0);
  CHECK(g->origin[1] == 0.0);
  CHECK(g->cell_volume == doctest::Approx(0.25).epsilon(1e-15));
  // strictly interior nodes: indices 1..5 per axis
  CHECK(g->mask_nodes.size() == 25);
  for (std::size_t node : g->mask_nodes) {
    CHECK(g->index(node, 0) >= 1);
    CHECK(g->index(node, 0) <= 5);
    CHECK(g->index(node, 1) >= 1);
    CHECK(g->index(node, 1) <= 5);
  }
  const auto c = g->center();
  CHECK(c[0] == doctest::Approx(1.5).epsilon(1e-15));
  CHECK(c[1] == doctest::Approx(1.5).epsilon(1e-15));
  CHECK(g->describe().find("box side=3") != std::string::npos);
}

TEST_CASE("build_grid: ball container centers the origin") {
  auto g = build_grid(2, 4, BallSpec{1.0});
  CHECK(g->h == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(g->origin[0] == -1.0);
  // strictly inside the unit circle: (0,0), 4 at distance 0.5, 4 at sqrt(0.5)
  CHECK(g->mask_nodes.size() == 9);
  const auto c = g->center();
  CHECK(c[0] == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(c[1] == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("build_grid: argument validation") {
  CHECK_THROWS_AS(build_grid(1, 8, BoxSpec{1.0}), std::invalid_argument);
  CHECK_THROWS_AS(build_grid(5, 8, BoxSpec{1.0}), std::invalid_argument);
  CHECK_THROWS_AS(build_grid(3, 8, BoxSpec{1.0}, 2), std::invalid_argument);
  CHECK_THROWS_AS(build_grid(2, 3, BoxSpec{1.0}), std::invalid_argument);
  CHECK_THROWS_AS(build_grid(2, 8, BoxSpec{0.0}), std::invalid_argument);
  CHECK_THROWS_AS(build_grid(2, 8, BallSpec{-1.0}), std::invalid_argument);
}

TEST_CASE("encode/decode round-trip and lattice bounds") {
  auto g = build_grid(3, 5, BoxSpec{2.0});
  std::array<int, 4> idx{}, back{};
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j)
      for (int k = 0; k < 6; ++k) {
        idx = {i, j, k, 0};
        const std::size_t node = g->encode(idx);
        g->decode(node, back);
        CHECK(back[0] == i);
        CHECK(back[1] == j);
        CHECK(back[2] == k);
        CHECK(g->index(node, 0) == i);
        CHECK(g->index(node, 2) == k);
      }
  CHECK(g->in_lattice({0, 0, 0, 0}));
  CHECK(g->in_lattice({5, 5, 5, 0}));
  CHECK_FALSE(g->in_lattice({-1, 0, 0, 0}));
  CHECK_FALSE(g->in_lattice({0, 6, 0, 0}));
}

TEST_CASE("container_measure: box and ball closed forms") {
  CHECK(container_measure(2, BoxSpec{3.0}) == doctest::Approx(9.0).epsilon(1e-15));
  CHECK(container_measure(3, BoxSpec{2.0}) == doctest::Approx(8.0).epsilon(1e-15));
  CHECK(container_measure(2, BallSpec{1.5}) ==
        doctest::Approx(M_PI * 2.25).epsilon(1e-14));
  CHECK(container_measure(3, BallSpec{1.0}) ==
        doctest::Approx(4.0 * M_PI / 3.0).epsilon(1e-14));
}

TEST_CASE("field: zero extension is enforced") {
  auto g = testutil::box_grid(6, 3.0);
  std::vector<double> vals(g->node_count, 0.0);
  vals[testutil::node_at(g, 0, 2)] = 1.0;  // boundary node
  CHECK_THROWS_AS(Field(g, vals), std::invalid_argument);
  CHECK_NOTHROW(Field(g, vals, false));

  std::vector<double> nan_vals(g->node_count, 0.0);
  nan_vals[testutil::node_at(g, 3, 3)] = std::nan("");
  CHECK_THROWS_AS(Field(g, nan_vals), std::invalid_argument);
  CHECK_THROWS_AS(Field(g, std::vector<double>(5, 0.0)), std::invalid_argument);

  Field f(g);
  CHECK(f.max_abs() == 0.0);
  f[testutil::node_at(g, 3, 3)] = -2.5;
  CHECK(f.max_abs() == 2.5);
}

TEST_CASE("support: subset-of-mask invariant, volume, bounding box") {
  auto g = testutil::box_grid(6, 3.0);
  std::vector<std::uint8_t> bits(g->node_count, 0);
  bits[testutil::node_at(g, 0, 0)] = 1;  // outside the mask
  CHECK_THROWS_AS(Support(g, bits), std::invalid_argument);

  Support rect = testutil::rect_support(g, 1.5, 1.5, 1.2, 2.2);
  // nodes with |x-1.5| < 0.6 and |y-1.5| < 1.1 at h = 0.5: x in {1.0,1.5,2.0},
  // y in {0.5,...,2.5}
  CHECK(rect.size() == 15);
  CHECK(rect.volume() == doctest::Approx(15 * 0.25).epsilon(1e-15));
  std::array<int, 4> lo{}, hi{};
  rect.bounding_box(lo, hi);
  CHECK(lo[0] == 2);
  CHECK(hi[0] == 4);
  CHECK(lo[1] == 1);
  CHECK(hi[1] == 5);

  Support empty(g, std::vector<std::uint8_t>(g->node_count, 0));
  CHECK(empty.empty());
  empty.bounding_box(lo, hi);
  CHECK(lo[0] > hi[0]);
}

TEST_CASE("one-node energies match the closed stencil values") {
  auto g = testutil::box_grid(6, 3.0);
  const double h = g->h;
  const double c = 0.7;
  Field v(g);
  v[testutil::node_at(g, 3, 3)] = c;
  const Energies e = discrete_norms(v);
  CHECK(e.dirichlet == doctest::Approx(4.0 * c * c).epsilon(1e-14));
  CHECK(e.laplacian == doctest::Approx(20.0 * c * c / (h * h)).epsilon(1e-14));
  CHECK(e.l2 == doctest::Approx(c * c * h * h).epsilon(1e-14));
}

TEST_CASE("laplacian_apply: stencil values and zero off the mask") {
  auto g = testutil::box_grid(6, 3.0);
  const double h = g->h;
  Field v(g);
  const std::size_t center = testutil::node_at(g, 3, 3);
  v[center] = 1.0;
  Field lap = laplacian_apply(v);
  CHECK(lap[center] == doctest::Approx(-4.0 / (h * h)).epsilon(1e-15));
  CHECK(lap[testutil::node_at(g, 4, 3)] == doctest::Approx(1.0 / (h * h)).epsilon(1e-15));
  CHECK(lap[testutil::node_at(g, 3, 2)] == doctest::Approx(1.0 / (h * h)).epsilon(1e-15));
  CHECK(lap[testutil::node_at(g, 5, 5)] == 0.0);
  // unmasked boundary nodes carry no laplacian rows
  CHECK(lap[testutil::node_at(g, 0, 3)] == 0.0);
}

TEST_CASE("energies are invariant under container padding") {
  // same physical rectangle and h in a 2x2 and a 4x4 box
  auto g_small = testutil::box_grid(16, 2.0);
  auto g_big = testutil::box_grid(32, 4.0);
  REQUIRE(g_small->h == g_big->h);

  auto fill = [](const GridPtr& g, const Support& s, double cx, double cy) {
    Field v(g);
    for (std::size_t node : s.nodes()) {
      const double dx = g->coord(node, 0) - cx;
      const double dy = g->coord(node, 1) - cy;
      v[node] = (0.16 - dx * dx) * (0.4225 - dy * dy);
    }
    return v;
  };
  Support s_small = testutil::rect_support(g_small, 1.0, 1.0, 0.8, 1.3);
  Support s_big = testutil::rect_support(g_big, 2.0, 2.0, 0.8, 1.3);
  REQUIRE(s_small.size() == s_big.size());

  const Energies a = discrete_norms(fill(g_small, s_small, 1.0, 1.0));
  const Energies b = discrete_norms(fill(g_big, s_big, 2.0, 2.0));
  CHECK(a.dirichlet == doctest::Approx(b.dirichlet).epsilon(1e-12));
  CHECK(a.laplacian == doctest::Approx(b.laplacian).epsilon(1e-12));
  CHECK(a.l2 == doctest::Approx(b.l2).epsilon(1e-12));
}

TEST_CASE("support_of: default and explicit thresholds") {
  auto g = testutil::box_grid(8, 2.0);
  Field v(g);
  v[testutil::node_at(g, 4, 4)] = 1e-3;
  v[testutil::node_at(g, 2, 2)] = 1e-12;  // below 1e-8 * max|v|
  Support s = support_of(v);
  CHECK(s.size() == 1);
  CHECK(s.active(testutil::node_at(g, 4, 4)));

  CHECK(support_of(v, 0.0).size() == 2);
  CHECK(support_of(v, 1.0).empty());
  Field zero(g);
  CHECK(support_of(zero).empty());
}

TEST_CASE("connected_components: face adjacency, sorted by volume") {
  auto g = testutil::box_grid(12, 3.0);
  std::vector<std::uint8_t> bits(g->node_count, 0);
  // a 3x2 block and a disjoint single node
  for (int i = 2; i <= 4; ++i)
    for (int j = 2; j <= 3; ++j) bits[testutil::node_at(g, i, j)] = 1;
  bits[testutil::node_at(g, 8, 8)] = 1;
  // diagonal touch does not connect
  bits[testutil::node_at(g, 5, 4)] = 1;

  Support s(g, bits);
  auto comps = connected_components(s);
  REQUIRE(comps.size() == 3);
  CHECK(comps[0].size() == 6);
  CHECK(comps[1].size() == 1);
  CHECK(comps[2].size() == 1);
  std::size_t total = 0;
  for (const auto& c : comps) total += c.size();
  CHECK(total == s.size());
}

TEST_CASE("transform_support: identity, lattice shift, halving, clipping") {
  auto g = testutil::box_grid(16, 4.0);
  Support s = testutil::rect_support(g, 1.5, 1.5, 1.1, 0.6);
  REQUIRE_FALSE(s.empty());

  auto ident = transform_support(s, 1.0, {0.0, 0.0, 0.0, 0.0});
  CHECK(ident.support == s);
  CHECK_FALSE(ident.clipped);

  // shift by exactly 4 cells in x: the active set translates node-for-node
  const double shift = 4 * g->h;
  auto moved = transform_support(s, 1.0, {shift, 0.0, 0.0, 0.0});
  CHECK_FALSE(moved.clipped);
  CHECK(moved.support.size() == s.size());
  for (std::size_t node : s.nodes())
    CHECK(moved.support.active(node + 4 * g->stride[0]));

  // halving about the origin shrinks the count roughly 4x
  auto half = transform_support(s, 0.5, {0.0, 0.0, 0.0, 0.0});
  CHECK_FALSE(half.clipped);
  CHECK(half.support.size() < s.size() / 2);
  CHECK(half.support.size() > 0);

  // pushing the set through the wall clips
  auto out = transform_support(s, 1.0, {3.0, 0.0, 0.0, 0.0});
  CHECK(out.clipped);

  CHECK_THROWS_AS(transform_support(s, 0.0, {0.0, 0.0, 0.0, 0.0}),
                  std::invalid_argument);
}

TEST_CASE("make_shape: rasterization equals the predicate route") {
  auto g = testutil::box_grid(20, 3.0);
  const std::array<double, 4> c{1.5, 1.5, 0.0, 0.0};

  Support ball = make_shape(g, BallShape{c, 0.8});
  Support ball_pred = from_predicate(g, [&](const std::array<double, 4>& x) {
    return (x[0] - 1.5) * (x[0] - 1.5) + (x[1] - 1.5) * (x[1] - 1.5) < 0.64;
  });
  CHECK(ball == ball_pred);

  Support ell = make_shape(g, EllipseShape{c, {1.0, 0.5, 0.0, 0.0}});
  Support ell_pred = from_predicate(g, [&](const std::array<double, 4>& x) {
    const double a = (x[0] - 1.5) / 1.0, b = (x[1] - 1.5) / 0.5;
    return a * a + b * b < 1.0;
  });
  CHECK(ell == ell_pred);

  Support ann = make_shape(g, AnnulusShape{c, 0.4, 0.9});
  Support ann_pred = from_predicate(g, [&](const std::array<double, 4>& x) {
    const double r2 = (x[0] - 1.5) * (x[0] - 1.5) + (x[1] - 1.5) * (x[1] - 1.5);
    return r2 > 0.16 && r2 < 0.81;
  });
  CHECK(ann == ann_pred);

  UnionShape u{{BallShape{{0.8, 0.8, 0.0, 0.0}, 0.4}, BallShape{{2.2, 2.2, 0.0, 0.0}, 0.4}}};
  Support uni = make_shape(g, u);
  Support a = make_shape(g, BallShape{{0.8, 0.8, 0.0, 0.0}, 0.4});
  Support b = make_shape(g, BallShape{{2.2, 2.2, 0.0, 0.0}, 0.4});
  CHECK(uni.size() == a.size() + b.size());  // disjoint parts
  for (std::size_t node : a.nodes()) CHECK(uni.active(node));
  for (std::size_t node : b.nodes()) CHECK(uni.active(node));
}

TEST_CASE("make_shape: rejects misfits and malformed shapes") {
  auto g = testutil::box_grid(20, 3.0);
  const std::array<double, 4> c{1.5, 1.5, 0.0, 0.0};
  CHECK_THROWS_AS(make_shape(g, BallShape{c, 2.0}), std::invalid_argument);
  CHECK_THROWS_AS(make_shape(g, BallShape{{0.2, 0.2, 0.0, 0.0}, 0.5}),
                  std::invalid_argument);
  CHECK_THROWS_AS(make_shape(g, BallShape{c, -0.1}), std::invalid_argument);
  CHECK_THROWS_AS(make_shape(g, AnnulusShape{c, 0.9, 0.4}), std::invalid_argument);
  CHECK_THROWS_AS(make_shape(g, EllipseShape{c, {0.5, 0.0, 0.0, 0.0}}),
                  std::invalid_argument);
  CHECK_THROWS_AS(make_shape(g, UnionShape{}), std::invalid_argument);
}

TEST_CASE("support equality compares geometry across grid instances") {
  auto g1 = testutil::box_grid(10, 2.0);
  auto g2 = testutil::box_grid(10, 2.0);  // distinct object, same geometry
  Support a = testutil::disk_support(g1, 0.6);
  Support b = testutil::disk_support(g2, 0.6);
  CHECK(a == b);
  auto g3 = testutil::box_grid(10, 2.5);
  Support c = testutil::disk_support(g3, 0.6);
  CHECK_FALSE(a == c);
}
