#include "plate/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace plate {

namespace {

// Inactive lattice nodes face-adjacent to the support, ascending order.
std::vector<std::size_t> rim_nodes(const Support& s) {
  const Grid& g = s.grid();
  std::vector<std::uint8_t> seen(g.node_count, 0);
  std::array<int, 4> idx{};
  for (std::size_t node : s.nodes()) {
    g.decode(node, idx);
    for (int d = 0; d < g.dim; ++d) {
      for (int dir : {-1, +1}) {
        std::array<int, 4> nb = idx;
        nb[d] += dir;
        if (!g.in_lattice(nb)) continue;
        const std::size_t q = g.encode(nb);
        if (!s.active(q)) seen[q] = 1;
      }
    }
  }
  std::vector<std::size_t> rim;
  for (std::size_t i = 0; i < g.node_count; ++i)
    if (seen[i]) rim.push_back(i);
  return rim;
}

// One-sided gradient magnitude across the rim node: largest |u| over active
// face neighbors, divided by h (u vanishes on the rim itself).
double rim_gradient(const Support& s, const Field& u, std::size_t rim_node) {
  const Grid& g = s.grid();
  std::array<int, 4> idx{};
  g.decode(rim_node, idx);
  double grad = 0.0;
  for (int d = 0; d < g.dim; ++d) {
    for (int dir : {-1, +1}) {
      std::array<int, 4> nb = idx;
      nb[d] += dir;
      if (!g.in_lattice(nb)) continue;
      const std::size_t q = g.encode(nb);
      if (s.active(q)) grad = std::max(grad, std::abs(u[q]) / g.h);
    }
  }
  return grad;
}

// Integer offsets within the closed lattice ball of radius r (cells).
std::vector<std::array<int, 4>> ball_offsets(int dim, int r) {
  std::vector<std::array<int, 4>> offs;
  const long r2 = static_cast<long>(r) * r;
  std::array<int, 4> o{};
  // odometer over [-r, r]^dim
  for (int d = 0; d < dim; ++d) o[d] = -r;
  for (;;) {
    long d2 = 0;
    for (int d = 0; d < dim; ++d) d2 += static_cast<long>(o[d]) * o[d];
    if (d2 <= r2) offs.push_back(o);
    int d = 0;
    while (d < dim && ++o[d] > r) o[d++] = -r;
    if (d == dim) break;
  }
  return offs;
}

long count_support_in_ball(const Support& s, std::size_t center, int r) {
  const Grid& g = s.grid();
  std::array<int, 4> c{};
  g.decode(center, c);
  long count = 0;
  for (const auto& o : ball_offsets(g.dim, r)) {
    std::array<int, 4> q = c;
    for (int d = 0; d < g.dim; ++d) q[d] += o[d];
    if (g.in_lattice(q) && s.active(g.encode(q))) ++count;
  }
  return count;
}

// Radii ladder 2, 4, 8, ... with r * h <= r0. Explicit r0 below 2h is an
// error; the default (negative r0) degrades gracefully on tiny supports.
struct RadiiPlan {
  std::vector<int> r_cells;
  double r0 = 0.0;
  bool degenerate = false;
};
RadiiPlan plan_radii(const Support& s, double r0) {
  const Grid& g = s.grid();
  const bool explicit_r0 = r0 >= 0.0;
  if (explicit_r0 && r0 < 2.0 * g.h)
    throw std::invalid_argument("profile radius r0 must be at least 2h");
  RadiiPlan plan;
  if (!explicit_r0) {
    std::array<int, 4> lo{}, hi{};
    s.bounding_box(lo, hi);
    double diag2 = 0.0;
    for (int d = 0; d < g.dim; ++d) {
      const double e = (hi[d] - lo[d]) * g.h;
      diag2 += e * e;
    }
    r0 = std::min(8.0 * g.h, 0.25 * std::sqrt(diag2));
  }
  plan.r0 = r0;
  for (int r = 2; r * g.h <= r0 * (1.0 + 1e-12); r *= 2) plan.r_cells.push_back(r);
  plan.degenerate = plan.r_cells.empty();
  return plan;
}

}  // namespace

BoundaryClassification classify_boundary(const Support& s, const Field& u,
                                         double gamma_tol) {
  if (&s.grid() != &u.grid())
    throw std::invalid_argument("classify_boundary: support and field on different grids");
  if (gamma_tol < 0.0) {
    const Field lap = laplacian_apply(u);
    gamma_tol = s.grid().h * lap.max_abs();
  }
  BoundaryClassification cls;
  cls.gamma_tol = gamma_tol;
  for (std::size_t node : rim_nodes(s)) {
    if (rim_gradient(s, u, node) <= gamma_tol)
      cls.gamma.push_back(node);
    else
      cls.sigma.push_back(node);
  }
  return cls;
}

ScalingCheck check_scaling(const Support& s, double t, Objective objective,
                           double eigen_tol) {
  if (!(t > 0.0)) throw std::invalid_argument("check_scaling: t must be positive");
  ScalingCheck chk;
  chk.t = t;
  const Grid& g = s.grid();
  const std::array<double, 4> c = g.center();
  std::array<double, 4> tr{};
  for (int d = 0; d < g.dim; ++d) tr[d] = (1.0 - t) * c[d];
  TransformResult scaled = transform_support(s, t, tr);
  chk.clipped = scaled.clipped;
  chk.lambda_base = min_eigenpair(s, objective, eigen_tol).lambda;
  if (scaled.support.empty()) {
    chk.lambda_scaled = std::numeric_limits<double>::infinity();
    chk.error = std::numeric_limits<double>::infinity();
    return chk;
  }
  chk.lambda_scaled = min_eigenpair(scaled.support, objective, eigen_tol).lambda;
  const double power = objective == Objective::Buckling ? 2.0 : 4.0;
  chk.error = std::abs(std::pow(t, power) * chk.lambda_scaled / chk.lambda_base - 1.0);
  return chk;
}

TranslationCheck check_translation(const Support& s, const std::array<double, 4>& shift,
                                   Objective objective, double eigen_tol) {
  const Grid& g = s.grid();
  TranslationCheck chk;
  chk.shift = shift;
  std::array<int, 4> k{};
  chk.lattice_aligned = true;
  for (int d = 0; d < g.dim; ++d) {
    k[d] = static_cast<int>(std::lround(shift[d] / g.h));
    if (std::abs(shift[d] / g.h - k[d]) > 1e-9) chk.lattice_aligned = false;
  }
  std::vector<std::uint8_t> bits(g.node_count, 0);
  std::array<int, 4> idx{};
  chk.fits = true;
  for (std::size_t node : s.nodes()) {
    g.decode(node, idx);
    for (int d = 0; d < g.dim; ++d) idx[d] += k[d];
    if (!g.in_lattice(idx)) {
      chk.fits = false;
      break;
    }
    const std::size_t q = g.encode(idx);
    if (!g.mask[q]) {
      chk.fits = false;
      break;
    }
    bits[q] = 1;
  }
  if (!chk.fits) {
    chk.rel_error = std::numeric_limits<double>::quiet_NaN();
    return chk;
  }
  Support shifted(s.grid_ptr(), std::move(bits));
  // fresh solves on both sides; the solver's initial guess is built from
  // bounding-box index distances, so aligned shifts replay identical arithmetic
  chk.lambda_base = min_eigenpair(s, objective, eigen_tol).lambda;
  chk.lambda_shifted = min_eigenpair(shifted, objective, eigen_tol).lambda;
  chk.rel_error = std::abs(chk.lambda_shifted - chk.lambda_base) / std::abs(chk.lambda_base);
  return chk;
}

AlCheck check_al(const Support& s, const EigenResult& eig, double c_n) {
  if (!(c_n > 0.0 && c_n < 1.0))
    throw std::invalid_argument("check_al: c_n must lie in (0,1)");
  AlCheck chk;
  chk.c_n = c_n;
  chk.lambda = eig.lambda;
  chk.bound = c_n * ball_buckling_load(s.grid().dim, s.volume());
  chk.slack = chk.lambda / chk.bound - 1.0;
  chk.pass = chk.lambda >= chk.bound * 0.98;
  return chk;
}

double doubling_ratio_at(const Support& s, std::size_t cell, int r_cells) {
  const long inner = count_support_in_ball(s, cell, r_cells);
  if (inner == 0) return std::numeric_limits<double>::quiet_NaN();
  const long outer = count_support_in_ball(s, cell, 2 * r_cells);
  return static_cast<double>(outer) / static_cast<double>(inner);
}

double density_quotient_at(const Support& s, std::size_t cell, int r_cells) {
  const long ball = static_cast<long>(ball_offsets(s.grid().dim, r_cells).size());
  const long hit = count_support_in_ball(s, cell, r_cells);
  return static_cast<double>(hit) / static_cast<double>(ball);
}

RadialProfile doubling_profile(const Support& s, double r0) {
  RadialProfile prof;
  if (s.empty()) {
    prof.degenerate = true;
    return prof;
  }
  RadiiPlan plan = plan_radii(s, r0);
  prof.r0 = plan.r0;
  prof.degenerate = plan.degenerate;
  if (plan.degenerate) return prof;
  const std::vector<std::size_t> rim = rim_nodes(s);
  if (rim.empty()) {
    prof.degenerate = true;
    return prof;
  }
  for (int r : plan.r_cells) {
    double worst = 0.0;
    for (std::size_t b : rim) worst = std::max(worst, doubling_ratio_at(s, b, r));
    prof.r_cells.push_back(r);
    prof.value.push_back(worst);
  }
  return prof;
}

RadialProfile nondegeneracy_profile(const EigenResult& eig, const Support& s,
                                    const BoundaryClassification& cls, double r0) {
  RadialProfile prof;
  if (s.empty() || cls.gamma.empty()) {
    prof.degenerate = true;
    return prof;
  }
  RadiiPlan plan = plan_radii(s, r0);
  prof.r0 = plan.r0;
  prof.degenerate = plan.degenerate;
  if (plan.degenerate) return prof;
  const Grid& g = s.grid();
  const Field& u = eig.field;
  auto grad_mag = [&](const std::array<int, 4>& idx) {
    double g2 = 0.0;
    for (int d = 0; d < g.dim; ++d) {
      std::array<int, 4> p = idx, m = idx;
      p[d] += 1;
      m[d] -= 1;
      const double up = g.in_lattice(p) ? u[g.encode(p)] : 0.0;
      const double um = g.in_lattice(m) ? u[g.encode(m)] : 0.0;
      const double gd = (up - um) / (2.0 * g.h);
      g2 += gd * gd;
    }
    return std::sqrt(g2);
  };
  std::array<int, 4> c{};
  for (int r : plan.r_cells) {
    const auto offs = ball_offsets(g.dim, r);
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t b : cls.gamma) {
      g.decode(b, c);
      double sup = 0.0;
      for (const auto& o : offs) {
        std::array<int, 4> q = c;
        for (int d = 0; d < g.dim; ++d) q[d] += o[d];
        if (g.in_lattice(q)) sup = std::max(sup, grad_mag(q));
      }
      worst = std::min(worst, sup / (r * g.h));
    }
    prof.r_cells.push_back(r);
    prof.value.push_back(worst);
  }
  return prof;
}

DensityProfile density_profile(const Support& s, const BoundaryClassification& cls,
                               double r0, double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0))
    throw std::invalid_argument("density_profile: alpha must lie in (0,1]");
  DensityProfile prof;
  prof.alpha = alpha;
  if (s.empty() || cls.gamma.empty()) {
    prof.degenerate = true;
    return prof;
  }
  RadiiPlan plan = plan_radii(s, r0);
  prof.r0 = plan.r0;
  prof.degenerate = plan.degenerate;
  if (plan.degenerate) return prof;
  const double expo = (1.0 - alpha) / alpha;
  for (int r : plan.r_cells) {
    const double ball = static_cast<double>(ball_offsets(s.grid().dim, r).size());
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t b : cls.gamma)
      worst = std::min(worst, density_quotient_at(s, b, r));
    prof.r_cells.push_back(r);
    prof.quotient.push_back(worst);
    prof.c2_hat.push_back(worst / std::pow(ball, expo));
  }
  return prof;
}

namespace {

MonotonicityCheck check_monotonicity(const Support& s, Objective objective,
                                     const ReportOptions& opt, double lambda_base) {
  MonotonicityCheck chk;
  if (s.size() < 10 || opt.monotonicity_pairs < 1) {
    chk.pass = true;  // nothing to sample
    return chk;
  }
  // Peel pseudo-random runs of the active rim layer: the shrunken support is
  // nested inside s, so its load must not fall below lambda(s).
  const Grid& g = s.grid();
  std::vector<std::size_t> layer;
  std::array<int, 4> idx{};
  for (std::size_t node : s.nodes()) {
    g.decode(node, idx);
    bool edge = false;
    for (int d = 0; d < g.dim && !edge; ++d) {
      for (int dir : {-1, +1}) {
        std::array<int, 4> nb = idx;
        nb[d] += dir;
        if (!g.in_lattice(nb) || !s.active(g.encode(nb))) {
          edge = true;
          break;
        }
      }
    }
    if (edge) layer.push_back(node);
  }
  if (layer.empty()) {
    chk.pass = true;
    return chk;
  }
  std::mt19937_64 rng(opt.seed);
  const std::size_t run =
      std::max<std::size_t>(1, std::min(layer.size(), s.size() / 20));
  for (int p = 0; p < opt.monotonicity_pairs; ++p) {
    const std::size_t start = rng() % layer.size();
    std::vector<std::uint8_t> bits = s.bits();
    for (std::size_t i = 0; i < run; ++i)
      bits[layer[(start + i) % layer.size()]] = 0;
    Support inner(s.grid_ptr(), std::move(bits));
    if (inner.empty()) continue;
    const double lam = min_eigenpair(inner, objective, opt.eigen_tol).lambda;
    chk.worst_violation = std::max(chk.worst_violation, lambda_base / lam - 1.0);
    ++chk.pairs;
  }
  chk.pass = chk.worst_violation <= 2.0 * opt.eigen_tol;
  return chk;
}

}  // namespace

DiagnosticsReport assemble_report(const Support& s, const EigenResult& eig,
                                  Objective objective, const ReportOptions& opt) {
  DiagnosticsReport rep;
  rep.components = static_cast<int>(connected_components(s).size());
  rep.connected = rep.components == 1;

  BoundaryClassification cls = classify_boundary(s, eig.field, opt.gamma_tol);
  rep.gamma_cells = cls.gamma.size();
  rep.sigma_cells = cls.sigma.size();
  rep.gamma_tol = cls.gamma_tol;

  rep.scaling = check_scaling(s, opt.scaling_t, objective, opt.eigen_tol);
  rep.scaling_pass = !rep.scaling.clipped && rep.scaling.error <= opt.scaling_bar;

  // first unit lattice shift that keeps the support inside the mask
  {
    bool found = false;
    for (int d = 0; d < s.grid().dim && !found; ++d) {
      for (int dir : {+1, -1}) {
        std::array<double, 4> shift{};
        shift[d] = dir * s.grid().h;
        TranslationCheck t = check_translation(s, shift, objective, opt.eigen_tol);
        if (t.fits) {
          rep.translation = t;
          found = true;
          break;
        }
      }
    }
    rep.translation_pass =
        rep.translation.fits && rep.translation.rel_error <= opt.translation_bar;
  }

  const int dim = s.grid().dim;
  if (objective == Objective::Buckling)
    rep.al = check_al(s, eig, opt.cn > 0.0 ? opt.cn : al_constant(dim));

  rep.monotonicity = check_monotonicity(s, objective, opt, eig.lambda);

  rep.doubling = doubling_profile(s, opt.r0);
  rep.nondegeneracy = nondegeneracy_profile(eig, s, cls, opt.r0);
  rep.density = density_profile(s, cls, opt.r0, opt.alpha);
  rep.residual = pde_residual(eig, s);

  bool ok = true;
  if (!rep.scaling.clipped) ok = ok && rep.scaling_pass;
  if (rep.translation.fits) ok = ok && rep.translation_pass;
  if (objective == Objective::Buckling) ok = ok && rep.al.pass;
  if (rep.monotonicity.pairs > 0) ok = ok && rep.monotonicity.pass;
  rep.overall_pass = ok;
  return rep;
}

}  // namespace plate
