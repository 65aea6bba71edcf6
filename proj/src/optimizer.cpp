#include "plate/optimizer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>
#include <unordered_map>

#include "pencil.hpp"
#include "plate/io.hpp"

namespace plate {

namespace {

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("PLATE_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

struct BitsHash {
  std::size_t operator()(const std::vector<std::uint8_t>& bits) const {
    std::uint64_t h = 1469598103934665603ull;  // FNV-1a
    for (std::uint8_t b : bits) {
      h ^= b;
      h *= 1099511628211ull;
    }
    return static_cast<std::size_t>(h);
  }
};

struct MemoEntry {
  double lambda = 0.0;
  double volume = 0.0;
};
using Memo = std::unordered_map<std::vector<std::uint8_t>, MemoEntry, BitsHash>;

long symmetric_difference(const Support& a, const Support& b) {
  long count = 0;
  const auto& x = a.bits();
  const auto& y = b.bits();
  for (std::size_t i = 0; i < x.size(); ++i) count += (x[i] != y[i]);
  return count;
}

Support initial_support(const GridPtr& grid, const OptimizeOptions& opt) {
  switch (opt.init.kind) {
    case InitSpec::Kind::Full: {
      std::vector<std::uint8_t> bits = grid->mask;
      return Support(grid, std::move(bits));
    }
    case InitSpec::Kind::File:
      return read_support_pgm(opt.init.path, grid);
    case InitSpec::Kind::Ball:
    default: {
      if (!(opt.init.volume_factor > 0.0))
        throw std::invalid_argument("optimizer: init volume_factor must be positive");
      const double vol = opt.init.volume_factor * opt.penalty.omega0;
      const double radius = std::pow(vol / unit_ball_volume(grid->dim), 1.0 / grid->dim);
      BallShape ball{grid->center(), radius};
      return make_shape(grid, ShapeSpec{ball});
    }
  }
}

// Inactive masked cells adjacent to the support, ranked by the one-sided
// gradient of u across the rim; at most 1% of the support is added per sweep.
std::optional<Support> grow_candidate(const Support& s, const Field& u) {
  const Grid& g = s.grid();
  std::vector<std::pair<double, std::size_t>> rim;
  std::vector<std::uint8_t> seen(g.node_count, 0);
  for (std::size_t node : s.nodes()) {
    for (int d = 0; d < g.dim; ++d) {
      for (std::size_t nbr : {node + g.stride[d], node - g.stride[d]}) {
        if (s.active(nbr) || !g.mask[nbr] || seen[nbr]) continue;
        seen[nbr] = 1;
        double grad = 0.0;
        for (int dd = 0; dd < g.dim; ++dd)
          for (std::size_t an : {nbr + g.stride[dd], nbr - g.stride[dd]})
            if (s.active(an)) grad = std::max(grad, std::abs(u[an]) / g.h);
        rim.emplace_back(grad, nbr);
      }
    }
  }
  if (rim.empty()) return std::nullopt;
  const std::size_t take =
      std::min(rim.size(),
               std::max<std::size_t>(1, static_cast<std::size_t>(0.01 * s.size())));
  std::sort(rim.begin(), rim.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  std::vector<std::uint8_t> bits = s.bits();
  for (std::size_t i = 0; i < take; ++i) bits[rim[i].second] = 1;
  return Support(s.grid_ptr(), std::move(bits));
}

struct SweepEval {
  Support support;
  double lambda = 0.0;
  double volume = 0.0;
  double i_eps = 0.0;
  std::optional<EigenResult> eig;  // absent on memo hits
};

struct SweepState {
  Support support;
  EigenResult eig;
  double i_eps;
};

// Evaluate the threshold ladder plus the grow candidate; returns candidates in
// ladder order with I computed, a memo caching lambda per support across sweeps.
std::vector<SweepEval> evaluate_sweep(const SweepState& cur, const OptimizeOptions& opt,
                                      Memo& memo, long& solves) {
  std::vector<Support> cands;
  const double maxu = cur.eig.field.max_abs();
  cands.push_back(support_of(cur.eig.field));  // tau = 0 (default delta)
  for (int j = 0; j <= opt.sweep_size - 2; ++j) {
    const double tau = 0.5 * std::pow(2.0, -j);
    cands.push_back(support_of(cur.eig.field, tau * maxu));
  }
  if (auto grown = grow_candidate(cur.support, cur.eig.field)) cands.push_back(*grown);

  // dedupe, keep ladder order
  std::vector<SweepEval> evals;
  {
    std::unordered_map<std::vector<std::uint8_t>, int, BitsHash> dedup;
    for (auto& c : cands) {
      if (c.empty()) continue;
      if (dedup.emplace(c.bits(), 1).second)
        evals.push_back(SweepEval{std::move(c), 0.0, 0.0, 0.0, std::nullopt});
    }
  }
  if (evals.empty()) throw EmptySupportCollapse();

  std::vector<int> todo;
  for (std::size_t i = 0; i < evals.size(); ++i) {
    auto hit = memo.find(evals[i].support.bits());
    if (hit != memo.end()) {
      evals[i].lambda = hit->second.lambda;
      evals[i].volume = hit->second.volume;
    } else {
      todo.push_back(static_cast<int>(i));
    }
  }

  const int threads = std::min<int>(resolve_threads(opt.threads),
                                    static_cast<int>(todo.size()));
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::size_t k = next.fetch_add(1);
      if (k >= todo.size()) return;
      if (first_error) return;
      SweepEval& ev = evals[todo[k]];
      try {
        ev.eig = min_eigenpair(ev.support, opt.objective, opt.eigen_tol,
                               opt.eigen_max_iter, &cur.eig.field);
        ev.lambda = ev.eig->lambda;
        ev.volume = ev.support.volume();
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);
  solves += static_cast<long>(todo.size());

  for (std::size_t i = 0; i < evals.size(); ++i) {
    evals[i].i_eps = evals[i].lambda + penalty(opt.penalty, evals[i].volume);
    memo.emplace(evals[i].support.bits(), MemoEntry{evals[i].lambda, evals[i].volume});
  }
  return evals;
}

// best by I, ties toward smaller volume, then ladder order
std::size_t pick_best(const std::vector<SweepEval>& evals) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < evals.size(); ++i) {
    if (evals[i].i_eps < evals[best].i_eps ||
        (evals[i].i_eps == evals[best].i_eps && evals[i].volume < evals[best].volume))
      best = i;
  }
  return best;
}

bool rescale_clips(const Support& s, double omega0) {
  if (s.empty()) return false;
  const Grid& g = s.grid();
  const double t = std::pow(omega0 / s.volume(), 1.0 / g.dim);
  std::array<double, 4> bary{};
  std::array<int, 4> idx{};
  for (std::size_t node : s.nodes()) {
    g.decode(node, idx);
    for (int d = 0; d < g.dim; ++d) bary[d] += g.origin[d] + idx[d] * g.h;
  }
  for (int d = 0; d < g.dim; ++d) bary[d] /= static_cast<double>(s.size());
  const std::array<double, 4> c = g.center();
  std::array<double, 4> tr{};
  for (int d = 0; d < g.dim; ++d) tr[d] = c[d] - t * bary[d];
  return transform_support(s, t, tr).clipped;
}

OptimizeResult run_threshold_sweep(const GridPtr& grid, const OptimizeOptions& opt) {
  OptimizeResult out{Support(grid, std::vector<std::uint8_t>(grid->node_count, 0)),
                     EigenResult{0.0, Field(grid), 0.0, 0, 0.0}};
  Support init = initial_support(grid, opt);
  if (init.empty()) throw std::invalid_argument("optimizer: initial support is empty");

  long solves = 0;
  Memo memo;
  SweepState cur{init, min_eigenpair(init, opt.objective, opt.eigen_tol,
                                     opt.eigen_max_iter, nullptr),
                 0.0};
  ++solves;
  cur.i_eps = cur.eig.lambda + penalty(opt.penalty, cur.support.volume());
  memo.emplace(cur.support.bits(), MemoEntry{cur.eig.lambda, cur.support.volume()});
  out.history.push_back({0, cur.i_eps, cur.eig.lambda, cur.support.volume(), 0});

  bool converged = false;
  std::string reason = "max outer iterations";
  int outer = 0;
  while (outer < opt.max_outer) {
    ++outer;
    std::vector<SweepEval> evals = evaluate_sweep(cur, opt, memo, solves);
    const std::size_t best = pick_best(evals);
    SweepEval& bev = evals[best];

    if (bev.i_eps < cur.i_eps - 1e-10) {
      if (!bev.eig) {  // memo hit: recover the eigenfield for the next sweep
        bev.eig = min_eigenpair(bev.support, opt.objective, opt.eigen_tol,
                                opt.eigen_max_iter, &cur.eig.field);
        ++solves;
      }
      const long moved = symmetric_difference(cur.support, bev.support);
      cur = SweepState{std::move(bev.support), std::move(*bev.eig), bev.i_eps};
      out.history.push_back({outer, cur.i_eps, cur.eig.lambda, cur.support.volume(), moved});
      continue;
    }
    if (bev.support == cur.support) {
      converged = true;
      reason = "support unchanged";
      break;
    }
    // The sweep is deterministic, so a stalled state reproduces itself and one
    // stall exhausts stall_limit.
    converged = false;
    reason = "stalled";
    break;
  }

  out.support = cur.support;
  out.eig = cur.eig;
  out.i_eps = cur.i_eps;
  out.volume = cur.support.volume();
  out.converged = converged;
  out.stop_reason = reason;
  out.outer_iterations = outer;
  out.eigensolve_count = solves;
  out.clipped_when_rescaled = rescale_clips(cur.support, opt.penalty.omega0);
  return out;
}

// ---------------------------------------------------------------------------
// Relaxed descent: projected gradient descent on the smoothed functional
// R(v) + penalty(sum h^n v^2/(v^2+h^2)) over fields on the whole container,
// then support extraction and one sweep pass as polish.

struct RelaxedFunctional {
  detail::Pencil& P;
  const OptimizeOptions& opt;
  double hn, delta2;

  double smoothed_volume(const std::vector<detail::Real>& x) const {
    detail::Real v = 0.0L;
    for (detail::Real xi : x) v += xi * xi / (xi * xi + delta2);
    return static_cast<double>(v) * hn;
  }
  double penalty_slope(double vol) const {
    const PenaltyParams& p = opt.penalty;
    if (vol > p.omega0) return 1.0 / p.eps;
    return p.kind == PenaltyKind::Rewarding ? p.eps : 0.0;
  }
};

OptimizeResult run_relaxed_descent(const GridPtr& grid, const OptimizeOptions& opt) {
  Support init = initial_support(grid, opt);
  if (init.empty()) throw std::invalid_argument("optimizer: initial support is empty");
  long solves = 0;

  EigenResult init_eig =
      min_eigenpair(init, opt.objective, opt.eigen_tol, opt.eigen_max_iter, nullptr);
  ++solves;
  const double init_i = init_eig.lambda + penalty(opt.penalty, init.volume());

  Support full(grid, grid->mask);
  detail::Pencil P(full, opt.objective);
  const double h = grid->h;
  RelaxedFunctional F{P, opt, grid->cell_volume, h * h};

  using detail::Real;
  std::vector<Real> x = P.restrict_field(init_eig.field);
  std::vector<Real> kx(x.size()), ax(x.size()), g(x.size()), trial(x.size()), ktrial(x.size());
  auto k_normalize = [&](std::vector<Real>& v, std::vector<Real>& kv) {
    P.apply_K(v, kv);
    const Real n = std::sqrt(detail::Pencil::dot(v, kv));
    for (std::size_t i = 0; i < v.size(); ++i) {
      v[i] /= n;
      kv[i] /= n;
    }
  };
  k_normalize(x, kx);
  P.apply_A(x, ax);
  double rq = static_cast<double>(detail::Pencil::dot(x, ax));
  double fval = rq + penalty(opt.penalty, F.smoothed_volume(x));

  int flat_steps = 0;
  for (int step = 0; step < opt.descent_max_steps && flat_steps < 3; ++step) {
    const double vol = F.smoothed_volume(x);
    const double slope = F.penalty_slope(vol);
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double xi = static_cast<double>(x[i]);
      const double sgrad = 2.0 * xi * F.delta2 / ((xi * xi + F.delta2) * (xi * xi + F.delta2));
      g[i] = 2.0L * (ax[i] - rq * kx[i]) + slope * F.hn * sgrad;
    }
    // keep the descent on the unit denominator sphere
    const Real gk = detail::Pencil::dot(g, kx);
    for (std::size_t i = 0; i < x.size(); ++i) g[i] -= gk * x[i];
    const double g2 = static_cast<double>(detail::Pencil::dot(g, g));
    if (g2 == 0.0) break;

    double eta = 1.0 / std::sqrt(g2);
    bool accepted = false;
    for (int bt = 0; bt < 40; ++bt, eta *= 0.5) {
      for (std::size_t i = 0; i < x.size(); ++i) trial[i] = x[i] - eta * g[i];
      k_normalize(trial, ktrial);
      P.apply_A(trial, ax);
      const double rq_t = static_cast<double>(detail::Pencil::dot(trial, ax));
      const double f_t = rq_t + penalty(opt.penalty, F.smoothed_volume(trial));
      if (f_t <= fval - 1e-4 * eta * g2) {
        flat_steps = (fval - f_t) < 1e-9 * std::max(1.0, std::abs(fval)) ? flat_steps + 1 : 0;
        x.swap(trial);
        kx.swap(ktrial);
        rq = rq_t;
        fval = f_t;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    P.apply_A(x, ax);  // ax matches x for the next gradient
  }

  Field relaxed = P.to_field(grid, x);
  Support extracted = support_of(relaxed);

  // best of: initial state, extracted state, extracted state after one sweep
  SweepState best{init, init_eig, init_i};
  OptimizeResult out{best.support, best.eig};
  out.history.push_back({0, init_i, init_eig.lambda, init.volume(), 0});

  if (!extracted.empty() && !(extracted == init)) {
    EigenResult ex_eig = min_eigenpair(extracted, opt.objective, opt.eigen_tol,
                                       opt.eigen_max_iter, &init_eig.field);
    ++solves;
    const double ex_i = ex_eig.lambda + penalty(opt.penalty, extracted.volume());
    if (ex_i < best.i_eps - 1e-10) {
      const long moved = symmetric_difference(best.support, extracted);
      best = SweepState{std::move(extracted), std::move(ex_eig), ex_i};
      out.history.push_back({1, best.i_eps, best.eig.lambda, best.support.volume(), moved});
    }
  }

  Memo memo;
  memo.emplace(best.support.bits(), MemoEntry{best.eig.lambda, best.support.volume()});
  std::vector<SweepEval> evals = evaluate_sweep(best, opt, memo, solves);
  const std::size_t pick = pick_best(evals);
  SweepEval& bev = evals[pick];
  if (bev.i_eps < best.i_eps - 1e-10) {
    if (!bev.eig) {
      bev.eig = min_eigenpair(bev.support, opt.objective, opt.eigen_tol,
                              opt.eigen_max_iter, &best.eig.field);
      ++solves;
    }
    const long moved = symmetric_difference(best.support, bev.support);
    best = SweepState{std::move(bev.support), std::move(*bev.eig), bev.i_eps};
    out.history.push_back({static_cast<int>(out.history.size()), best.i_eps,
                           best.eig.lambda, best.support.volume(), moved});
  }

  out.support = best.support;
  out.eig = best.eig;
  out.i_eps = best.i_eps;
  out.volume = best.support.volume();
  out.converged = true;
  out.stop_reason = "descent converged";
  out.outer_iterations = static_cast<int>(out.history.size()) - 1;
  out.eigensolve_count = solves;
  out.clipped_when_rescaled = rescale_clips(best.support, opt.penalty.omega0);
  return out;
}

}  // namespace

OptimizeResult minimize_penalized(const GridPtr& grid, const OptimizeOptions& opt) {
  if (!(opt.penalty.eps > 0.0))
    throw std::invalid_argument("optimizer: penalty eps must be positive");
  if (!(opt.penalty.omega0 > 0.0))
    throw std::invalid_argument("optimizer: omega0 must be positive");
  const double measure = container_measure(grid->dim, grid->container);
  if (!(opt.penalty.omega0 < 0.9 * measure)) {
    std::ostringstream os;
    os << "optimizer: omega0 " << opt.penalty.omega0 << " must stay below 0.9 * container measure "
       << measure;
    throw std::invalid_argument(os.str());
  }
  if (opt.sweep_size < 4)
    throw std::invalid_argument("optimizer: sweep_size must be at least 4");
  if (opt.max_outer < 1) throw std::invalid_argument("optimizer: max_outer must be >= 1");

  return opt.strategy == Strategy::ThresholdSweep ? run_threshold_sweep(grid, opt)
                                                  : run_relaxed_descent(grid, opt);
}

CertificateRecord certify_result(const OptimizeResult& result, const Thresholds& thr,
                                 const PenaltyParams& params, double vol_tol) {
  if (params.eps != thr.eps || params.omega0 != thr.omega0)
    throw std::invalid_argument("certify_result: penalty params disagree with thresholds");
  if (!(vol_tol >= 0.0)) throw std::invalid_argument("certify_result: vol_tol must be >= 0");

  CertificateRecord c;
  c.volume = result.volume;
  const double w = thr.omega0;
  const double inf = std::numeric_limits<double>::infinity();

  if (params.kind == PenaltyKind::NonRewarding) {
    if (thr.eps <= thr.eps1) {
      c.statement = "non-rewarding, eps <= eps1: volume pinned at omega0";
      c.applicable = true;
      c.lower = w * (1.0 - vol_tol);
      c.upper = w * (1.0 + vol_tol);
      c.pass = result.volume >= c.lower && result.volume <= c.upper;
    } else {
      c.statement = "non-rewarding, eps > eps1: volume at least omega0";
      c.applicable = true;
      c.lower = w * (1.0 - vol_tol);
      c.upper = inf;
      c.pass = result.volume >= c.lower;
    }
    return c;
  }

  if (thr.eps <= thr.eps0) {
    c.statement = "rewarding, eps <= eps0: volume equals omega0 unless the rescaled support clips";
    c.applicable = true;
    c.lower = thr.alpha0 * w * (1.0 - vol_tol);
    c.upper = w * (1.0 + vol_tol);
    if (result.volume > c.upper) {
      c.pass = false;
      c.detail = "volume exceeds omega0";
    } else if (result.volume >= w * (1.0 - vol_tol)) {
      c.pass = true;
      c.detail = "volume at omega0";
    } else if (result.volume >= c.lower) {
      c.pass = result.clipped_when_rescaled;
      c.detail = result.clipped_when_rescaled
                     ? "volume below omega0 and the omega0-rescaled support leaves the container"
                     : "volume below omega0 but the omega0-rescaled support fits: dichotomy violated";
    } else {
      c.pass = false;
      c.detail = "volume below alpha0 * omega0";
    }
  } else if (thr.eps <= thr.eps1) {
    c.statement = "rewarding, eps0 < eps <= eps1: volume within [alpha0 * omega0, omega0]";
    c.applicable = true;
    c.lower = thr.alpha0 * w * (1.0 - vol_tol);
    c.upper = w * (1.0 + vol_tol);
    c.pass = result.volume >= c.lower && result.volume <= c.upper;
  } else {
    c.statement = "rewarding, eps > eps1: no volume guarantee";
    c.applicable = false;
    c.pass = true;
    c.lower = 0.0;
    c.upper = inf;
  }
  return c;
}

}  // namespace plate
