#include "plate/theory.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace plate {

double penalty(const PenaltyParams& p, double s) {
  if (!(p.eps > 0.0)) throw std::invalid_argument("penalty: eps must be positive");
  if (!(p.omega0 > 0.0)) throw std::invalid_argument("penalty: omega0 must be positive");
  if (!(s >= 0.0)) throw std::invalid_argument("penalty: volume must be non-negative");
  if (s >= p.omega0) return (s - p.omega0) / p.eps;
  return p.kind == PenaltyKind::NonRewarding ? 0.0 : p.eps * (s - p.omega0);
}

double penalized_value(const Field& v, const PenaltyParams& p, Objective objective,
                       double delta) {
  const double r = rayleigh_quotient(v, objective);
  return r + penalty(p, support_of(v, delta).volume());
}

double unit_ball_volume(int n) {
  if (n < 1) throw std::invalid_argument("unit_ball_volume: n must be >= 1");
  if (n % 2 == 0) {
    // pi^m / m!
    const int m = n / 2;
    double v = 1.0;
    for (int k = 1; k <= m; ++k) v *= M_PI / k;
    return v;
  }
  // 2 (m!) (4 pi)^m / n!  with n = 2m+1
  const int m = n / 2;
  double v = 2.0;
  for (int k = 1; k <= m; ++k) v *= 4.0 * M_PI * k;
  for (int k = 2; k <= n; ++k) v /= k;
  return v;
}

namespace {

// J_nu by its power series; adequate on (0, 20] for the orders used here.
double bessel_j(double nu, double x) {
  const double lh = std::log(0.5 * x);
  long double sum = 0.0L;
  for (int k = 0; k < 200; ++k) {
    const double lt = (2.0 * k + nu) * lh - std::lgamma(k + 1.0) - std::lgamma(k + nu + 1.0);
    const long double term = (k % 2 == 0 ? 1.0L : -1.0L) * std::exp((long double)lt);
    sum += term;
    if (k > 4 && std::abs((double)term) < 1e-18 * std::abs((double)sum)) break;
  }
  return (double)sum;
}

}  // namespace

double bessel_first_zero(double nu) {
  if (!(nu >= 0.0)) throw std::invalid_argument("bessel_first_zero: nu must be >= 0");
  const double step = 0.02;
  double a = step;
  double fa = bessel_j(nu, a);
  double b = 0.0, fb = 0.0;
  bool found = false;
  for (double t = 2 * step; t <= 20.0 + 1e-12; t += step) {
    const double ft = bessel_j(nu, t);
    if ((fa > 0.0) != (ft > 0.0)) {
      b = t;
      fb = ft;
      found = true;
      break;
    }
    a = t;
    fa = ft;
  }
  if (!found)
    throw std::runtime_error("bessel_first_zero: no sign change on (0, 20] for nu=" +
                             std::to_string(nu));
  while (b - a > 1e-12) {
    const double mid = 0.5 * (a + b);
    const double fm = bessel_j(nu, mid);
    if ((fa > 0.0) != (fm > 0.0)) {
      b = mid;
      fb = fm;
    } else {
      a = mid;
      fa = fm;
    }
  }
  (void)fb;
  return 0.5 * (a + b);
}

double ball_buckling_load(int n, double volume) {
  if (n < 2) throw std::invalid_argument("ball_buckling_load: n must be >= 2");
  if (!(volume > 0.0)) throw std::invalid_argument("ball_buckling_load: volume must be positive");
  const double j = bessel_first_zero(0.5 * n);
  return std::pow(unit_ball_volume(n) / volume, 2.0 / n) * j * j;
}

double al_constant(int n) {
  if (n < 2) throw std::invalid_argument("al_constant: n must be >= 2");
  const double jn = bessel_first_zero(0.5 * n);
  const double jm = bessel_first_zero(0.5 * n - 1.0);
  return std::pow(2.0, 2.0 / n) * (jm / jn) * (jm / jn);
}

Thresholds thresholds(int n, double omega0, double eps, std::optional<double> cn_override) {
  if (n < 2) throw std::invalid_argument("thresholds: n must be >= 2");
  if (!(omega0 > 0.0)) throw std::invalid_argument("thresholds: omega0 must be positive");
  if (!(eps > 0.0)) throw std::invalid_argument("thresholds: eps must be positive");

  Thresholds t;
  t.n = n;
  t.omega0 = omega0;
  t.eps = eps;
  t.c_n = cn_override ? *cn_override : al_constant(n);
  if (!(t.c_n > 0.0 && t.c_n < 1.0))
    throw std::invalid_argument("thresholds: c_n must lie in (0,1), got " +
                                std::to_string(t.c_n));

  const double omega_n = unit_ball_volume(n);
  const double lam_b1 = bessel_first_zero(0.5 * n) * bessel_first_zero(0.5 * n);
  t.eps1 = std::pow(omega0 / omega_n, 2.0 / n) * omega0 / lam_b1;
  t.eps0 = std::min(t.eps1, t.c_n * (2.0 / n) / t.eps1);

  const double x = eps * t.eps1;
  const double disc = (1.0 + x) * (1.0 + x) - 4.0 * t.c_n * x;
  if (disc < 0.0) throw std::logic_error("thresholds: negative discriminant");
  // rationalized root: equals (1 + x - sqrt(disc)) / (2x) without cancellation
  t.alpha0 = 2.0 * t.c_n / (1.0 + x + std::sqrt(disc));

  if (!(t.eps0 <= t.eps1) || !(t.alpha0 > 0.0 && t.alpha0 < 1.0))
    throw std::logic_error("thresholds: derived quantities out of range");
  return t;
}

}  // namespace plate
