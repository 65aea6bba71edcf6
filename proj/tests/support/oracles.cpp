#include "oracles.hpp"

#include <cmath>
#include <stdexcept>

namespace oracle {

long double bessel_j(long double nu, long double x) {
  // ascending series with the term recurrence
  // t_{k+1} = -t_k (x/2)^2 / ((k+1)(k+1+nu))
  const long double q = 0.25L * x * x;
  long double term = std::pow(0.5L * x, nu) / std::tgamma(nu + 1.0L);
  long double sum = term;
  for (int k = 0; k < 400; ++k) {
    term *= -q / ((k + 1.0L) * (k + 1.0L + nu));
    sum += term;
    if (std::fabs(term) < 1e-22L * std::fabs(sum)) break;
  }
  return sum;
}

long double bessel_first_zero(long double nu) {
  long double a = 0.01L, fa = bessel_j(nu, a), b = 0.0L;
  bool bracketed = false;
  for (long double t = 0.02L; t <= 20.0L; t += 0.01L) {
    const long double ft = bessel_j(nu, t);
    if ((fa > 0.0L) != (ft > 0.0L)) {
      b = t;
      bracketed = true;
      break;
    }
    a = t;
    fa = ft;
  }
  if (!bracketed) throw std::runtime_error("oracle: no bessel zero bracketed");
  for (int i = 0; i < 200 && b - a > 1e-18L * b; ++i) {
    const long double m = 0.5L * (a + b);
    if ((fa > 0.0L) != (bessel_j(nu, m) > 0.0L))
      b = m;
    else {
      a = m;
      fa = bessel_j(nu, a);
    }
  }
  return 0.5L * (a + b);
}

long double ball_volume(int n) {
  const long double pi = 3.14159265358979323846264338327950288L;
  return std::pow(pi, n / 2.0L) / std::tgamma(n / 2.0L + 1.0L);
}

long double ball_buckling(int n, long double volume) {
  const long double j = bessel_first_zero(n / 2.0L);
  return std::pow(ball_volume(n) / volume, 2.0L / n) * j * j;
}

long double al_c(int n) {
  const long double jm = bessel_first_zero(n / 2.0L - 1.0L);
  const long double jn = bessel_first_zero(n / 2.0L);
  return std::pow(2.0L, 2.0L / n) * (jm / jn) * (jm / jn);
}

long double eps1(int n, long double omega0) {
  return std::pow(omega0 / ball_volume(n), 2.0L / n) * omega0 /
         (bessel_first_zero(n / 2.0L) * bessel_first_zero(n / 2.0L));
}

long double eps0(int n, long double omega0) {
  const long double e1 = eps1(n, omega0);
  const long double alt = al_c(n) * (2.0L / n) / e1;
  return e1 < alt ? e1 : alt;
}

long double alpha0(int n, long double omega0, long double eps) {
  const long double c = al_c(n);
  const long double x = eps * eps1(n, omega0);
  const long double disc = (1.0L + x) * (1.0L + x) - 4.0L * c * x;
  return (1.0L + x - std::sqrt(disc)) / (2.0L * x);
}

}  // namespace oracle
