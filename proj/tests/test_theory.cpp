// Closed-form constants: penalties, ball volumes, Bessel zeros, ball loads,
// the Ashbaugh-Laugesen constant, and the eps/alpha threshold formulas. Every
// derived constant is pinned both against the independent long-double oracle
// (different evaluation route) and against frozen reference literals.

#include <cmath>
#include <stdexcept>

#include <doctest.h>

#include "oracles.hpp"
#include "plate/theory.hpp"
#include "shapes.hpp"

using namespace plate;

namespace {
constexpr double kPi = 3.14159265358979323846;
}

TEST_CASE("penalty: non-rewarding is flat below omega0 and linear above") {
  PenaltyParams p{PenaltyKind::NonRewarding, 0.25, 2.0};
  CHECK(penalty(p, 0.0) == 0.0);
  CHECK(penalty(p, 1.999) == 0.0);
  CHECK(penalty(p, 2.0) == 0.0);
  CHECK(penalty(p, 2.5) == doctest::Approx(0.5 / 0.25).epsilon(1e-15));
  CHECK(penalty(p, 5.0) == doctest::Approx(3.0 / 0.25).epsilon(1e-15));
}

TEST_CASE("penalty: rewarding pays eps-sloped bonus below omega0") {
  PenaltyParams p{PenaltyKind::Rewarding, 0.25, 2.0};
  CHECK(penalty(p, 2.0) == 0.0);
  CHECK(penalty(p, 1.0) == doctest::Approx(-0.25).epsilon(1e-15));
  CHECK(penalty(p, 0.0) == doctest::Approx(-0.5).epsilon(1e-15));
  CHECK(penalty(p, 3.0) == doctest::Approx(4.0).epsilon(1e-15));
  // the two kinds agree above omega0
  PenaltyParams q{PenaltyKind::NonRewarding, 0.25, 2.0};
  CHECK(penalty(p, 2.7) == penalty(q, 2.7));
}

TEST_CASE("penalty: rejects non-positive parameters and negative volume") {
  CHECK_THROWS_AS(penalty({PenaltyKind::NonRewarding, 0.0, 1.0}, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(penalty({PenaltyKind::NonRewarding, 1.0, 0.0}, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(penalty({PenaltyKind::NonRewarding, 1.0, 1.0}, -0.1), std::invalid_argument);
}

TEST_CASE("unit ball volumes match the oracle and frozen references") {
  // frozen: pi, 4pi/3, pi^2/2, 8pi^2/15, pi^3/6
  const double frozen[] = {3.141592653589793,  4.1887902047863905, 4.934802200544679,
                           5.263789013914325,  5.167712780049969};
  for (int n = 2; n <= 6; ++n) {
    CAPTURE(n);
    CHECK(unit_ball_volume(n) ==
          doctest::Approx(static_cast<double>(oracle::ball_volume(n))).epsilon(1e-14));
    CHECK(unit_ball_volume(n) == doctest::Approx(frozen[n - 2]).epsilon(1e-14));
  }
  CHECK(unit_ball_volume(1) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK_THROWS_AS(unit_ball_volume(0), std::invalid_argument);
}

TEST_CASE("bessel first zeros match the oracle to 1e-10") {
  for (double nu : {0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0}) {
    CAPTURE(nu);
    const double ref = static_cast<double>(oracle::bessel_first_zero(nu));
    CHECK(bessel_first_zero(nu) == doctest::Approx(ref).epsilon(1e-10));
  }
  // frozen references pin both implementations against joint drift
  CHECK(bessel_first_zero(0.0) == doctest::Approx(2.404825557695771).epsilon(5e-12));
  CHECK(bessel_first_zero(0.5) == doctest::Approx(kPi).epsilon(5e-12));
  CHECK(bessel_first_zero(1.0) == doctest::Approx(3.831705970207511).epsilon(5e-12));
  CHECK(bessel_first_zero(1.5) == doctest::Approx(4.493409457909064).epsilon(5e-12));
  CHECK(bessel_first_zero(2.0) == doctest::Approx(5.135622301840683).epsilon(5e-12));
  CHECK(bessel_first_zero(2.5) == doctest::Approx(5.763459196894550).epsilon(5e-12));
  CHECK(bessel_first_zero(3.0) == doctest::Approx(6.380161895923984).epsilon(5e-12));
  CHECK_THROWS_AS(bessel_first_zero(-0.5), std::invalid_argument);
}

TEST_CASE("ball buckling load: unit-ball value and volume scaling") {
  // unit disk: volume unused beyond the scaling factor, so at V = omega_n the
  // load is exactly the squared zero
  const double j = bessel_first_zero(1.0);
  CHECK(ball_buckling_load(2, unit_ball_volume(2)) == doctest::Approx(j * j).epsilon(1e-14));
  CHECK(ball_buckling_load(2, unit_ball_volume(2)) ==
        doctest::Approx(14.681970642123892).epsilon(1e-12));

  for (int n = 2; n <= 5; ++n) {
    for (double v : {0.3, 1.0, 4.0}) {
      CAPTURE(n);
      CAPTURE(v);
      const double ref = static_cast<double>(oracle::ball_buckling(n, v));
      CHECK(ball_buckling_load(n, v) == doctest::Approx(ref).epsilon(1e-10));
      // homogeneity: load(t^n V) = t^-2 load(V)
      const double t = 1.7;
      CHECK(ball_buckling_load(n, std::pow(t, n) * v) ==
            doctest::Approx(ball_buckling_load(n, v) / (t * t)).epsilon(1e-12));
    }
  }
  CHECK_THROWS_AS(ball_buckling_load(1, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(ball_buckling_load(2, 0.0), std::invalid_argument);
}

TEST_CASE("al constant: frozen values, oracle agreement, range") {
  CHECK(al_constant(2) == doctest::Approx(0.7877942415106463).epsilon(1e-12));
  CHECK(al_constant(3) == doctest::Approx(0.7759512176598732).epsilon(1e-12));
  for (int n = 2; n <= 6; ++n) {
    CAPTURE(n);
    const double c = al_constant(n);
    CHECK(c > 0.0);
    CHECK(c < 1.0);
    CHECK(c == doctest::Approx(static_cast<double>(oracle::al_c(n))).epsilon(1e-10));
  }
  // the sequence is not monotone: n = 3 dips below n = 2
  CHECK(al_constant(3) < al_constant(2));
  CHECK_THROWS_AS(al_constant(1), std::invalid_argument);
}

TEST_CASE("thresholds: eps1/eps0 formulas against the oracle") {
  for (int n : {2, 3, 4}) {
    for (double w0 : {0.5, kPi, 9.0}) {
      CAPTURE(n);
      CAPTURE(w0);
      const Thresholds t = thresholds(n, w0, 0.01);
      CHECK(t.eps1 ==
            doctest::Approx(static_cast<double>(oracle::eps1(n, w0))).epsilon(1e-10));
      CHECK(t.eps0 ==
            doctest::Approx(static_cast<double>(oracle::eps0(n, w0))).epsilon(1e-10));
      CHECK(t.eps0 <= t.eps1);
      // eps1 is omega0 / (ball load at volume omega0)
      CHECK(t.eps1 == doctest::Approx(w0 / ball_buckling_load(n, w0)).epsilon(1e-13));
    }
  }
  // frozen anchor at the acceptance configuration (n = 2, omega0 = pi):
  // eps1 small enough that the min picks the first arm
  const Thresholds t = thresholds(2, kPi, 0.1);
  CHECK(t.eps1 == doctest::Approx(0.2139762250018592).epsilon(1e-12));
  CHECK(t.eps0 == doctest::Approx(t.eps1).epsilon(1e-15));
  // large omega0 flips the min to the c_n (2/n) / eps1 arm
  const Thresholds big = thresholds(2, 9.0, 0.1);
  CHECK(big.eps1 > 1.0);
  CHECK(big.eps0 == doctest::Approx(big.c_n / big.eps1).epsilon(1e-13));
  CHECK(big.eps0 < big.eps1);
}

TEST_CASE("alpha0: frozen anchors, oracle agreement, monotone decay to c_n") {
  const double e1 = 0.2139762250018592;
  // frozen anchors at n = 2, omega0 = pi
  CHECK(thresholds(2, kPi, 0.9 * e1).alpha0 ==
        doctest::Approx(0.780740181770).epsilon(1e-9));
  CHECK(thresholds(2, kPi, e1).alpha0 == doctest::Approx(0.779935746694).epsilon(1e-9));
  CHECK(thresholds(2, kPi, 1e-6).alpha0 == doctest::Approx(0.787794205827).epsilon(1e-9));

  const double c2 = al_constant(2);
  double prev = c2;
  for (double eps : {1e-6, 1e-3, 0.05, 0.1, 0.15, 0.2139762250018592}) {
    CAPTURE(eps);
    const Thresholds t = thresholds(2, kPi, eps);
    const double ref = static_cast<double>(oracle::alpha0(2, kPi, eps));
    CHECK(t.alpha0 == doctest::Approx(ref).epsilon(1e-10));
    CHECK(t.alpha0 > 0.0);
    CHECK(t.alpha0 < c2);
    CHECK(t.alpha0 <= prev);  // decreasing in eps
    prev = t.alpha0;
  }
  // limit eps -> 0 recovers c_n
  CHECK(std::abs(thresholds(2, kPi, 1e-6).alpha0 - c2) < 1e-4);
  // inside the theorem scope (eps <= eps0) the factor stays in [1/2, 1)
  for (double f : {0.05, 0.25, 0.5, 0.75, 1.0}) {
    const Thresholds t = thresholds(2, kPi, f * e1);
    CHECK(t.alpha0 >= 0.5);
    CHECK(t.alpha0 < 1.0);
  }
  // the 1/2 boundary sits exactly at x = eps * eps1 = 4 c_n - 2
  const double xc = 4.0 * c2 - 2.0;
  CHECK(xc == doctest::Approx(1.151176966042585).epsilon(1e-12));
  CHECK(thresholds(2, kPi, (xc - 1e-3) / e1).alpha0 > 0.5);
  CHECK(thresholds(2, kPi, (xc + 1e-3) / e1).alpha0 < 0.5);
}

TEST_CASE("thresholds: cn override and argument validation") {
  const Thresholds t = thresholds(2, kPi, 0.1, 0.5);
  CHECK(t.c_n == 0.5);
  CHECK(t.alpha0 < 0.5);  // alpha0 < c_n always
  CHECK_THROWS_AS(thresholds(2, kPi, 0.1, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(thresholds(2, kPi, 0.1, -0.2), std::invalid_argument);
  CHECK_THROWS_AS(thresholds(1, kPi, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(thresholds(2, 0.0, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(thresholds(2, kPi, 0.0), std::invalid_argument);
}

TEST_CASE("penalized value: rayleigh quotient plus volume penalty") {
  auto g = testutil::box_grid(24, 2.0);
  Support s = testutil::disk_support(g, 0.6);
  Field v(g);
  for (std::size_t node : s.nodes()) {
    const double dx = g->coord(node, 0) - 1.0;
    const double dy = g->coord(node, 1) - 1.0;
    v[node] = (0.36 - dx * dx - dy * dy);
  }
  PenaltyParams p{PenaltyKind::NonRewarding, 0.1, 0.5};
  const double expect = rayleigh_quotient(v, Objective::Buckling) +
                        penalty(p, support_of(v).volume());
  CHECK(penalized_value(v, p, Objective::Buckling) ==
        doctest::Approx(expect).epsilon(1e-14));

  Field zero(g);
  CHECK(std::isinf(penalized_value(zero, p, Objective::Buckling)));
}
