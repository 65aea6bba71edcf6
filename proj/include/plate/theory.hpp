#pragma once

// Closed-form constants for the penalized buckling problem: volume penalties,
// ball loads via Bessel zeros, the Ashbaugh-Laugesen constant, and the
// epsilon thresholds that govern which volume statement applies.

#include <optional>

#include "plate/grid.hpp"
#include "plate/spectral.hpp"

namespace plate {

enum class PenaltyKind {
  NonRewarding,  // zero below omega0, slope 1/eps above
  Rewarding,     // slope eps below omega0, slope 1/eps above
};

struct PenaltyParams {
  PenaltyKind kind = PenaltyKind::NonRewarding;
  double eps = 0.0;     // > 0
  double omega0 = 0.0;  // > 0
};

/// Piecewise-linear volume penalty at volume s >= 0.
double penalty(const PenaltyParams& p, double s);

/// Penalized objective I = R(v) + penalty(|support_of(v, delta)|).
/// Infinite for the zero field.
double penalized_value(const Field& v, const PenaltyParams& p, Objective objective,
                       double delta = -1.0);

/// Volume of the unit ball in R^n (even/odd closed forms), n >= 1.
double unit_ball_volume(int n);

/// First positive zero of the Bessel function J_nu, nu >= 0. Series
/// evaluation, sign scan on (0, 20], bisection to 1e-12.
double bessel_first_zero(double nu);

/// Buckling load of the n-ball of given volume: (omega_n / V)^(2/n) * j_{n/2,1}^2.
double ball_buckling_load(int n, double volume);

/// c_n = 2^(2/n) * (j_{n/2-1,1} / j_{n/2,1})^2, in (0,1) for all n >= 2.
double al_constant(int n);

struct Thresholds {
  int n = 0;
  double omega0 = 0.0;
  double eps = 0.0;
  double c_n = 0.0;
  double eps1 = 0.0;    // below: rewarding volume <= omega0, non-rewarding volume == omega0
  double eps0 = 0.0;    // below: rewarding dichotomy applies; always <= eps1
  double alpha0 = 0.0;  // rewarding volume lower-bound factor at this eps
};

/// Evaluate the thresholds at (n, omega0, eps). cn_override replaces the
/// computed c_n (must lie in (0,1)).
Thresholds thresholds(int n, double omega0, double eps,
                      std::optional<double> cn_override = std::nullopt);

}  // namespace plate
