#pragma once

// Rayleigh quotients and the smallest generalized eigenpair of the clamped
// bilaplacian pencil on a support, with zero-extension boundary conditions.

#include <stdexcept>

#include "plate/grid.hpp"

namespace plate {

enum class Objective {
  Buckling,         // |lap v|^2 / |grad v|^2
  FundamentalTone,  // |lap v|^2 / |v|^2
};

/// Energy quotient of a zero-extended field. Returns +infinity for the zero
/// field (denominator vanishes); otherwise finite and positive.
double rayleigh_quotient(const Field& v, Objective objective);

struct EigenResult {
  double lambda = 0.0;     // smallest eigenvalue of the pencil
  Field field;             // eigenfield, denominator energy 1, zero outside support
  double residual = 0.0;   // relative pencil residual |A u - lambda K u| / |K u|
  int iterations = 0;      // outer (inverse) iterations used
  double normalization = 0.0;  // achieved denominator energy (should be 1)
};

struct EmptySupportError : std::runtime_error {
  EmptySupportError() : std::runtime_error("empty support") {}
};

struct NonConvergenceError : std::runtime_error {
  int iterations;
  double residual;
  NonConvergenceError(int it, double res);
};

/// Smallest eigenpair of  A u = lambda K u  restricted to fields supported on
/// `s`, where A is the squared-Laplacian form and K the objective-dependent
/// denominator form. Inverse iteration with conjugate-gradient inner solves;
/// the numerator operator is applied as two Laplacian stencil sweeps and never
/// assembled. Deterministic: fixed initial guess (product of index distances
/// to the support bounding box), largest-magnitude entry made positive.
/// An optional warm start seeds the iteration (restricted to `s`).
EigenResult min_eigenpair(const Support& s, Objective objective,
                          double tol = 1e-8, int max_iter = 10000,
                          const Field* warm_start = nullptr);

struct PdeResidual {
  double interior_rms = 0.0;          // volume-weighted RMS of lap^2 u + lambda lap u
  double boundary_gradient_max = 0.0; // max one-sided difference at the support rim
  std::size_t interior_nodes = 0;     // nodes whose full bilaplacian stencil is active
};

/// Pointwise consistency of an eigenpair with the Euler-Lagrange equation.
/// interior_rms is NaN when no node qualifies (tiny supports).
PdeResidual pde_residual(const EigenResult& eig, const Support& s);

}  // namespace plate
