#pragma once

// Empirical counterparts of the structural statements: boundary splitting,
// invariance checks, boundary profiles (doubling, nondegeneracy, density),
// and an aggregated report for a solved or optimized support.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "plate/grid.hpp"
#include "plate/spectral.hpp"
#include "plate/theory.hpp"

namespace plate {

struct BoundaryClassification {
  std::vector<std::size_t> gamma;  // rim cells with one-sided gradient <= gamma_tol
  std::vector<std::size_t> sigma;  // rim cells exceeding gamma_tol
  double gamma_tol = 0.0;
};

/// Split the inactive cells adjacent to the support. gamma_tol < 0 selects the
/// default h * max|lap u|.
BoundaryClassification classify_boundary(const Support& s, const Field& u,
                                         double gamma_tol = -1.0);

struct ScalingCheck {
  double t = 0.0;
  double lambda_base = 0.0;
  double lambda_scaled = 0.0;
  double error = 0.0;      // | t^2 * lambda(tS) / lambda(S) - 1 |
  bool clipped = false;    // scaled support left the container
};
/// Rasterize t * (S - center) + center on the same grid and compare loads.
ScalingCheck check_scaling(const Support& s, double t, Objective objective,
                           double eigen_tol);

struct TranslationCheck {
  std::array<double, 4> shift{};
  bool lattice_aligned = false;
  bool fits = false;       // shifted support stayed inside the mask
  double lambda_base = 0.0;
  double lambda_shifted = 0.0;
  double rel_error = 0.0;
};
TranslationCheck check_translation(const Support& s, const std::array<double, 4>& shift,
                                   Objective objective, double eigen_tol);

struct AlCheck {
  double c_n = 0.0;
  double lambda = 0.0;
  double bound = 0.0;   // c_n * ball load at equal volume
  double slack = 0.0;   // lambda / bound - 1
  bool pass = false;    // lambda >= bound * (1 - 2%)
};
AlCheck check_al(const Support& s, const EigenResult& eig, double c_n);

struct RadialProfile {
  std::vector<int> r_cells;       // radii in cells: 2, 4, ...
  std::vector<double> value;      // profile value per radius
  double r0 = 0.0;                // physical cap actually used
  bool degenerate = false;        // support too small to profile
};

/// sigma_hat(R) = max over rim cells of |B_2R cap S| / |B_R cap S|
/// (cell-counted balls). r0 < 0 selects 8h capped at a quarter of the
/// support bounding-box diagonal.
RadialProfile doubling_profile(const Support& s, double r0 = -1.0);

/// c1_hat(R) = min over gamma cells of sup_{B_R} |grad u| / R.
RadialProfile nondegeneracy_profile(const EigenResult& eig, const Support& s,
                                    const BoundaryClassification& cls, double r0 = -1.0);

struct DensityProfile {
  std::vector<int> r_cells;
  std::vector<double> quotient;   // min over gamma cells of |S cap B_R| / |B_R|
  std::vector<double> c2_hat;     // quotient / |B_R|^((1-alpha)/alpha)
  double r0 = 0.0;
  double alpha = 1.0;
  bool degenerate = false;
};
DensityProfile density_profile(const Support& s, const BoundaryClassification& cls,
                               double r0, double alpha);

/// Single-cell measurements shared by the profiles and by targeted tests.
double doubling_ratio_at(const Support& s, std::size_t cell, int r_cells);
double density_quotient_at(const Support& s, std::size_t cell, int r_cells);

// ---------------------------------------------------------------------------

struct ReportOptions {
  double eigen_tol = 1e-8;
  double scaling_t = 0.5;
  double scaling_bar = 0.05;
  double translation_bar = 1e-9;
  double gamma_tol = -1.0;
  double r0 = -1.0;
  double alpha = 0.9;
  double cn = -1.0;            // < 0: al_constant(dim)
  int monotonicity_pairs = 3;
  unsigned seed = 12345;
};

struct MonotonicityCheck {
  int pairs = 0;
  double worst_violation = 0.0;  // max over pairs of lambda(S2)/lambda(S1) - 1, S1 inside S2
  bool pass = false;
};

struct DiagnosticsReport {
  int components = 0;
  bool connected = false;
  std::size_t gamma_cells = 0;
  std::size_t sigma_cells = 0;
  double gamma_tol = 0.0;
  ScalingCheck scaling;
  bool scaling_pass = false;
  TranslationCheck translation;
  bool translation_pass = false;
  AlCheck al;
  MonotonicityCheck monotonicity;
  RadialProfile doubling;
  RadialProfile nondegeneracy;
  DensityProfile density;
  PdeResidual residual;
  bool overall_pass = false;   // AND of the applicable pass flags
};

DiagnosticsReport assemble_report(const Support& s, const EigenResult& eig,
                                  Objective objective, const ReportOptions& opt);

}  // namespace plate
