#pragma once

// Internal matrix-free operators for the pencil  A u = lambda K u  on a
// support: A applied as two Laplacian stencil sweeps (never assembled), K as
// the graph Laplacian (buckling) or scaled identity (fundamental tone).
// The 5-point Dirichlet Laplacian T on the support is factorized once and
// T^-2 serves as the conjugate-gradient preconditioner for A.

#include <cstdint>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "plate/grid.hpp"
#include "plate/spectral.hpp"

namespace plate::detail {

// Iteration scalar. Applying the fourth-order operator in double caps the
// attainable relative residual near eps_mach * kappa(A), and kappa(A) grows
// like h^-4: at N = 256 the floor sits around 1e-8, colliding with the
// default tolerance. Extended precision buys three more decades. The sparse
// factorization below stays double on purpose — the preconditioner only
// affects iteration count, never the attainable accuracy.
using Real = long double;

class Pencil {
 public:
  Pencil(const Support& s, Objective objective);

  std::size_t size() const { return snodes_.size(); }
  const std::vector<std::size_t>& nodes() const { return snodes_; }
  const Grid& grid() const { return *g_; }

  void apply_A(const std::vector<Real>& x, std::vector<Real>& y);
  void apply_K(const std::vector<Real>& x, std::vector<Real>& y) const;
  void apply_Minv(const std::vector<Real>& r, std::vector<Real>& z) const;

  static Real dot(const std::vector<Real>& a, const std::vector<Real>& b);

  /// Preconditioned CG for A y = b; returns iterations used. y holds the
  /// warm start on entry. Stops at |b - A y| <= rel_tol * |b|.
  int solve_A(const std::vector<Real>& b, std::vector<Real>& y, Real rel_tol,
              int max_iter);

  /// Scatter a support-indexed vector to a lattice-sized Field.
  Field to_field(const GridPtr& grid, const std::vector<Real>& x) const;
  /// Restrict a lattice field to support indexing.
  std::vector<Real> restrict_field(const Field& f) const;

 private:
  const Grid* g_;
  Objective obj_;
  std::vector<std::size_t> snodes_;
  std::vector<std::int32_t> sidx_;   // node -> support position, -1 outside
  Real hn_, inv_h2_, diag_;
  mutable std::vector<Real> lat_a_, lat_b_;
  mutable Eigen::VectorXd scratch_;  // double staging for the factorized solve
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> tchol_;
};

}  // namespace plate::detail
