#pragma once

// Support-space minimization of the penalized buckling objective, and the
// certificate that checks the optimum against the applicable volume statement.

#include <string>
#include <vector>

#include "plate/grid.hpp"
#include "plate/spectral.hpp"
#include "plate/theory.hpp"

namespace plate {

enum class Strategy { ThresholdSweep, RelaxedDescent };

struct InitSpec {
  enum class Kind { Ball, Full, File };
  Kind kind = Kind::Ball;
  double volume_factor = 1.5;  // Ball: initial volume as a multiple of omega0
  std::string path;            // File: support PGM written by this tool
};

struct OptimizeOptions {
  Objective objective = Objective::Buckling;
  Strategy strategy = Strategy::ThresholdSweep;
  PenaltyParams penalty;
  InitSpec init;
  int sweep_size = 16;       // >= 4; threshold ladder {0} + {0.5 * 2^-j}
  double eigen_tol = 1e-8;
  int eigen_max_iter = 10000;
  int max_outer = 60;
  int stall_limit = 5;
  int threads = 0;           // 0: PLATE_THREADS env var, then hardware
  int descent_max_steps = 400;  // RelaxedDescent only
};

struct HistoryRow {
  int iter = 0;
  double i_eps = 0.0;
  double lambda = 0.0;
  double volume = 0.0;
  long moved_cells = 0;  // symmetric difference against the previous support
};

struct OptimizeResult {
  Support support;
  EigenResult eig;
  double i_eps = 0.0;
  double volume = 0.0;
  bool converged = false;
  std::string stop_reason;
  bool clipped_when_rescaled = false;  // omega0-rescaled support leaves the container
  std::vector<HistoryRow> history;     // initial state plus accepted steps; i_eps non-increasing
  int outer_iterations = 0;
  long eigensolve_count = 0;
};

struct EmptySupportCollapse : std::runtime_error {
  EmptySupportCollapse() : std::runtime_error("all candidate supports empty") {}
};

/// Minimize I_eps over supports inside the container. Requires
/// penalty.omega0 < 0.9 * container measure. Deterministic for fixed options.
OptimizeResult minimize_penalized(const GridPtr& grid, const OptimizeOptions& opt);

struct CertificateRecord {
  std::string statement;   // which volume statement applies
  bool applicable = false; // false when eps exceeds the relevant threshold
  bool pass = false;       // vacuously true when not applicable
  double volume = 0.0;
  double lower = 0.0;      // admissible volume window
  double upper = 0.0;
  std::string detail;
};

/// Check the result's volume against the statement selected by the penalty
/// kind and eps. vol_tol is the admitted relative slack (discretization).
/// Throws std::invalid_argument when params disagree with thr.
CertificateRecord certify_result(const OptimizeResult& result, const Thresholds& thr,
                                 const PenaltyParams& params, double vol_tol = 0.02);

}  // namespace plate
