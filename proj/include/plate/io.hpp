#pragma once

// Run configuration (strict JSON schema with defaults), output writers
// (history CSV, result JSON, PGM images, raw field CSV), and the CLI driver.

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "plate/diagnostics.hpp"
#include "plate/grid.hpp"
#include "plate/optimizer.hpp"

namespace plate {

struct OutputSpec {
  std::string dir = "out";
  std::string history_csv = "history.csv";
  std::string result_json = "result.json";
  std::string support_pgm = "support.pgm";
  std::string field_pgm = "field.pgm";
  std::string field_csv = "field.csv";
};

struct RunConfig {
  int dim = 2;
  int cells = 128;
  ContainerSpec container = BoxSpec{3.0};
  double omega0 = 0.0;
  Objective objective = Objective::Buckling;
  Strategy strategy = Strategy::ThresholdSweep;
  PenaltyKind penalty_kind = PenaltyKind::NonRewarding;
  std::optional<double> eps;          // default 0.9 * eps1(n, omega0)
  InitSpec init;
  int sweep_size = 16;
  double eigen_tol = 1e-8;
  int eigen_max_iter = 10000;
  int max_outer = 60;
  int stall_limit = 5;
  unsigned seed = 12345;
  int threads = 0;
  std::optional<double> cn_override;
  std::optional<double> gamma_tol;
  std::optional<double> r0;
  double report_alpha = 0.9;
  bool diagnostics = true;
  OutputSpec output;

  double resolved_eps() const;        // eps or its default
  PenaltyParams penalty_params() const;
};

/// Parse and validate a config file. Unknown fields, malformed JSON, and
/// semantic violations (omega0 >= 0.9 * container measure, bad ranges) throw
/// std::invalid_argument with the offending path or values.
RunConfig read_config(const std::string& path);
RunConfig config_from_json(const nlohmann::json& j);

/// Everything produced by one optimize run.
struct RunArtifacts {
  OptimizeResult result;
  Thresholds thr;
  CertificateRecord certificate;
  DiagnosticsReport report;
  bool has_report = false;
};

/// Serialize the result (stable payload; timestamps only under "meta").
nlohmann::json result_to_json(const RunConfig& cfg, const RunArtifacts& art);

/// Write history CSV, result JSON, PGM images, and the raw field CSV into
/// cfg.output.dir. Returns the result JSON actually written.
nlohmann::json write_outputs(const RunConfig& cfg, const RunArtifacts& art);

/// Binary P5 PGM, min-max scaled; top row is the max-y row. Returns {min,max}.
std::pair<double, double> write_pgm(const std::string& path, const Field& v);
/// Read a support from a PGM written by this tool (bytes > 127 are active).
Support read_support_pgm(const std::string& path, const GridPtr& grid);

void write_history_csv(const std::string& path, const std::vector<HistoryRow>& history);
void write_field_csv(const std::string& path, const Field& v);

nlohmann::json report_to_json(const DiagnosticsReport& rep);
nlohmann::json thresholds_to_json(const Thresholds& t);
nlohmann::json config_to_json(const RunConfig& cfg);

/// Subcommand driver (constants | solve | optimize | diagnose).
/// Exit codes: 0 ok, 1 usage, 2 numerical non-convergence, 3 certificate FAIL.
int cli_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace plate
