#include "plate/io.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

namespace plate {

namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& path, const std::string& what) {
  throw std::invalid_argument("config: " + path + ": " + what);
}

void ensure_keys(const json& j, const std::string& path,
                 std::initializer_list<const char*> allowed) {
  for (const auto& item : j.items()) {
    bool ok = false;
    for (const char* k : allowed)
      if (item.key() == k) {
        ok = true;
        break;
      }
    if (!ok) bad(path + "." + item.key(), "unknown field");
  }
}

double get_number(const json& j, const std::string& path) {
  if (!j.is_number()) bad(path, "expected a number");
  return j.get<double>();
}
long get_integer(const json& j, const std::string& path) {
  if (!j.is_number_integer()) bad(path, "expected an integer");
  return j.get<long>();
}
std::string get_string(const json& j, const std::string& path) {
  if (!j.is_string()) bad(path, "expected a string");
  return j.get<std::string>();
}
bool get_bool(const json& j, const std::string& path) {
  if (!j.is_boolean()) bad(path, "expected a boolean");
  return j.get<bool>();
}

ContainerSpec parse_container(const json& j, const std::string& path) {
  if (!j.is_object()) bad(path, "expected an object");
  ensure_keys(j, path, {"type", "side", "radius"});
  const std::string type = j.contains("type") ? get_string(j["type"], path + ".type") : "box";
  if (type == "box") {
    if (j.contains("radius")) bad(path + ".radius", "not a box field");
    const double side = j.contains("side") ? get_number(j["side"], path + ".side") : 3.0;
    if (!(side > 0.0)) bad(path + ".side", "must be positive");
    return BoxSpec{side};
  }
  if (type == "ball") {
    if (j.contains("side")) bad(path + ".side", "not a ball field");
    if (!j.contains("radius")) bad(path + ".radius", "required for ball containers");
    const double radius = get_number(j["radius"], path + ".radius");
    if (!(radius > 0.0)) bad(path + ".radius", "must be positive");
    return BallSpec{radius};
  }
  bad(path + ".type", "expected \"box\" or \"ball\"");
}

InitSpec parse_init(const json& j, const std::string& path) {
  if (!j.is_object()) bad(path, "expected an object");
  ensure_keys(j, path, {"kind", "volume_factor", "path"});
  InitSpec init;
  const std::string kind = j.contains("kind") ? get_string(j["kind"], path + ".kind") : "ball";
  if (kind == "ball")
    init.kind = InitSpec::Kind::Ball;
  else if (kind == "full")
    init.kind = InitSpec::Kind::Full;
  else if (kind == "file")
    init.kind = InitSpec::Kind::File;
  else
    bad(path + ".kind", "expected \"ball\", \"full\", or \"file\"");
  if (j.contains("volume_factor")) {
    init.volume_factor = get_number(j["volume_factor"], path + ".volume_factor");
    if (!(init.volume_factor > 0.0)) bad(path + ".volume_factor", "must be positive");
  }
  if (j.contains("path")) init.path = get_string(j["path"], path + ".path");
  if (init.kind == InitSpec::Kind::File && init.path.empty())
    bad(path + ".path", "required when kind is \"file\"");
  return init;
}

OutputSpec parse_output(const json& j, const std::string& path) {
  if (!j.is_object()) bad(path, "expected an object");
  ensure_keys(j, path,
              {"dir", "history_csv", "result_json", "support_pgm", "field_pgm", "field_csv"});
  OutputSpec out;
  auto fill = [&](const char* key, std::string& slot) {
    if (j.contains(key)) slot = get_string(j[key], path + "." + key);
  };
  fill("dir", out.dir);
  fill("history_csv", out.history_csv);
  fill("result_json", out.result_json);
  fill("support_pgm", out.support_pgm);
  fill("field_pgm", out.field_pgm);
  fill("field_csv", out.field_csv);
  return out;
}

std::string format_g(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

std::string utc_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

double RunConfig::resolved_eps() const {
  if (eps) return *eps;
  if (!(omega0 > 0.0))
    throw std::invalid_argument("config: eps default requires a positive omega0");
  // default: 90% of the threshold below which the volume statements apply
  return 0.9 * omega0 / ball_buckling_load(dim, omega0);
}

PenaltyParams RunConfig::penalty_params() const {
  return PenaltyParams{penalty_kind, resolved_eps(), omega0};
}

RunConfig config_from_json(const json& j) {
  if (!j.is_object()) bad("", "top level must be an object");
  ensure_keys(j, "config",
              {"dim", "cells", "container", "omega0", "objective", "strategy", "penalty",
               "eps", "init", "sweep_size", "eigen_tol", "eigen_max_iter", "max_outer",
               "stall_limit", "seed", "threads", "cn_override", "gamma_tol", "r0",
               "report_alpha", "diagnostics", "output"});
  RunConfig cfg;
  if (j.contains("dim")) cfg.dim = static_cast<int>(get_integer(j["dim"], "config.dim"));
  if (cfg.dim < 2 || cfg.dim > 4) bad("config.dim", "must be 2, 3, or 4");
  if (j.contains("cells")) cfg.cells = static_cast<int>(get_integer(j["cells"], "config.cells"));
  if (cfg.cells < 4) bad("config.cells", "must be at least 4");
  if (j.contains("container")) cfg.container = parse_container(j["container"], "config.container");

  if (j.contains("omega0")) {
    cfg.omega0 = get_number(j["omega0"], "config.omega0");
    if (!(cfg.omega0 > 0.0)) bad("config.omega0", "must be positive");
    const double measure = container_measure(cfg.dim, cfg.container);
    if (!(cfg.omega0 < 0.9 * measure)) {
      std::ostringstream os;
      os << "omega0 " << cfg.omega0 << " must stay below 0.9 * container measure " << measure;
      bad("config.omega0", os.str());
    }
  }

  if (j.contains("objective")) {
    const std::string s = get_string(j["objective"], "config.objective");
    if (s == "buckling")
      cfg.objective = Objective::Buckling;
    else if (s == "fundamental_tone")
      cfg.objective = Objective::FundamentalTone;
    else
      bad("config.objective", "expected \"buckling\" or \"fundamental_tone\"");
  }
  if (j.contains("strategy")) {
    const std::string s = get_string(j["strategy"], "config.strategy");
    if (s == "threshold_sweep")
      cfg.strategy = Strategy::ThresholdSweep;
    else if (s == "relaxed_descent")
      cfg.strategy = Strategy::RelaxedDescent;
    else
      bad("config.strategy", "expected \"threshold_sweep\" or \"relaxed_descent\"");
  }
  if (j.contains("penalty")) {
    const std::string s = get_string(j["penalty"], "config.penalty");
    if (s == "non_rewarding")
      cfg.penalty_kind = PenaltyKind::NonRewarding;
    else if (s == "rewarding")
      cfg.penalty_kind = PenaltyKind::Rewarding;
    else
      bad("config.penalty", "expected \"non_rewarding\" or \"rewarding\"");
  }
  if (j.contains("eps")) {
    const double e = get_number(j["eps"], "config.eps");
    if (!(e > 0.0)) bad("config.eps", "must be positive");
    cfg.eps = e;
  }
  if (j.contains("init")) cfg.init = parse_init(j["init"], "config.init");

  if (j.contains("sweep_size"))
    cfg.sweep_size = static_cast<int>(get_integer(j["sweep_size"], "config.sweep_size"));
  if (cfg.sweep_size < 4) bad("config.sweep_size", "must be at least 4");
  if (j.contains("eigen_tol")) cfg.eigen_tol = get_number(j["eigen_tol"], "config.eigen_tol");
  if (!(cfg.eigen_tol > 0.0)) bad("config.eigen_tol", "must be positive");
  if (j.contains("eigen_max_iter"))
    cfg.eigen_max_iter =
        static_cast<int>(get_integer(j["eigen_max_iter"], "config.eigen_max_iter"));
  if (cfg.eigen_max_iter < 1) bad("config.eigen_max_iter", "must be at least 1");
  if (j.contains("max_outer"))
    cfg.max_outer = static_cast<int>(get_integer(j["max_outer"], "config.max_outer"));
  if (cfg.max_outer < 1) bad("config.max_outer", "must be at least 1");
  if (j.contains("stall_limit"))
    cfg.stall_limit = static_cast<int>(get_integer(j["stall_limit"], "config.stall_limit"));
  if (cfg.stall_limit < 1) bad("config.stall_limit", "must be at least 1");
  if (j.contains("seed")) {
    const long s = get_integer(j["seed"], "config.seed");
    if (s < 0) bad("config.seed", "must be non-negative");
    cfg.seed = static_cast<unsigned>(s);
  }
  if (j.contains("threads")) {
    cfg.threads = static_cast<int>(get_integer(j["threads"], "config.threads"));
    if (cfg.threads < 0) bad("config.threads", "must be non-negative");
  }
  if (j.contains("cn_override")) {
    const double c = get_number(j["cn_override"], "config.cn_override");
    if (!(c > 0.0 && c < 1.0)) bad("config.cn_override", "must lie in (0,1)");
    cfg.cn_override = c;
  }
  if (j.contains("gamma_tol")) {
    const double g = get_number(j["gamma_tol"], "config.gamma_tol");
    if (!(g >= 0.0)) bad("config.gamma_tol", "must be non-negative");
    cfg.gamma_tol = g;
  }
  if (j.contains("r0")) {
    const double r = get_number(j["r0"], "config.r0");
    if (!(r > 0.0)) bad("config.r0", "must be positive");
    cfg.r0 = r;
  }
  if (j.contains("report_alpha")) {
    cfg.report_alpha = get_number(j["report_alpha"], "config.report_alpha");
    if (!(cfg.report_alpha > 0.0 && cfg.report_alpha <= 1.0))
      bad("config.report_alpha", "must lie in (0,1]");
  }
  if (j.contains("diagnostics")) cfg.diagnostics = get_bool(j["diagnostics"], "config.diagnostics");
  if (j.contains("output")) cfg.output = parse_output(j["output"], "config.output");
  return cfg;
}

RunConfig read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("config: " + path + ": " + e.what());
  }
  return config_from_json(j);
}

json config_to_json(const RunConfig& cfg) {
  json j;
  j["dim"] = cfg.dim;
  j["cells"] = cfg.cells;
  if (std::holds_alternative<BoxSpec>(cfg.container))
    j["container"] = {{"type", "box"}, {"side", std::get<BoxSpec>(cfg.container).side}};
  else
    j["container"] = {{"type", "ball"}, {"radius", std::get<BallSpec>(cfg.container).radius}};
  j["omega0"] = cfg.omega0;
  j["objective"] = cfg.objective == Objective::Buckling ? "buckling" : "fundamental_tone";
  j["strategy"] =
      cfg.strategy == Strategy::ThresholdSweep ? "threshold_sweep" : "relaxed_descent";
  j["penalty"] = cfg.penalty_kind == PenaltyKind::NonRewarding ? "non_rewarding" : "rewarding";
  if (cfg.eps || cfg.omega0 > 0.0)
    j["eps"] = cfg.resolved_eps();
  else
    j["eps"] = nullptr;
  json init;
  switch (cfg.init.kind) {
    case InitSpec::Kind::Ball:
      init = {{"kind", "ball"}, {"volume_factor", cfg.init.volume_factor}};
      break;
    case InitSpec::Kind::Full:
      init = {{"kind", "full"}};
      break;
    case InitSpec::Kind::File:
      init = {{"kind", "file"}, {"path", cfg.init.path}};
      break;
  }
  j["init"] = init;
  j["sweep_size"] = cfg.sweep_size;
  j["eigen_tol"] = cfg.eigen_tol;
  j["eigen_max_iter"] = cfg.eigen_max_iter;
  j["max_outer"] = cfg.max_outer;
  j["stall_limit"] = cfg.stall_limit;
  j["seed"] = cfg.seed;
  j["threads"] = cfg.threads;
  if (cfg.cn_override) j["cn_override"] = *cfg.cn_override;
  if (cfg.gamma_tol) j["gamma_tol"] = *cfg.gamma_tol;
  if (cfg.r0) j["r0"] = *cfg.r0;
  j["report_alpha"] = cfg.report_alpha;
  j["diagnostics"] = cfg.diagnostics;
  j["output"] = {{"dir", cfg.output.dir},
                 {"history_csv", cfg.output.history_csv},
                 {"result_json", cfg.output.result_json},
                 {"support_pgm", cfg.output.support_pgm},
                 {"field_pgm", cfg.output.field_pgm},
                 {"field_csv", cfg.output.field_csv}};
  return j;
}

json thresholds_to_json(const Thresholds& t) {
  return json{{"n", t.n},      {"omega0", t.omega0}, {"eps", t.eps},      {"c_n", t.c_n},
              {"eps1", t.eps1}, {"eps0", t.eps0},     {"alpha0", t.alpha0}};
}

namespace {

json profile_to_json(const RadialProfile& p) {
  return json{{"r_cells", p.r_cells},
              {"value", p.value},
              {"r0", p.r0},
              {"degenerate", p.degenerate}};
}

json certificate_to_json(const CertificateRecord& c) {
  return json{{"statement", c.statement}, {"applicable", c.applicable}, {"pass", c.pass},
              {"volume", c.volume},       {"lower", c.lower},           {"upper", c.upper},
              {"detail", c.detail}};
}

}  // namespace

json report_to_json(const DiagnosticsReport& rep) {
  json j;
  j["components"] = rep.components;
  j["connected"] = rep.connected;
  j["gamma_cells"] = rep.gamma_cells;
  j["sigma_cells"] = rep.sigma_cells;
  j["gamma_tol"] = rep.gamma_tol;
  j["scaling"] = {{"t", rep.scaling.t},
                  {"lambda_base", rep.scaling.lambda_base},
                  {"lambda_scaled", rep.scaling.lambda_scaled},
                  {"error", rep.scaling.error},
                  {"clipped", rep.scaling.clipped},
                  {"pass", rep.scaling_pass}};
  j["translation"] = {{"shift", std::vector<double>(rep.translation.shift.begin(),
                                                    rep.translation.shift.end())},
                      {"lattice_aligned", rep.translation.lattice_aligned},
                      {"fits", rep.translation.fits},
                      {"lambda_base", rep.translation.lambda_base},
                      {"lambda_shifted", rep.translation.lambda_shifted},
                      {"rel_error", rep.translation.rel_error},
                      {"pass", rep.translation_pass}};
  j["al"] = {{"c_n", rep.al.c_n},   {"lambda", rep.al.lambda}, {"bound", rep.al.bound},
             {"slack", rep.al.slack}, {"pass", rep.al.pass}};
  j["monotonicity"] = {{"pairs", rep.monotonicity.pairs},
                       {"worst_violation", rep.monotonicity.worst_violation},
                       {"pass", rep.monotonicity.pass}};
  j["doubling"] = profile_to_json(rep.doubling);
  j["nondegeneracy"] = profile_to_json(rep.nondegeneracy);
  j["density"] = {{"r_cells", rep.density.r_cells}, {"quotient", rep.density.quotient},
                  {"c2_hat", rep.density.c2_hat},   {"r0", rep.density.r0},
                  {"alpha", rep.density.alpha},     {"degenerate", rep.density.degenerate}};
  j["residual"] = {{"interior_rms", rep.residual.interior_rms},
                   {"boundary_gradient_max", rep.residual.boundary_gradient_max},
                   {"interior_nodes", rep.residual.interior_nodes}};
  j["overall_pass"] = rep.overall_pass;
  return j;
}

json result_to_json(const RunConfig& cfg, const RunArtifacts& art) {
  json j;
  j["config"] = config_to_json(cfg);
  j["thresholds"] = thresholds_to_json(art.thr);
  j["result"] = {{"lambda", art.result.eig.lambda},
                 {"i_eps", art.result.i_eps},
                 {"volume", art.result.volume},
                 {"support_cells", art.result.support.size()},
                 {"converged", art.result.converged},
                 {"stop_reason", art.result.stop_reason},
                 {"clipped_when_rescaled", art.result.clipped_when_rescaled},
                 {"residual", art.result.eig.residual},
                 {"normalization", art.result.eig.normalization},
                 {"eigen_iterations", art.result.eig.iterations},
                 {"outer_iterations", art.result.outer_iterations},
                 {"eigensolve_count", art.result.eigensolve_count}};
  j["certificate"] = certificate_to_json(art.certificate);
  if (art.has_report) j["diagnostics"] = report_to_json(art.report);
  j["meta"] = {{"tool", "plate"}, {"version", "0.1.0"}, {"created_utc", utc_now()}};
  return j;
}

std::pair<double, double> write_pgm(const std::string& path, const Field& v) {
  const Grid& g = v.grid();
  if (g.dim != 2) throw std::invalid_argument("write_pgm: requires a 2-d grid");
  double lo = v[0], hi = v[0];
  for (double x : v.values()) {
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  const int n = g.nodes_per_side;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_pgm: cannot open " + path);
  out << "P5\n" << n << " " << n << "\n255\n";
  const double span = hi - lo;
  std::vector<unsigned char> row(n);
  for (int r = 0; r < n; ++r) {
    const int yi = n - 1 - r;  // top row carries the max-y nodes
    for (int xi = 0; xi < n; ++xi) {
      const double val = v[g.encode({xi, yi, 0, 0})];
      row[xi] = span > 0.0
                    ? static_cast<unsigned char>(std::lround(255.0 * (val - lo) / span))
                    : 0;
    }
    out.write(reinterpret_cast<const char*>(row.data()), n);
  }
  if (!out) throw std::runtime_error("write_pgm: write failed for " + path);
  return {lo, hi};
}

Support read_support_pgm(const std::string& path, const GridPtr& grid) {
  if (grid->dim != 2) throw std::invalid_argument("read_support_pgm: requires a 2-d grid");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("read_support_pgm: cannot open " + path);
  auto next_token = [&]() -> std::string {
    std::string tok;
    for (;;) {
      const int c = in.get();
      if (c == EOF) throw std::invalid_argument("read_support_pgm: truncated header in " + path);
      if (c == '#') {  // comment to end of line
        std::string skip;
        std::getline(in, skip);
        continue;
      }
      if (std::isspace(c)) {
        if (!tok.empty()) return tok;
        continue;
      }
      tok.push_back(static_cast<char>(c));
    }
  };
  if (next_token() != "P5")
    throw std::invalid_argument("read_support_pgm: not a binary PGM: " + path);
  const int w = std::stoi(next_token());
  const int h = std::stoi(next_token());
  const int maxval = std::stoi(next_token());
  if (w != grid->nodes_per_side || h != grid->nodes_per_side) {
    std::ostringstream os;
    os << "read_support_pgm: image is " << w << "x" << h << " but the grid needs "
       << grid->nodes_per_side << "x" << grid->nodes_per_side;
    throw std::invalid_argument(os.str());
  }
  if (maxval <= 0 || maxval > 255)
    throw std::invalid_argument("read_support_pgm: unsupported maxval in " + path);
  std::vector<char> data(static_cast<std::size_t>(w) * h);
  in.read(data.data(), static_cast<std::streamsize>(data.size()));
  if (in.gcount() != static_cast<std::streamsize>(data.size()))
    throw std::invalid_argument("read_support_pgm: truncated pixel data in " + path);
  std::vector<std::uint8_t> bits(grid->node_count, 0);
  for (int r = 0; r < h; ++r) {
    const int yi = h - 1 - r;
    for (int xi = 0; xi < w; ++xi) {
      const unsigned char px = static_cast<unsigned char>(data[static_cast<std::size_t>(r) * w + xi]);
      if (px > 127) bits[grid->encode({xi, yi, 0, 0})] = 1;
    }
  }
  return Support(grid, std::move(bits));
}

void write_history_csv(const std::string& path, const std::vector<HistoryRow>& history) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_history_csv: cannot open " + path);
  out << "iter,I,lambda,volume,moved_cells\n";
  for (const HistoryRow& r : history)
    out << r.iter << "," << format_g(r.i_eps) << "," << format_g(r.lambda) << ","
        << format_g(r.volume) << "," << r.moved_cells << "\n";
  if (!out) throw std::runtime_error("write_history_csv: write failed for " + path);
}

void write_field_csv(const std::string& path, const Field& v) {
  const Grid& g = v.grid();
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_field_csv: cannot open " + path);
  static const char* inames[] = {"i", "j", "k", "l"};
  static const char* xnames[] = {"x", "y", "z", "w"};
  for (int d = 0; d < g.dim; ++d) out << inames[d] << ",";
  for (int d = 0; d < g.dim; ++d) out << xnames[d] << ",";
  out << "u\n";
  std::array<int, 4> idx{};
  for (std::size_t node = 0; node < g.node_count; ++node) {
    g.decode(node, idx);
    for (int d = 0; d < g.dim; ++d) out << idx[d] << ",";
    for (int d = 0; d < g.dim; ++d) out << format_g(g.origin[d] + idx[d] * g.h) << ",";
    out << format_g(v[node]) << "\n";
  }
  if (!out) throw std::runtime_error("write_field_csv: write failed for " + path);
}

json write_outputs(const RunConfig& cfg, const RunArtifacts& art) {
  namespace fs = std::filesystem;
  const fs::path dir(cfg.output.dir);
  fs::create_directories(dir);

  json outputs;
  write_history_csv((dir / cfg.output.history_csv).string(), art.result.history);
  outputs["history_csv"] = cfg.output.history_csv;

  const Grid& g = art.result.support.grid();
  if (g.dim == 2) {
    Field indicator(art.result.support.grid_ptr());
    for (std::size_t node : art.result.support.nodes()) indicator[node] = 1.0;
    const auto srange = write_pgm((dir / cfg.output.support_pgm).string(), indicator);
    outputs["support_pgm"] = {{"file", cfg.output.support_pgm},
                              {"min", srange.first},
                              {"max", srange.second}};
    const auto frange = write_pgm((dir / cfg.output.field_pgm).string(), art.result.eig.field);
    outputs["field_pgm"] = {{"file", cfg.output.field_pgm},
                            {"min", frange.first},
                            {"max", frange.second}};
  }
  write_field_csv((dir / cfg.output.field_csv).string(), art.result.eig.field);
  outputs["field_csv"] = cfg.output.field_csv;

  json payload = result_to_json(cfg, art);
  payload["outputs"] = outputs;
  std::ofstream out(dir / cfg.output.result_json);
  if (!out) throw std::runtime_error("write_outputs: cannot open result json");
  out << payload.dump(2) << "\n";
  return payload;
}

// ---------------------------------------------------------------------------
// CLI

namespace {

Support support_from_init(const GridPtr& grid, const RunConfig& cfg) {
  switch (cfg.init.kind) {
    case InitSpec::Kind::Full:
      return Support(grid, grid->mask);
    case InitSpec::Kind::File:
      return read_support_pgm(cfg.init.path, grid);
    case InitSpec::Kind::Ball:
    default: {
      if (!(cfg.omega0 > 0.0))
        throw std::invalid_argument("a ball init needs a positive omega0");
      const double vol = cfg.init.volume_factor * cfg.omega0;
      const double radius = std::pow(vol / unit_ball_volume(grid->dim), 1.0 / grid->dim);
      return make_shape(grid, ShapeSpec{BallShape{grid->center(), radius}});
    }
  }
}

Thresholds thresholds_for(const RunConfig& cfg) {
  if (cfg.omega0 > 0.0)
    return thresholds(cfg.dim, cfg.omega0, cfg.resolved_eps(), cfg.cn_override);
  Thresholds t;
  t.n = cfg.dim;
  t.c_n = cfg.cn_override ? *cfg.cn_override : al_constant(cfg.dim);
  return t;
}

ReportOptions report_options(const RunConfig& cfg) {
  ReportOptions opt;
  opt.eigen_tol = cfg.eigen_tol;
  opt.gamma_tol = cfg.gamma_tol ? *cfg.gamma_tol : -1.0;
  opt.r0 = cfg.r0 ? *cfg.r0 : -1.0;
  opt.alpha = cfg.report_alpha;
  opt.cn = cfg.cn_override ? *cfg.cn_override : -1.0;
  opt.seed = cfg.seed;
  return opt;
}

int run_constants(int dim, double omega0, double eps, bool as_json, std::ostream& out) {
  json j;
  j["n"] = dim;
  j["unit_ball_volume"] = unit_ball_volume(dim);
  j["bessel_zero_numerator"] = bessel_first_zero(dim / 2.0 - 1.0);
  j["bessel_zero_denominator"] = bessel_first_zero(dim / 2.0);
  j["unit_ball_buckling_load"] = ball_buckling_load(dim, unit_ball_volume(dim));
  j["c_n"] = al_constant(dim);
  if (omega0 > 0.0) {
    const double e = eps > 0.0 ? eps : 0.9 * omega0 / ball_buckling_load(dim, omega0);
    j["thresholds"] = thresholds_to_json(thresholds(dim, omega0, e));
    j["ball_load_at_omega0"] = ball_buckling_load(dim, omega0);
  }
  if (as_json) {
    out << j.dump(2) << "\n";
    return 0;
  }
  out << "n                        " << dim << "\n";
  out << "unit ball volume         " << format_g(j["unit_ball_volume"].get<double>()) << "\n";
  out << "j_{n/2-1,1}              " << format_g(j["bessel_zero_numerator"].get<double>()) << "\n";
  out << "j_{n/2,1}                " << format_g(j["bessel_zero_denominator"].get<double>()) << "\n";
  out << "unit ball buckling load  " << format_g(j["unit_ball_buckling_load"].get<double>())
      << "\n";
  out << "c_n                      " << format_g(j["c_n"].get<double>()) << "\n";
  if (omega0 > 0.0) {
    const json& t = j["thresholds"];
    out << "ball load at omega0      " << format_g(j["ball_load_at_omega0"].get<double>()) << "\n";
    out << "eps1                     " << format_g(t["eps1"].get<double>()) << "\n";
    out << "eps0                     " << format_g(t["eps0"].get<double>()) << "\n";
    out << "alpha0(eps)              " << format_g(t["alpha0"].get<double>()) << "\n";
  }
  return 0;
}

struct CommonFlags {
  std::string config_path;
  std::optional<int> dim, cells, threads;
  std::optional<double> omega0, eps;

  RunConfig resolve() const {
    RunConfig cfg;
    if (!config_path.empty()) cfg = read_config(config_path);
    json patch = json::object();
    if (dim) patch["dim"] = *dim;
    if (cells) patch["cells"] = *cells;
    if (omega0) patch["omega0"] = *omega0;
    if (eps) patch["eps"] = *eps;
    if (threads) patch["threads"] = *threads;
    if (!patch.empty()) {
      // round-trip through the canonical form so overrides share validation
      json merged = config_to_json(cfg);
      if (cfg.omega0 <= 0.0) merged.erase("omega0");
      if (merged["eps"].is_null() || (!cfg.eps && !patch.contains("eps"))) merged.erase("eps");
      for (const auto& item : patch.items()) merged[item.key()] = item.value();
      cfg = config_from_json(merged);
    }
    return cfg;
  }
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "JSON config file");
  cmd->add_option("--dim", flags.dim, "override spatial dimension");
  cmd->add_option("--cells", flags.cells, "override cells per side");
  cmd->add_option("--omega0", flags.omega0, "override target volume");
  cmd->add_option("--eps", flags.eps, "override penalty eps");
  cmd->add_option("--threads", flags.threads, "override worker threads (0 = auto)");
}

int run_solve(const RunConfig& cfg, std::ostream& out) {
  GridPtr grid = build_grid(cfg.dim, cfg.cells, cfg.container);
  Support s = support_from_init(grid, cfg);
  EigenResult eig = min_eigenpair(s, cfg.objective, cfg.eigen_tol, cfg.eigen_max_iter);
  const double pen = cfg.omega0 > 0.0 ? penalty(cfg.penalty_params(), s.volume()) : 0.0;

  OptimizeResult res{s, eig};
  res.i_eps = eig.lambda + pen;
  res.volume = s.volume();
  res.converged = true;
  res.stop_reason = "single solve";
  res.history.push_back({0, res.i_eps, eig.lambda, res.volume, 0});
  res.outer_iterations = 0;
  res.eigensolve_count = 1;

  RunArtifacts art{std::move(res), thresholds_for(cfg), CertificateRecord{}};
  art.certificate.statement = "not evaluated (single solve)";
  art.certificate.pass = true;
  if (cfg.diagnostics) {
    art.report = assemble_report(art.result.support, art.result.eig, cfg.objective,
                                 report_options(cfg));
    art.has_report = true;
  }
  write_outputs(cfg, art);
  out << "lambda " << format_g(art.result.eig.lambda) << "  volume "
      << format_g(art.result.volume) << "  residual " << format_g(art.result.eig.residual)
      << "  iterations " << art.result.eig.iterations << "\n";
  out << "wrote " << cfg.output.dir << "/" << cfg.output.result_json << "\n";
  return 0;
}

int run_optimize(const RunConfig& cfg, std::ostream& out) {
  if (!(cfg.omega0 > 0.0))
    throw std::invalid_argument("optimize requires a positive omega0");
  GridPtr grid = build_grid(cfg.dim, cfg.cells, cfg.container);

  OptimizeOptions opt;
  opt.objective = cfg.objective;
  opt.strategy = cfg.strategy;
  opt.penalty = cfg.penalty_params();
  opt.init = cfg.init;
  opt.sweep_size = cfg.sweep_size;
  opt.eigen_tol = cfg.eigen_tol;
  opt.eigen_max_iter = cfg.eigen_max_iter;
  opt.max_outer = cfg.max_outer;
  opt.stall_limit = cfg.stall_limit;
  opt.threads = cfg.threads;

  OptimizeResult res = minimize_penalized(grid, opt);
  Thresholds thr = thresholds_for(cfg);
  CertificateRecord cert = certify_result(res, thr, opt.penalty);
  RunArtifacts art{std::move(res), thr, std::move(cert)};
  if (cfg.diagnostics) {
    art.report = assemble_report(art.result.support, art.result.eig, cfg.objective,
                                 report_options(cfg));
    art.has_report = true;
  }
  write_outputs(cfg, art);

  out << "I_eps " << format_g(art.result.i_eps) << "  lambda "
      << format_g(art.result.eig.lambda) << "  volume " << format_g(art.result.volume)
      << "  outer " << art.result.outer_iterations << "  solves "
      << art.result.eigensolve_count << "\n";
  out << (art.result.converged ? "converged: " : "NOT converged: ") << art.result.stop_reason
      << "\n";
  out << "certificate " << (art.certificate.pass ? "PASS" : "FAIL") << ": "
      << art.certificate.statement << "\n";
  out << "wrote " << cfg.output.dir << "/" << cfg.output.result_json << "\n";
  if (!art.result.converged) return 2;
  if (art.certificate.applicable && !art.certificate.pass) return 3;
  return 0;
}

int run_diagnose(const RunConfig& cfg, const std::string& support_path, std::ostream& out) {
  GridPtr grid = build_grid(cfg.dim, cfg.cells, cfg.container);
  Support s = read_support_pgm(support_path, grid);
  EigenResult eig = min_eigenpair(s, cfg.objective, cfg.eigen_tol, cfg.eigen_max_iter);
  DiagnosticsReport rep = assemble_report(s, eig, cfg.objective, report_options(cfg));
  json j = report_to_json(rep);
  j["lambda"] = eig.lambda;
  j["volume"] = s.volume();
  out << j.dump(2) << "\n";
  return rep.overall_pass ? 0 : 3;
}

}  // namespace

int cli_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"penalized clamped-plate buckling toolkit"};
  app.require_subcommand(1);

  auto* c_const = app.add_subcommand("constants", "closed-form constants and thresholds");
  int c_dim = 2;
  double c_omega0 = 0.0, c_eps = 0.0;
  bool c_json = false;
  c_const->add_option("--dim", c_dim, "spatial dimension")->check(CLI::Range(2, 4));
  c_const->add_option("--omega0", c_omega0, "target volume for thresholds");
  c_const->add_option("--eps", c_eps, "penalty eps for alpha0");
  c_const->add_flag("--json", c_json, "print JSON");

  CommonFlags f_solve, f_opt, f_diag;
  auto* c_solve = app.add_subcommand("solve", "solve the eigenproblem on the initial support");
  add_common(c_solve, f_solve);
  auto* c_opt = app.add_subcommand("optimize", "minimize the penalized objective");
  add_common(c_opt, f_opt);
  auto* c_diag = app.add_subcommand("diagnose", "structural report for a stored support");
  add_common(c_diag, f_diag);
  std::string diag_support;
  c_diag->add_option("--support", diag_support, "support PGM to analyze")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 1;
  }

  try {
    if (c_const->parsed()) return run_constants(c_dim, c_omega0, c_eps, c_json, out);
    if (c_solve->parsed()) return run_solve(f_solve.resolve(), out);
    if (c_opt->parsed()) return run_optimize(f_opt.resolve(), out);
    if (c_diag->parsed()) return run_diagnose(f_diag.resolve(), diag_support, out);
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const NonConvergenceError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const EmptySupportError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const EmptySupportCollapse& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  err << "error: no subcommand\n";
  return 1;
}

}  // namespace plate
