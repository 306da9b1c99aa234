#include "eqshbc/cli.hpp"

#include "eqshbc/config.hpp"
#include "eqshbc/error.hpp"
#include "eqshbc/measure.hpp"
#include "eqshbc/scenario.hpp"

#include <CLI11.hpp>
#include <json.hpp>
#include <openssl/evp.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>

namespace eqshbc {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

struct Globals {
  std::string config;
  std::string out;
  int threads = 1;
  std::uint64_t seed = 0;
  bool allow_nonqs = false;
};

struct CommandArgs {
  bool dump_field = false;
  bool dump_grid = false;
  std::string map_path, cap_path, galv_path, regions_path;
  std::optional<double> tie_eps_db;
  std::string at;
  std::string input, output;
  std::optional<double> tx_power_dbm;
  double attenuator_db = 20.0;
  double buffer_gain_db = 0.0;
  double cable_loss_db = 0.0;
  std::string mode;
  std::vector<std::string> sim_paths, meas_paths;
};

struct Category {
  int exit_code;
  const char *name;
};

Category categorize(ErrorCode code) {
  switch (code) {
  case ErrorCode::SingularSystem:
  case ErrorCode::SystemTooLarge:
  case ErrorCode::NoConvergence:
  case ErrorCode::NonPassive:
  case ErrorCode::MismatchedInputs:
    return {kExitSolve, "SolveError"};
  case ErrorCode::IoError: return {kExitIo, "IoError"};
  case ErrorCode::MissingArtifact:
    return {kExitMissingArtifact, "MissingArtifact"};
  case ErrorCode::GridMismatch: return {kExitGridMismatch, "GridMismatch"};
  case ErrorCode::ParseError:
  case ErrorCode::MissingTxPower:
  case ErrorCode::DuplicateCoordinate:
    return {kExitParse, "ParseError"};
  case ErrorCode::NoOverlap: return {kExitNoOverlap, "NoOverlap"};
  default: return {kExitConfig, "ConfigError"};
  }
}

std::string fixed(double v, int digits = 2) {
  if (!std::isfinite(v))
    return "nan";
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

std::string read_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error(ErrorCode::IoError, "cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Shared state of one command invocation.
class Context {
public:
  Context(std::string command, const Globals &g, std::ostream &out)
      : command_(std::move(command)), globals_(g), out_(out) {
    manifest_["tool"] = "eqshbc";
    manifest_["version"] = std::string(kVersion);
    manifest_["command"] = command_;
    manifest_["config_hash"] = nullptr;
    manifest_["inputs"] = json::object();
    manifest_["artifacts"] = json::array();
    manifest_["solver"] = json::array();
    manifest_["summary"] = json::object();
  }

  std::ostream &out() { return out_; }
  const Globals &globals() const { return globals_; }

  const RunConfig &config() {
    if (!config_) {
      if (globals_.config.empty())
        throw Error(ErrorCode::ConfigError,
                    "--config: required by '" + command_ + "'");
      config_ = load_config(globals_.config);
      manifest_["config_hash"] = sha256_hex(config_->canonical_json);
    }
    return *config_;
  }
  bool has_config() const { return !globals_.config.empty(); }

  fs::path out_dir() {
    if (!globals_.out.empty())
      return globals_.out;
    if (has_config())
      return config().output_dir;
    return "out";
  }

  void record_input(const std::string &path, const std::string &content) {
    manifest_["inputs"][fs::path(path).filename().string()] =
        sha256_hex(content);
  }

  std::string read_input(const std::string &path, ErrorCode missing) {
    if (!fs::is_regular_file(path))
      throw Error(missing, "file not found: " + path);
    std::string content = read_file(path);
    record_input(path, content);
    return content;
  }

  fs::path write_artifact(const std::string &name, const std::string &body) {
    const fs::path dir = out_dir();
    std::error_code ec;
    fs::create_directories(dir, ec);
    const fs::path path = dir / name;
    std::ofstream f(path, std::ios::binary);
    if (!f)
      throw Error(ErrorCode::IoError, "cannot write " + path.string());
    f << body;
    if (!f)
      throw Error(ErrorCode::IoError, "write failed for " + path.string());
    manifest_["artifacts"].push_back(
        {{"path", name}, {"sha256", sha256_hex(body)}});
    return path;
  }

  void record_solve(const std::string &label, const SolvedScene &scene) {
    const auto &st = scene.field.stats;
    manifest_["solver"].push_back({{"label", label},
                                   {"method", st.method},
                                   {"iterations", st.iterations},
                                   {"relative_residual",
                                    st.relative_residual},
                                   {"converged", st.converged},
                                   {"current_balance",
                                    scene.divergence.balance_relative}});
    std::ostringstream line;
    line << "command=" << command_ << " label=" << label
         << " method=" << st.method << " iterations=" << st.iterations
         << " relative_residual=" << format_double(st.relative_residual)
         << " converged=" << (st.converged ? 1 : 0) << '\n';
    const fs::path dir = out_dir();
    std::error_code ec;
    fs::create_directories(dir, ec);
    std::ofstream log(dir / "run.log", std::ios::app);
    log << line.str();
  }

  json &summary() { return manifest_["summary"]; }

  void finish_ok() { write_manifest("ok", nullptr); }

  void finish_error(const Error &e) {
    const Category c = categorize(e.code());
    json err = {{"category", c.name},
                {"code", std::string(to_string(e.code()))},
                {"exit_code", c.exit_code},
                {"message", e.detail()}};
    try {
      write_manifest("error", &err);
    } catch (const Error &) {
      // The failure being reported may be the output directory itself.
    }
  }

private:
  void write_manifest(const char *status, const json *error) {
    manifest_["status"] = status;
    if (error)
      manifest_["error"] = *error;
    const fs::path dir = out_dir();
    std::error_code ec;
    fs::create_directories(dir, ec);
    std::ofstream f(dir / ("manifest_" + command_ + ".json"),
                    std::ios::binary);
    if (!f)
      throw Error(ErrorCode::IoError, "cannot write manifest");
    f << manifest_.dump(2) << '\n';
  }

  std::string command_;
  Globals globals_;
  std::ostream &out_;
  std::optional<RunConfig> config_;
  json manifest_;
};

void require_quasistatic(Context &ctx) {
  const RunConfig &cfg = ctx.config();
  const QsReport qs = validate_quasistatic(
      cfg.frequency_hz, build_phantom(cfg.phantom).max_distance_from(cfg.tx.center));
  ctx.summary()["quasistatic_ok"] = qs.quasistatic_ok;
  if (qs.quasistatic_ok)
    return;
  std::ostringstream msg;
  msg << "frequency_hz " << cfg.frequency_hz << ": wavelength "
      << qs.free_space_wavelength_m << " m is below 10 x body extent (farthest body point from the Tx) "
      << qs.largest_body_extent_m
      << " m; the quasistatic model does not apply (use --allow-nonqs to "
         "override)";
  if (!ctx.globals().allow_nonqs)
    throw Error(ErrorCode::ConfigError, msg.str());
  ctx.out() << "warning: " << msg.str() << '\n';
}

TissueTable tissue_table(Context &ctx) {
  const RunConfig &cfg = ctx.config();
  const std::string content =
      ctx.read_input(cfg.tissue_table, ErrorCode::ConfigError);
  std::istringstream in(content);
  return load_tissue_table(in, cfg.tissue_table);
}

TxSpec preset_tx(const TxSpec &base, Orientation o) {
  TxSpec tx = base;
  tx.orientation = o;
  tx.dipole_axis = *preset_axis(o);
  return tx;
}

void check_converged(const SolvedScene &scene, const std::string &label) {
  if (!scene.field.stats.converged)
    throw Error(ErrorCode::NoConvergence,
                label + ": relative residual " +
                    format_double(scene.field.stats.relative_residual) +
                    " after " + std::to_string(scene.field.stats.iterations) +
                    " iterations");
}

void report_skipped(Context &ctx, const std::vector<SkippedPoint> &skipped) {
  for (const auto &s : skipped)
    ctx.out() << "skipped u_m=" << format_double(s.u_m)
              << " v_m=" << format_double(s.v_m)
              << " mode=" << to_string(s.mode) << " reason=" << s.reason
              << '\n';
  ctx.summary()["skipped_points"] = skipped.size();
}

void cmd_simulate(Context &ctx, const CommandArgs &args) {
  const RunConfig &cfg = ctx.config();
  require_quasistatic(ctx);
  const TissueTable table = tissue_table(ctx);
  const SolvedScene scene = solve_scene(cfg.sweep_spec(cfg.tx), table);
  ctx.record_solve(std::string(to_string(cfg.tx.orientation)), scene);
  const auto &st = scene.field.stats;
  ctx.out() << "grid=" << scene.grid.dims.nx << 'x' << scene.grid.dims.ny
            << 'x' << scene.grid.dims.nz << " iterations=" << st.iterations
            << " relative_residual=" << format_double(st.relative_residual)
            << " converged=" << (st.converged ? "yes" : "no")
            << " current_balance="
            << format_double(scene.divergence.balance_relative) << '\n';
  for (const auto &w : scene.grid.warnings)
    ctx.out() << "warning: " << w << '\n';
  if (args.dump_field) {
    const fs::path p = ctx.out_dir() / "field.bin";
    std::error_code ec;
    fs::create_directories(ctx.out_dir(), ec);
    write_field(scene.field, scene.grid, p.string());
    ctx.out() << "field written to " << p.string() << '\n';
  }
  if (args.dump_grid) {
    const fs::path p = ctx.out_dir() / "grid.bin";
    std::error_code ec;
    fs::create_directories(ctx.out_dir(), ec);
    write_grid(scene.grid, p.string());
    ctx.out() << "grid written to " << p.string() << '\n';
  }
  ctx.summary()["grid"] = {scene.grid.dims.nx, scene.grid.dims.ny,
                           scene.grid.dims.nz};
  check_converged(scene, "simulate");
}

void cmd_sweep(Context &ctx, const CommandArgs &) {
  const RunConfig &cfg = ctx.config();
  require_quasistatic(ctx);
  const TissueTable table = tissue_table(ctx);
  for (Orientation o : cfg.sweep_orientations) {
    const std::string label(to_string(o));
    const SweepSpec spec = cfg.sweep_spec(preset_tx(cfg.tx, o));
    const SolvedScene scene = solve_scene(spec, table);
    ctx.record_solve(label, scene);
    check_converged(scene, label);
    const SweepResult result = run_sweep(spec, scene);
    std::ostringstream csv;
    write_curve_csv(csv, result.curves);
    ctx.write_artifact("sweep_" + label + ".csv", csv.str());
    report_skipped(ctx, result.skipped);
    for (const auto &curve : result.curves) {
      const NullReport n =
          find_null(curve, cfg.analysis.null_prominence_db);
      std::ostringstream line;
      line << label << ' ' << to_string(curve.mode)
           << " points=" << curve.points.size();
      json entry = {{"orientation", label},
                    {"mode", std::string(to_string(curve.mode))},
                    {"points", curve.points.size()},
                    {"null_found", n.found}};
      if (n.found) {
        const double v = curve.points[n.index].v_m;
        line << " null_v_m=" << fixed(v, 3)
             << " null_db=" << fixed(n.path_loss_db)
             << " prominence_db=" << fixed(n.prominence_db);
        entry["null_v_m"] = v;
        entry["null_prominence_db"] = n.prominence_db;
      } else {
        line << " null=none";
      }
      ctx.out() << line.str() << '\n';
      ctx.summary()["curves"].push_back(entry);
    }
  }
}

void cmd_map(Context &ctx, const CommandArgs &) {
  const RunConfig &cfg = ctx.config();
  require_quasistatic(ctx);
  const TissueTable table = tissue_table(ctx);
  const SweepSpec spec = cfg.sweep_spec(cfg.tx);
  const SolvedScene scene = solve_scene(spec, table);
  ctx.record_solve(std::string(to_string(cfg.tx.orientation)), scene);
  check_converged(scene, "map");
  const SurfaceMapResult result = run_surface_map(spec, scene);
  std::ostringstream csv;
  write_grids_csv(csv, result.grids);
  ctx.write_artifact("map.csv", csv.str());
  report_skipped(ctx, result.skipped);
  for (const auto &g : result.grids) {
    if (g.mode != RxMode::Capacitive)
      continue;
    try {
      const FloorReport f = saturation_floor(g, cfg.analysis.far_threshold_m);
      ctx.out() << "capacitive floor_db=" << fixed(f.median_db)
                << " iqr_db=" << fixed(f.iqr_db)
                << " saturated=" << (f.saturated ? "yes" : "no") << '\n';
      ctx.summary()["capacitive_floor_db"] = f.median_db;
    } catch (const Error &e) {
      if (e.code() != ErrorCode::TooFewPoints)
        throw;
      ctx.out() << "capacitive floor: " << e.detail() << '\n';
    }
  }
}

std::vector<PathLossGrid> load_grids(Context &ctx, const std::string &path) {
  const std::string content = ctx.read_input(path, ErrorCode::MissingArtifact);
  std::istringstream in(content);
  return read_grids_csv(in, path);
}

const PathLossGrid &pick(const std::vector<PathLossGrid> &grids, RxMode mode,
                         const std::string &path) {
  for (const auto &g : grids)
    if (g.mode == mode)
      return g;
  throw Error(ErrorCode::MissingArtifact,
              path + " holds no " + std::string(to_string(mode)) + " grid");
}

double tie_eps(Context &ctx, const CommandArgs &args) {
  if (args.tie_eps_db)
    return *args.tie_eps_db;
  return ctx.has_config() ? ctx.config().analysis.tie_eps_db
                          : kDefaultTieEpsDb;
}

void print_summary(Context &ctx, const ModeRegionMap &map) {
  const RegionSummary s = summarize(map);
  ctx.out() << "galvanic_cells=" << s.galvanic_cells
            << " capacitive_cells=" << s.capacitive_cells
            << " tie_cells=" << s.tie_cells << '\n'
            << "max_capacitive_penalty_db="
            << fixed(s.max_capacitive_penalty_db)
            << " max_galvanic_penalty_db=" << fixed(s.max_galvanic_penalty_db)
            << '\n';
  ctx.summary()["galvanic_cells"] = s.galvanic_cells;
  ctx.summary()["capacitive_cells"] = s.capacitive_cells;
  ctx.summary()["tie_cells"] = s.tie_cells;
  ctx.summary()["max_capacitive_penalty_db"] = s.max_capacitive_penalty_db;
  ctx.summary()["max_galvanic_penalty_db"] = s.max_galvanic_penalty_db;
}

void cmd_contour(Context &ctx, const CommandArgs &args) {
  std::optional<PathLossGrid> cap, galv;
  if (!args.cap_path.empty() || !args.galv_path.empty()) {
    if (args.cap_path.empty() || args.galv_path.empty())
      throw Error(ErrorCode::ConfigError,
                  "--cap and --galv must be given together");
    cap = pick(load_grids(ctx, args.cap_path), RxMode::Capacitive,
               args.cap_path);
    galv = pick(load_grids(ctx, args.galv_path), RxMode::Galvanic,
                args.galv_path);
  } else {
    const std::string path = args.map_path.empty()
                                 ? (ctx.out_dir() / "map.csv").string()
                                 : args.map_path;
    const auto grids = load_grids(ctx, path);
    cap = pick(grids, RxMode::Capacitive, path);
    galv = pick(grids, RxMode::Galvanic, path);
  }
  const ModeRegionMap map = crossover_contour(*cap, *galv, tie_eps(ctx, args));
  std::ostringstream regions, contour;
  write_regions_csv(regions, map);
  write_contour_csv(contour, map);
  ctx.write_artifact("regions.csv", regions.str());
  ctx.write_artifact("contour.csv", contour.str());
  ctx.out() << "crossover_polylines=" << map.crossover.size() << '\n';
  ctx.summary()["crossover_polylines"] = map.crossover.size();
  print_summary(ctx, map);
}

void cmd_recommend(Context &ctx, const CommandArgs &args) {
  double x = 0.0, y = 0.0;
  {
    const auto comma = args.at.find(',');
    const auto xs = comma == std::string::npos ? std::optional<double>()
                                               : parse_double(args.at.substr(0, comma));
    const auto ys = comma == std::string::npos
                        ? std::optional<double>()
                        : parse_double(args.at.substr(comma + 1));
    if (!xs || !ys || !std::isfinite(*xs) || !std::isfinite(*ys))
      throw Error(ErrorCode::ConfigError,
                  "--at: expected 'x,y' in metres, got '" + args.at + "'");
    x = *xs;
    y = *ys;
  }
  const std::string path = args.regions_path.empty()
                               ? (ctx.out_dir() / "regions.csv").string()
                               : args.regions_path;
  const std::string content =
      ctx.read_input(path, ErrorCode::MissingArtifact);
  std::istringstream in(content);
  const ModeRegionMap map = read_regions_csv(in, path);
  const Recommendation r = recommend_mode(map, x, y);
  ctx.out() << "mode=" << to_string(r.mode)
            << " margin_db=" << fixed(r.margin_db)
            << " cell_x_m=" << format_double(r.cell_x_m)
            << " cell_y_m=" << format_double(r.cell_y_m)
            << " tie=" << (r.tie ? "yes" : "no") << '\n';
  ctx.summary()["mode"] = std::string(to_string(r.mode));
  ctx.summary()["margin_db"] = r.margin_db;
  ctx.summary()["cell"] = {r.cell_x_m, r.cell_y_m};
  ctx.summary()["tie"] = r.tie;
  print_summary(ctx, map);
}

void cmd_ingest(Context &ctx, const CommandArgs &args) {
  const std::string content = ctx.read_input(args.input, ErrorCode::IoError);
  std::istringstream in(content);
  const MeasuredGrid measured = parse_measured(in, args.input);
  Calibration cal;
  cal.attenuator_db = args.attenuator_db;
  cal.buffer_gain_db = args.buffer_gain_db;
  cal.cable_loss_db = args.cable_loss_db;
  cal.tx_power_dbm = args.tx_power_dbm;
  IngestOptions opts;
  if (!args.mode.empty()) {
    opts.mode = parse_rx_mode(args.mode);
    if (!opts.mode)
      throw Error(ErrorCode::ConfigError,
                  "--mode: expected galvanic or capacitive");
  }
  try {
    cal.validate();
  } catch (const Error &e) {
    throw Error(ErrorCode::ConfigError, e.detail());
  }
  const PathLossGrid grid = ingest_grid(measured, cal, opts);
  std::ostringstream csv;
  write_grids_csv(csv, {grid});
  const std::string name =
      args.output.empty()
          ? "ingested_" + std::string(to_string(grid.mode)) + ".csv"
          : args.output;
  ctx.write_artifact(name, csv.str());
  std::size_t finite = 0;
  for (double v : grid.path_loss_db)
    finite += std::isfinite(v) ? 1 : 0;
  ctx.out() << "mode=" << to_string(grid.mode) << " cells=" << finite << '/'
            << grid.path_loss_db.size()
            << " tx_power_dbm=" << format_double(grid.tx_power_dbm) << '\n';
  ctx.summary()["mode"] = std::string(to_string(grid.mode));
  ctx.summary()["finite_cells"] = finite;
  const double far = ctx.has_config() ? ctx.config().analysis.far_threshold_m
                                      : kFarThresholdM;
  try {
    const FloorReport f = saturation_floor(grid, far);
    ctx.out() << "floor_db=" << fixed(f.median_db)
              << " iqr_db=" << fixed(f.iqr_db) << " points=" << f.points
              << " saturated=" << (f.saturated ? "yes" : "no") << '\n';
    ctx.summary()["floor_db"] = f.median_db;
    ctx.summary()["floor_iqr_db"] = f.iqr_db;
  } catch (const Error &e) {
    if (e.code() != ErrorCode::TooFewPoints)
      throw;
    ctx.out() << "floor: " << e.detail() << '\n';
  }
}

void cmd_compare(Context &ctx, const CommandArgs &args) {
  std::vector<PathLossGrid> sim, meas;
  for (const auto &p : args.sim_paths)
    for (auto &g : load_grids(ctx, p))
      sim.push_back(std::move(g));
  for (const auto &p : args.meas_paths)
    for (auto &g : load_grids(ctx, p))
      meas.push_back(std::move(g));
  const ComparisonReport r = compare(sim, meas, tie_eps(ctx, args));
  json report = {{"matched", r.matched},
                 {"coverage_pct", r.coverage_pct},
                 {"bias_db", r.bias_db},
                 {"rmse_db", r.rmse_db},
                 {"winner_agreement_pct", nullptr},
                 {"floor_delta_db", nullptr},
                 {"null_location_delta_m", nullptr},
                 {"modes", json::array()}};
  if (r.winner_agreement_pct)
    report["winner_agreement_pct"] = *r.winner_agreement_pct;
  if (r.floor_delta_db)
    report["floor_delta_db"] = *r.floor_delta_db;
  if (r.null_location_delta_m)
    report["null_location_delta_m"] = *r.null_location_delta_m;
  for (const auto &m : r.modes)
    report["modes"].push_back({{"mode", std::string(to_string(m.mode))},
                               {"meas_cells", m.meas_cells},
                               {"matched", m.matched},
                               {"coverage_pct", m.coverage_pct},
                               {"bias_db", m.bias_db},
                               {"rmse_db", m.rmse_db}});
  ctx.write_artifact("comparison.json", report.dump(2) + "\n");
  auto opt = [](const std::optional<double> &v, int digits) {
    return v ? fixed(*v, digits) : std::string("n/a");
  };
  ctx.out() << "coverage_pct=" << fixed(r.coverage_pct, 1)
            << " matched=" << r.matched << '\n'
            << "bias_db=" << fixed(r.bias_db) << " rmse_db=" << fixed(r.rmse_db)
            << '\n'
            << "winner_agreement_pct=" << opt(r.winner_agreement_pct, 1)
            << '\n'
            << "floor_delta_db=" << opt(r.floor_delta_db, 2) << '\n'
            << "null_location_delta_m=" << opt(r.null_location_delta_m, 3)
            << '\n';
  ctx.summary() = report;
}

void add_globals(CLI::App &app, Globals &g) {
  app.add_option("--config", g.config, "Run configuration (JSON)");
  app.add_option("--out", g.out, "Output directory (overrides output_dir)");
  app.add_option("--threads", g.threads, "Worker cap")
      ->check(CLI::PositiveNumber);
  app.add_option("--seed", g.seed, "Reserved; all current math is deterministic");
  app.add_flag("--allow-nonqs", g.allow_nonqs,
               "Run even when the quasistatic check fails");
}

} // namespace

std::string sha256_hex(std::string_view data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) !=
      1)
    throw Error(ErrorCode::IoError, "SHA-256 failed");
  static const char *hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 0xF]);
  }
  return out;
}

int run_cli(int argc, const char *const *argv, std::ostream &out,
            std::ostream &err) {
  CLI::App app{"Electro-quasistatic body-channel simulator and analysis "
               "toolkit",
               "eqshbc"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  Globals g;
  CommandArgs a;
  add_globals(app, g);

  auto *simulate = app.add_subcommand("simulate", "Solve the configured scene");
  simulate->add_flag("--dump-field", a.dump_field, "Write field.bin");
  simulate->add_flag("--dump-grid", a.dump_grid, "Write grid.bin");

  app.add_subcommand(
      "sweep", "Distance sweeps along the vertical track, per orientation");
  app.add_subcommand("map", "Surface path-loss map around the Tx");

  auto *contour =
      app.add_subcommand("contour", "Crossover regions from two mode maps");
  contour->add_option("--map", a.map_path,
                      "Grid table holding both modes (default <out>/map.csv)");
  contour->add_option("--cap", a.cap_path, "Capacitive grid table");
  contour->add_option("--galv", a.galv_path, "Galvanic grid table");
  contour->add_option("--tie-eps-db", a.tie_eps_db, "Tie threshold (dB)")
      ->check(CLI::NonNegativeNumber);

  auto *recommend =
      app.add_subcommand("recommend", "Receiver mode at a surface position");
  recommend->add_option("--at", a.at, "Position 'x,y' in metres")
      ->required();
  recommend->add_option("--regions", a.regions_path,
                        "Region table (default <out>/regions.csv)");

  auto *ingest =
      app.add_subcommand("ingest", "Calibrate a measured p_rx grid");
  ingest->add_option("--input", a.input, "Measurement table")->required();
  ingest->add_option("--tx-power-dbm", a.tx_power_dbm,
                     "Tx power; overrides the file header");
  ingest->add_option("--attenuator-db", a.attenuator_db, "Default 20");
  ingest->add_option("--buffer-gain-db", a.buffer_gain_db, "Default 0");
  ingest->add_option("--cable-loss-db", a.cable_loss_db, "Default 0");
  ingest->add_option("--mode", a.mode, "galvanic or capacitive");
  ingest->add_option("--output", a.output,
                     "Output name (default ingested_<mode>.csv)");

  auto *cmp = app.add_subcommand("compare", "Compare simulated and measured grids");
  cmp->add_option("--sim", a.sim_paths, "Simulated grid table(s)")->required();
  cmp->add_option("--meas", a.meas_paths, "Measured grid table(s)")
      ->required();
  cmp->add_option("--tie-eps-db", a.tie_eps_db, "Tie threshold (dB)")
      ->check(CLI::NonNegativeNumber);

  for (auto *sub : app.get_subcommands({}))
    add_globals(*sub, g);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  CLI::App *chosen = app.get_subcommands().front();
  const std::string name = chosen->get_name();
  Context ctx(name, g, out);
  try {
    if (name == "simulate") cmd_simulate(ctx, a);
    else if (name == "sweep") cmd_sweep(ctx, a);
    else if (name == "map") cmd_map(ctx, a);
    else if (name == "contour") cmd_contour(ctx, a);
    else if (name == "recommend") cmd_recommend(ctx, a);
    else if (name == "ingest") cmd_ingest(ctx, a);
    else if (name == "compare") cmd_compare(ctx, a);
    ctx.finish_ok();
    return kExitOk;
  } catch (const Error &e) {
    const Category c = categorize(e.code());
    err << "error[" << c.name << "]: " << e.what() << '\n';
    if (c.exit_code != kExitConfig)
      ctx.finish_error(e);
    return c.exit_code;
  } catch (const std::exception &e) {
    err << "error[IoError]: " << e.what() << '\n';
    return kExitIo;
  }
}

} // namespace eqshbc
