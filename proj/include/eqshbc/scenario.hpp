#pragma once

#include "eqshbc/coupling.hpp"
#include "eqshbc/phantom.hpp"
#include "eqshbc/solver.hpp"
#include "eqshbc/tissue.hpp"

#include <array>
#include <cmath>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace eqshbc {

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

// Surface coordinates on the torso: u is arc length around the torso axis
// measured from the Tx azimuth, v is height above the Tx centre. (0, 0) is the
// Tx's surface projection.
struct SurfaceFrame {
  double radius_m = 0.0;
  double azimuth_rad = 0.0; // angle from +y towards +x
  double z0_m = 0.0;

  static SurfaceFrame for_tx(const PhantomSpec &phantom, const TxSpec &tx);
  Point3 point(double u, double v) const;
};

struct TrackSpec {
  double v_min_m = -0.60;
  double v_max_m = 0.60;
  double step_m = 0.02;
};

struct SurfaceGridSpec {
  double u_half_m = 0.20;
  double v_half_m = 0.30;
  double step_m = 0.02;
};

struct RxParams {
  double galvanic_spacing_m = 0.04;
  CapacitiveRx capacitive; // contact is overwritten per point
};

struct SweepSpec {
  PhantomSpec phantom;
  TxSpec tx;
  std::vector<RxMode> modes{RxMode::Galvanic, RxMode::Capacitive};
  double frequency_hz = 21e6;
  double resolution_m = 0.02;
  SolveOptions solver;
  VoxelizeOptions voxelize;
  TrackSpec track;
  SurfaceGridSpec surface;
  RxParams rx;

  // Throws InvalidSpec naming the field.
  void validate() const;
};

// Everything derived from one TxSpec: the field is solved exactly once.
struct SolvedScene {
  Phantom phantom;
  VoxelGrid grid;
  PotentialField field;
  TxSpec tx;
  double frequency_hz = 0.0;
  QsReport qs;
  DivergenceMap divergence;
};

SolvedScene solve_scene(const SweepSpec &spec, const TissueTable &table);

struct CurvePoint {
  double signed_distance_m = 0.0;
  double u_m = 0.0;
  double v_m = 0.0;
  ChannelSample sample;
};

struct PathLossCurve {
  std::string label;
  RxMode mode = RxMode::Galvanic;
  std::vector<CurvePoint> points; // ascending signed distance

  std::vector<double> path_loss_db() const;
};

struct SkippedPoint {
  double u_m = 0.0;
  double v_m = 0.0;
  RxMode mode = RxMode::Galvanic;
  std::string reason;
};

struct SweepResult {
  std::vector<PathLossCurve> curves; // one per requested mode
  std::vector<SkippedPoint> skipped;
  SolverStats solver;
};

// Vertical track at u = 0. Galvanic pairs lie along the track, spaced
// rx.galvanic_spacing_m and centred on each track point.
SweepResult run_sweep(const SweepSpec &spec, const SolvedScene &scene);

enum class Provenance { Simulated, Measured };
std::string_view to_string(Provenance p);

// Path loss on a rectilinear (x, y) lattice, values row-major with x fastest.
// NaN marks a missing cell.
struct PathLossGrid {
  std::vector<double> x_m;
  std::vector<double> y_m;
  std::vector<double> path_loss_db;
  RxMode mode = RxMode::Capacitive;
  Provenance provenance = Provenance::Simulated;
  double frequency_hz = kMissing;
  double v_tx_v = kMissing;
  double tx_power_dbm = kMissing;

  std::size_t nx() const { return x_m.size(); }
  std::size_t ny() const { return y_m.size(); }
  double &at(std::size_t i, std::size_t j) { return path_loss_db[j * nx() + i]; }
  double at(std::size_t i, std::size_t j) const {
    return path_loss_db[j * nx() + i];
  }
  // Throws InvalidSpec on size mismatch, unsorted axes or entries > 0 dB.
  void validate() const;
};

struct SurfaceMapResult {
  std::vector<PathLossGrid> grids; // one per requested mode
  std::vector<SkippedPoint> skipped;
  SolverStats solver;
};

// Galvanic pairs point radially away from (0, 0); the pair at the origin is
// vertical.
SurfaceMapResult run_surface_map(const SweepSpec &spec,
                                 const SolvedScene &scene);

enum class Winner { Galvanic, Capacitive, Tie, NoData };
std::string_view to_string(Winner w);
std::optional<Winner> parse_winner(std::string_view s);

using Polyline = std::vector<std::array<double, 2>>;

struct ModeRegionMap {
  std::vector<double> x_m;
  std::vector<double> y_m;
  std::vector<Winner> winner;     // row-major, x fastest
  std::vector<double> margin_db;  // |delta|, 0 for Tie, NaN for NoData
  std::vector<double> delta_db;   // galvanic - capacitive
  std::vector<Polyline> crossover; // delta = 0
  double tie_eps_db = 0.5;

  std::size_t nx() const { return x_m.size(); }
  std::size_t ny() const { return y_m.size(); }
};

inline constexpr double kDefaultTieEpsDb = 0.5;

ModeRegionMap crossover_contour(const PathLossGrid &cap,
                                const PathLossGrid &galv,
                                double tie_eps_db = kDefaultTieEpsDb);

// Marching squares on a lattice scalar field (x fastest); NaN cells are
// skipped. Segments sharing an edge are chained into polylines.
std::vector<Polyline> zero_contour(const std::vector<double> &x,
                                   const std::vector<double> &y,
                                   const std::vector<double> &values);

struct Recommendation {
  RxMode mode = RxMode::Capacitive;
  double margin_db = 0.0;
  double cell_x_m = 0.0;
  double cell_y_m = 0.0;
  bool tie = false;
};

struct RegionSummary {
  double max_capacitive_penalty_db = 0.0; // over galvanic-winning cells
  double max_galvanic_penalty_db = 0.0;   // over capacitive-winning cells
  std::size_t galvanic_cells = 0;
  std::size_t capacitive_cells = 0;
  std::size_t tie_cells = 0;
};

// Nearest cell; ties resolve to Capacitive with margin 0.
Recommendation recommend_mode(const ModeRegionMap &map, double x_m,
                              double y_m);
RegionSummary summarize(const ModeRegionMap &map);

inline constexpr double kFarThresholdM = 0.10;
inline constexpr double kSaturationIqrDb = 3.0;

struct FloorReport {
  double median_db = 0.0;
  double iqr_db = 0.0;
  std::size_t points = 0;
  bool saturated = true;
};

// Cells with sqrt(x^2 + y^2) > far_threshold_m; needs at least 5 finite
// cells (TooFewPoints).
FloorReport saturation_floor(const PathLossGrid &grid,
                             double far_threshold_m = kFarThresholdM);

inline constexpr double kNullProminenceDb = 10.0;

struct NullReport {
  bool found = false;
  std::size_t index = 0;
  double position_m = 0.0; // signed distance of the null
  double path_loss_db = 0.0;
  double prominence_db = 0.0;
};

// Topographic prominence of interior local minima; the deepest minimum with
// prominence >= min_prominence_db wins. Fewer than 5 points yields none.
NullReport find_null(const std::vector<double> &positions,
                     const std::vector<double> &path_loss_db,
                     double min_prominence_db = kNullProminenceDb);
NullReport find_null(const PathLossCurve &curve,
                     double min_prominence_db = kNullProminenceDb);

// Formats a double with the shortest representation that round-trips.
std::string format_double(double v);
// Full-string decimal parse; "NaN" maps to NaN.
std::optional<double> parse_double(const std::string &s);

// Table I/O: `x_m,y_m,mode,path_loss_db`, one row per cell; NaN for missing.
void write_grids_csv(std::ostream &out, const std::vector<PathLossGrid> &grids);
std::vector<PathLossGrid> read_grids_csv(std::istream &in,
                                         const std::string &source);
void write_curve_csv(std::ostream &out,
                     const std::vector<PathLossCurve> &curves);
void write_regions_csv(std::ostream &out, const ModeRegionMap &map);
ModeRegionMap read_regions_csv(std::istream &in, const std::string &source);
void write_contour_csv(std::ostream &out, const ModeRegionMap &map);

} // namespace eqshbc
