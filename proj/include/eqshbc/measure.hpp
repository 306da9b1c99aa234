#pragma once

#include "eqshbc/scenario.hpp"

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace eqshbc {

// Receive chain: attenuator in front of the analyzer, unity-gain buffer.
// path_loss_db = (p_rx_dbm + attenuator_db - buffer_gain_db + cable_loss_db)
//                - tx_power_dbm
struct Calibration {
  double attenuator_db = 20.0;
  double buffer_gain_db = 0.0;
  std::optional<double> tx_power_dbm;
  double cable_loss_db = 0.0;

  // Throws InvalidSpec; tx power absence is checked at ingestion.
  void validate() const;
};

struct MeasuredRow {
  double x_cm = 0.0;
  double y_cm = 0.0;
  double p_rx_dbm = 0.0;
};

struct MeasuredGrid {
  std::vector<MeasuredRow> rows;
  std::optional<RxMode> mode;
  std::optional<double> frequency_hz;
  std::optional<double> tx_power_dbm; // from the #meta header
  std::map<std::string, std::string> meta;
};

// `x_cm,y_cm,p_rx_dbm` rows after `#meta key=value` lines. Throws ParseError
// (with line number) or DuplicateCoordinate.
MeasuredGrid parse_measured(std::istream &in, const std::string &source);
MeasuredGrid parse_measured_file(const std::string &path);

struct IngestOptions {
  std::optional<RxMode> mode; // overrides the header
};

// A tx power in the calibration takes precedence over the header. Throws
// MissingTxPower when neither provides one and ParseError when no mode is
// known.
PathLossGrid ingest_grid(const MeasuredGrid &grid, const Calibration &cal,
                         const IngestOptions &options = {});

// Inverse of ingest_grid for finite cells; used for fixtures and round trips.
void write_measured(std::ostream &out, const PathLossGrid &grid,
                    const Calibration &cal);

struct ModeComparison {
  RxMode mode = RxMode::Capacitive;
  std::size_t meas_cells = 0; // finite measured cells
  std::size_t matched = 0;
  double coverage_pct = 0.0;
  double bias_db = 0.0; // mean(meas - sim)
  double rmse_db = 0.0;
};

struct ComparisonReport {
  std::vector<ModeComparison> modes;
  std::size_t matched = 0;
  double coverage_pct = 0.0;
  double bias_db = 0.0;
  double rmse_db = 0.0;
  std::optional<double> winner_agreement_pct;
  std::optional<double> floor_delta_db;        // meas - sim
  std::optional<double> null_location_delta_m; // meas - sim, along y at x = 0
};

// Aligns every finite measured cell to the nearest simulated cell. Grids are
// paired by mode. Throws NoOverlap when nothing aligns.
ComparisonReport compare(const std::vector<PathLossGrid> &sim,
                         const std::vector<PathLossGrid> &meas,
                         double tie_eps_db = kDefaultTieEpsDb);

} // namespace eqshbc
