#pragma once

#include "eqshbc/scenario.hpp"

#include <string>
#include <vector>

namespace eqshbc {

inline constexpr double kMinResolutionM = 0.005;
inline constexpr double kMaxResolutionM = 0.2;

struct AnalysisParams {
  double tie_eps_db = kDefaultTieEpsDb;
  double far_threshold_m = kFarThresholdM;
  double null_prominence_db = kNullProminenceDb;
};

// Parsed run configuration. Relative paths resolve against the config file's
// directory.
struct RunConfig {
  std::string source_path;
  std::string canonical_json; // key-sorted dump, hashed into manifests
  PhantomSpec phantom;
  std::string tissue_table;
  double frequency_hz = 21e6;
  TxSpec tx;
  std::vector<RxMode> modes{RxMode::Galvanic, RxMode::Capacitive};
  RxParams rx;
  std::vector<Orientation> sweep_orientations{
      Orientation::O1Normal, Orientation::O2Lateral, Orientation::O3Vertical};
  TrackSpec track;
  SurfaceGridSpec map;
  AnalysisParams analysis;
  double resolution_m = 0.02;
  SolveOptions solver;
  std::size_t max_voxels = VoxelizeOptions{}.max_voxels;
  std::string output_dir = "out";

  // Spec for one Tx configuration; orientation presets keep tx.center.
  SweepSpec sweep_spec(const TxSpec &tx) const;
};

// Strict: unknown keys, wrong types and out-of-range values throw
// Error{ConfigError} naming the dotted key.
RunConfig parse_config(const std::string &json_text,
                       const std::string &source_path);
RunConfig load_config(const std::string &path);

} // namespace eqshbc
