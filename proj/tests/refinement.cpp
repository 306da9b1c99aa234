// Grid refinement on a Tx that is representable at every level: 8 cm plates
// separated by 16 cm stay whole-voxel at 8, 4 and 2 cm. Successive changes in
// the received voltage must shrink.

#include "eqshbc/error.hpp"
#include "eqshbc/scenario.hpp"

#include <cmath>
#include <complex>
#include <cstdio>
#include <string>
#include <vector>

using namespace eqshbc;

namespace {

struct Level {
  double h;
  Complex cap;
  Complex galv;
};

Level solve_level(const TissueTable &table, double h) {
  SweepSpec s;
  s.resolution_m = h;
  s.tx = TxSpec::from_preset(Orientation::O3Vertical, Point3(0.0, 0.08, 0.80));
  s.tx.plate_gap_m = 0.16;
  s.tx.plate_width_m = 0.08;
  s.tx.plate_height_m = 0.08;
  const SolvedScene scene = solve_scene(s, table);
  if (!scene.field.stats.converged)
    throw Error(ErrorCode::NoConvergence, "refinement level did not converge");
  const SurfaceFrame f = SurfaceFrame::for_tx(s.phantom, s.tx);
  CapacitiveRx cap;
  cap.contact = f.point(0.0, 0.40);
  const GalvanicRx galv{f.point(0.0, 0.48), f.point(0.0, 0.32)};
  return {h, capacitive_pickup(scene.field, scene.grid, cap, s.frequency_hz),
          galvanic_pickup(scene.field, scene.grid, galv)};
}

} // namespace

int main() {
  const TissueTable table =
      load_tissue_table_file(std::string(EQSHBC_SOURCE_DIR) + "/data/tissues.csv");
  std::vector<Level> levels;
  for (double h : {0.08, 0.04, 0.02}) {
    levels.push_back(solve_level(table, h));
    std::printf("h=%.2f m  |V_cap|=%.5e  |V_galv|=%.5e\n", h,
                std::abs(levels.back().cap), std::abs(levels.back().galv));
  }
  int failures = 0;
  for (const char *mode : {"capacitive", "galvanic"}) {
    const bool is_cap = std::string(mode) == "capacitive";
    auto v = [&](std::size_t i) {
      return is_cap ? levels[i].cap : levels[i].galv;
    };
    const double d1 = std::abs(v(1) - v(0)) / std::abs(v(2));
    const double d2 = std::abs(v(2) - v(1)) / std::abs(v(2));
    const bool pass = d2 < d1;
    std::printf("%s %s: relative change %.4f (8->4 cm), %.4f (4->2 cm)\n",
                pass ? "PASS" : "FAIL", mode, d1, d2);
    failures += pass ? 0 : 1;
  }
  return failures == 0 ? 0 : 1;
}
