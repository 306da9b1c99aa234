#pragma once

#include "eqshbc/coupling.hpp"
#include "eqshbc/error.hpp"
#include "eqshbc/phantom.hpp"
#include "eqshbc/scenario.hpp"
#include "eqshbc/solver.hpp"
#include "eqshbc/tissue.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

namespace eqshbc::testing {

inline std::string source_path(const std::string &rel) {
  return (std::filesystem::path(EQSHBC_SOURCE_DIR) / rel).string();
}

inline TissueTable default_table() {
  return load_tissue_table_file(source_path("data/tissues.csv"));
}

inline std::string slurp(const std::filesystem::path &p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Scratch directory removed on scope exit.
class TempDir {
public:
  explicit TempDir(const std::string &tag) {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("eqshbc_" + tag + "_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir &) = delete;
  TempDir &operator=(const TempDir &) = delete;

  const std::filesystem::path &path() const { return path_; }
  std::string str(const std::string &name = "") const {
    return name.empty() ? path_.string() : (path_ / name).string();
  }

private:
  std::filesystem::path path_;
};

// Box grid filled with one label; base labels mirror labels.
inline VoxelGrid box_grid(int nx, int ny, int nz, double h, Label fill) {
  VoxelGrid g;
  g.resolution_m = h;
  g.dims = {nx, ny, nz};
  g.origin = Point3::Zero();
  g.labels.assign(g.dims.count(), fill);
  g.base_labels = g.labels;
  return g;
}

inline void put(VoxelGrid &g, int i, int j, int k, Label l) {
  g.labels[g.index(i, j, k)] = l;
  if (!is_dirichlet(l))
    g.base_labels[g.index(i, j, k)] = l;
}

inline void ground_slab(VoxelGrid &g) {
  for (int j = 0; j < g.dims.ny; ++j)
    for (int i = 0; i < g.dims.nx; ++i)
      put(g, i, j, 0, Label::GroundPlane);
}

// Small heterogeneous scene: muscle block with a skin face, air around it,
// ground slab at k = 0, one electrode pair along x. Mirror-symmetric about
// the plane between i = nx/2 - 1 and i = nx/2.
inline VoxelGrid toy_scene(int nx = 16, int ny = 16, int nz = 32,
                           double h = 0.01) {
  VoxelGrid g = box_grid(nx, ny, nz, h, Label::Air);
  for (int k = 4; k < nz - 4; ++k)
    for (int j = 3; j < ny - 3; ++j)
      for (int i = 3; i < nx - 3; ++i)
        put(g, i, j, k, j == ny - 4 ? Label::Skin : Label::Muscle);
  ground_slab(g);
  const int c = nx / 2;
  put(g, c, ny / 2, nz / 2, Label::ElectrodePos);
  put(g, c - 1, ny / 2, nz / 2, Label::ElectrodeNeg);
  return g;
}

inline TissueTable two_tissue_table(double f = 21e6) {
  const TissueTable full = default_table();
  TissueTable t;
  t.add(full.lookup("muscle", f));
  t.add(full.lookup("skin", f));
  return t;
}

inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max(std::abs(a), std::abs(b));
}

inline double max_abs(const std::vector<Complex> &v) {
  double m = 0.0;
  for (const auto &z : v)
    m = std::max(m, std::abs(z));
  return m;
}

inline double max_abs_diff(const std::vector<Complex> &a,
                           const std::vector<Complex> &b) {
  double m = 0.0;
  for (std::size_t n = 0; n < a.size(); ++n)
    m = std::max(m, std::abs(a[n] - b[n]));
  return m;
}

// Independent Cole-Cole evaluation: returns (eps_r, sigma) from four
// dispersion terms plus ionic conductivity.
struct ColeColeTerm {
  double delta_eps;
  double tau_s;
  double alpha;
};
struct ColeColeParams {
  double eps_inf;
  double sigma_ionic;
  std::array<ColeColeTerm, 4> terms;
};

inline const ColeColeParams &cole_cole_params(const std::string &tissue) {
  static const std::map<std::string, ColeColeParams> params{
      {"muscle",
       {4.0,
        0.2,
        {{{50.0, 7.234e-12, 0.10},
          {7000.0, 353.678e-9, 0.10},
          {1.2e6, 318.310e-6, 0.10},
          {2.5e7, 2.274e-3, 0.00}}}}},
      {"skin",
       {4.0,
        0.0002,
        {{{32.0, 7.234e-12, 0.00},
          {1100.0, 32.481e-9, 0.20},
          {0.0, 159.155e-6, 0.20},
          {0.0, 15.915e-3, 0.20}}}}},
  };
  return params.at(tissue);
}

inline std::pair<double, double> cole_cole(const std::string &tissue,
                                           double f) {
  const auto &p = cole_cole_params(tissue);
  const double w = 2.0 * kPi * f;
  std::complex<double> eps(p.eps_inf, 0.0);
  for (const auto &t : p.terms)
    eps += t.delta_eps /
           (1.0 + std::pow(std::complex<double>(0.0, w * t.tau_s),
                           1.0 - t.alpha));
  eps += p.sigma_ionic / std::complex<double>(0.0, w * kEpsilon0);
  return {eps.real(), -eps.imag() * w * kEpsilon0};
}

// Solver-vs-closed-form check on a homogeneous muscle cube. Walls parallel
// to the moment are grounded and the two walls normal to it are insulating,
// which cancels the leading image field. The moment is the solved electrode
// current times the plate separation. Returns the worst error over radii
// [4 voxels, n/4 voxels], normalized by the dipole amplitude at that radius.
struct DipoleCheck {
  double max_error = 0.0;
  std::size_t points = 0;
  int iterations = 0;
};

inline DipoleCheck dipole_oracle_check(int n = 32, double h = 0.01) {
  VoxelGrid g = box_grid(n, n, n, h, Label::Muscle);
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i)
        if (j == 0 || j == n - 1 || k == 0 || k == n - 1)
          g.labels[g.index(i, j, k)] = Label::GroundPlane;
  const int c = n / 2;
  for (int j = c - 1; j <= c; ++j)
    for (int k = c - 1; k <= c; ++k) {
      g.labels[g.index(c, j, k)] = Label::ElectrodePos;
      g.labels[g.index(c - 1, j, k)] = Label::ElectrodeNeg;
    }
  TissueTable t;
  t.add(default_table().lookup("muscle", 21e6));
  const LinearSystem sys = assemble(g, t, 21e6, 1.0);
  const PotentialField f = solve(sys, {1e-10, 20000});
  const DivergenceMap dv = current_divergence(f, sys);
  const Point3 center((c - 0.5) * h, (c - 0.5) * h, (c - 0.5) * h);
  // Unit-current moment; scaled by the electrode current below.
  const CurrentDipole dipole{center, h * Point3::UnitX(),
                             t.admittivity_of("muscle", 21e6)};
  DipoleCheck out;
  out.iterations = f.stats.iterations;
  const double r_max = n / 4.0;
  for (std::size_t idx = 0; idx < g.size(); ++idx) {
    const Point3 p = g.center(idx);
    const double r = (p - center).norm() / h;
    if (r < 4.0 || r > r_max)
      continue;
    const Complex expected = analytic_dipole_potential(p, dipole) * dv.total_pos;
    const double scale = std::abs(dv.total_pos) * h /
                         (4.0 * kPi * std::abs(dipole.admittivity) *
                          std::pow(r * h, 2));
    out.max_error =
        std::max(out.max_error, std::abs(f.phi[idx] - expected) / scale);
    ++out.points;
  }
  return out;
}

// Exact distance from p to the boundary of a solid z-aligned cylinder.
inline double cylinder_boundary_distance(double rho, double radius, double z,
                                         double z_lo, double z_hi) {
  if (rho <= radius && z >= z_lo && z <= z_hi)
    return std::min({radius - rho, z - z_lo, z_hi - z});
  const double dr = std::max(rho - radius, 0.0);
  const double dz = std::max({z_lo - z, z - z_hi, 0.0});
  return std::hypot(dr, dz);
}

// Lower bound on the distance from p to any material interface of the
// phantom (outer and inner skin surfaces of both cylinders).
inline double interface_distance(const Phantom &ph, const Point3 &p) {
  const auto &s = ph.spec();
  const double t = s.skin_thickness_m;
  const double rho_t = std::hypot(p.x(), p.y());
  const double rho_a = std::hypot(p.y(), p.z() - s.arm_crossing_height_m);
  const double half = 0.5 * s.arm_length_m;
  double d = std::numeric_limits<double>::infinity();
  for (double shrink : {0.0, t}) {
    d = std::min(d, cylinder_boundary_distance(
                        rho_t, s.torso_radius_m - shrink, p.z(),
                        ph.torso_base_z() + shrink, ph.torso_top_z() - shrink));
    d = std::min(d, cylinder_boundary_distance(rho_a, s.arm_radius_m - shrink,
                                               p.x(), -half + shrink,
                                               half - shrink));
  }
  return d;
}

} // namespace eqshbc::testing

namespace eqshbc::testing {

// Standard phantom at 4 cm with the default Tx; one cached solve per preset
// (defined in support.cpp).
SweepSpec spec_4cm(Orientation o);
const SolvedScene &scene_4cm(Orientation o);

} // namespace eqshbc::testing
