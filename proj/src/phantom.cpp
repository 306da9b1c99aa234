#include "eqshbc/phantom.hpp"

#include "eqshbc/error.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace eqshbc {

std::string_view to_string(Label label) {
  switch (label) {
  case Label::Air: return "Air";
  case Label::Skin: return "Skin";
  case Label::Muscle: return "Muscle";
  case Label::GroundPlane: return "GroundPlane";
  case Label::ElectrodePos: return "ElectrodePos";
  case Label::ElectrodeNeg: return "ElectrodeNeg";
  case Label::RxContact: return "RxContact";
  }
  return "?";
}

bool is_body(Label label) {
  return label == Label::Skin || label == Label::Muscle;
}

bool is_dirichlet(Label label) {
  return label == Label::GroundPlane || label == Label::ElectrodePos ||
         label == Label::ElectrodeNeg;
}

namespace {

void require(bool ok, const char *field, const std::string &what) {
  if (!ok)
    throw Error(ErrorCode::InvalidSpec, std::string(field) + ": " + what);
}

bool finite_positive(double v) { return std::isfinite(v) && v > 0.0; }

} // namespace

void PhantomSpec::validate() const {
  require(finite_positive(torso_radius_m), "torso_radius_m", "must be > 0");
  require(finite_positive(torso_height_m), "torso_height_m", "must be > 0");
  require(finite_positive(arm_radius_m), "arm_radius_m", "must be > 0");
  require(finite_positive(arm_length_m), "arm_length_m", "must be > 0");
  require(finite_positive(skin_thickness_m), "skin_thickness_m",
          "must be > 0");
  require(finite_positive(air_margin_m), "air_margin_m", "must be > 0");
  require(std::isfinite(ground_plane_z_m), "ground_plane_z_m",
          "must be finite");
  require(std::isfinite(standoff_m) && standoff_m >= 0.0, "standoff_m",
          "must be >= 0");
  require(skin_thickness_m < torso_radius_m, "skin_thickness_m",
          "must be smaller than torso_radius_m");
  require(skin_thickness_m < arm_radius_m, "skin_thickness_m",
          "must be smaller than arm_radius_m");
  const double base = ground_plane_z_m + standoff_m;
  require(arm_crossing_height_m > base &&
              arm_crossing_height_m < base + torso_height_m,
          "arm_crossing_height_m", "must lie within the torso height");
  require(air_margin_m >= 2.0 * torso_radius_m, "air_margin_m",
          "must be at least twice torso_radius_m");
}

Phantom::Phantom(const PhantomSpec &spec) : spec_(spec) { spec_.validate(); }

Phantom build_phantom(const PhantomSpec &spec) { return Phantom(spec); }

double Phantom::torso_base_z() const {
  return spec_.ground_plane_z_m + spec_.standoff_m;
}

double Phantom::torso_top_z() const {
  return torso_base_z() + spec_.torso_height_m;
}

std::array<Point3, 2> Phantom::body_bounds() const {
  const double half_x =
      std::max(spec_.torso_radius_m, 0.5 * spec_.arm_length_m);
  const double half_y = std::max(spec_.torso_radius_m, spec_.arm_radius_m);
  const double top = std::max(torso_top_z(), spec_.arm_crossing_height_m +
                                                 spec_.arm_radius_m);
  const double bottom = std::min(torso_base_z(), spec_.arm_crossing_height_m -
                                                     spec_.arm_radius_m);
  return {Point3(-half_x, -half_y, bottom), Point3(half_x, half_y, top)};
}

double Phantom::body_extent() const {
  const auto b = body_bounds();
  return (b[1] - b[0]).maxCoeff();
}

double Phantom::max_distance_from(const Point3 &p) const {
  // Farthest point of a solid cylinder lies on a rim: radially opposite p,
  // at whichever end cap is farther along the axis.
  const auto cylinder = [](double radial, double radius, double axial_a,
                           double axial_b) {
    const double along = std::max(std::abs(axial_a), std::abs(axial_b));
    return std::hypot(radial + radius, along);
  };
  const double torso =
      cylinder(std::hypot(p.x(), p.y()), spec_.torso_radius_m,
               p.z() - torso_base_z(), p.z() - torso_top_z());
  const double half_arm = 0.5 * spec_.arm_length_m;
  const double arm = cylinder(
      std::hypot(p.y(), p.z() - spec_.arm_crossing_height_m),
      spec_.arm_radius_m, p.x() + half_arm, p.x() - half_arm);
  return std::max(torso, arm);
}

bool Phantom::inside_body(const Point3 &p, double shrink) const {
  const double rt = spec_.torso_radius_m - shrink;
  if (p.z() >= torso_base_z() + shrink && p.z() <= torso_top_z() - shrink &&
      p.x() * p.x() + p.y() * p.y() <= rt * rt)
    return true;
  const double ra = spec_.arm_radius_m - shrink;
  const double dz = p.z() - spec_.arm_crossing_height_m;
  return std::abs(p.x()) <= 0.5 * spec_.arm_length_m - shrink &&
         p.y() * p.y() + dz * dz <= ra * ra;
}

Label Phantom::classify(const Point3 &p, bool merge_skin) const {
  if (p.z() <= spec_.ground_plane_z_m)
    return Label::GroundPlane;
  if (!inside_body(p, 0.0))
    return Label::Air;
  if (merge_skin || inside_body(p, spec_.skin_thickness_m))
    return Label::Muscle;
  return Label::Skin;
}

VoxelIndex VoxelGrid::unravel(std::size_t idx) const {
  const auto nx = static_cast<std::size_t>(dims.nx);
  const auto ny = static_cast<std::size_t>(dims.ny);
  return {static_cast<int>(idx % nx), static_cast<int>((idx / nx) % ny),
          static_cast<int>(idx / (nx * ny))};
}

Point3 VoxelGrid::center(std::size_t idx) const {
  const auto v = unravel(idx);
  return center(v.i, v.j, v.k);
}

std::optional<VoxelIndex> VoxelGrid::locate(const Point3 &p) const {
  const Point3 rel = (p - origin) / resolution_m;
  const VoxelIndex v{static_cast<int>(std::floor(rel.x() + 0.5)),
                     static_cast<int>(std::floor(rel.y() + 0.5)),
                     static_cast<int>(std::floor(rel.z() + 0.5))};
  if (!contains(v.i, v.j, v.k))
    return std::nullopt;
  return v;
}

std::array<std::size_t, kLabelCount> VoxelGrid::label_counts() const {
  std::array<std::size_t, kLabelCount> counts{};
  for (Label l : labels)
    ++counts[static_cast<std::size_t>(l)];
  return counts;
}

bool VoxelGrid::is_surface(std::size_t idx) const {
  if (!is_body(base_labels[idx]))
    return false;
  const auto v = unravel(idx);
  constexpr int offsets[6][3] = {{1, 0, 0},  {-1, 0, 0}, {0, 1, 0},
                                 {0, -1, 0}, {0, 0, 1},  {0, 0, -1}};
  for (const auto &o : offsets) {
    const int i = v.i + o[0], j = v.j + o[1], k = v.k + o[2];
    if (contains(i, j, k) && base_labels[index(i, j, k)] == Label::Air)
      return true;
  }
  return false;
}

VoxelGrid voxelize(const Phantom &phantom, double resolution_m,
                   const VoxelizeOptions &options) {
  if (!(std::isfinite(resolution_m) && resolution_m > 0.0))
    throw Error(ErrorCode::InvalidSpec, "resolution_m: must be > 0");
  const auto &spec = phantom.spec();
  const auto bounds = phantom.body_bounds();
  const double margin = spec.air_margin_m;

  const auto half_cells = [&](double half_extent) {
    return static_cast<long long>(
        std::ceil((half_extent + margin) / resolution_m - 1e-9));
  };
  const long long hx = half_cells(std::max(-bounds[0].x(), bounds[1].x()));
  const long long hy = half_cells(std::max(-bounds[0].y(), bounds[1].y()));
  const long long nz_ll =
      static_cast<long long>(std::ceil(
          (bounds[1].z() + margin - spec.ground_plane_z_m) / resolution_m -
          1e-9)) +
      1;
  const long long nx_ll = 2 * hx + 1;
  const long long ny_ll = 2 * hy + 1;
  const long double total = static_cast<long double>(nx_ll) * ny_ll * nz_ll;
  if (total > static_cast<long double>(options.max_voxels))
    throw Error(ErrorCode::GridTooLarge,
                std::to_string(nx_ll) + "x" + std::to_string(ny_ll) + "x" +
                    std::to_string(nz_ll) + " exceeds cap of " +
                    std::to_string(options.max_voxels) + " voxels");
  if (nx_ll < 8 || ny_ll < 8 || nz_ll < 8)
    throw Error(ErrorCode::InvalidSpec,
                "resolution_m: grid would have fewer than 8 cells per axis");

  VoxelGrid grid;
  grid.resolution_m = resolution_m;
  grid.dims = {static_cast<int>(nx_ll), static_cast<int>(ny_ll),
               static_cast<int>(nz_ll)};
  grid.origin = Point3(-static_cast<double>(hx) * resolution_m,
                       -static_cast<double>(hy) * resolution_m,
                       spec.ground_plane_z_m);
  grid.skin_merged = spec.skin_thickness_m < resolution_m;
  if (grid.skin_merged)
    grid.warnings.push_back(
        "DegenerateGeometry: skin_thickness_m (" +
        std::to_string(spec.skin_thickness_m) +
        ") is thinner than one voxel; skin merged into muscle");

  grid.labels.resize(grid.dims.count());
  for (int k = 0; k < grid.dims.nz; ++k)
    for (int j = 0; j < grid.dims.ny; ++j)
      for (int i = 0; i < grid.dims.nx; ++i) {
        // Integer offsets keep centers exactly mirror-symmetric about x = 0.
        const Point3 c(resolution_m * static_cast<double>(i - hx),
                       resolution_m * static_cast<double>(j - hy),
                       spec.ground_plane_z_m + resolution_m * k);
        grid.labels[grid.index(i, j, k)] =
            phantom.classify(c, grid.skin_merged);
      }
  grid.base_labels = grid.labels;
  return grid;
}

std::string_view to_string(Orientation o) {
  switch (o) {
  case Orientation::O1Normal: return "O1_normal";
  case Orientation::O2Lateral: return "O2_lateral";
  case Orientation::O3Vertical: return "O3_vertical";
  case Orientation::Custom: return "custom";
  }
  return "?";
}

std::optional<Orientation> parse_orientation(std::string_view s) {
  for (auto o : {Orientation::O1Normal, Orientation::O2Lateral,
                 Orientation::O3Vertical, Orientation::Custom})
    if (s == to_string(o))
      return o;
  return std::nullopt;
}

std::optional<Point3> preset_axis(Orientation preset) {
  switch (preset) {
  case Orientation::O1Normal: return Point3::UnitY();
  case Orientation::O2Lateral: return Point3::UnitX();
  case Orientation::O3Vertical: return Point3::UnitZ();
  case Orientation::Custom: return std::nullopt;
  }
  return std::nullopt;
}

TxSpec TxSpec::from_preset(Orientation preset, const Point3 &center) {
  TxSpec tx;
  tx.center = center;
  tx.orientation = preset;
  if (auto axis = preset_axis(preset))
    tx.dipole_axis = *axis;
  return tx;
}

void TxSpec::validate() const {
  require(center.allFinite(), "tx.center", "must be finite");
  require(std::abs(dipole_axis.norm() - 1.0) < 1e-9, "tx.dipole_axis",
          "must be a unit vector");
  require(finite_positive(plate_width_m), "tx.plate_width_m", "must be > 0");
  require(finite_positive(plate_height_m), "tx.plate_height_m",
          "must be > 0");
  require(finite_positive(plate_gap_m), "tx.plate_gap_m", "must be > 0");
  require(std::isfinite(excitation_voltage_v), "tx.excitation_voltage_v",
          "must be finite");
  if (auto axis = preset_axis(orientation))
    require((*axis - dipole_axis).norm() < 1e-9, "tx.dipole_axis",
            "disagrees with orientation preset");
}

namespace {

// In-plane plate basis (u = width direction, v = height direction). The
// height direction follows +z whenever the axis is not vertical.
std::array<Point3, 2> plate_basis(const Point3 &axis) {
  if (std::abs(axis.z()) < 0.9) {
    Point3 v = Point3::UnitZ() - axis.z() * axis;
    v.normalize();
    Point3 u = v.cross(axis).normalized();
    return {u, v};
  }
  Point3 u = Point3::UnitX() - axis.x() * axis;
  u.normalize();
  return {u, axis.cross(u).normalized()};
}

std::vector<std::size_t> plate_voxels(const VoxelGrid &grid, const Point3 &p,
                                      const Point3 &axis, double width,
                                      double height) {
  const auto [u, v] = plate_basis(axis);
  const double h = grid.resolution_m;
  const double tol = 1e-9 * h;
  const double reach = 0.5 * std::max(width, height) + h;
  const auto lo = ((p.array() - reach - grid.origin.array()) / h).floor();
  const auto hi = ((p.array() + reach - grid.origin.array()) / h).ceil();
  std::vector<std::size_t> out;
  for (int k = std::max(0, static_cast<int>(lo.z()));
       k <= std::min(grid.dims.nz - 1, static_cast<int>(hi.z())); ++k)
    for (int j = std::max(0, static_cast<int>(lo.y()));
         j <= std::min(grid.dims.ny - 1, static_cast<int>(hi.y())); ++j)
      for (int i = std::max(0, static_cast<int>(lo.x()));
           i <= std::min(grid.dims.nx - 1, static_cast<int>(hi.x())); ++i) {
        const Point3 d = grid.center(i, j, k) - p;
        if (std::abs(d.dot(axis)) < 0.5 * h - tol &&
            std::abs(d.dot(u)) <= 0.5 * width + tol &&
            std::abs(d.dot(v)) <= 0.5 * height + tol)
          out.push_back(grid.index(i, j, k));
      }
  if (out.empty()) {
    if (auto cell = grid.locate(p))
      out.push_back(grid.index(*cell));
  }
  std::sort(out.begin(), out.end());
  return out;
}

} // namespace

VoxelGrid place_transmitter(VoxelGrid grid, const TxSpec &tx) {
  tx.validate();
  for (std::size_t n = 0; n < grid.labels.size(); ++n)
    if (grid.labels[n] == Label::ElectrodePos ||
        grid.labels[n] == Label::ElectrodeNeg)
      grid.labels[n] = grid.base_labels[n];

  if (tx.plate_gap_m < grid.resolution_m)
    throw Error(ErrorCode::ElectrodesOverlap,
                "plate_gap_m " + std::to_string(tx.plate_gap_m) +
                    " is smaller than the voxel size " +
                    std::to_string(grid.resolution_m));

  const Point3 offset = 0.5 * tx.plate_gap_m * tx.dipole_axis;
  const auto pos = plate_voxels(grid, tx.center + offset, tx.dipole_axis,
                                tx.plate_width_m, tx.plate_height_m);
  const auto neg = plate_voxels(grid, tx.center - offset, tx.dipole_axis,
                                tx.plate_width_m, tx.plate_height_m);
  if (pos.empty() || neg.empty())
    throw Error(ErrorCode::ElectrodeOutsideBody,
                "a plate falls outside the voxel grid");
  std::vector<std::size_t> common;
  std::set_intersection(pos.begin(), pos.end(), neg.begin(), neg.end(),
                        std::back_inserter(common));
  if (!common.empty())
    throw Error(ErrorCode::ElectrodesOverlap,
                "positive and negative plates share voxels");
  for (auto set : {&pos, &neg})
    for (auto n : *set)
      if (!is_body(grid.base_labels[n])) {
        const Point3 c = grid.center(n);
        std::ostringstream msg;
        msg << "plate voxel at (" << c.x() << ", " << c.y() << ", " << c.z()
            << ") is " << to_string(grid.base_labels[n]);
        throw Error(ErrorCode::ElectrodeOutsideBody, msg.str());
      }
  for (auto n : pos)
    grid.labels[n] = Label::ElectrodePos;
  for (auto n : neg)
    grid.labels[n] = Label::ElectrodeNeg;
  grid.electrode_pos_count = pos.size();
  grid.electrode_neg_count = neg.size();
  return grid;
}

void write_grid(const VoxelGrid &grid, const std::string &path) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw Error(ErrorCode::IoError, "cannot open " + path);
  out.precision(17);
  out << "eqshbc-grid 1 " << grid.dims.nx << ' ' << grid.dims.ny << ' '
      << grid.dims.nz << ' ' << grid.resolution_m << ' ' << grid.origin.x()
      << ' ' << grid.origin.y() << ' ' << grid.origin.z() << '\n';
  out.write(reinterpret_cast<const char *>(grid.labels.data()),
            static_cast<std::streamsize>(grid.labels.size()));
  if (!out)
    throw Error(ErrorCode::IoError, "write failed for " + path);
}

VoxelGrid read_grid(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error(ErrorCode::IoError, "cannot open " + path);
  std::string header;
  std::getline(in, header);
  std::istringstream hs(header);
  std::string magic;
  int version = 0;
  VoxelGrid grid;
  double ox = 0, oy = 0, oz = 0;
  hs >> magic >> version >> grid.dims.nx >> grid.dims.ny >> grid.dims.nz >>
      grid.resolution_m >> ox >> oy >> oz;
  if (!hs || magic != "eqshbc-grid" || version != 1)
    throw Error(ErrorCode::ParseError, path + ": bad grid header");
  grid.origin = Point3(ox, oy, oz);
  grid.labels.resize(grid.dims.count());
  in.read(reinterpret_cast<char *>(grid.labels.data()),
          static_cast<std::streamsize>(grid.labels.size()));
  if (in.gcount() != static_cast<std::streamsize>(grid.labels.size()))
    throw Error(ErrorCode::ParseError, path + ": truncated label data");
  for (Label l : grid.labels)
    if (static_cast<std::size_t>(l) >= kLabelCount)
      throw Error(ErrorCode::ParseError, path + ": invalid label byte");
  grid.base_labels = grid.labels;
  return grid;
}

} // namespace eqshbc
