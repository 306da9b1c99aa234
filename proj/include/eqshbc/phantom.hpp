#pragma once

#include <Eigen/Core>

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace eqshbc {

using Point3 = Eigen::Vector3d;

enum class Label : std::uint8_t {
  Air = 0,
  Skin = 1,
  Muscle = 2,
  GroundPlane = 3,
  ElectrodePos = 4,
  ElectrodeNeg = 5,
  RxContact = 6,
};
inline constexpr std::size_t kLabelCount = 7;

std::string_view to_string(Label label);
bool is_body(Label label);      // Skin or Muscle
bool is_dirichlet(Label label); // GroundPlane or electrode

// Heights are absolute z coordinates (m); the ground plane sits at
// ground_plane_z_m and the torso base sits standoff_m above it.
struct PhantomSpec {
  double torso_radius_m = 0.15;
  double torso_height_m = 1.8;
  double arm_radius_m = 0.05;
  double arm_length_m = 1.8;
  double arm_crossing_height_m = 1.4;
  double skin_thickness_m = 0.002;
  double air_margin_m = 0.30;
  double ground_plane_z_m = 0.0;
  double standoff_m = 0.10;

  // Throws Error{InvalidSpec} naming the offending field.
  void validate() const;
};

// Constructive scene: muscle is the union of the two cylinders shrunk by the
// skin thickness, skin is the remaining outer shell, everything else is air
// down to the ground plane.
class Phantom {
public:
  explicit Phantom(const PhantomSpec &spec);

  const PhantomSpec &spec() const { return spec_; }

  // Point classification; merge_skin maps Skin to Muscle.
  Label classify(const Point3 &p, bool merge_skin = false) const;

  double torso_base_z() const;
  double torso_top_z() const;
  // Largest linear extent of the body (m), used by the quasistatic check.
  double body_extent() const;
  // Distance from p to the farthest body point; the source-to-observer length
  // that sets retardation when p is the transmitter.
  double max_distance_from(const Point3 &p) const;
  // Axis-aligned body bounding box (min, max).
  std::array<Point3, 2> body_bounds() const;

private:
  bool inside_body(const Point3 &p, double shrink) const;

  PhantomSpec spec_;
};

Phantom build_phantom(const PhantomSpec &spec);

struct GridDims {
  int nx = 0;
  int ny = 0;
  int nz = 0;

  std::size_t count() const {
    return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny) *
           static_cast<std::size_t>(nz);
  }
  bool operator==(const GridDims &) const = default;
};

struct VoxelIndex {
  int i = 0;
  int j = 0;
  int k = 0;
  bool operator==(const VoxelIndex &) const = default;
};

// Uniform cell-centered grid. origin is the center of voxel (0,0,0); x and y
// centers sit on integer multiples of the resolution, and the k = 0 layer is
// centered on the ground plane.
struct VoxelGrid {
  double resolution_m = 0.0;
  GridDims dims;
  Point3 origin = Point3::Zero();
  std::vector<Label> labels;
  // Labels before electrode placement, used for restoration and for the
  // material underneath Dirichlet plates.
  std::vector<Label> base_labels;
  std::size_t electrode_pos_count = 0;
  std::size_t electrode_neg_count = 0;
  bool skin_merged = false;
  std::vector<std::string> warnings;

  std::size_t size() const { return labels.size(); }
  std::size_t index(int i, int j, int k) const {
    return (static_cast<std::size_t>(k) * static_cast<std::size_t>(dims.ny) +
            static_cast<std::size_t>(j)) *
               static_cast<std::size_t>(dims.nx) +
           static_cast<std::size_t>(i);
  }
  std::size_t index(const VoxelIndex &v) const { return index(v.i, v.j, v.k); }
  VoxelIndex unravel(std::size_t idx) const;
  bool contains(int i, int j, int k) const {
    return i >= 0 && j >= 0 && k >= 0 && i < dims.nx && j < dims.ny &&
           k < dims.nz;
  }
  Point3 center(int i, int j, int k) const {
    return origin + resolution_m * Point3(i, j, k);
  }
  Point3 center(std::size_t idx) const;
  // Voxel whose cell contains p, if any.
  std::optional<VoxelIndex> locate(const Point3 &p) const;

  std::array<std::size_t, kLabelCount> label_counts() const;
  // Body voxel (skin or muscle underneath) with at least one air face.
  bool is_surface(std::size_t idx) const;
};

struct VoxelizeOptions {
  std::size_t max_voxels = 40'000'000;
};

VoxelGrid voxelize(const Phantom &phantom, double resolution_m,
                   const VoxelizeOptions &options = {});

enum class Orientation {
  O1Normal,   // dipole axis along y, the outward normal of the front surface
  O2Lateral,  // along x, tangent to the front surface
  O3Vertical, // along z
  Custom,
};

std::string_view to_string(Orientation o);
std::optional<Orientation> parse_orientation(std::string_view s);

struct TxSpec {
  Point3 center = Point3(0.0, 0.10, 0.80);
  Point3 dipole_axis = Point3::UnitY();
  double plate_width_m = 0.04;
  double plate_height_m = 0.04;
  double plate_gap_m = 0.04;
  double excitation_voltage_v = 1.0;
  Orientation orientation = Orientation::O1Normal;

  void validate() const;
  static TxSpec from_preset(Orientation preset, const Point3 &center);
};

// Axis of a preset; Custom returns nullopt.
std::optional<Point3> preset_axis(Orientation preset);

// Relabels the two plate footprints as ElectrodePos (+axis side) and
// ElectrodeNeg. Any previously placed electrodes are restored first, so the
// call is idempotent.
VoxelGrid place_transmitter(VoxelGrid grid, const TxSpec &tx);

// Debug export: text header line followed by raw label bytes (x fastest).
void write_grid(const VoxelGrid &grid, const std::string &path);
VoxelGrid read_grid(const std::string &path);

} // namespace eqshbc
