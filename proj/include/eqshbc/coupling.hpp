#pragma once

#include "eqshbc/phantom.hpp"
#include "eqshbc/solver.hpp"

#include <string_view>
#include <variant>

namespace eqshbc {

enum class RxMode { Galvanic, Capacitive };

std::string_view to_string(RxMode mode);
std::optional<RxMode> parse_rx_mode(std::string_view s);

// Differential pickup across two skin contacts through a high-impedance
// buffer.
struct GalvanicRx {
  Point3 contact_a = Point3::Zero();
  Point3 contact_b = Point3::Zero();
};

// Single contact; the circuit closes through the device-ground-to-earth
// return capacitance, loaded by load_r_ohm in parallel with load_c_f.
struct CapacitiveRx {
  Point3 contact = Point3::Zero();
  double c_return_f = 1e-12;
  double load_r_ohm = 1e6;
  double load_c_f = 10e-12;
};

using RxModel = std::variant<GalvanicRx, CapacitiveRx>;

// Snaps a point to the closest body surface voxel in its 3x3x3
// neighborhood; throws ContactOffSurface when there is none.
std::size_t contact_voxel(const VoxelGrid &grid, const Point3 &point);

Complex galvanic_pickup(const PotentialField &field, const VoxelGrid &grid,
                        const GalvanicRx &rx);

// Z_load / (Z_load + Z_return) at the given frequency.
Complex capacitive_divider(const CapacitiveRx &rx, double frequency_hz);

Complex capacitive_pickup(const PotentialField &field, const VoxelGrid &grid,
                          const CapacitiveRx &rx, double frequency_hz);

inline constexpr double kPathLossFloorDb = -300.0;

// 20 log10(|v_rx| / |v_tx|), clamped below at kPathLossFloorDb.
double path_loss(Complex v_rx, double v_tx);

struct ChannelSample {
  Point3 rx_position = Point3::Zero(); // contact centroid
  RxMode mode = RxMode::Galvanic;
  Complex v_rx = 0.0;
  double v_tx = 0.0;
  double path_loss_db = kPathLossFloorDb;
};

// Current dipole of moment I*d (A*m) in an unbounded homogeneous medium.
struct CurrentDipole {
  Point3 center = Point3::Zero();
  Point3 moment = Point3::Zero();
  ComplexAdmittivity admittivity = 1.0;
};

// phi = (p . r_hat) / (4 pi y r^2); throws ZeroRadius at the center.
Complex analytic_dipole_potential(const Point3 &point,
                                  const CurrentDipole &dipole);

} // namespace eqshbc
