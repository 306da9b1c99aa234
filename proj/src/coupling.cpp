#include "eqshbc/coupling.hpp"

#include "eqshbc/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace eqshbc {

std::string_view to_string(RxMode mode) {
  return mode == RxMode::Galvanic ? "galvanic" : "capacitive";
}

std::optional<RxMode> parse_rx_mode(std::string_view s) {
  if (s == "galvanic")
    return RxMode::Galvanic;
  if (s == "capacitive")
    return RxMode::Capacitive;
  return std::nullopt;
}

std::size_t contact_voxel(const VoxelGrid &grid, const Point3 &point) {
  const Point3 rel = (point - grid.origin) / grid.resolution_m;
  const int ci = static_cast<int>(std::floor(rel.x() + 0.5));
  const int cj = static_cast<int>(std::floor(rel.y() + 0.5));
  const int ck = static_cast<int>(std::floor(rel.z() + 0.5));
  std::size_t best = 0;
  double best_d2 = std::numeric_limits<double>::infinity();
  for (int dk = -1; dk <= 1; ++dk)
    for (int dj = -1; dj <= 1; ++dj)
      for (int di = -1; di <= 1; ++di) {
        const int i = ci + di, j = cj + dj, k = ck + dk;
        if (!grid.contains(i, j, k))
          continue;
        const std::size_t idx = grid.index(i, j, k);
        if (!grid.is_surface(idx))
          continue;
        const double d2 = (grid.center(i, j, k) - point).squaredNorm();
        if (d2 < best_d2 || (d2 == best_d2 && idx < best)) {
          best_d2 = d2;
          best = idx;
        }
      }
  if (!std::isfinite(best_d2)) {
    std::ostringstream msg;
    msg << "no body surface voxel near (" << point.x() << ", " << point.y()
        << ", " << point.z() << ")";
    throw Error(ErrorCode::ContactOffSurface, msg.str());
  }
  return best;
}

Complex galvanic_pickup(const PotentialField &field, const VoxelGrid &grid,
                        const GalvanicRx &rx) {
  if (field.phi.size() != grid.size())
    throw Error(ErrorCode::MismatchedInputs, "field does not match grid");
  const auto a = contact_voxel(grid, rx.contact_a);
  const auto b = contact_voxel(grid, rx.contact_b);
  if (a == b)
    throw Error(ErrorCode::ContactSpacing,
                "galvanic contacts map to the same voxel");
  return field.phi[a] - field.phi[b];
}

Complex capacitive_divider(const CapacitiveRx &rx, double frequency_hz) {
  if (!(frequency_hz > 0.0))
    throw Error(ErrorCode::InvalidSpec, "frequency_hz must be > 0");
  if (!(rx.c_return_f > 0.0) || !(rx.load_r_ohm > 0.0) || !(rx.load_c_f >= 0.0))
    throw Error(ErrorCode::InvalidSpec,
                "capacitive Rx needs c_return_f > 0, load_r_ohm > 0, "
                "load_c_f >= 0");
  const double omega = 2.0 * kPi * frequency_hz;
  const Complex j(0.0, 1.0);
  const Complex z_return = 1.0 / (j * omega * rx.c_return_f);
  const Complex z_load = 1.0 / (1.0 / rx.load_r_ohm + j * omega * rx.load_c_f);
  return z_load / (z_load + z_return);
}

Complex capacitive_pickup(const PotentialField &field, const VoxelGrid &grid,
                          const CapacitiveRx &rx, double frequency_hz) {
  if (field.phi.size() != grid.size())
    throw Error(ErrorCode::MismatchedInputs, "field does not match grid");
  const Complex divider = capacitive_divider(rx, frequency_hz);
  return field.phi[contact_voxel(grid, rx.contact)] * divider;
}

double path_loss(Complex v_rx, double v_tx) {
  if (v_tx == 0.0 || !std::isfinite(v_tx))
    throw Error(ErrorCode::InvalidSpec, "path loss needs a nonzero v_tx");
  const double ratio = std::abs(v_rx) / std::abs(v_tx);
  if (!(ratio > 0.0))
    return kPathLossFloorDb;
  return std::max(kPathLossFloorDb, 20.0 * std::log10(ratio));
}

Complex analytic_dipole_potential(const Point3 &point,
                                  const CurrentDipole &dipole) {
  const Point3 r = point - dipole.center;
  const double dist = r.norm();
  if (dist == 0.0)
    throw Error(ErrorCode::ZeroRadius, "observation point at dipole center");
  return dipole.moment.dot(r) /
         (4.0 * kPi * dipole.admittivity * dist * dist * dist);
}

} // namespace eqshbc
