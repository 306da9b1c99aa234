#include "eqshbc/solver.hpp"

#include "eqshbc/error.hpp"

#include <Eigen/SparseLU>

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <fstream>

namespace eqshbc {

namespace {

std::atomic<std::uint64_t> g_solve_calls{0};

constexpr std::array<std::array<int, 3>, 6> kFaces = {
    {{-1, 0, 0}, {1, 0, 0}, {0, -1, 0}, {0, 1, 0}, {0, 0, -1}, {0, 0, 1}}};

template <class Fn>
void for_each_neighbor(const VoxelGrid &grid, std::size_t idx, Fn &&fn) {
  const auto v = grid.unravel(idx);
  for (const auto &o : kFaces) {
    const int i = v.i + o[0], j = v.j + o[1], k = v.k + o[2];
    if (grid.contains(i, j, k))
      fn(grid.index(i, j, k));
  }
}

Complex unconjugated_dot(const ComplexVector &a, const ComplexVector &b) {
  return a.cwiseProduct(b).sum();
}

PotentialField expand(const LinearSystem &system, const ComplexVector &x) {
  PotentialField field;
  field.dims = system.grid.dims;
  field.v_tx = system.v_tx;
  field.phi = system.dirichlet_value;
  for (std::size_t u = 0; u < system.unknowns(); ++u)
    field.phi[system.voxel_of_unknown[u]] = x[static_cast<Eigen::Index>(u)];
  return field;
}

void require_anchored(const LinearSystem &system) {
  if (system.boundary.ground + system.boundary.electrode_pos +
          system.boundary.electrode_neg ==
      0)
    throw Error(ErrorCode::SingularSystem,
                "no Dirichlet voxels anchor the potential");
}

} // namespace

std::uint64_t solve_call_count() {
  return g_solve_calls.load(std::memory_order_relaxed);
}

Complex LinearSystem::face_conductance(std::size_t a, std::size_t b) const {
  const Label la = grid.labels[a];
  const Label lb = grid.labels[b];
  const bool ga = la == Label::GroundPlane;
  const bool gb = lb == Label::GroundPlane;
  const double h = grid.resolution_m;
  if (ga && gb)
    return 0.0;
  if (ga)
    return voxel_admittivity[b] * h;
  if (gb)
    return voxel_admittivity[a] * h;
  const Complex ya = voxel_admittivity[a];
  const Complex yb = voxel_admittivity[b];
  const Complex sum = ya + yb;
  if (sum == Complex(0.0))
    return 0.0;
  return 2.0 * ya * yb / sum * h;
}

LinearSystem assemble(const VoxelGrid &grid, const TissueTable &table,
                      double frequency_hz, double v_tx) {
  if (!(frequency_hz > 0.0))
    throw Error(ErrorCode::InvalidSpec, "frequency_hz must be > 0");
  LinearSystem sys;
  sys.grid = grid;
  sys.frequency_hz = frequency_hz;
  sys.v_tx = v_tx;

  const std::size_t n = grid.size();
  if (grid.base_labels.size() != n)
    throw Error(ErrorCode::MismatchedInputs, "grid base labels missing");
  sys.unknown_of_voxel.assign(n, -1);
  sys.dirichlet_value.assign(n, Complex(0.0));
  sys.voxel_admittivity.assign(n, Complex(0.0));

  std::array<ComplexAdmittivity, kLabelCount> label_y{};
  std::array<bool, kLabelCount> label_known{};
  const auto material_of = [&](Label l) -> ComplexAdmittivity {
    const auto slot = static_cast<std::size_t>(l);
    if (!label_known[slot]) {
      auto name = tissue_name(l);
      label_y[slot] = name ? table.admittivity_of(*name, frequency_hz)
                           : ComplexAdmittivity(0.0);
      label_known[slot] = true;
    }
    return label_y[slot];
  };

  for (std::size_t idx = 0; idx < n; ++idx) {
    const Label l = grid.labels[idx];
    switch (l) {
    case Label::GroundPlane:
      ++sys.boundary.ground;
      break;
    case Label::ElectrodePos:
      ++sys.boundary.electrode_pos;
      sys.dirichlet_value[idx] = 0.5 * v_tx;
      sys.voxel_admittivity[idx] = material_of(grid.base_labels[idx]);
      break;
    case Label::ElectrodeNeg:
      ++sys.boundary.electrode_neg;
      sys.dirichlet_value[idx] = -0.5 * v_tx;
      sys.voxel_admittivity[idx] = material_of(grid.base_labels[idx]);
      break;
    case Label::RxContact:
      sys.voxel_admittivity[idx] = material_of(grid.base_labels[idx]);
      break;
    default:
      sys.voxel_admittivity[idx] = material_of(l);
      break;
    }
    if (!is_dirichlet(l)) {
      sys.unknown_of_voxel[idx] =
          static_cast<std::int64_t>(sys.voxel_of_unknown.size());
      sys.voxel_of_unknown.push_back(idx);
    }
  }
  if (sys.boundary.ground == 0)
    throw Error(ErrorCode::NoGroundPlane, "grid has no GroundPlane voxels");
  if (sys.boundary.electrode_pos == 0 || sys.boundary.electrode_neg == 0)
    throw Error(ErrorCode::NoElectrodes,
                "grid needs at least one ElectrodePos and one ElectrodeNeg "
                "voxel");

  const auto m = static_cast<Eigen::Index>(sys.unknowns());
  sys.matrix.resize(m, m);
  sys.matrix.reserve(Eigen::VectorXi::Constant(m, 7));
  sys.rhs = ComplexVector::Zero(m);
  for (Eigen::Index row = 0; row < m; ++row) {
    const std::size_t idx = sys.voxel_of_unknown[static_cast<std::size_t>(row)];
    Complex diag = 0.0;
    // Columns must be inserted in increasing order for a row-major fill.
    std::array<std::pair<Eigen::Index, Complex>, 6> offdiag;
    std::size_t count = 0;
    for_each_neighbor(grid, idx, [&](std::size_t nb) {
      const Complex g = sys.face_conductance(idx, nb);
      diag += g;
      const auto col = sys.unknown_of_voxel[nb];
      if (col < 0)
        sys.rhs[row] += g * sys.dirichlet_value[nb];
      else
        offdiag[count++] = {static_cast<Eigen::Index>(col), -g};
    });
    bool diag_done = false;
    std::sort(offdiag.begin(), offdiag.begin() + count,
              [](const auto &a, const auto &b) { return a.first < b.first; });
    for (std::size_t c = 0; c < count; ++c) {
      if (!diag_done && offdiag[c].first > row) {
        sys.matrix.insert(row, row) = diag;
        diag_done = true;
      }
      sys.matrix.insert(row, offdiag[c].first) = offdiag[c].second;
    }
    if (!diag_done)
      sys.matrix.insert(row, row) = diag;
  }
  sys.matrix.makeCompressed();
  return sys;
}

PotentialField solve(const LinearSystem &system, const SolveOptions &options) {
  g_solve_calls.fetch_add(1, std::memory_order_relaxed);
  if (!(options.tol_rel > 0.0 && options.tol_rel <= 1e-2))
    throw Error(ErrorCode::InvalidSpec, "tol_rel must lie in (0, 1e-2]");
  if (options.max_iter < 1)
    throw Error(ErrorCode::InvalidSpec, "max_iter must be >= 1");
  require_anchored(system);

  const auto &A = system.matrix;
  const ComplexVector &b = system.rhs;
  const double b_norm = b.norm();
  SolverStats stats;
  stats.method = "cocg-jacobi";
  ComplexVector x = ComplexVector::Zero(b.size());
  if (b_norm == 0.0) {
    stats.converged = true;
    PotentialField field = expand(system, x);
    field.stats = stats;
    return field;
  }

  const ComplexVector inv_diag = A.diagonal().cwiseInverse();
  ComplexVector r = b;
  ComplexVector z(b.size());
  ComplexVector p(b.size());
  ComplexVector q(b.size());
  int it = 0;
  double true_rel = 1.0;
  // Restarts from the true residual when the recurrence drifts below it.
  for (int restart = 0; restart < 4; ++restart) {
    z = inv_diag.cwiseProduct(r);
    p = z;
    Complex rho = unconjugated_dot(r, z);
    while (it < options.max_iter) {
      q.noalias() = A * p;
      const Complex pq = unconjugated_dot(p, q);
      if (pq == Complex(0.0))
        break;
      const Complex alpha = rho / pq;
      x += alpha * p;
      r -= alpha * q;
      ++it;
      if (r.norm() / b_norm <= options.tol_rel)
        break;
      z = inv_diag.cwiseProduct(r);
      const Complex rho_next = unconjugated_dot(r, z);
      if (rho == Complex(0.0))
        break;
      p = z + (rho_next / rho) * p;
      rho = rho_next;
    }
    r = b - A * x;
    true_rel = r.norm() / b_norm;
    if (true_rel <= options.tol_rel || it >= options.max_iter)
      break;
  }
  stats.iterations = it;
  stats.relative_residual = true_rel;
  stats.converged = true_rel <= options.tol_rel;
  PotentialField field = expand(system, x);
  field.stats = stats;
  return field;
}

PotentialField solve_dense_oracle(const LinearSystem &system) {
  if (system.unknowns() > kDenseOracleMaxUnknowns)
    throw Error(ErrorCode::SystemTooLarge,
                std::to_string(system.unknowns()) + " unknowns exceeds " +
                    std::to_string(kDenseOracleMaxUnknowns));
  require_anchored(system);
  Eigen::SparseMatrix<Complex> colmajor = system.matrix;
  Eigen::SparseLU<Eigen::SparseMatrix<Complex>> lu;
  lu.compute(colmajor);
  if (lu.info() != Eigen::Success)
    throw Error(ErrorCode::SingularSystem, "LU factorization failed");
  ComplexVector x = lu.solve(system.rhs);
  PotentialField field = expand(system, x);
  field.stats.method = "sparse-lu";
  field.stats.iterations = 1;
  const double b_norm = system.rhs.norm();
  field.stats.relative_residual =
      b_norm > 0.0 ? (system.rhs - system.matrix * x).norm() / b_norm : 0.0;
  field.stats.converged = true;
  return field;
}

DivergenceMap current_divergence(const PotentialField &field,
                                 const LinearSystem &system) {
  if (!(field.dims == system.grid.dims) ||
      field.phi.size() != system.grid.size())
    throw Error(ErrorCode::MismatchedInputs,
                "field and system have different grids");
  DivergenceMap out;
  const auto &grid = system.grid;
  out.net_current.assign(grid.size(), Complex(0.0));
  out.rhs_norm = system.rhs.norm();
  for (std::size_t idx = 0; idx < grid.size(); ++idx) {
    Complex net = 0.0;
    for_each_neighbor(grid, idx, [&](std::size_t nb) {
      net += system.face_conductance(idx, nb) * (field.phi[idx] - field.phi[nb]);
    });
    out.net_current[idx] = net;
    switch (grid.labels[idx]) {
    case Label::ElectrodePos: out.total_pos += net; break;
    case Label::ElectrodeNeg: out.total_neg += net; break;
    case Label::GroundPlane: out.total_ground += net; break;
    default: out.max_interior = std::max(out.max_interior, std::abs(net));
    }
  }
  const double pos = std::abs(out.total_pos);
  out.balance_relative =
      pos > 0.0 ? std::abs(out.total_pos + out.total_neg + out.total_ground) /
                      pos
                : 0.0;
  return out;
}

void write_field(const PotentialField &field, const VoxelGrid &grid,
                 const std::string &path) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw Error(ErrorCode::IoError, "cannot open " + path);
  out.precision(17);
  out << "eqshbc-field 1 " << grid.dims.nx << ' ' << grid.dims.ny << ' '
      << grid.dims.nz << ' ' << grid.resolution_m << ' ' << grid.origin.x()
      << ' ' << grid.origin.y() << ' ' << grid.origin.z() << '\n';
  out.write(reinterpret_cast<const char *>(field.phi.data()),
            static_cast<std::streamsize>(field.phi.size() * sizeof(Complex)));
  if (!out)
    throw Error(ErrorCode::IoError, "write failed for " + path);
}

} // namespace eqshbc
