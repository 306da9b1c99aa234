#pragma once

#include "eqshbc/phantom.hpp"
#include "eqshbc/tissue.hpp"

#include <Eigen/SparseCore>

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

namespace eqshbc {

using Complex = std::complex<double>;
using SparseMatrix = Eigen::SparseMatrix<Complex, Eigen::RowMajor>;
using ComplexVector = Eigen::VectorXcd;

struct BoundaryRecord {
  std::size_t electrode_pos = 0;
  std::size_t electrode_neg = 0;
  std::size_t ground = 0;
};

// Finite-volume discretization of div((sigma + j omega eps) grad phi) = 0.
// Rows are ordered by voxel index; the matrix is complex symmetric with
// off-diagonals -g (g = face admittivity * h) and Dirichlet values folded
// into rhs.
struct LinearSystem {
  SparseMatrix matrix;
  ComplexVector rhs;
  std::vector<std::int64_t> unknown_of_voxel; // -1 for Dirichlet voxels
  std::vector<std::size_t> voxel_of_unknown;
  std::vector<Complex> dirichlet_value; // per voxel, 0 for unknowns
  // Material admittivity per voxel; electrodes carry the tissue beneath them
  // and ground-plane voxels are transparent (see face_conductance).
  std::vector<ComplexAdmittivity> voxel_admittivity;
  VoxelGrid grid;
  BoundaryRecord boundary;
  double frequency_hz = 0.0;
  double v_tx = 0.0;

  std::size_t unknowns() const { return voxel_of_unknown.size(); }
  // Conductance (S) across the face between neighboring voxels a and b:
  // harmonic mean of the two admittivities times h. A ground-plane voxel
  // holds phi = 0 at its center and takes the neighbor's admittivity.
  Complex face_conductance(std::size_t a, std::size_t b) const;
};

LinearSystem assemble(const VoxelGrid &grid, const TissueTable &table,
                      double frequency_hz, double v_tx);

struct SolveOptions {
  double tol_rel = 1e-8;
  int max_iter = 20000;
};

struct SolverStats {
  std::string method;
  int iterations = 0;
  double relative_residual = 0.0;
  bool converged = false;
};

struct PotentialField {
  GridDims dims;
  std::vector<Complex> phi; // per voxel (V)
  double v_tx = 0.0;
  SolverStats stats;

  Complex at(std::size_t voxel) const { return phi[voxel]; }
};

// Jacobi-preconditioned conjugate orthogonal conjugate gradient (COCG) for
// complex symmetric systems. A non-converged run returns the partial field
// with stats.converged == false.
PotentialField solve(const LinearSystem &system,
                     const SolveOptions &options = {});

// Number of solve() calls made by this process.
std::uint64_t solve_call_count();

inline constexpr std::size_t kDenseOracleMaxUnknowns = 20'000;

// Direct sparse LU factorization; verification only.
PotentialField solve_dense_oracle(const LinearSystem &system);

struct DivergenceMap {
  std::vector<Complex> net_current; // A, out of each voxel
  Complex total_pos = 0.0;
  Complex total_neg = 0.0;
  Complex total_ground = 0.0;
  double max_interior = 0.0;
  double rhs_norm = 0.0;
  // |I_pos + I_neg + I_ground| / |I_pos|; 0 for a zero field.
  double balance_relative = 0.0;
};

DivergenceMap current_divergence(const PotentialField &field,
                                 const LinearSystem &system);

// Flat binary dump: text header line, then (re, im) doubles per voxel.
void write_field(const PotentialField &field, const VoxelGrid &grid,
                 const std::string &path);

} // namespace eqshbc
