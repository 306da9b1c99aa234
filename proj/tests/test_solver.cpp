#include "support.hpp"

#include <doctest.h>

using namespace eqshbc;
using namespace eqshbc::testing;

namespace {

struct Toy {
  VoxelGrid grid;
  LinearSystem system;
  PotentialField field;
};

const Toy &toy() {
  static const Toy t = [] {
    Toy out;
    out.grid = toy_scene();
    out.system = assemble(out.grid, two_tissue_table(), 21e6, 1.0);
    out.field = solve(out.system);
    return out;
  }();
  return t;
}

int mirror_i(const VoxelGrid &g, int i) { return g.dims.nx - 1 - i; }

// Electrode pair along x centred on the toy scene's mirror plane, at (j, k).
void pair_at(VoxelGrid &g, int j, int k) {
  const int c = g.dims.nx / 2;
  put(g, c, j, k, Label::ElectrodePos);
  put(g, c - 1, j, k, Label::ElectrodeNeg);
}

} // namespace

TEST_CASE("assembly: structure of the stencil") {
  const LinearSystem &sys = toy().system;
  const auto &g = sys.grid;
  std::size_t dirichlet = 0;
  for (Label l : g.labels)
    dirichlet += is_dirichlet(l);
  CHECK(sys.unknowns() == g.size() - dirichlet);
  CHECK(sys.matrix.rows() == static_cast<Eigen::Index>(sys.unknowns()));

  const Eigen::SparseMatrix<Complex> a = sys.matrix;
  const Eigen::SparseMatrix<Complex> at = a.transpose();
  CHECK((a - at).norm() == 0.0);

  std::size_t interior_rows = 0;
  for (Eigen::Index row = 0; row < sys.matrix.rows(); ++row) {
    Complex diag = 0.0, off = 0.0;
    for (SparseMatrix::InnerIterator it(sys.matrix, row); it; ++it) {
      if (it.col() == row) {
        diag = it.value();
      } else {
        off += it.value();
        CHECK(it.value().real() <= 0.0);
      }
    }
    if (sys.rhs[row] == Complex(0.0)) {
      // No Dirichlet neighbour with a nonzero value; ground neighbours add
      // to the diagonal only, so restrict to rows touching none.
      const auto idx = sys.voxel_of_unknown[static_cast<std::size_t>(row)];
      const auto v = g.unravel(idx);
      bool touches = false;
      for (auto [di, dj, dk] : {std::array{1, 0, 0}, std::array{-1, 0, 0},
                                std::array{0, 1, 0}, std::array{0, -1, 0},
                                std::array{0, 0, 1}, std::array{0, 0, -1}})
        if (g.contains(v.i + di, v.j + dj, v.k + dk) &&
            is_dirichlet(g.labels[g.index(v.i + di, v.j + dj, v.k + dk)]))
          touches = true;
      if (!touches) {
        CHECK(std::abs(diag + off) <= 1e-15 * std::abs(diag));
        ++interior_rows;
      }
    }
  }
  CHECK(interior_rows > 1000);
}

TEST_CASE("assembly: harmonic-mean face conductance") {
  VoxelGrid g = box_grid(8, 8, 8, 0.01, Label::Muscle);
  put(g, 4, 4, 4, Label::Skin);
  ground_slab(g);
  put(g, 1, 1, 6, Label::ElectrodePos);
  put(g, 6, 6, 6, Label::ElectrodeNeg);
  const TissueTable t = two_tissue_table();
  const LinearSystem sys = assemble(g, t, 21e6, 1.0);
  const Complex y1 = t.admittivity_of("muscle", 21e6);
  const Complex y2 = t.admittivity_of("skin", 21e6);
  const Complex g12 = sys.face_conductance(g.index(3, 4, 4), g.index(4, 4, 4));
  const Complex expected = 2.0 * y1 * y2 / (y1 + y2) * 0.01;
  CHECK(std::abs(g12 - expected) <= 1e-15 * std::abs(expected));
  CHECK(sys.face_conductance(g.index(4, 4, 4), g.index(3, 4, 4)) == g12);
  // Ground faces take the tissue side's admittivity.
  CHECK(sys.face_conductance(g.index(2, 2, 0), g.index(2, 2, 1)) == y1 * 0.01);
}

TEST_CASE("assembly: air-muscle faces are limited by the air term") {
  VoxelGrid g = box_grid(8, 8, 8, 0.01, Label::Air);
  put(g, 4, 4, 4, Label::Muscle);
  ground_slab(g);
  put(g, 1, 1, 6, Label::ElectrodePos);
  put(g, 6, 6, 6, Label::ElectrodeNeg);
  const LinearSystem sys = assemble(g, two_tissue_table(), 21e6, 1.0);
  const auto [eps_r, sigma] = cole_cole("muscle", 21e6);
  const double w = 2.0 * kPi * 21e6;
  const Complex y_muscle(sigma, w * kEpsilon0 * eps_r);
  const Complex y_air(0.0, w * kEpsilon0);
  const Complex g_face =
      sys.face_conductance(g.index(4, 4, 4), g.index(5, 4, 4));
  const Complex air_limit = 2.0 * y_air * 0.01;
  CHECK(std::abs(g_face - air_limit) / std::abs(air_limit) <
        2.0 * std::abs(y_air) / std::abs(y_muscle));
  CHECK(std::abs(y_air) / std::abs(y_muscle) < 1e-2);
}

TEST_CASE("assembly: preconditions") {
  VoxelGrid g = box_grid(8, 8, 8, 0.01, Label::Muscle);
  put(g, 2, 2, 2, Label::ElectrodePos);
  put(g, 5, 5, 5, Label::ElectrodeNeg);
  try {
    assemble(g, two_tissue_table(), 21e6, 1.0);
    FAIL("expected NoGroundPlane");
  } catch (const Error &e) {
    CHECK(e.code() == ErrorCode::NoGroundPlane);
  }
  VoxelGrid h = box_grid(8, 8, 8, 0.01, Label::Muscle);
  ground_slab(h);
  try {
    assemble(h, two_tissue_table(), 21e6, 1.0);
    FAIL("expected NoElectrodes");
  } catch (const Error &e) {
    CHECK(e.code() == ErrorCode::NoElectrodes);
  }
}

TEST_CASE("1D chain between 0 and 1 drops linearly") {
  // [ElectrodeNeg, Ground, u, u, u, ElectrodePos]; the negative plate only
  // touches the ground voxel so it does not load the chain.
  VoxelGrid g = box_grid(6, 1, 1, 0.01, Label::Muscle);
  put(g, 0, 0, 0, Label::ElectrodeNeg);
  put(g, 1, 0, 0, Label::GroundPlane);
  put(g, 5, 0, 0, Label::ElectrodePos);
  const LinearSystem sys = assemble(g, two_tissue_table(), 21e6, 2.0);
  REQUIRE(sys.unknowns() == 3);
  for (const PotentialField &f : {solve_dense_oracle(sys), solve(sys)}) {
    CHECK(std::abs(f.phi[2] - 0.25) < 1e-12);
    CHECK(std::abs(f.phi[3] - 0.50) < 1e-12);
    CHECK(std::abs(f.phi[4] - 0.75) < 1e-12);
    CHECK(f.phi[5] == Complex(1.0));
    CHECK(f.phi[1] == Complex(0.0));
    CHECK(f.phi[0] == Complex(-1.0));
  }
}

TEST_CASE("Dirichlet values are exact and the residual meets tolerance") {
  const Toy &t = toy();
  CHECK(t.field.stats.converged);
  CHECK(t.field.stats.relative_residual <= SolveOptions{}.tol_rel);
  CHECK(t.field.stats.method == "cocg-jacobi");
  for (std::size_t n = 0; n < t.grid.size(); ++n) {
    if (t.grid.labels[n] == Label::ElectrodePos)
      CHECK(t.field.phi[n] == Complex(0.5));
    if (t.grid.labels[n] == Label::ElectrodeNeg)
      CHECK(t.field.phi[n] == Complex(-0.5));
    if (t.grid.labels[n] == Label::GroundPlane)
      CHECK(t.field.phi[n] == Complex(0.0));
  }
}

TEST_CASE("zero excitation gives a zero field and zero divergence") {
  const LinearSystem sys = assemble(toy().grid, two_tissue_table(), 21e6, 0.0);
  const PotentialField f = solve(sys);
  CHECK(max_abs(f.phi) == 0.0);
  CHECK(f.stats.converged);
  const DivergenceMap d = current_divergence(f, sys);
  CHECK(max_abs(d.net_current) == 0.0);
  CHECK(d.balance_relative == 0.0);
}

TEST_CASE("iterative solve matches the direct oracle on a 16x16x32 grid") {
  const Toy &t = toy();
  REQUIRE(t.system.unknowns() <= kDenseOracleMaxUnknowns);
  const PotentialField direct = solve_dense_oracle(t.system);
  CHECK(direct.stats.method == "sparse-lu");
  const double err = max_abs_diff(t.field.phi, direct.phi) / max_abs(direct.phi);
  CHECK(err <= 1e-6);
}

TEST_CASE("direct oracle guards") {
  LinearSystem sys = toy().system;
  sys.boundary = {};
  CHECK_THROWS_AS(solve_dense_oracle(sys), Error);
  try {
    solve(sys);
    FAIL("expected SingularSystem");
  } catch (const Error &e) {
    CHECK(e.code() == ErrorCode::SingularSystem);
  }
  // Unknown count above the guard.
  VoxelGrid big = toy_scene(32, 32, 32);
  const LinearSystem large = assemble(big, two_tissue_table(), 21e6, 1.0);
  REQUIRE(large.unknowns() > kDenseOracleMaxUnknowns);
  try {
    solve_dense_oracle(large);
    FAIL("expected SystemTooLarge");
  } catch (const Error &e) {
    CHECK(e.code() == ErrorCode::SystemTooLarge);
  }
}

TEST_CASE("non-convergence returns a flagged partial field") {
  const PotentialField f = solve(toy().system, {1e-8, 3});
  CHECK_FALSE(f.stats.converged);
  CHECK(f.stats.iterations == 3);
  CHECK(f.stats.relative_residual > 1e-8);
  CHECK(f.phi.size() == toy().grid.size());
  CHECK_THROWS_AS(solve(toy().system, {1e-8, 0}), Error);
}

TEST_CASE("property: linearity in the excitation") {
  const Toy &t = toy();
  const double tol = 1e-10;
  const PotentialField base = solve(t.system, {tol, 20000});
  for (double alpha : {-1.0, 2.0, 10.0}) {
    CAPTURE(alpha);
    const LinearSystem scaled =
        assemble(t.grid, two_tissue_table(), 21e6, alpha);
    const PotentialField f = solve(scaled, {tol, 20000});
    std::vector<Complex> expected = base.phi;
    for (auto &z : expected)
      z *= alpha;
    CHECK(max_abs_diff(f.phi, expected) <= 10.0 * tol * max_abs(expected));
  }
}

TEST_CASE("property: determinism") {
  const PotentialField a = solve(toy().system);
  const PotentialField b = solve(toy().system);
  CHECK(a.phi == b.phi);
  CHECK(a.stats.iterations == b.stats.iterations);
}

TEST_CASE("conservation: electrode balance and interior divergence") {
  const Toy &t = toy();
  const DivergenceMap d = current_divergence(t.field, t.system);
  CHECK(d.balance_relative <= 1e-6);
  CHECK(d.max_interior <= 10.0 * SolveOptions{}.tol_rel * d.rhs_norm);
  CHECK(std::abs(d.total_pos) > 0.0);
  // Symmetric pair over the mirror plane: no net ground leakage.
  CHECK(std::abs(d.total_pos + d.total_neg) <= 1e-6 * std::abs(d.total_pos));
}

TEST_CASE("divergence rejects a field from another grid") {
  PotentialField f = toy().field;
  f.dims.nx += 1;
  try {
    current_divergence(f, toy().system);
    FAIL("expected MismatchedInputs");
  } catch (const Error &e) {
    CHECK(e.code() == ErrorCode::MismatchedInputs);
  }
}

TEST_CASE("property: reciprocity of transfer impedance") {
  // Two single-voxel pairs in a heterogeneous scene. A driven Dirichlet
  // voxel is the same network node as a sensed one, so V_B / I_A must equal
  // V_A / I_B.
  const int ja = 8, ka = 12, jb = 10, kb = 22;
  VoxelGrid base = toy_scene();
  for (std::size_t n = 0; n < base.size(); ++n)
    if (base.labels[n] == Label::ElectrodePos ||
        base.labels[n] == Label::ElectrodeNeg)
      base.labels[n] = base.base_labels[n];
  const TissueTable table = two_tissue_table();
  const int c = base.dims.nx / 2;
  auto transfer = [&](int jd, int kd, int js, int ks) {
    VoxelGrid g = base;
    pair_at(g, jd, kd);
    const LinearSystem sys = assemble(g, table, 21e6, 1.0);
    const PotentialField f = solve(sys, {1e-11, 20000});
    const DivergenceMap d = current_divergence(f, sys);
    const Complex v = f.phi[g.index(c, js, ks)] - f.phi[g.index(c - 1, js, ks)];
    return v / d.total_pos;
  };
  const Complex z_ba = transfer(ja, ka, jb, kb);
  const Complex z_ab = transfer(jb, kb, ja, ka);
  CHECK(std::abs(z_ba) > 0.0);
  CHECK(std::abs(z_ab - z_ba) / std::abs(z_ba) < 1e-2);
}

TEST_CASE("property: mirror symmetry and antisymmetry") {
  VoxelGrid g = toy_scene();
  const TissueTable table = two_tissue_table();
  const double tol = 1e-10;
  SUBCASE("axis normal to the mirror plane gives an odd field") {
    const LinearSystem sys = assemble(g, table, 21e6, 1.0);
    const PotentialField f = solve(sys, {tol, 20000});
    double worst = 0.0;
    for (int k = 0; k < g.dims.nz; ++k)
      for (int j = 0; j < g.dims.ny; ++j)
        for (int i = 0; i < g.dims.nx; ++i)
          worst = std::max(worst,
                           std::abs(f.phi[g.index(i, j, k)] +
                                    f.phi[g.index(mirror_i(g, i), j, k)]));
    CHECK(worst <= 10.0 * tol);
  }
  SUBCASE("axis in the mirror plane gives an even field") {
    for (std::size_t n = 0; n < g.size(); ++n)
      if (g.labels[n] == Label::ElectrodePos || g.labels[n] == Label::ElectrodeNeg)
        g.labels[n] = g.base_labels[n];
    const int c = g.dims.nx / 2;
    for (int i : {c - 1, c}) {
      put(g, i, 9, 16, Label::ElectrodePos);
      put(g, i, 6, 16, Label::ElectrodeNeg);
    }
    const LinearSystem sys = assemble(g, table, 21e6, 1.0);
    const PotentialField f = solve(sys, {tol, 20000});
    double worst = 0.0;
    for (int k = 0; k < g.dims.nz; ++k)
      for (int j = 0; j < g.dims.ny; ++j)
        for (int i = 0; i < g.dims.nx; ++i)
          worst = std::max(worst,
                           std::abs(f.phi[g.index(i, j, k)] -
                                    f.phi[g.index(mirror_i(g, i), j, k)]));
    CHECK(worst <= 10.0 * tol);
    CHECK(max_abs(f.phi) > 0.1);
  }
}

TEST_CASE("solve call counter") {
  const auto before = solve_call_count();
  solve(toy().system);
  CHECK(solve_call_count() == before + 1);
}

TEST_CASE("field dump") {
  TempDir dir("field");
  write_field(toy().field, toy().grid, dir.str("f.bin"));
  const std::string bytes = slurp(dir.path() / "f.bin");
  const auto nl = bytes.find('\n');
  REQUIRE(nl != std::string::npos);
  CHECK(bytes.rfind("eqshbc-field 1 16 16 32", 0) == 0);
  CHECK(bytes.size() - nl - 1 == toy().grid.size() * sizeof(Complex));
}

TEST_CASE("homogeneous dipole matches the closed form") {
  const DipoleCheck c = dipole_oracle_check();
  CHECK(c.points > 1000);
  CHECK(c.max_error < 0.05);
}
