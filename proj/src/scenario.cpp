#include "eqshbc/scenario.hpp"

#include "eqshbc/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <tuple>

namespace eqshbc {

namespace {

void require(bool ok, const char *field, const char *what) {
  if (!ok)
    throw Error(ErrorCode::InvalidSpec, std::string(field) + " " + what);
}

bool finite_positive(double v) { return std::isfinite(v) && v > 0.0; }

// Integer multiples of step inside [lo, hi]; exact zero when 0 is inside.
std::vector<double> lattice(double lo, double hi, double step) {
  const auto m0 = static_cast<long>(std::ceil(lo / step - 1e-9));
  const auto m1 = static_cast<long>(std::floor(hi / step + 1e-9));
  std::vector<double> out;
  for (long m = m0; m <= m1; ++m)
    out.push_back(step * static_cast<double>(m));
  return out;
}

double quantile(const std::vector<double> &sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

// A sample for one Rx placement; nullopt with a reason when the contacts
// cannot be placed.
struct Pickup {
  std::optional<ChannelSample> sample;
  std::string reason;
};

Pickup evaluate(const SolvedScene &scene, const SweepSpec &spec,
                const SurfaceFrame &frame, RxMode mode, double u, double v,
                const std::array<double, 2> &pair_dir) {
  Pickup out;
  const double v_tx = scene.field.v_tx;
  try {
    ChannelSample s;
    s.mode = mode;
    s.v_tx = v_tx;
    if (mode == RxMode::Galvanic) {
      const double h = 0.5 * spec.rx.galvanic_spacing_m;
      GalvanicRx rx;
      rx.contact_a = frame.point(u + h * pair_dir[0], v + h * pair_dir[1]);
      rx.contact_b = frame.point(u - h * pair_dir[0], v - h * pair_dir[1]);
      s.v_rx = galvanic_pickup(scene.field, scene.grid, rx);
      s.rx_position = 0.5 * (rx.contact_a + rx.contact_b);
    } else {
      CapacitiveRx rx = spec.rx.capacitive;
      rx.contact = frame.point(u, v);
      s.v_rx = capacitive_pickup(scene.field, scene.grid, rx,
                                 scene.frequency_hz);
      s.rx_position = rx.contact;
    }
    s.path_loss_db = path_loss(s.v_rx, v_tx);
    if (s.path_loss_db > 1e-9) {
      std::ostringstream msg;
      msg << "path loss " << s.path_loss_db << " dB > 0 at u=" << u
          << " v=" << v;
      throw Error(ErrorCode::NonPassive, msg.str());
    }
    out.sample = s;
  } catch (const Error &e) {
    if (e.code() != ErrorCode::ContactOffSurface &&
        e.code() != ErrorCode::ContactSpacing)
      throw;
    out.reason = e.what();
  }
  return out;
}

std::string read_field(std::istringstream &row) {
  std::string cell;
  std::getline(row, cell, ',');
  const auto b = cell.find_first_not_of(" \t\r");
  const auto e = cell.find_last_not_of(" \t\r");
  return b == std::string::npos ? std::string() : cell.substr(b, e - b + 1);
}

[[noreturn]] void parse_fail(const std::string &source, std::size_t line,
                             const std::string &what) {
  throw Error(ErrorCode::ParseError,
              source + ":" + std::to_string(line) + ": " + what);
}

bool same_axis(const std::vector<double> &a, const std::vector<double> &b) {
  if (a.size() != b.size())
    return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (std::abs(a[i] - b[i]) > 1e-9 * std::max(1.0, std::abs(a[i])))
      return false;
  return true;
}

std::size_t nearest_index(const std::vector<double> &axis, double x) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < axis.size(); ++i)
    if (std::abs(axis[i] - x) < std::abs(axis[best] - x))
      best = i;
  return best;
}

} // namespace

SurfaceFrame SurfaceFrame::for_tx(const PhantomSpec &phantom,
                                  const TxSpec &tx) {
  SurfaceFrame f;
  f.radius_m = phantom.torso_radius_m;
  f.azimuth_rad = std::atan2(tx.center.x(), tx.center.y());
  f.z0_m = tx.center.z();
  return f;
}

Point3 SurfaceFrame::point(double u, double v) const {
  const double theta = azimuth_rad + u / radius_m;
  return {radius_m * std::sin(theta), radius_m * std::cos(theta), z0_m + v};
}

void SweepSpec::validate() const {
  phantom.validate();
  tx.validate();
  require(!modes.empty(), "rx.modes", "must not be empty");
  for (std::size_t i = 0; i < modes.size(); ++i)
    for (std::size_t j = i + 1; j < modes.size(); ++j)
      require(modes[i] != modes[j], "rx.modes", "must not repeat a mode");
  require(finite_positive(frequency_hz), "frequency_hz", "must be > 0");
  require(finite_positive(resolution_m), "solver.resolution_m", "must be > 0");
  require(finite_positive(track.step_m), "sweep.step_m", "must be > 0");
  require(std::isfinite(track.v_min_m) && std::isfinite(track.v_max_m),
          "sweep.v_min_m", "and v_max_m must be finite");
  require(lattice(track.v_min_m, track.v_max_m, track.step_m).size() >= 2,
          "sweep", "track must hold at least 2 points");
  require(finite_positive(surface.step_m), "map.step_m", "must be > 0");
  require(std::isfinite(surface.u_half_m) && surface.u_half_m >= 0.0,
          "map.u_half_m", "must be >= 0");
  require(std::isfinite(surface.v_half_m) && surface.v_half_m >= 0.0,
          "map.v_half_m", "must be >= 0");
  require(lattice(-surface.u_half_m, surface.u_half_m, surface.step_m).size() *
                  lattice(-surface.v_half_m, surface.v_half_m,
                          surface.step_m)
                      .size() >=
              2,
          "map", "grid must hold at least 2 points");
  require(finite_positive(rx.galvanic_spacing_m), "rx.galvanic_spacing_m",
          "must be > 0");
  capacitive_divider(rx.capacitive, frequency_hz);
}

SolvedScene solve_scene(const SweepSpec &spec, const TissueTable &table) {
  spec.validate();
  Phantom phantom = build_phantom(spec.phantom);
  VoxelGrid grid = place_transmitter(
      voxelize(phantom, spec.resolution_m, spec.voxelize), spec.tx);
  const LinearSystem system =
      assemble(grid, table, spec.frequency_hz, spec.tx.excitation_voltage_v);
  PotentialField field = solve(system, spec.solver);
  DivergenceMap divergence = current_divergence(field, system);
  QsReport qs = validate_quasistatic(spec.frequency_hz,
                                     phantom.max_distance_from(spec.tx.center));
  return SolvedScene{std::move(phantom), std::move(grid), std::move(field),
                     spec.tx, spec.frequency_hz, std::move(qs),
                     std::move(divergence)};
}

std::vector<double> PathLossCurve::path_loss_db() const {
  std::vector<double> out;
  out.reserve(points.size());
  for (const auto &p : points)
    out.push_back(p.sample.path_loss_db);
  return out;
}

SweepResult run_sweep(const SweepSpec &spec, const SolvedScene &scene) {
  spec.validate();
  const SurfaceFrame frame = SurfaceFrame::for_tx(spec.phantom, scene.tx);
  const auto track =
      lattice(spec.track.v_min_m, spec.track.v_max_m, spec.track.step_m);
  SweepResult result;
  result.solver = scene.field.stats;
  for (RxMode mode : spec.modes) {
    PathLossCurve curve;
    curve.label = std::string(to_string(scene.tx.orientation));
    curve.mode = mode;
    for (double v : track) {
      Pickup p = evaluate(scene, spec, frame, mode, 0.0, v, {0.0, 1.0});
      if (!p.sample) {
        result.skipped.push_back({0.0, v, mode, p.reason});
        continue;
      }
      CurvePoint cp;
      cp.u_m = 0.0;
      cp.v_m = v;
      cp.sample = *p.sample;
      const double d = (p.sample->rx_position - scene.tx.center).norm();
      cp.signed_distance_m = v >= 0.0 ? d : -d;
      curve.points.push_back(cp);
    }
    std::stable_sort(curve.points.begin(), curve.points.end(),
                     [](const CurvePoint &a, const CurvePoint &b) {
                       return std::tie(a.signed_distance_m, a.v_m) <
                              std::tie(b.signed_distance_m, b.v_m);
                     });
    result.curves.push_back(std::move(curve));
  }
  return result;
}

std::string_view to_string(Provenance p) {
  return p == Provenance::Simulated ? "simulated" : "measured";
}

void PathLossGrid::validate() const {
  require(!x_m.empty() && !y_m.empty(), "grid", "axes must not be empty");
  require(path_loss_db.size() == x_m.size() * y_m.size(), "grid",
          "matrix size must equal nx * ny");
  require(std::is_sorted(x_m.begin(), x_m.end()) &&
              std::adjacent_find(x_m.begin(), x_m.end()) == x_m.end(),
          "grid.x_m", "must be strictly increasing");
  require(std::is_sorted(y_m.begin(), y_m.end()) &&
              std::adjacent_find(y_m.begin(), y_m.end()) == y_m.end(),
          "grid.y_m", "must be strictly increasing");
  for (double v : path_loss_db)
    require(std::isnan(v) || v <= 0.0, "grid.path_loss_db",
            "entries must be <= 0 dB or NaN");
}

SurfaceMapResult run_surface_map(const SweepSpec &spec,
                                 const SolvedScene &scene) {
  spec.validate();
  const SurfaceFrame frame = SurfaceFrame::for_tx(spec.phantom, scene.tx);
  const auto us = lattice(-spec.surface.u_half_m, spec.surface.u_half_m,
                          spec.surface.step_m);
  const auto vs = lattice(-spec.surface.v_half_m, spec.surface.v_half_m,
                          spec.surface.step_m);
  SurfaceMapResult result;
  result.solver = scene.field.stats;
  for (RxMode mode : spec.modes) {
    PathLossGrid g;
    g.x_m = us;
    g.y_m = vs;
    g.mode = mode;
    g.provenance = Provenance::Simulated;
    g.frequency_hz = scene.frequency_hz;
    g.v_tx_v = scene.field.v_tx;
    g.path_loss_db.assign(us.size() * vs.size(), kMissing);
    for (std::size_t j = 0; j < vs.size(); ++j)
      for (std::size_t i = 0; i < us.size(); ++i) {
        const double r = std::hypot(us[i], vs[j]);
        const std::array<double, 2> dir =
            r > 0.0 ? std::array<double, 2>{us[i] / r, vs[j] / r}
                    : std::array<double, 2>{0.0, 1.0};
        Pickup p = evaluate(scene, spec, frame, mode, us[i], vs[j], dir);
        if (!p.sample) {
          result.skipped.push_back({us[i], vs[j], mode, p.reason});
          continue;
        }
        g.at(i, j) = p.sample->path_loss_db;
      }
    result.grids.push_back(std::move(g));
  }
  return result;
}

std::string_view to_string(Winner w) {
  switch (w) {
  case Winner::Galvanic: return "galvanic";
  case Winner::Capacitive: return "capacitive";
  case Winner::Tie: return "tie";
  case Winner::NoData: return "nodata";
  }
  return "?";
}

std::optional<Winner> parse_winner(std::string_view s) {
  for (auto w :
       {Winner::Galvanic, Winner::Capacitive, Winner::Tie, Winner::NoData})
    if (s == to_string(w))
      return w;
  return std::nullopt;
}

ModeRegionMap crossover_contour(const PathLossGrid &cap,
                                const PathLossGrid &galv, double tie_eps_db) {
  if (!(tie_eps_db >= 0.0) || !std::isfinite(tie_eps_db))
    throw Error(ErrorCode::InvalidSpec, "tie_eps_db must be >= 0");
  cap.validate();
  galv.validate();
  if (!same_axis(cap.x_m, galv.x_m) || !same_axis(cap.y_m, galv.y_m))
    throw Error(ErrorCode::GridMismatch,
                "capacitive and galvanic grids have different axes");
  ModeRegionMap map;
  map.x_m = cap.x_m;
  map.y_m = cap.y_m;
  map.tie_eps_db = tie_eps_db;
  const std::size_t n = cap.path_loss_db.size();
  map.winner.resize(n);
  map.margin_db.resize(n);
  map.delta_db.resize(n);
  for (std::size_t c = 0; c < n; ++c) {
    const double d = galv.path_loss_db[c] - cap.path_loss_db[c];
    map.delta_db[c] = d;
    if (std::isnan(d)) {
      map.winner[c] = Winner::NoData;
      map.margin_db[c] = kMissing;
    } else if (std::abs(d) < tie_eps_db) {
      map.winner[c] = Winner::Tie;
      map.margin_db[c] = 0.0;
    } else {
      map.winner[c] = d > 0.0 ? Winner::Galvanic : Winner::Capacitive;
      map.margin_db[c] = std::abs(d);
    }
  }
  map.crossover = zero_contour(map.x_m, map.y_m, map.delta_db);
  return map;
}

std::vector<Polyline> zero_contour(const std::vector<double> &x,
                                   const std::vector<double> &y,
                                   const std::vector<double> &values) {
  const std::size_t nx = x.size(), ny = y.size();
  if (values.size() != nx * ny)
    throw Error(ErrorCode::GridMismatch, "contour field size mismatch");
  std::vector<Polyline> lines;
  if (nx < 2 || ny < 2)
    return lines;
  auto val = [&](std::size_t i, std::size_t j) { return values[j * nx + i]; };
  const std::size_t n_h = (nx - 1) * ny;
  auto h_edge = [&](std::size_t i, std::size_t j) { return j * (nx - 1) + i; };
  auto v_edge = [&](std::size_t i, std::size_t j) {
    return n_h + j * nx + i;
  };
  auto edge_point = [&](std::size_t id) -> std::array<double, 2> {
    std::size_t i0, j0, i1, j1;
    if (id < n_h) {
      j0 = j1 = id / (nx - 1);
      i0 = id % (nx - 1);
      i1 = i0 + 1;
    } else {
      const std::size_t k = id - n_h;
      j0 = k / nx;
      i0 = i1 = k % nx;
      j1 = j0 + 1;
    }
    const double a = val(i0, j0), b = val(i1, j1);
    const double t = a / (a - b);
    return {x[i0] + t * (x[i1] - x[i0]), y[j0] + t * (y[j1] - y[j0])};
  };

  std::vector<std::array<std::size_t, 2>> segs;
  for (std::size_t j = 0; j + 1 < ny; ++j)
    for (std::size_t i = 0; i + 1 < nx; ++i) {
      const double v00 = val(i, j), v10 = val(i + 1, j);
      const double v11 = val(i + 1, j + 1), v01 = val(i, j + 1);
      if (std::isnan(v00) || std::isnan(v10) || std::isnan(v11) ||
          std::isnan(v01))
        continue;
      const bool a00 = v00 > 0, a10 = v10 > 0, a11 = v11 > 0, a01 = v01 > 0;
      const std::size_t bottom = h_edge(i, j), top = h_edge(i, j + 1);
      const std::size_t left = v_edge(i, j), right = v_edge(i + 1, j);
      std::vector<std::size_t> hits;
      if (a00 != a10) hits.push_back(bottom);
      if (a10 != a11) hits.push_back(right);
      if (a11 != a01) hits.push_back(top);
      if (a01 != a00) hits.push_back(left);
      if (hits.size() == 2) {
        segs.push_back({hits[0], hits[1]});
      } else if (hits.size() == 4) {
        const bool centre = (v00 + v10 + v11 + v01) > 0;
        if (centre == a00) {
          segs.push_back({bottom, right});
          segs.push_back({top, left});
        } else {
          segs.push_back({left, bottom});
          segs.push_back({right, top});
        }
      }
    }

  std::map<std::size_t, std::vector<std::size_t>> by_edge;
  for (std::size_t s = 0; s < segs.size(); ++s)
    for (std::size_t e : segs[s])
      by_edge[e].push_back(s);
  std::vector<bool> used(segs.size(), false);

  auto walk = [&](std::size_t s, std::size_t start_edge) {
    std::vector<std::size_t> edges{start_edge};
    std::size_t cur = s;
    std::size_t at = start_edge;
    while (true) {
      used[cur] = true;
      const std::size_t next_edge = segs[cur][0] == at ? segs[cur][1]
                                                       : segs[cur][0];
      edges.push_back(next_edge);
      std::optional<std::size_t> next;
      for (std::size_t cand : by_edge[next_edge])
        if (!used[cand])
          next = cand;
      if (!next)
        break;
      cur = *next;
      at = next_edge;
    }
    Polyline line;
    for (std::size_t e : edges)
      line.push_back(edge_point(e));
    lines.push_back(std::move(line));
  };

  for (std::size_t s = 0; s < segs.size(); ++s) {
    if (used[s])
      continue;
    for (std::size_t e : segs[s])
      if (by_edge[e].size() == 1) {
        walk(s, e);
        break;
      }
  }
  for (std::size_t s = 0; s < segs.size(); ++s)
    if (!used[s])
      walk(s, segs[s][0]);
  return lines;
}

Recommendation recommend_mode(const ModeRegionMap &map, double x_m,
                              double y_m) {
  if (map.x_m.empty() || map.y_m.empty())
    throw Error(ErrorCode::OutOfBounds, "empty region map");
  const double tol = 1e-9;
  if (!(x_m >= map.x_m.front() - tol && x_m <= map.x_m.back() + tol &&
        y_m >= map.y_m.front() - tol && y_m <= map.y_m.back() + tol)) {
    std::ostringstream msg;
    msg << "position (" << x_m << ", " << y_m << ") outside the grid hull";
    throw Error(ErrorCode::OutOfBounds, msg.str());
  }
  const std::size_t i = nearest_index(map.x_m, x_m);
  const std::size_t j = nearest_index(map.y_m, y_m);
  const std::size_t c = j * map.nx() + i;
  Recommendation r;
  r.cell_x_m = map.x_m[i];
  r.cell_y_m = map.y_m[j];
  switch (map.winner[c]) {
  case Winner::Galvanic:
    r.mode = RxMode::Galvanic;
    r.margin_db = map.margin_db[c];
    break;
  case Winner::Capacitive:
    r.mode = RxMode::Capacitive;
    r.margin_db = map.margin_db[c];
    break;
  case Winner::Tie:
    r.mode = RxMode::Capacitive;
    r.margin_db = 0.0;
    r.tie = true;
    break;
  case Winner::NoData:
    throw Error(ErrorCode::OutOfBounds, "no data at the nearest cell");
  }
  return r;
}

RegionSummary summarize(const ModeRegionMap &map) {
  RegionSummary s;
  for (std::size_t c = 0; c < map.winner.size(); ++c) {
    switch (map.winner[c]) {
    case Winner::Galvanic:
      ++s.galvanic_cells;
      s.max_capacitive_penalty_db =
          std::max(s.max_capacitive_penalty_db, map.margin_db[c]);
      break;
    case Winner::Capacitive:
      ++s.capacitive_cells;
      s.max_galvanic_penalty_db =
          std::max(s.max_galvanic_penalty_db, map.margin_db[c]);
      break;
    case Winner::Tie: ++s.tie_cells; break;
    case Winner::NoData: break;
    }
  }
  return s;
}

FloorReport saturation_floor(const PathLossGrid &grid,
                             double far_threshold_m) {
  grid.validate();
  std::vector<double> far;
  for (std::size_t j = 0; j < grid.ny(); ++j)
    for (std::size_t i = 0; i < grid.nx(); ++i) {
      const double v = grid.at(i, j);
      if (std::isfinite(v) &&
          std::hypot(grid.x_m[i], grid.y_m[j]) > far_threshold_m)
        far.push_back(v);
    }
  if (far.size() < 5)
    throw Error(ErrorCode::TooFewPoints,
                "far region holds " + std::to_string(far.size()) +
                    " finite cells, need >= 5");
  std::sort(far.begin(), far.end());
  FloorReport r;
  r.points = far.size();
  r.median_db = quantile(far, 0.5);
  r.iqr_db = quantile(far, 0.75) - quantile(far, 0.25);
  r.saturated = r.iqr_db <= kSaturationIqrDb;
  return r;
}

NullReport find_null(const std::vector<double> &positions,
                     const std::vector<double> &path_loss_db,
                     double min_prominence_db) {
  NullReport best;
  if (positions.size() != path_loss_db.size())
    return best;
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < path_loss_db.size(); ++i)
    if (std::isfinite(path_loss_db[i]))
      keep.push_back(i);
  const std::size_t n = keep.size();
  if (n < 5)
    return best;
  auto pl = [&](std::size_t k) { return path_loss_db[keep[k]]; };
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (!(pl(i) < pl(i - 1)))
      continue;
    std::size_t e = i;
    while (e + 1 < n && pl(e + 1) == pl(i))
      ++e;
    if (e + 1 >= n || !(pl(e + 1) > pl(i)))
      continue;
    double left = pl(i - 1);
    for (std::size_t k = i; k-- > 0;) {
      if (pl(k) < pl(i))
        break;
      left = std::max(left, pl(k));
    }
    double right = pl(e + 1);
    for (std::size_t k = e + 1; k < n; ++k) {
      if (pl(k) < pl(i))
        break;
      right = std::max(right, pl(k));
    }
    const double prom = std::min(left, right) - pl(i);
    if (prom < min_prominence_db)
      continue;
    if (!best.found || pl(i) < best.path_loss_db ||
        (pl(i) == best.path_loss_db && prom > best.prominence_db)) {
      best.found = true;
      best.index = keep[i];
      best.position_m = positions[keep[i]];
      best.path_loss_db = pl(i);
      best.prominence_db = prom;
    }
  }
  return best;
}

NullReport find_null(const PathLossCurve &curve, double min_prominence_db) {
  std::vector<double> pos;
  for (const auto &p : curve.points)
    pos.push_back(p.signed_distance_m);
  return find_null(pos, curve.path_loss_db(), min_prominence_db);
}

std::optional<double> parse_double(const std::string &s) {
  if (s == "NaN" || s == "nan" || s == "NAN")
    return kMissing;
  double v = 0.0;
  const auto *end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end)
    return std::nullopt;
  return v;
}

std::string format_double(double v) {
  if (std::isnan(v))
    return "NaN";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, ptr);
}

void write_grids_csv(std::ostream &out,
                     const std::vector<PathLossGrid> &grids) {
  if (!grids.empty()) {
    const auto &g = grids.front();
    out << "#meta provenance=" << to_string(g.provenance) << '\n';
    if (std::isfinite(g.frequency_hz))
      out << "#meta frequency_hz=" << format_double(g.frequency_hz) << '\n';
    if (std::isfinite(g.v_tx_v))
      out << "#meta v_tx_v=" << format_double(g.v_tx_v) << '\n';
    if (std::isfinite(g.tx_power_dbm))
      out << "#meta tx_power_dbm=" << format_double(g.tx_power_dbm) << '\n';
  }
  out << "x_m,y_m,mode,path_loss_db\n";
  for (const auto &g : grids)
    for (std::size_t j = 0; j < g.ny(); ++j)
      for (std::size_t i = 0; i < g.nx(); ++i)
        out << format_double(g.x_m[i]) << ',' << format_double(g.y_m[j]) << ','
            << to_string(g.mode) << ',' << format_double(g.at(i, j)) << '\n';
}

std::vector<PathLossGrid> read_grids_csv(std::istream &in,
                                         const std::string &source) {
  struct Cell {
    double x, y, v;
  };
  std::map<RxMode, std::vector<Cell>> cells;
  std::vector<RxMode> order;
  std::map<std::string, double> meta;
  Provenance prov = Provenance::Simulated;
  std::set<std::tuple<int, double, double>> seen;
  std::string line;
  std::size_t lineno = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r')
      line.pop_back();
    if (line.rfind("#meta ", 0) == 0) {
      const auto kv = line.substr(6);
      const auto eq = kv.find('=');
      if (eq == std::string::npos)
        parse_fail(source, lineno, "malformed #meta line");
      const std::string key = kv.substr(0, eq), value = kv.substr(eq + 1);
      if (key == "provenance") {
        if (value == "simulated")
          prov = Provenance::Simulated;
        else if (value == "measured")
          prov = Provenance::Measured;
        else
          parse_fail(source, lineno, "unknown provenance '" + value + "'");
      } else {
        auto num = parse_double(value);
        if (!num)
          parse_fail(source, lineno, "non-numeric #meta " + key);
        meta[key] = *num;
      }
      continue;
    }
    if (line.empty() || line[0] == '#')
      continue;
    if (!header) {
      if (line != "x_m,y_m,mode,path_loss_db")
        parse_fail(source, lineno,
                   "expected header 'x_m,y_m,mode,path_loss_db'");
      header = true;
      continue;
    }
    std::istringstream row(line);
    const auto xs = read_field(row), ys = read_field(row);
    const auto ms = read_field(row), vs = read_field(row);
    std::string extra;
    if (std::getline(row, extra))
      parse_fail(source, lineno, "too many columns");
    const auto x = parse_double(xs), y = parse_double(ys),
               v = parse_double(vs);
    const auto mode = parse_rx_mode(ms);
    if (!x || !y || !v || !std::isfinite(*x) || !std::isfinite(*y))
      parse_fail(source, lineno, "bad numeric field");
    if (!mode)
      parse_fail(source, lineno, "unknown mode '" + ms + "'");
    if (!seen.insert({static_cast<int>(*mode), *x, *y}).second)
      throw Error(ErrorCode::DuplicateCoordinate,
                  source + ":" + std::to_string(lineno) + ": duplicate (" +
                      xs + ", " + ys + ") for mode " + ms);
    if (!cells.count(*mode))
      order.push_back(*mode);
    cells[*mode].push_back({*x, *y, *v});
  }
  if (!header)
    parse_fail(source, lineno, "missing header");
  std::vector<PathLossGrid> grids;
  for (RxMode mode : order) {
    const auto &cs = cells[mode];
    std::set<double> xs, ys;
    for (const auto &c : cs) {
      xs.insert(c.x);
      ys.insert(c.y);
    }
    PathLossGrid g;
    g.x_m.assign(xs.begin(), xs.end());
    g.y_m.assign(ys.begin(), ys.end());
    g.mode = mode;
    g.provenance = prov;
    if (meta.count("frequency_hz"))
      g.frequency_hz = meta["frequency_hz"];
    if (meta.count("v_tx_v"))
      g.v_tx_v = meta["v_tx_v"];
    if (meta.count("tx_power_dbm"))
      g.tx_power_dbm = meta["tx_power_dbm"];
    g.path_loss_db.assign(g.nx() * g.ny(), kMissing);
    for (const auto &c : cs) {
      const auto i = static_cast<std::size_t>(
          std::lower_bound(g.x_m.begin(), g.x_m.end(), c.x) - g.x_m.begin());
      const auto j = static_cast<std::size_t>(
          std::lower_bound(g.y_m.begin(), g.y_m.end(), c.y) - g.y_m.begin());
      g.at(i, j) = c.v;
    }
    try {
      g.validate();
    } catch (const Error &e) {
      throw Error(ErrorCode::ParseError, source + ": " + e.what());
    }
    grids.push_back(std::move(g));
  }
  return grids;
}

void write_curve_csv(std::ostream &out,
                     const std::vector<PathLossCurve> &curves) {
  out << "x_m,y_m,mode,path_loss_db,signed_distance_m\n";
  for (const auto &c : curves)
    for (const auto &p : c.points)
      out << format_double(p.u_m) << ',' << format_double(p.v_m) << ','
          << to_string(c.mode) << ',' << format_double(p.sample.path_loss_db)
          << ',' << format_double(p.signed_distance_m) << '\n';
}

void write_regions_csv(std::ostream &out, const ModeRegionMap &map) {
  out << "#meta tie_eps_db=" << format_double(map.tie_eps_db) << '\n';
  out << "x_m,y_m,winner,margin_db\n";
  for (std::size_t j = 0; j < map.ny(); ++j)
    for (std::size_t i = 0; i < map.nx(); ++i) {
      const std::size_t c = j * map.nx() + i;
      out << format_double(map.x_m[i]) << ',' << format_double(map.y_m[j])
          << ',' << to_string(map.winner[c]) << ','
          << format_double(map.margin_db[c]) << '\n';
    }
}

ModeRegionMap read_regions_csv(std::istream &in, const std::string &source) {
  struct Cell {
    double x, y, m;
    Winner w;
  };
  std::vector<Cell> cells;
  std::set<std::pair<double, double>> seen;
  ModeRegionMap map;
  std::string line;
  std::size_t lineno = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r')
      line.pop_back();
    if (line.rfind("#meta tie_eps_db=", 0) == 0) {
      auto v = parse_double(line.substr(17));
      if (!v)
        parse_fail(source, lineno, "bad tie_eps_db");
      map.tie_eps_db = *v;
      continue;
    }
    if (line.empty() || line[0] == '#')
      continue;
    if (!header) {
      if (line != "x_m,y_m,winner,margin_db")
        parse_fail(source, lineno, "expected header 'x_m,y_m,winner,margin_db'");
      header = true;
      continue;
    }
    std::istringstream row(line);
    const auto xs = read_field(row), ys = read_field(row);
    const auto ws = read_field(row), ms = read_field(row);
    const auto x = parse_double(xs), y = parse_double(ys),
               m = parse_double(ms);
    const auto w = parse_winner(ws);
    if (!x || !y || !m || !w)
      parse_fail(source, lineno, "bad region row");
    if (!seen.insert({*x, *y}).second)
      throw Error(ErrorCode::DuplicateCoordinate,
                  source + ":" + std::to_string(lineno) + ": duplicate (" +
                      xs + ", " + ys + ")");
    cells.push_back({*x, *y, *m, *w});
  }
  if (!header)
    parse_fail(source, lineno, "missing header");
  std::set<double> xs, ys;
  for (const auto &c : cells) {
    xs.insert(c.x);
    ys.insert(c.y);
  }
  map.x_m.assign(xs.begin(), xs.end());
  map.y_m.assign(ys.begin(), ys.end());
  map.winner.assign(map.nx() * map.ny(), Winner::NoData);
  map.margin_db.assign(map.nx() * map.ny(), kMissing);
  map.delta_db.assign(map.nx() * map.ny(), kMissing);
  for (const auto &c : cells) {
    const auto i = static_cast<std::size_t>(
        std::lower_bound(map.x_m.begin(), map.x_m.end(), c.x) -
        map.x_m.begin());
    const auto j = static_cast<std::size_t>(
        std::lower_bound(map.y_m.begin(), map.y_m.end(), c.y) -
        map.y_m.begin());
    const std::size_t k = j * map.nx() + i;
    map.winner[k] = c.w;
    map.margin_db[k] = c.m;
    if (c.w == Winner::Galvanic)
      map.delta_db[k] = c.m;
    else if (c.w == Winner::Capacitive)
      map.delta_db[k] = -c.m;
    else if (c.w == Winner::Tie)
      map.delta_db[k] = 0.0;
  }
  return map;
}

void write_contour_csv(std::ostream &out, const ModeRegionMap &map) {
  out << "polyline,vertex,x_m,y_m\n";
  for (std::size_t p = 0; p < map.crossover.size(); ++p)
    for (std::size_t v = 0; v < map.crossover[p].size(); ++v)
      out << p << ',' << v << ',' << format_double(map.crossover[p][v][0])
          << ',' << format_double(map.crossover[p][v][1]) << '\n';
}

} // namespace eqshbc
