#include "eqshbc/measure.hpp"

#include "eqshbc/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

namespace eqshbc {

namespace {

std::string trim(const std::string &s) {
  const auto b = s.find_first_not_of(" \t\r");
  const auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

[[noreturn]] void parse_fail(const std::string &source, std::size_t line,
                             const std::string &what) {
  throw Error(ErrorCode::ParseError,
              source + ":" + std::to_string(line) + ": " + what);
}

// Centimetre value whose conversion back to metres reproduces x_m exactly,
// when one with at most nine decimals exists.
double to_cm(double x_m) {
  const double direct = x_m * 100.0;
  const double rounded = std::round(direct * 1e9) / 1e9;
  return rounded / 100.0 == x_m ? rounded : direct;
}

// Axis index whose cell contains x, or nullopt beyond half a spacing past
// either end.
std::optional<std::size_t> align(const std::vector<double> &axis, double x) {
  if (axis.size() == 1)
    return std::abs(axis[0] - x) <= 1e-9 ? std::optional<std::size_t>(0)
                                          : std::nullopt;
  const double lo = axis.front() - 0.5 * (axis[1] - axis[0]);
  const double hi =
      axis.back() + 0.5 * (axis.back() - axis[axis.size() - 2]);
  if (x < lo - 1e-12 || x > hi + 1e-12)
    return std::nullopt;
  std::size_t best = 0;
  for (std::size_t i = 1; i < axis.size(); ++i)
    if (std::abs(axis[i] - x) < std::abs(axis[best] - x))
      best = i;
  return best;
}

const PathLossGrid *find_mode(const std::vector<PathLossGrid> &grids,
                              RxMode mode) {
  for (const auto &g : grids)
    if (g.mode == mode)
      return &g;
  return nullptr;
}

std::optional<double> sim_value_at(const PathLossGrid &sim, double x,
                                   double y) {
  const auto i = align(sim.x_m, x);
  const auto j = align(sim.y_m, y);
  if (!i || !j)
    return std::nullopt;
  const double v = sim.at(*i, *j);
  if (!std::isfinite(v))
    return std::nullopt;
  return v;
}

Winner winner_of(double cap, double galv, double eps) {
  const double d = galv - cap;
  if (std::abs(d) < eps)
    return Winner::Tie;
  return d > 0.0 ? Winner::Galvanic : Winner::Capacitive;
}

// Null along the column nearest x = 0, positions are y.
std::optional<double> column_null(const PathLossGrid &g) {
  std::size_t i0 = 0;
  for (std::size_t i = 1; i < g.nx(); ++i)
    if (std::abs(g.x_m[i]) < std::abs(g.x_m[i0]))
      i0 = i;
  std::vector<double> pl;
  for (std::size_t j = 0; j < g.ny(); ++j)
    pl.push_back(g.at(i0, j));
  const NullReport r = find_null(g.y_m, pl);
  if (!r.found)
    return std::nullopt;
  return r.position_m;
}

} // namespace

void Calibration::validate() const {
  if (!(std::isfinite(attenuator_db) && attenuator_db >= 0.0))
    throw Error(ErrorCode::InvalidSpec, "attenuator_db must be finite and >= 0");
  if (!std::isfinite(buffer_gain_db))
    throw Error(ErrorCode::InvalidSpec, "buffer_gain_db must be finite");
  if (!std::isfinite(cable_loss_db))
    throw Error(ErrorCode::InvalidSpec, "cable_loss_db must be finite");
  if (tx_power_dbm && !std::isfinite(*tx_power_dbm))
    throw Error(ErrorCode::InvalidSpec, "tx_power_dbm must be finite");
}

MeasuredGrid parse_measured(std::istream &in, const std::string &source) {
  MeasuredGrid grid;
  std::set<std::pair<double, double>> seen;
  std::string line;
  std::size_t lineno = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r')
      line.pop_back();
    if (line.rfind("#meta ", 0) == 0) {
      if (header)
        parse_fail(source, lineno, "#meta lines must precede the header");
      const std::string kv = line.substr(6);
      const auto eq = kv.find('=');
      if (eq == std::string::npos)
        parse_fail(source, lineno, "expected '#meta key=value'");
      const std::string key = trim(kv.substr(0, eq));
      const std::string value = trim(kv.substr(eq + 1));
      if (key.empty())
        parse_fail(source, lineno, "empty #meta key");
      grid.meta[key] = value;
      if (key == "mode") {
        grid.mode = parse_rx_mode(value);
        if (!grid.mode)
          parse_fail(source, lineno, "unknown mode '" + value + "'");
      } else if (key == "frequency_hz" || key == "tx_power_dbm") {
        const auto v = parse_double(value);
        if (!v || !std::isfinite(*v))
          parse_fail(source, lineno, "non-numeric " + key);
        (key == "frequency_hz" ? grid.frequency_hz : grid.tx_power_dbm) = *v;
      }
      continue;
    }
    if (trim(line).empty() || line[0] == '#')
      continue;
    if (!header) {
      if (trim(line) != "x_cm,y_cm,p_rx_dbm")
        parse_fail(source, lineno, "expected header 'x_cm,y_cm,p_rx_dbm'");
      header = true;
      continue;
    }
    std::istringstream row(line);
    std::vector<std::string> cells;
    std::string cell;
    while (std::getline(row, cell, ','))
      cells.push_back(trim(cell));
    if (cells.size() != 3)
      parse_fail(source, lineno, "expected 3 columns");
    const auto x = parse_double(cells[0]), y = parse_double(cells[1]),
               p = parse_double(cells[2]);
    if (!x || !y || !p || !std::isfinite(*x) || !std::isfinite(*y))
      parse_fail(source, lineno, "bad numeric field");
    if (!seen.insert({*x, *y}).second)
      throw Error(ErrorCode::DuplicateCoordinate,
                  source + ":" + std::to_string(lineno) + ": duplicate (" +
                      cells[0] + "," + cells[1] + ")");
    grid.rows.push_back({*x, *y, *p});
  }
  if (!header)
    parse_fail(source, lineno, "missing header 'x_cm,y_cm,p_rx_dbm'");
  return grid;
}

MeasuredGrid parse_measured_file(const std::string &path) {
  std::ifstream in(path);
  if (!in)
    throw Error(ErrorCode::IoError, "cannot open " + path);
  return parse_measured(in, path);
}

PathLossGrid ingest_grid(const MeasuredGrid &grid, const Calibration &cal,
                         const IngestOptions &options) {
  cal.validate();
  const std::optional<double> tx =
      cal.tx_power_dbm ? cal.tx_power_dbm : grid.tx_power_dbm;
  if (!tx)
    throw Error(ErrorCode::MissingTxPower,
                "tx_power_dbm is required (flag or #meta header)");
  const std::optional<RxMode> mode = options.mode ? options.mode : grid.mode;
  if (!mode)
    throw Error(ErrorCode::ParseError,
                "mode is required (flag or #meta header)");
  std::set<double> xs, ys;
  for (const auto &r : grid.rows) {
    xs.insert(r.x_cm / 100.0);
    ys.insert(r.y_cm / 100.0);
  }
  PathLossGrid out;
  out.x_m.assign(xs.begin(), xs.end());
  out.y_m.assign(ys.begin(), ys.end());
  out.mode = *mode;
  out.provenance = Provenance::Measured;
  out.tx_power_dbm = *tx;
  if (grid.frequency_hz)
    out.frequency_hz = *grid.frequency_hz;
  out.path_loss_db.assign(out.nx() * out.ny(), kMissing);
  for (const auto &r : grid.rows) {
    const auto i = static_cast<std::size_t>(
        std::lower_bound(out.x_m.begin(), out.x_m.end(), r.x_cm / 100.0) -
        out.x_m.begin());
    const auto j = static_cast<std::size_t>(
        std::lower_bound(out.y_m.begin(), out.y_m.end(), r.y_cm / 100.0) -
        out.y_m.begin());
    out.at(i, j) = (r.p_rx_dbm + cal.attenuator_db - cal.buffer_gain_db +
                    cal.cable_loss_db) -
                   *tx;
  }
  return out;
}

void write_measured(std::ostream &out, const PathLossGrid &grid,
                    const Calibration &cal) {
  cal.validate();
  if (!cal.tx_power_dbm)
    throw Error(ErrorCode::MissingTxPower, "tx_power_dbm is required");
  out << "#meta mode=" << to_string(grid.mode) << '\n';
  if (std::isfinite(grid.frequency_hz))
    out << "#meta frequency_hz=" << format_double(grid.frequency_hz) << '\n';
  out << "#meta tx_power_dbm=" << format_double(*cal.tx_power_dbm) << '\n';
  out << "x_cm,y_cm,p_rx_dbm\n";
  for (std::size_t j = 0; j < grid.ny(); ++j)
    for (std::size_t i = 0; i < grid.nx(); ++i) {
      const double pl = grid.at(i, j);
      if (!std::isfinite(pl))
        continue;
      const double p = pl + *cal.tx_power_dbm - cal.attenuator_db +
                       cal.buffer_gain_db - cal.cable_loss_db;
      out << format_double(to_cm(grid.x_m[i])) << ','
          << format_double(to_cm(grid.y_m[j])) << ',' << format_double(p)
          << '\n';
    }
}

ComparisonReport compare(const std::vector<PathLossGrid> &sim,
                         const std::vector<PathLossGrid> &meas,
                         double tie_eps_db) {
  ComparisonReport report;
  std::size_t meas_total = 0;
  double sum = 0.0, sum_sq = 0.0;
  for (const auto &m : meas) {
    const PathLossGrid *s = find_mode(sim, m.mode);
    ModeComparison mc;
    mc.mode = m.mode;
    double msum = 0.0, msq = 0.0;
    for (std::size_t j = 0; j < m.ny(); ++j)
      for (std::size_t i = 0; i < m.nx(); ++i) {
        const double mv = m.at(i, j);
        if (!std::isfinite(mv))
          continue;
        ++mc.meas_cells;
        if (!s)
          continue;
        const auto sv = sim_value_at(*s, m.x_m[i], m.y_m[j]);
        if (!sv)
          continue;
        ++mc.matched;
        const double d = mv - *sv;
        msum += d;
        msq += d * d;
      }
    meas_total += mc.meas_cells;
    if (mc.meas_cells > 0)
      mc.coverage_pct = 100.0 * static_cast<double>(mc.matched) /
                        static_cast<double>(mc.meas_cells);
    if (mc.matched > 0) {
      mc.bias_db = msum / static_cast<double>(mc.matched);
      mc.rmse_db = std::sqrt(msq / static_cast<double>(mc.matched));
    }
    report.matched += mc.matched;
    sum += msum;
    sum_sq += msq;
    report.modes.push_back(mc);
  }
  if (report.matched == 0)
    throw Error(ErrorCode::NoOverlap,
                "no measured cell aligns with a simulated cell");
  report.coverage_pct = 100.0 * static_cast<double>(report.matched) /
                        static_cast<double>(meas_total);
  report.bias_db = sum / static_cast<double>(report.matched);
  report.rmse_db = std::sqrt(sum_sq / static_cast<double>(report.matched));

  const PathLossGrid *sc = find_mode(sim, RxMode::Capacitive);
  const PathLossGrid *sg = find_mode(sim, RxMode::Galvanic);
  const PathLossGrid *mc = find_mode(meas, RxMode::Capacitive);
  const PathLossGrid *mg = find_mode(meas, RxMode::Galvanic);
  if (sc && sg && mc && mg) {
    std::size_t agree = 0, total = 0;
    for (std::size_t j = 0; j < mc->ny(); ++j)
      for (std::size_t i = 0; i < mc->nx(); ++i) {
        const double x = mc->x_m[i], y = mc->y_m[j];
        const auto gi = align(mg->x_m, x);
        const auto gj = align(mg->y_m, y);
        if (!gi || !gj)
          continue;
        const double m_cap = mc->at(i, j), m_galv = mg->at(*gi, *gj);
        const auto s_cap = sim_value_at(*sc, x, y);
        const auto s_galv = sim_value_at(*sg, x, y);
        if (!std::isfinite(m_cap) || !std::isfinite(m_galv) || !s_cap ||
            !s_galv)
          continue;
        ++total;
        if (winner_of(m_cap, m_galv, tie_eps_db) ==
            winner_of(*s_cap, *s_galv, tie_eps_db))
          ++agree;
      }
    if (total > 0)
      report.winner_agreement_pct =
          100.0 * static_cast<double>(agree) / static_cast<double>(total);
  }
  if (sc && mc) {
    try {
      report.floor_delta_db =
          saturation_floor(*mc).median_db - saturation_floor(*sc).median_db;
    } catch (const Error &e) {
      if (e.code() != ErrorCode::TooFewPoints)
        throw;
    }
  }
  if (sg && mg) {
    const auto ns = column_null(*sg), nm = column_null(*mg);
    if (ns && nm)
      report.null_location_delta_m = *nm - *ns;
  }
  return report;
}

} // namespace eqshbc
