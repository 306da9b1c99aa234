#include "eqshbc/config.hpp"

#include "eqshbc/error.hpp"

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace eqshbc {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

[[noreturn]] void fail(const std::string &key, const std::string &what) {
  throw Error(ErrorCode::ConfigError, key + ": " + what);
}

// One JSON object; every key read is recorded and finish() rejects the rest.
class Section {
public:
  Section(const json &j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object())
      fail(path_.empty() ? "<root>" : path_, "expected an object");
  }

  std::string key(const std::string &k) const {
    return path_.empty() ? k : path_ + "." + k;
  }

  bool has(const std::string &k) const { return j_.contains(k); }

  const json *get(const std::string &k) {
    seen_.insert(k);
    auto it = j_.find(k);
    return it == j_.end() ? nullptr : &*it;
  }

  void number(const std::string &k, double &out) {
    if (const json *v = get(k)) {
      if (!v->is_number())
        fail(key(k), "expected a number");
      out = v->get<double>();
      if (!std::isfinite(out))
        fail(key(k), "must be finite");
    }
  }

  void integer(const std::string &k, int &out) {
    if (const json *v = get(k)) {
      if (!v->is_number_integer())
        fail(key(k), "expected an integer");
      const auto value = v->get<long long>();
      if (value < 1 || value > 100'000'000)
        fail(key(k), "out of range");
      out = static_cast<int>(value);
    }
  }

  void string(const std::string &k, std::string &out) {
    if (const json *v = get(k)) {
      if (!v->is_string())
        fail(key(k), "expected a string");
      out = v->get<std::string>();
    }
  }

  void vec3(const std::string &k, Point3 &out) {
    if (const json *v = get(k)) {
      if (!v->is_array() || v->size() != 3)
        fail(key(k), "expected an array of 3 numbers");
      for (int i = 0; i < 3; ++i) {
        if (!(*v)[i].is_number())
          fail(key(k), "expected an array of 3 numbers");
        out[i] = (*v)[i].get<double>();
      }
    }
  }

  std::vector<std::string> strings(const std::string &k) {
    std::vector<std::string> out;
    if (const json *v = get(k)) {
      if (!v->is_array())
        fail(key(k), "expected an array of strings");
      for (const auto &e : *v) {
        if (!e.is_string())
          fail(key(k), "expected an array of strings");
        out.push_back(e.get<std::string>());
      }
    }
    return out;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key()))
        fail(key(it.key()), "unknown key");
  }

private:
  const json &j_;
  std::string path_;
  std::set<std::string> seen_;
};

// Re-raises InvalidSpec from a domain validator as a ConfigError.
template <class Fn> void revalidate(const std::string &section, Fn &&fn) {
  try {
    fn();
  } catch (const Error &e) {
    if (e.code() != ErrorCode::InvalidSpec)
      throw;
    fail(section, e.detail());
  }
}

void read_phantom(Section s, PhantomSpec &p) {
  s.number("torso_radius_m", p.torso_radius_m);
  s.number("torso_height_m", p.torso_height_m);
  s.number("arm_radius_m", p.arm_radius_m);
  s.number("arm_length_m", p.arm_length_m);
  s.number("arm_crossing_height_m", p.arm_crossing_height_m);
  s.number("skin_thickness_m", p.skin_thickness_m);
  s.number("air_margin_m", p.air_margin_m);
  s.number("ground_plane_z_m", p.ground_plane_z_m);
  s.number("standoff_m", p.standoff_m);
  s.finish();
  revalidate("phantom", [&] { p.validate(); });
}

void read_tx(Section s, TxSpec &tx) {
  s.vec3("center_m", tx.center);
  std::string orientation(to_string(tx.orientation));
  s.string("orientation", orientation);
  const auto o = parse_orientation(orientation);
  if (!o)
    fail(s.key("orientation"), "unknown orientation '" + orientation +
                                   "' (O1_normal, O2_lateral, O3_vertical, "
                                   "custom)");
  tx.orientation = *o;
  if (*o == Orientation::Custom) {
    if (!s.has("axis"))
      fail(s.key("axis"), "required when orientation is custom");
    s.vec3("axis", tx.dipole_axis);
    if (!(tx.dipole_axis.norm() > 0.0))
      fail(s.key("axis"), "must be nonzero");
    tx.dipole_axis.normalize();
  } else {
    if (s.has("axis"))
      fail(s.key("axis"), "only allowed with orientation custom");
    tx.dipole_axis = *preset_axis(*o);
  }
  s.number("plate_width_m", tx.plate_width_m);
  s.number("plate_height_m", tx.plate_height_m);
  s.number("plate_gap_m", tx.plate_gap_m);
  s.number("v_tx_v", tx.excitation_voltage_v);
  s.finish();
  revalidate("tx", [&] { tx.validate(); });
  if (tx.excitation_voltage_v == 0.0)
    fail(s.key("v_tx_v"), "must be nonzero");
}

void read_rx(Section s, RunConfig &cfg) {
  if (s.has("modes")) {
    cfg.modes.clear();
    for (const auto &m : s.strings("modes")) {
      const auto mode = parse_rx_mode(m);
      if (!mode)
        fail(s.key("modes"), "unknown mode '" + m + "'");
      for (RxMode prev : cfg.modes)
        if (prev == *mode)
          fail(s.key("modes"), "repeats '" + m + "'");
      cfg.modes.push_back(*mode);
    }
    if (cfg.modes.empty())
      fail(s.key("modes"), "must not be empty");
  }
  s.number("galvanic_spacing_m", cfg.rx.galvanic_spacing_m);
  s.number("c_return_f", cfg.rx.capacitive.c_return_f);
  s.number("load_r_ohm", cfg.rx.capacitive.load_r_ohm);
  s.number("load_c_f", cfg.rx.capacitive.load_c_f);
  s.finish();
  if (!(cfg.rx.galvanic_spacing_m > 0.0))
    fail(s.key("galvanic_spacing_m"), "must be > 0");
  if (!(cfg.rx.capacitive.c_return_f > 0.0))
    fail(s.key("c_return_f"), "must be > 0");
  if (!(cfg.rx.capacitive.load_r_ohm > 0.0))
    fail(s.key("load_r_ohm"), "must be > 0");
  if (!(cfg.rx.capacitive.load_c_f >= 0.0))
    fail(s.key("load_c_f"), "must be >= 0");
}

void read_sweep(Section s, RunConfig &cfg) {
  if (s.has("orientations")) {
    cfg.sweep_orientations.clear();
    for (const auto &name : s.strings("orientations")) {
      const auto o = parse_orientation(name);
      if (!o || *o == Orientation::Custom)
        fail(s.key("orientations"), "unknown preset '" + name + "'");
      cfg.sweep_orientations.push_back(*o);
    }
    if (cfg.sweep_orientations.empty())
      fail(s.key("orientations"), "must not be empty");
  }
  s.number("v_min_m", cfg.track.v_min_m);
  s.number("v_max_m", cfg.track.v_max_m);
  s.number("step_m", cfg.track.step_m);
  s.finish();
  if (!(cfg.track.step_m > 0.0))
    fail(s.key("step_m"), "must be > 0");
  if (!(cfg.track.v_max_m - cfg.track.v_min_m >= cfg.track.step_m))
    fail(s.key("v_max_m"), "track must span at least one step");
}

void read_map(Section s, SurfaceGridSpec &m) {
  s.number("u_half_m", m.u_half_m);
  s.number("v_half_m", m.v_half_m);
  s.number("step_m", m.step_m);
  s.finish();
  if (!(m.step_m > 0.0))
    fail(s.key("step_m"), "must be > 0");
  if (!(m.u_half_m >= 0.0) || !(m.v_half_m >= 0.0))
    fail(s.key("u_half_m"), "half-widths must be >= 0");
}

void read_analysis(Section s, AnalysisParams &a) {
  s.number("tie_eps_db", a.tie_eps_db);
  s.number("far_threshold_m", a.far_threshold_m);
  s.number("null_prominence_db", a.null_prominence_db);
  s.finish();
  if (!(a.tie_eps_db >= 0.0))
    fail(s.key("tie_eps_db"), "must be >= 0");
  if (!(a.far_threshold_m >= 0.0))
    fail(s.key("far_threshold_m"), "must be >= 0");
  if (!(a.null_prominence_db > 0.0))
    fail(s.key("null_prominence_db"), "must be > 0");
}

void read_solver(Section s, RunConfig &cfg) {
  s.number("resolution_m", cfg.resolution_m);
  s.number("tol_rel", cfg.solver.tol_rel);
  s.integer("max_iter", cfg.solver.max_iter);
  if (const json *v = s.get("max_voxels")) {
    if (!v->is_number_integer() || v->get<long long>() < 512)
      fail(s.key("max_voxels"), "expected an integer >= 512");
    cfg.max_voxels = v->get<std::size_t>();
  }
  s.finish();
  if (!(cfg.resolution_m >= kMinResolutionM &&
        cfg.resolution_m <= kMaxResolutionM))
    fail(s.key("resolution_m"), "must lie in [0.005, 0.2] m");
  if (!(cfg.solver.tol_rel > 0.0 && cfg.solver.tol_rel <= 1e-2))
    fail(s.key("tol_rel"), "must lie in (0, 1e-2]");
}

} // namespace

SweepSpec RunConfig::sweep_spec(const TxSpec &tx_spec) const {
  SweepSpec s;
  s.phantom = phantom;
  s.tx = tx_spec;
  s.modes = modes;
  s.frequency_hz = frequency_hz;
  s.resolution_m = resolution_m;
  s.solver = solver;
  s.voxelize.max_voxels = max_voxels;
  s.track = track;
  s.surface = map;
  s.rx = rx;
  return s;
}

RunConfig parse_config(const std::string &json_text,
                       const std::string &source_path) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error &e) {
    fail(source_path, std::string("invalid JSON: ") + e.what());
  }
  RunConfig cfg;
  cfg.source_path = source_path;
  cfg.canonical_json = root.dump();
  const fs::path base = fs::path(source_path).parent_path();
  auto resolve = [&](const std::string &p) {
    const fs::path path(p);
    return (path.is_absolute() ? path : base / path).lexically_normal().string();
  };

  Section top(root, "");
  if (const json *v = top.get("phantom"))
    read_phantom(Section(*v, "phantom"), cfg.phantom);
  if (const json *v = top.get("tissue_table")) {
    if (!v->is_string())
      fail("tissue_table", "expected a path string");
    cfg.tissue_table = resolve(v->get<std::string>());
  } else {
    fail("tissue_table", "required key is missing");
  }
  top.number("frequency_hz", cfg.frequency_hz);
  if (!(cfg.frequency_hz > 0.0))
    fail("frequency_hz", "must be > 0");
  if (const json *v = top.get("tx"))
    read_tx(Section(*v, "tx"), cfg.tx);
  if (const json *v = top.get("rx"))
    read_rx(Section(*v, "rx"), cfg);
  if (const json *v = top.get("sweep"))
    read_sweep(Section(*v, "sweep"), cfg);
  if (const json *v = top.get("map"))
    read_map(Section(*v, "map"), cfg.map);
  if (const json *v = top.get("analysis"))
    read_analysis(Section(*v, "analysis"), cfg.analysis);
  if (const json *v = top.get("solver"))
    read_solver(Section(*v, "solver"), cfg);
  std::string out = cfg.output_dir;
  top.string("output_dir", out);
  cfg.output_dir = resolve(out);
  top.finish();

  if (!fs::is_regular_file(cfg.tissue_table))
    fail("tissue_table", "file not found: " + cfg.tissue_table);
  return cfg;
}

RunConfig load_config(const std::string &path) {
  std::ifstream in(path);
  if (!in)
    fail("--config", "cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path);
}

} // namespace eqshbc
