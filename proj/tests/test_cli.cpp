#include "eqshbc/cli.hpp"

#include "support.hpp"

#include <doctest.h>
#include <json.hpp>

using namespace eqshbc;
using namespace eqshbc::testing;
using nlohmann::json;

namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "eqshbc");
  std::vector<const char *> argv;
  for (const auto &a : args)
    argv.push_back(a.c_str());
  std::ostringstream out, err;
  Run r;
  r.code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

// Coarse single-orientation scene; a few seconds per solve.
json small_config(const TempDir &dir) {
  return {
      {"tissue_table", source_path("data/tissues.csv")},
      {"frequency_hz", 21e6},
      {"tx",
       {{"center_m", {0.0, 0.08, 0.8}},
        {"orientation", "O3_vertical"},
        {"plate_width_m", 0.08},
        {"plate_height_m", 0.08},
        {"plate_gap_m", 0.16}}},
      {"rx", {{"galvanic_spacing_m", 0.16}}},
      {"sweep",
       {{"orientations", {"O3_vertical"}},
        {"v_min_m", -0.48},
        {"v_max_m", 0.48},
        {"step_m", 0.08}}},
      {"map", {{"u_half_m", 0.16}, {"v_half_m", 0.24}, {"step_m", 0.08}}},
      {"solver", {{"resolution_m", 0.08}}},
      {"output_dir", dir.str("out")}};
}

std::string write_config(const TempDir &dir, const json &cfg,
                         const std::string &name = "run.json") {
  const std::string path = dir.str(name);
  std::ofstream(path) << cfg.dump(2);
  return path;
}

json manifest(const std::filesystem::path &dir, const std::string &command) {
  return json::parse(slurp(dir / ("manifest_" + command + ".json")));
}

std::string fixture(const std::string &name) {
  return source_path("fixtures/" + name);
}

} // namespace

TEST_CASE("cli: help, version and argument errors") {
  CHECK(run({"--help"}).code == 0);
  CHECK(run({"simulate", "--help"}).code == 0);
  const Run v = run({"--version"});
  CHECK(v.code == 0);
  CHECK(v.out.find(std::string(kVersion)) != std::string::npos);
  CHECK(run({}).code == kExitConfig);
  CHECK(run({"simulate", "--bogus"}).code == kExitConfig);
  CHECK(run({"frobnicate"}).code == kExitConfig);
  CHECK(run({"recommend"}).code == kExitConfig);
  const Run no_cfg = run({"simulate"});
  CHECK(no_cfg.code == kExitConfig);
  CHECK(no_cfg.err.find("--config: required by 'simulate'") !=
        std::string::npos);
}

TEST_CASE("cli: non-quasistatic frequency is refused without a manifest") {
  TempDir dir("cli_qs");
  json cfg = small_config(dir);
  cfg["frequency_hz"] = 2.4e9;
  const std::string path = write_config(dir, cfg);
  const Run r = run({"simulate", "--config", path});
  CHECK(r.code == kExitConfig);
  CHECK(r.err.find("quasistatic") != std::string::npos);
  CHECK_FALSE(std::filesystem::exists(dir.path() / "out" /
                                      "manifest_simulate.json"));
}

TEST_CASE("cli: config errors name the key") {
  TempDir dir("cli_cfg");
  json cfg = small_config(dir);
  cfg.erase("tissue_table");
  const Run r = run({"simulate", "--config", write_config(dir, cfg)});
  CHECK(r.code == kExitConfig);
  CHECK(r.err.find("tissue_table") != std::string::npos);
  cfg = small_config(dir);
  cfg["solver"]["resolution_m"] = 0.5;
  const Run res = run({"map", "--config", write_config(dir, cfg)});
  CHECK(res.code == kExitConfig);
  CHECK(res.err.find("solver.resolution_m") != std::string::npos);
  CHECK(run({"simulate", "--config", dir.str("absent.json")}).code ==
        kExitConfig);
}

TEST_CASE("cli: simulate records solver statistics") {
  TempDir dir("cli_sim");
  const std::string path = write_config(dir, small_config(dir));
  const Run r = run({"simulate", "--config", path, "--dump-grid"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("converged=yes") != std::string::npos);
  const json m = manifest(dir.path() / "out", "simulate");
  CHECK(m["status"] == "ok");
  CHECK(m["config_hash"].get<std::string>().size() == 64);
  REQUIRE(m["solver"].size() == 1);
  CHECK(m["solver"][0]["iterations"].get<int>() > 0);
  CHECK(m["solver"][0]["relative_residual"].get<double>() <= 1e-8);
  CHECK(std::filesystem::exists(dir.path() / "out" / "grid.bin"));
  CHECK(std::filesystem::exists(dir.path() / "out" / "run.log"));
}

TEST_CASE("cli: non-convergence exits with the solve code") {
  TempDir dir("cli_iter");
  json cfg = small_config(dir);
  cfg["solver"]["max_iter"] = 3;
  const Run r = run({"simulate", "--config", write_config(dir, cfg)});
  CHECK(r.code == kExitSolve);
  const json m = manifest(dir.path() / "out", "simulate");
  CHECK(m["status"] == "error");
  CHECK(m["error"]["category"] == "SolveError");
  CHECK(m["error"]["exit_code"] == kExitSolve);
}

TEST_CASE("cli: sweep, map, contour and recommend chain") {
  TempDir dir("cli_chain");
  const std::string path = write_config(dir, small_config(dir));
  const Run sweep = run({"sweep", "--config", path});
  REQUIRE(sweep.code == 0);
  CHECK(sweep.out.find("O3_vertical galvanic points=") != std::string::npos);
  CHECK(std::filesystem::exists(dir.path() / "out" / "sweep_O3_vertical.csv"));
  REQUIRE(run({"map", "--config", path}).code == 0);
  const Run contour = run({"contour", "--config", path});
  REQUIRE(contour.code == 0);
  CHECK(contour.out.find("crossover_polylines=") != std::string::npos);
  const Run rec = run({"recommend", "--config", path, "--at", "0,0"});
  REQUIRE(rec.code == 0);
  CHECK(rec.out.find("cell_x_m=0 cell_y_m=0") != std::string::npos);
  const Run outside = run({"recommend", "--config", path, "--at", "5,5"});
  CHECK(outside.code == kExitConfig);
  CHECK(run({"recommend", "--config", path, "--at", "zero"}).code ==
        kExitConfig);
}

TEST_CASE("cli: reruns are byte-identical") {
  TempDir a("cli_rerun_a"), b("cli_rerun_b");
  const json cfg = small_config(a);
  const std::string path = write_config(a, cfg);
  REQUIRE(run({"map", "--config", path}).code == 0);
  REQUIRE(run({"map", "--config", path, "--out", b.str()}).code == 0);
  CHECK(slurp(a.path() / "out" / "map.csv") == slurp(b.path() / "map.csv"));
  json ma = manifest(a.path() / "out", "map");
  json mb = manifest(b.path(), "map");
  CHECK(ma["artifacts"] == mb["artifacts"]);
  CHECK(ma["config_hash"] == mb["config_hash"]);
}

TEST_CASE("cli: error categories and manifests") {
  TempDir dir("cli_err");
  const std::string out = dir.str("o");

  // 5: artifact missing.
  Run r = run({"recommend", "--out", out, "--at", "0,0"});
  CHECK(r.code == kExitMissingArtifact);
  CHECK(manifest(out, "recommend")["error"]["category"] == "MissingArtifact");

  // 4: unreadable measurement.
  r = run({"ingest", "--out", out, "--input", dir.str("nope.csv")});
  CHECK(r.code == kExitIo);
  CHECK(manifest(out, "ingest")["error"]["category"] == "IoError");

  // 7: no tx power anywhere.
  r = run({"ingest", "--out", out, "--input", fixture("measured_capacitive.csv")});
  CHECK(r.code == kExitParse);
  CHECK(manifest(out, "ingest")["error"]["code"] == "MissingTxPower");

  // 7: duplicate coordinate.
  std::ofstream(dir.str("dup.csv"))
      << "#meta mode=galvanic\nx_cm,y_cm,p_rx_dbm\n3,4,-50\n3,4,-51\n";
  r = run({"ingest", "--out", out, "--input", dir.str("dup.csv"),
           "--tx-power-dbm", "0"});
  CHECK(r.code == kExitParse);
  CHECK(manifest(out, "ingest")["error"]["category"] == "ParseError");

  // 6: axes disagree.
  std::ofstream(dir.str("cap.csv")) << "x_m,y_m,mode,path_loss_db\n"
                                       "0,0,capacitive,-10\n1,0,capacitive,-10\n";
  std::ofstream(dir.str("galv.csv")) << "x_m,y_m,mode,path_loss_db\n"
                                        "0,0,galvanic,-10\n2,0,galvanic,-10\n";
  r = run({"contour", "--out", out, "--cap", dir.str("cap.csv"), "--galv",
           dir.str("galv.csv")});
  CHECK(r.code == kExitGridMismatch);
  CHECK(manifest(out, "contour")["error"]["category"] == "GridMismatch");

  // 8: nothing aligns.
  std::ofstream(dir.str("far.csv")) << "x_m,y_m,mode,path_loss_db\n"
                                       "9,9,capacitive,-10\n";
  r = run({"compare", "--out", out, "--sim", dir.str("cap.csv"), "--meas",
           dir.str("far.csv")});
  CHECK(r.code == kExitNoOverlap);
  CHECK(manifest(out, "compare")["error"]["category"] == "NoOverlap");
}

TEST_CASE("cli: fixture pipeline") {
  TempDir dir("cli_fix");
  const std::string out = dir.str();
  Run r = run({"ingest", "--out", out, "--input",
               fixture("measured_capacitive.csv"), "--tx-power-dbm", "0"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("saturated=yes") != std::string::npos);
  r = run({"ingest", "--out", out, "--input", fixture("measured_galvanic.csv"),
           "--tx-power-dbm", "0"});
  REQUIRE(r.code == 0);
  CHECK(std::filesystem::exists(dir.path() / "ingested_galvanic.csv"));
  REQUIRE(run({"contour", "--out", out, "--cap",
               dir.str("ingested_capacitive.csv"), "--galv",
               dir.str("ingested_galvanic.csv")})
              .code == 0);
  r = run({"recommend", "--out", out, "--at", "0.30,0.00"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("mode=capacitive") != std::string::npos);
  const json m = manifest(out, "recommend");
  CHECK(std::abs(m["summary"]["margin_db"].get<double>() - 15.0) <= 0.5);
  r = run({"recommend", "--out", out, "--at", "0.01,-0.01"});
  CHECK(r.out.find("mode=galvanic") != std::string::npos);

  r = run({"compare", "--out", out, "--sim", fixture("reference_map.csv"),
           "--meas", dir.str("ingested_capacitive.csv"), "--meas",
           dir.str("ingested_galvanic.csv")});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("winner_agreement_pct=100.0") != std::string::npos);
  CHECK(r.out.find("rmse_db=0.00") != std::string::npos);
}
