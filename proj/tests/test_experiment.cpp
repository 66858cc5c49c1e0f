#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "vrsplit/errors.hpp"
#include "vrsplit/experiment.hpp"
#include "vrsplit/trace_io.hpp"

using namespace vrsplit;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

// Fresh scratch directory per test case.
fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("vrsplit_experiment_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string write_json(const fs::path& path, const json& j) {
  std::ofstream(path) << j.dump(2);
  return path.string();
}

json small_game(const fs::path& out) {
  return {{"name", "small"},
          {"problem", {{"kind", "matrix_game"}, {"p1", 5}, {"samples", 12}, {"data_seed", 3}}},
          {"methods",
           {{{"label", "a"}, {"solver", "vfosa_plus"}, {"estimator", "lsarah"}},
            {{"label", "b"}, {"solver", "vr_eg"}}}},
          {"epochs", 6},
          {"seeds", {1, 2, 3}},
          {"output", out.string()}};
}

json read_manifest(const fs::path& dir) {
  std::ifstream in(dir / "manifest.json");
  return json::parse(in);
}

std::map<std::string, std::string> fingerprints(const fs::path& dir) {
  std::map<std::string, std::string> out;
  const json manifest = read_manifest(dir);
  for (const auto& run : manifest["runs"]) {
    const std::string file = run["file"];
    out[file] = numeric_fingerprint(read_trace_csv((dir / file).string()));
  }
  return out;
}

int run_config(const std::string& path, unsigned threads, std::optional<std::string> out = {}) {
  std::ostringstream log;
  RunCommandOptions o;
  o.config_path = path;
  o.threads = threads;
  o.out_dir = std::move(out);
  return cmd_run(o, log);
}

void write_trace(const fs::path& path, const std::string& method, std::uint64_t seed,
                 const std::vector<std::pair<double, double>>& epoch_rel) {
  RunTrace t;
  t.method = method;
  t.estimator = "lsvrg";
  t.problem = "hand";
  t.seed = seed;
  long long units = 0;
  for (const auto& [e, r] : epoch_rel) t.rows.push_back({units++, e, r, 0.0});
  write_trace_csv(t, path.string());
}

std::string config_error(const fs::path& dir, const json& cfg) {
  const std::string path = write_json(dir / "bad.json", cfg);
  try {
    validate_config_file(path);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("run writes one trace per method and seed plus a manifest") {
  const fs::path dir = scratch("count");
  const std::string cfg = write_json(dir / "cfg.json", small_game(dir / "out"));
  REQUIRE(run_config(cfg, 2) == kExitOk);
  std::set<std::string> csvs;
  for (const auto& e : fs::directory_iterator(dir / "out"))
    if (e.path().extension() == ".csv") csvs.insert(e.path().filename().string());
  CHECK(csvs.size() == 6);
  CHECK(csvs.count("a__lsarah__i0__s2.csv") == 1);
  CHECK(csvs.count("b__lsvrg__i0__s3.csv") == 1);
  const json m = read_manifest(dir / "out");
  CHECK(m["runs"].size() == 6);
  CHECK(m["name"] == "small");
  CHECK(m["trace_header"] == kTraceHeader);
  CHECK(m["config_digest"].get<std::string>().size() == 16);
  CHECK(m["epochs"] == 6);
  for (const auto& run : m["runs"]) {
    CHECK_FALSE(run["diverged"].get<bool>());
    const RunTrace t = read_trace_csv((dir / "out" / run["file"].get<std::string>()).string());
    CHECK(t.rows.front().rel_residual == 1.0);
    CHECK(t.rows.front().oracle_units == 0);
    CHECK(t.rows.back().epochs >= 6.0);
    CHECK(t.rows.back().rel_residual == run["final_rel_residual"].get<double>());
    for (std::size_t i = 1; i < t.rows.size(); ++i) CHECK(t.rows[i].oracle_units > t.rows[i - 1].oracle_units);
  }
}

TEST_CASE("traces do not depend on reruns or on the thread count") {
  const fs::path dir = scratch("determinism");
  const std::string cfg = write_json(dir / "cfg.json", small_game(dir / "unused"));
  REQUIRE(run_config(cfg, 1, (dir / "t1").string()) == kExitOk);
  REQUIRE(run_config(cfg, 4, (dir / "t4").string()) == kExitOk);
  REQUIRE(run_config(cfg, 4, (dir / "t4b").string()) == kExitOk);
  const auto a = fingerprints(dir / "t1"), b = fingerprints(dir / "t4"), c = fingerprints(dir / "t4b");
  CHECK(a.size() == 6);
  CHECK(a == b);
  CHECK(b == c);
  CHECK(read_manifest(dir / "t1")["config_digest"] == read_manifest(dir / "t4")["config_digest"]);
}

TEST_CASE("instances get their own problem tag and data") {
  const fs::path dir = scratch("instances");
  json cfg = small_game(dir / "out");
  cfg["instances"] = 2;
  cfg["seeds"] = {7};
  cfg["methods"] = {{{"label", "og"}, {"solver", "og"}}};
  REQUIRE(run_config(write_json(dir / "cfg.json", cfg), 2) == kExitOk);
  const RunTrace t0 = read_trace_csv((dir / "out" / "og__full_batch__i0__s7.csv").string());
  const RunTrace t1 = read_trace_csv((dir / "out" / "og__full_batch__i1__s7.csv").string());
  CHECK(t0.problem == "matrix_game");
  CHECK(t1.problem == "matrix_game_i1");
  CHECK(numeric_fingerprint(t0) != numeric_fingerprint(t1));
}

TEST_CASE("logistic and linear problems run end to end") {
  const fs::path dir = scratch("kinds");
  json logistic = {{"problem", {{"kind", "logistic"}, {"samples", 60}, {"raw_features", 4}, {"copies", 3},
                                {"reg", "scad"}, {"data_seed", 1}}},
                   {"parameters", {{"ignore_rho", true}}},
                   {"methods", {{{"label", "m"}, {"solver", "vfosa_minus"}, {"estimator", "saga"}},
                                {{"label", "h"}, {"solver", "vr_halpern"}}}},
                   {"epochs", 4},
                   {"seeds", {1}}};
  CHECK(run_config(write_json(dir / "l.json", logistic), 2, (dir / "l").string()) == kExitOk);
  CHECK(fs::exists(dir / "l" / "m__saga__i0__s1.csv"));
  json linear = {{"problem", {{"kind", "synthetic_linear"}, {"dim", 6}}},
                 {"methods", {{{"label", "p"}, {"solver", "vfosa_plus"}, {"estimator", "hsgd"}},
                              {{"label", "f"}, {"solver", "fkm"}}}},
                 {"epochs", 4},
                 {"seeds", {1, 2}}};
  CHECK(run_config(write_json(dir / "s.json", linear), 2, (dir / "s").string()) == kExitOk);
  CHECK(read_manifest(dir / "s")["runs"].size() == 4);
}

TEST_CASE("config errors name the field") {
  const fs::path dir = scratch("errors");
  const json base = small_game(dir / "out");
  json c = base;
  c["epochs"] = -1;
  CHECK(config_error(dir, c).find("epochs") != std::string::npos);
  c = base;
  c["methods"][0]["omega"] = 2.0;
  c["methods"][0]["shedule"] = "practical";
  CHECK(config_error(dir, c).find("shedule") != std::string::npos);
  c = base;
  c["methods"][1]["label"] = "a";
  CHECK(config_error(dir, c).find("methods[1].label: duplicates") != std::string::npos);
  c = base;
  c["problem"]["kind"] = "sudoku";
  CHECK(config_error(dir, c).find("problem.kind") != std::string::npos);
  c = base;
  c["parameters"] = {{"mu", 0.7}};
  CHECK(config_error(dir, c).find("mu < 2/3") != std::string::npos);
  c = base;
  c["x0"] = {{"kind", "ones"}};
  CHECK(config_error(dir, c).find("x0.kind") != std::string::npos);
  c = base;
  c["seeds"] = json::array();
  CHECK_FALSE(config_error(dir, c).empty());
  CHECK(config_error(dir, base).empty());
  std::ofstream(dir / "broken.json") << "{ not json";
  CHECK_THROWS_AS(validate_config_file((dir / "broken.json").string()), ConfigError);
  CHECK(run_config(write_json(dir / "bad.json", c), 1) == kExitUsage);
}

TEST_CASE("validate passes by default and the beta_bar hook breaks exactly the residual inequality") {
  std::set<std::string> names;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto results = run_validation({seed, 1.0});
    std::set<std::string> passed;
    for (const auto& r : results) {
      CAPTURE(r.name);
      CAPTURE(r.detail);
      CHECK(r.pass);
      if (r.pass) passed.insert(r.name);
    }
    if (seed == 0) names = passed;
    CHECK(passed == names);
  }
  CHECK(names.size() >= 9);
  for (const auto& r : run_validation({0, 2.0})) {
    CAPTURE(r.name);
    CHECK(r.pass == (r.name.rfind("residual_inequality", 0) != 0));
  }
  std::ostringstream out;
  CHECK(cmd_validate({0, 1.0}, out) == kExitOk);
  CHECK(out.str().find("FAIL") == std::string::npos);
  std::ostringstream bad;
  CHECK(cmd_validate({0, 2.0}, bad) == kExitCheckFailed);
}

TEST_CASE("compare metrics against hand-computed values") {
  const fs::path dir = scratch("compare");
  write_trace(dir / "x1.csv", "x", 1, {{0, 1.0}, {1, 0.1}, {2, 1e-3}});
  write_trace(dir / "x2.csv", "x", 2, {{0, 1.0}, {1, 1e-2}, {2, 1e-2}});
  write_trace(dir / "y1.csv", "y", 1, {{0, 1.0}, {2, 0.1}});
  const json manifest = {{"runs",
                          {{{"file", "x1.csv"}}, {{"file", "y1.csv"}}, {{"file", "x2.csv"}}, {{"error", "boom"}}}}};
  const std::string path = write_json(dir / "manifest.json", manifest);
  const auto rows = summarize_manifest(path);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].method == "x");
  CHECK(rows[1].method == "y");
  CHECK(rows[0].runs == 2);
  CHECK(rows[0].final_mean == doctest::Approx(0.0055).epsilon(1e-15));
  CHECK(rows[0].final_std == doctest::Approx(0.0045).epsilon(1e-14));
  // trapezoids: -0.5 - 2 = -2.5 and -1 - 2 = -3
  CHECK(rows[0].auc_log == doctest::Approx(-2.75).epsilon(1e-15));
  CHECK(rows[0].epochs_to_1e_2 == doctest::Approx(1.5).epsilon(1e-15));
  CHECK(rows[1].final_std == 0.0);
  CHECK(rows[1].auc_log == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(std::isinf(rows[1].epochs_to_1e_2));

  std::ostringstream out;
  REQUIRE(cmd_compare(path, std::nullopt, out) == kExitOk);
  std::ifstream csv(dir / "summary.csv");
  std::string header, line;
  std::getline(csv, header);
  CHECK(header == kSummaryHeader);
  std::getline(csv, line);
  CHECK(std::count(line.begin(), line.end(), ',') == 5);
  CHECK(line.rfind("x,lsvrg,", 0) == 0);

  std::ofstream(dir / "y1.csv") << "garbage\n";
  std::ostringstream err;
  CHECK(cmd_compare(path, std::nullopt, err) == kExitCheckFailed);
  CHECK(cmd_compare((dir / "nope.json").string(), std::nullopt, err) == kExitCheckFailed);
}

TEST_CASE("identical methods under different names summarize identically") {
  const fs::path dir = scratch("twins");
  json cfg = small_game(dir / "out");
  cfg["methods"] = {{{"label", "first"}, {"solver", "vfosa_plus"}, {"estimator", "saga"}},
                    {{"label", "second"}, {"solver", "vfosa_plus"}, {"estimator", "saga"}}};
  REQUIRE(run_config(write_json(dir / "cfg.json", cfg), 2) == kExitOk);
  const auto rows = summarize_manifest((dir / "out" / "manifest.json").string());
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].final_mean == rows[1].final_mean);
  CHECK(rows[0].final_std == rows[1].final_std);
  CHECK(rows[0].auc_log == rows[1].auc_log);
  CHECK(rows[0].runs == 3);
}

TEST_CASE("helpers") {
  CHECK(digest_hex("") == "cbf29ce484222325");
  CHECK(digest_hex("a") == "af63dc4c8601ec8c");
  CHECK(resolve_thread_count(3) == 3);
  CHECK(resolve_thread_count(0) >= 1);
}
