#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "pathweaver/experiment.hpp"

using namespace pathweaver;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("pathweaver_exp_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

ExperimentConfig tiny(const std::string& experiment) {
  ExperimentConfig c = default_config(experiment);
  c.task.samples = 200;
  c.train.epochs = 5;
  c.repeats = 2;
  c.beta_grid.points = 2;
  return c;
}

std::string error_of(const std::string& text) {
  try {
    parse_config(text, "single");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("config defaults and overrides") {
  const ExperimentConfig d = parse_config("", "fig3");
  CHECK(d.task.modules == 4);
  CHECK(d.task.features == 4);
  CHECK(d.task.seq_len == 5);
  CHECK(d.task.samples == 2000);
  CHECK(d.train.epochs == 100);
  CHECK(d.train.lr == 0.01);
  CHECK(d.train.beta == 0.001);
  CHECK(d.repeats == 10);
  CHECK(parse_config("", "fig4").task.kind == TaskKind::OnOffAveraging);
  CHECK(parse_config("", "fig5").train.epochs == 200);

  const ExperimentConfig c =
      parse_config(R"({"task": "addition", "epochs": 7, "reg": "resolvent", "jobs": 2})", "single");
  CHECK(c.task.kind == TaskKind::Addition);
  CHECK(c.train.epochs == 7);
  CHECK(c.train.reg == RegKind::ResolventIO);
  CHECK(c.jobs == 2);
  CHECK(parse_config(config_to_json(c).dump(), "single").train.epochs == 7);
}

TEST_CASE("config errors name the field or the position") {
  CHECK(error_of(R"({"task": "division"})").find("'task'") != std::string::npos);
  CHECK(error_of(R"({"epochz": 3})").find("'epochz'") != std::string::npos);
  CHECK(error_of(R"({"epochs": "many"})").find("'epochs'") != std::string::npos);
  CHECK(error_of(R"({"lr": -1})").find("lr") != std::string::npos);
  CHECK(error_of("{\n  \"epochs\": 3,\n}").find("line 3") != std::string::npos);
  CHECK(error_of("[1]").find("object") != std::string::npos);
}

TEST_CASE("beta grid") {
  const std::vector<double> b = BetaGrid{}.values();
  CHECK(b.size() == 10);
  CHECK(b.front() == 1e-4);
  CHECK(b.back() == doctest::Approx(1e-2));
  CHECK(b[2] == doctest::Approx(0.0023));
  CHECK_THROWS_AS((BetaGrid{0.1, 0.01, 3}.validate()), ConfigError);
}

TEST_CASE("seeds decouple repeats and grid points") {
  CHECK(data_seed(0, 0) != data_seed(0, 1));
  CHECK(init_seed(0, 0, 0) != init_seed(0, 0, 1));
  CHECK(init_seed(0, 1, 0) != init_seed(0, 0, 1));
  CHECK(data_seed(3, 2) == data_seed(3, 2));
}

TEST_CASE("summarize recomputes mean and SEM and notes exclusions") {
  AggregateReport r;
  r.runs.push_back({"g", 0, 0, 0.0, 0, 0, false, "", {{"m", 1.0}}, {}});
  r.runs.push_back({"g", 1, 0, 0.0, 0, 0, false, "", {{"m", 3.0}}, {}});
  r.runs.push_back({"g", 2, 0, 0.0, 0, 0, true, "nan at epoch 4", {}, {}});
  summarize(r);
  CHECK(r.at("g", "m").mean == 2.0);
  CHECK(r.at("g", "m").sem == doctest::Approx(1.0));
  CHECK(r.at("g", "m").count == 2);
  REQUIRE(r.exclusions.size() == 1);
  CHECK(r.exclusions[0].find("nan at epoch 4") != std::string::npos);
  CHECK_THROWS_AS(r.at("g", "x"), std::out_of_range);
}

TEST_CASE("run_single writes a reproducible bundle") {
  ExperimentConfig c = tiny("single");
  const fs::path a = scratch_dir("single_a"), b = scratch_dir("single_b");
  const SingleResult ra = run_single(c, a);
  run_single(c, b);
  for (const char* f : {"checkpoint.csv", "runs/single.csv", "maps/rio.csv", "maps/optimal.csv",
                        "report.json", "manifest.json"}) {
    INFO(f);
    CHECK(fs::exists(a / f));
    CHECK(slurp(a / f) == slurp(b / f));
  }
  const Checkpoint cp = load_checkpoint(a / "checkpoint.csv");
  CHECK(cp.params == ra.run.final_params);
  CHECK(ra.analysis.contains("pearson_rio_optimal"));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("fig runners: structure, aggregation and thread independence") {
  const fs::path out = scratch_dir("fig3");
  ExperimentConfig c = tiny("fig3");
  const AggregateReport r = run_fig3(c, out);
  CHECK(r.runs.size() == 8);
  CHECK(r.summary.size() == 4);
  CHECK(r.at("module_averaging", "pearson_rio").count == 2);
  CHECK(r.extra["oracle_self_correlation"]["addition"] == doctest::Approx(1.0));
  CHECK(fs::exists(out / "maps" / "multiplication_rio_mean.csv"));
  CHECK(fs::exists(out / "manifest.json"));

  // Recomputing from the emitted per-run records reproduces the summary.
  const Json report = Json::parse(slurp(out / "report.json"));
  std::vector<double> vals;
  for (const auto& run : report["runs"])
    if (run["group"] == "subtraction") vals.push_back(run["metrics"]["test_mse"].get<double>());
  const MeanSem ms = mean_sem(vals);
  CHECK(ms.mean == report["summary"]["subtraction"]["test_mse"]["mean"].get<double>());
  CHECK(ms.sem == report["summary"]["subtraction"]["test_mse"]["sem"].get<double>());

  // Every emitted CSV re-emits byte-identically.
  for (const auto& e : fs::recursive_directory_iterator(out)) {
    if (e.path().extension() != ".csv") continue;
    const std::string text = slurp(e.path());
    std::ostringstream os;
    if (text.rfind("# ", 0) == 0) {
      std::istringstream is(text);
      const MatrixCsv m = read_matrix_csv(is);
      write_matrix_csv(os, m.values, m.meta);
    } else {
      std::istringstream is(text);
      write_table_csv(os, read_table_csv(is));
    }
    CHECK(os.str() == text);
  }

  c.jobs = 3;
  const fs::path threaded = scratch_dir("fig3_jobs");
  run_fig3(c, threaded);
  const Json par = Json::parse(slurp(threaded / "report.json"));
  CHECK(par["runs"] == report["runs"]);
  CHECK(par["summary"].dump() == report["summary"].dump());
  CHECK(slurp(out / "maps" / "addition_rio_mean.csv") ==
        slurp(threaded / "maps" / "addition_rio_mean.csv"));
  fs::remove_all(out);
  fs::remove_all(threaded);
}

TEST_CASE("fig4 and fig5 small runs") {
  ExperimentConfig c4 = tiny("fig4");
  const AggregateReport r4 = run_fig4(c4, {});
  CHECK(r4.runs.size() == 2);
  CHECK(r4.extra["parity"].size() == 5);
  CHECK(r4.extra["parity"][0]["carries_signal"] == true);
  CHECK(r4.extra["parity"][1]["carries_signal"] == false);
  c4.task.kind = TaskKind::Addition;
  CHECK_THROWS_AS(run_fig4(c4, {}), ConfigError);

  ExperimentConfig c5 = tiny("fig5");
  c5.include_zero_beta = true;
  const fs::path out = scratch_dir("fig5");
  const AggregateReport r5 = run_fig5(c5, out);
  // 2 tasks x (2 families x 3 betas + 1 unregularised) x 2 repeats
  CHECK(r5.runs.size() == 28);
  CHECK(r5.extra["best"]["module_averaging"].contains("l1"));
  CHECK(r5.extra["best"]["on_off_averaging"]["resolvent"]["hop_profile_raw"].size() == 6);
  // beta = 0: both families coincide with the unregularised run.
  for (const char* task : {"module_averaging", "on_off_averaging"}) {
    const std::string t(task);
    CHECK(r5.at(t + "/l1/b02", "test_mse").mean == r5.at(t + "/none/b02", "test_mse").mean);
    CHECK(r5.at(t + "/resolvent/b02", "test_mse").mean ==
          r5.at(t + "/none/b02", "test_mse").mean);
  }
  CHECK(fs::exists(out / "runs" / "sweep_on_off_averaging_resolvent.csv"));
  fs::remove_all(out);
}
