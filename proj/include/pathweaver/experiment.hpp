#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "pathweaver/io.hpp"
#include "pathweaver/rnn.hpp"
#include "pathweaver/taskgen.hpp"

namespace pathweaver {

/// Bad configuration; the message names the offending field or line.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct BetaGrid {
  double min = 1e-4;
  double max = 1e-2;
  std::size_t points = 10;

  /// Equally spaced, inclusive of both ends.
  std::vector<double> values() const;
  void validate() const;
};

struct ExperimentConfig {
  std::string experiment = "single";  // fig3 | fig4 | fig5 | single
  TaskSpec task;
  TrainConfig train;
  double multiplication_beta = 0.0;  // fig3 trains the product task unregularised
  std::size_t repeats = 10;
  BetaGrid beta_grid;
  bool include_zero_beta = false;  // fig5 sanity point outside the grid
  int hop_max = 6;                 // fig4 shows k = 2..hop_max
  std::string output_dir = "out";
  std::size_t jobs = 1;

  void validate() const;
};

/// Defaults reproduce the published settings for each experiment.
ExperimentConfig default_config(std::string_view experiment);

/// Flat JSON object of overrides on top of default_config(experiment).
/// An empty string yields the defaults.
ExperimentConfig parse_config(std::string_view text, std::string_view experiment);

Json config_to_json(const ExperimentConfig& config);

struct RunRecord {
  std::string group;
  std::size_t repeat = 0;
  std::size_t beta_index = 0;
  double beta = 0.0;
  std::uint64_t data_seed = 0;
  std::uint64_t init_seed = 0;
  bool diverged = false;
  std::string note;
  std::map<std::string, double> metrics;
  std::map<std::string, std::vector<double>> series;
};

struct MetricSummary {
  double mean = 0.0;
  double sem = 0.0;
  std::size_t count = 0;
};

struct AggregateReport {
  std::string experiment;
  std::size_t repeats = 0;
  std::vector<RunRecord> runs;
  /// group -> metric -> summary over runs that did not diverge.
  std::map<std::string, std::map<std::string, MetricSummary>> summary;
  std::vector<std::string> exclusions;
  Json extra = Json::object();

  Json to_json() const;
  const MetricSummary& at(const std::string& group, const std::string& metric) const;
};

/// Recomputes `summary` and `exclusions` from `runs`.
void summarize(AggregateReport& report);

/// Per-run seeds: data depends on the repeat, initialisation on the repeat
/// and the grid point.
std::uint64_t data_seed(std::uint64_t base, std::size_t repeat);
std::uint64_t init_seed(std::uint64_t base, std::size_t repeat, std::size_t beta_index);

/// Each run_* writes report.json, manifest.json, runs/*.csv and maps/*.csv
/// below `out` unless `out` is empty.
AggregateReport run_fig3(const ExperimentConfig& config, const std::filesystem::path& out);
AggregateReport run_fig4(const ExperimentConfig& config, const std::filesystem::path& out);
AggregateReport run_fig5(const ExperimentConfig& config, const std::filesystem::path& out);

struct SingleResult {
  RunResult run;
  Json analysis;
};

SingleResult run_single(const ExperimentConfig& config, const std::filesystem::path& out);

/// Multi-hop analysis of trained parameters: R_io, hop maps, block contrast
/// and correlations with the optimal map when one exists. Maps are written
/// to out/maps unless `out` is empty.
Json analyze_params(const RnnParams& params, const TaskSpec& spec,
                    const std::filesystem::path& out);

}  // namespace pathweaver
