#include <chrono>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "pathweaver/experiment.hpp"

namespace fs = std::filesystem;
using namespace pathweaver;

namespace {

struct Options {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> repeats;
  std::optional<std::size_t> jobs;
  std::string checkpoint;
};

ExperimentConfig load_config(const Options& o, const std::string& experiment) {
  std::string text;
  if (!o.config.empty()) {
    std::ifstream is(o.config, std::ios::binary);
    if (!is) throw ConfigError("config: cannot open '" + o.config + "'");
    std::ostringstream ss;
    ss << is.rdbuf();
    text = ss.str();
  }
  ExperimentConfig c = parse_config(text, experiment);
  if (o.seed) c.task.seed = *o.seed;
  if (o.repeats) c.repeats = *o.repeats;
  if (o.jobs) c.jobs = *o.jobs;
  if (!o.out.empty()) c.output_dir = o.out;
  c.validate();
  return c;
}

void write_json(const fs::path& path, const Json& j) {
  fs::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  os << j.dump(2) << '\n';
}

void cmd_gen(const Options& o) {
  const ExperimentConfig c = load_config(o, "single");
  const fs::path out = c.output_dir;
  const Dataset d = make_dataset(c.task);
  save_dataset(out, d, c.task);
  write_json(out / "manifest.json",
             Json{{"experiment", "gen"},
                  {"config", config_to_json(c)},
                  {"files",
                   {{{"path", "inputs.csv"}, {"description", "inputs, (sample*seq_len+t) x feature"}},
                    {{"path", "targets.csv"}, {"description", "targets, sample x feature"}},
                    {{"path", "split.csv"}, {"description", "partition per sample: 0 train, 1 val, 2 test"}}}}});
  std::cout << "wrote " << d.samples << " samples to " << out.string() << '\n';
}

void cmd_train(const Options& o) {
  const ExperimentConfig c = load_config(o, "single");
  const SingleResult r = run_single(c, c.output_dir);
  std::cout << "test_mse " << r.run.final_test_mse << "  val_mse " << r.run.final_val_mse << '\n';
}

void cmd_analyze(const Options& o) {
  const ExperimentConfig c = load_config(o, "single");
  const fs::path out = c.output_dir;
  const fs::path ckpt = o.checkpoint.empty() ? out / "checkpoint.csv" : fs::path(o.checkpoint);
  const Checkpoint cp = load_checkpoint(ckpt);
  const Json analysis = analyze_params(cp.params, c.task, out);
  write_json(out / "analysis.json",
             Json{{"checkpoint", ckpt.string()}, {"header", cp.header}, {"analysis", analysis}});
  std::cout << analysis.dump(2) << '\n';
}

template <typename Fn>
void cmd_fig(const Options& o, const std::string& name, Fn run) {
  const ExperimentConfig c = load_config(o, name);
  const auto t0 = std::chrono::steady_clock::now();
  const AggregateReport r = run(c, c.output_dir);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::cout << name << ": " << r.runs.size() << " runs, " << r.exclusions.size()
            << " excluded, " << secs << " s -> " << c.output_dir << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-hop path analysis of modular recurrent networks"};
  app.require_subcommand(1);
  Options o;

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "JSON config file");
    sub->add_option("--out", o.out, "output directory");
    sub->add_option("--seed", o.seed, "base seed");
    sub->add_option("--repeats", o.repeats, "repeats per cell");
    sub->add_option("--jobs", o.jobs, "worker threads");
    return sub;
  };
  auto* gen = add_common(app.add_subcommand("gen", "generate a dataset bundle"));
  auto* trn = add_common(app.add_subcommand("train", "train one network and analyse it"));
  auto* ana = add_common(app.add_subcommand("analyze", "analyse a saved checkpoint"));
  ana->add_option("--checkpoint", o.checkpoint, "checkpoint file (default <out>/checkpoint.csv)");
  auto* f3 = add_common(app.add_subcommand("fig3", "correlation of learned maps with optimal maps"));
  auto* f4 = add_common(app.add_subcommand("fig4", "block contrast of k-hop maps on on-off averaging"));
  auto* f5 = add_common(app.add_subcommand("fig5", "L1 versus resolvent regularisation sweep"));

  CLI11_PARSE(app, argc, argv);
  try {
    if (gen->parsed()) cmd_gen(o);
    if (trn->parsed()) cmd_train(o);
    if (ana->parsed()) cmd_analyze(o);
    if (f3->parsed()) cmd_fig(o, "fig3", run_fig3);
    if (f4->parsed()) cmd_fig(o, "fig4", run_fig4);
    if (f5->parsed()) cmd_fig(o, "fig5", run_fig5);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
