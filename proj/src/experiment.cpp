#include "pathweaver/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <thread>

#include "pathweaver/graphops.hpp"
#include "pathweaver/oracle.hpp"
#include "pathweaver/regularizers.hpp"

namespace pathweaver {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Configuration

std::vector<double> BetaGrid::values() const {
  std::vector<double> out;
  if (points == 1) return {min};
  for (std::size_t i = 0; i < points; ++i)
    out.push_back(min + (max - min) * static_cast<double>(i) / static_cast<double>(points - 1));
  return out;
}

void BetaGrid::validate() const {
  if (points < 1) throw ConfigError("beta_points: must be >= 1");
  if (!(min >= 0.0)) throw ConfigError("beta_min: must be >= 0");
  if (points > 1 && !(max > min)) throw ConfigError("beta_max: grid must be strictly increasing");
}

void ExperimentConfig::validate() const {
  if (experiment != "fig3" && experiment != "fig4" && experiment != "fig5" &&
      experiment != "single")
    throw ConfigError("experiment: unknown experiment '" + experiment + "'");
  if (repeats < 1) throw ConfigError("repeats: must be >= 1");
  if (jobs < 1) throw ConfigError("jobs: must be >= 1");
  if (hop_max < 2) throw ConfigError("hop_max: must be >= 2");
  if (!(multiplication_beta >= 0.0)) throw ConfigError("multiplication_beta: must be >= 0");
  beta_grid.validate();
  try {
    task.validate();
    train.validate();
  } catch (const ContractViolation& e) {
    throw ConfigError(e.what());
  }
}

ExperimentConfig default_config(std::string_view experiment) {
  ExperimentConfig c;
  c.experiment = std::string(experiment);
  if (experiment == "fig4") c.task.kind = TaskKind::OnOffAveraging;
  if (experiment == "fig5") c.train.epochs = 200;
  return c;
}

namespace {

std::string line_col(std::string_view text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

template <typename T>
T field(const Json& j, const std::string& key) {
  try {
    return j.get<T>();
  } catch (const Json::exception&) {
    throw ConfigError("config: field '" + key + "' has the wrong type");
  }
}

std::size_t count_field(const Json& j, const std::string& key) {
  if (!j.is_number_integer() || j.get<long long>() < 0)
    throw ConfigError("config: field '" + key + "' must be a non-negative integer");
  return j.get<std::size_t>();
}

double real_field(const Json& j, const std::string& key) {
  if (!j.is_number()) throw ConfigError("config: field '" + key + "' must be a number");
  return j.get<double>();
}

}  // namespace

ExperimentConfig parse_config(std::string_view text, std::string_view experiment) {
  Json doc = Json::object();
  const bool blank = std::all_of(text.begin(), text.end(),
                                 [](char c) { return std::isspace(static_cast<unsigned char>(c)); });
  if (!blank) {
    try {
      doc = Json::parse(text.begin(), text.end());
    } catch (const Json::parse_error& e) {
      throw ConfigError("config: parse error at " + line_col(text, e.byte ? e.byte - 1 : 0) +
                        ": " + e.what());
    }
  }
  if (!doc.is_object()) throw ConfigError("config: top level must be a JSON object");

  std::string exp(experiment);
  if (doc.contains("experiment")) {
    const auto named = field<std::string>(doc["experiment"], "experiment");
    if (!exp.empty() && named != exp && exp != "single")
      throw ConfigError("experiment: config names '" + named + "' but '" + exp +
                        "' was requested");
    exp = named;
  }
  if (exp.empty()) exp = "single";
  ExperimentConfig c = default_config(exp);

  using Setter = std::function<void(const Json&, const std::string&)>;
  const std::map<std::string, Setter> setters{
      {"experiment", [](const Json&, const std::string&) {}},
      {"task",
       [&](const Json& v, const std::string& k) {
         const auto name = field<std::string>(v, k);
         try {
           c.task.kind = parse_task_kind(name);
         } catch (const ContractViolation&) {
           throw ConfigError("config: field 'task' names unknown task '" + name + "'");
         }
       }},
      {"modules", [&](const Json& v, const std::string& k) { c.task.modules = count_field(v, k); }},
      {"features",
       [&](const Json& v, const std::string& k) { c.task.features = count_field(v, k); }},
      {"seq_len", [&](const Json& v, const std::string& k) { c.task.seq_len = count_field(v, k); }},
      {"samples", [&](const Json& v, const std::string& k) { c.task.samples = count_field(v, k); }},
      {"sigma_mu", [&](const Json& v, const std::string& k) { c.task.sigma_mu = real_field(v, k); }},
      {"sigma_eps",
       [&](const Json& v, const std::string& k) { c.task.sigma_eps = real_field(v, k); }},
      {"seed", [&](const Json& v, const std::string& k) { c.task.seed = count_field(v, k); }},
      {"split_train",
       [&](const Json& v, const std::string& k) { c.task.split.train = real_field(v, k); }},
      {"split_val",
       [&](const Json& v, const std::string& k) { c.task.split.val = real_field(v, k); }},
      {"split_test",
       [&](const Json& v, const std::string& k) { c.task.split.test = real_field(v, k); }},
      {"epochs", [&](const Json& v, const std::string& k) { c.train.epochs = count_field(v, k); }},
      {"lr", [&](const Json& v, const std::string& k) { c.train.lr = real_field(v, k); }},
      {"beta", [&](const Json& v, const std::string& k) { c.train.beta = real_field(v, k); }},
      {"reg",
       [&](const Json& v, const std::string& k) {
         const auto name = field<std::string>(v, k);
         try {
           c.train.reg = parse_reg_kind(name);
         } catch (const ContractViolation&) {
           throw ConfigError("config: field 'reg' names unknown regulariser '" + name + "'");
         }
       }},
      {"alpha", [&](const Json& v, const std::string& k) { c.train.alpha = real_field(v, k); }},
      {"batch_size",
       [&](const Json& v, const std::string& k) { c.train.batch_size = count_field(v, k); }},
      {"hidden", [&](const Json& v, const std::string& k) { c.train.hidden = count_field(v, k); }},
      {"multiplication_beta",
       [&](const Json& v, const std::string& k) { c.multiplication_beta = real_field(v, k); }},
      {"repeats", [&](const Json& v, const std::string& k) { c.repeats = count_field(v, k); }},
      {"beta_min", [&](const Json& v, const std::string& k) { c.beta_grid.min = real_field(v, k); }},
      {"beta_max", [&](const Json& v, const std::string& k) { c.beta_grid.max = real_field(v, k); }},
      {"beta_points",
       [&](const Json& v, const std::string& k) { c.beta_grid.points = count_field(v, k); }},
      {"include_zero_beta",
       [&](const Json& v, const std::string& k) { c.include_zero_beta = field<bool>(v, k); }},
      {"hop_max",
       [&](const Json& v, const std::string& k) {
         c.hop_max = static_cast<int>(count_field(v, k));
       }},
      {"output_dir",
       [&](const Json& v, const std::string& k) { c.output_dir = field<std::string>(v, k); }},
      {"jobs", [&](const Json& v, const std::string& k) { c.jobs = count_field(v, k); }},
  };

  for (const auto& [key, value] : doc.items()) {
    const auto it = setters.find(key);
    if (it == setters.end()) throw ConfigError("config: unknown field '" + key + "'");
    it->second(value, key);
  }
  c.validate();
  return c;
}

Json config_to_json(const ExperimentConfig& c) {
  return Json{{"experiment", c.experiment},
              {"task", std::string(to_string(c.task.kind))},
              {"modules", c.task.modules},
              {"features", c.task.features},
              {"seq_len", c.task.seq_len},
              {"samples", c.task.samples},
              {"sigma_mu", c.task.sigma_mu},
              {"sigma_eps", c.task.sigma_eps},
              {"seed", c.task.seed},
              {"split_train", c.task.split.train},
              {"split_val", c.task.split.val},
              {"split_test", c.task.split.test},
              {"epochs", c.train.epochs},
              {"lr", c.train.lr},
              {"beta", c.train.beta},
              {"reg", std::string(to_string(c.train.reg))},
              {"alpha", c.train.alpha},
              {"batch_size", c.train.batch_size},
              {"hidden", c.train.hidden},
              {"multiplication_beta", c.multiplication_beta},
              {"repeats", c.repeats},
              {"beta_min", c.beta_grid.min},
              {"beta_max", c.beta_grid.max},
              {"beta_points", c.beta_grid.points},
              {"include_zero_beta", c.include_zero_beta},
              {"hop_max", c.hop_max},
              {"output_dir", c.output_dir},
              {"jobs", c.jobs}};
}

// ---------------------------------------------------------------------------
// Reports

Json AggregateReport::to_json() const {
  Json j;
  j["experiment"] = experiment;
  j["repeats"] = repeats;
  Json s = Json::object();
  for (const auto& [group, metrics] : summary)
    for (const auto& [name, m] : metrics)
      s[group][name] = {{"mean", m.mean}, {"sem", m.sem}, {"count", m.count}};
  j["summary"] = s;
  Json runs_json = Json::array();
  for (const auto& r : runs) {
    Json rj{{"group", r.group},         {"repeat", r.repeat},       {"beta_index", r.beta_index},
            {"beta", r.beta},           {"data_seed", r.data_seed}, {"init_seed", r.init_seed},
            {"diverged", r.diverged},   {"metrics", r.metrics}};
    if (!r.note.empty()) rj["note"] = r.note;
    if (!r.series.empty()) rj["series"] = r.series;
    runs_json.push_back(std::move(rj));
  }
  j["runs"] = runs_json;
  j["exclusions"] = exclusions;
  j["extra"] = extra;
  return j;
}

const MetricSummary& AggregateReport::at(const std::string& group,
                                         const std::string& metric) const {
  const auto g = summary.find(group);
  if (g == summary.end()) throw std::out_of_range("report: no group '" + group + "'");
  const auto m = g->second.find(metric);
  if (m == g->second.end())
    throw std::out_of_range("report: group '" + group + "' has no metric '" + metric + "'");
  return m->second;
}

void summarize(AggregateReport& report) {
  std::map<std::string, std::map<std::string, std::vector<double>>> values;
  report.exclusions.clear();
  for (const auto& r : report.runs) {
    if (r.diverged) {
      report.exclusions.push_back(r.group + " repeat " + std::to_string(r.repeat) +
                                  " excluded: " + r.note);
      continue;
    }
    for (const auto& [name, v] : r.metrics) values[r.group][name].push_back(v);
  }
  report.summary.clear();
  for (const auto& [group, metrics] : values) {
    for (const auto& [name, v] : metrics) {
      const MeanSem ms = mean_sem(v);
      report.summary[group][name] = {ms.mean, ms.sem, v.size()};
    }
  }
}

std::uint64_t data_seed(std::uint64_t base, std::size_t repeat) {
  return derive_seed(base, {0xDA7A, repeat});
}

std::uint64_t init_seed(std::uint64_t base, std::size_t repeat, std::size_t beta_index) {
  return derive_seed(base, {0x1A17, repeat, beta_index});
}

// ---------------------------------------------------------------------------
// Shared machinery

namespace {

struct Manifest {
  Json entries = Json::array();

  void add(const fs::path& root, const fs::path& path, const std::string& description,
           Json axes = Json::object()) {
    entries.push_back({{"path", fs::relative(path, root).generic_string()},
                       {"description", description},
                       {"axes", std::move(axes)}});
  }
};

struct CellOutput {
  RunRecord record;
  std::map<std::string, Matrix> maps;
  Table curves;
};

std::string file_stem(std::string group) {
  std::replace(group.begin(), group.end(), '/', '_');
  return group;
}

Table curves_table(const RunResult& r) {
  Table t{{"epoch", "train_mse", "val_mse", "test_mse", "sparsity"}, {}};
  for (std::size_t e = 0; e < r.train_loss.size(); ++e)
    t.rows.push_back({static_cast<double>(e + 1), r.train_loss[e], r.val_loss[e], r.test_loss[e],
                      r.sparsity[e]});
  return t;
}

// Runs cells on `jobs` threads; results keep the order of `count`.
std::vector<CellOutput> run_cells(std::size_t count, std::size_t jobs,
                                  const std::function<CellOutput(std::size_t)>& fn) {
  std::vector<CellOutput> out(count);
  if (jobs <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) out[i] = fn(i);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(count);
  std::vector<std::thread> workers;
  for (std::size_t w = 0; w < std::min(jobs, count); ++w) {
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          out[i] = fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : workers) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

// Trains one cell; divergence is recorded rather than propagated.
bool train_cell(const TaskSpec& spec, const TrainConfig& tc, CellOutput& cell, RunResult& result) {
  cell.record.data_seed = spec.seed;
  cell.record.init_seed = tc.seed;
  try {
    result = train(spec, tc);
  } catch (const TrainingDiverged& e) {
    cell.record.diverged = true;
    cell.record.note = e.what();
    return false;
  }
  cell.curves = curves_table(result);
  return true;
}

Matrix mean_of(const std::vector<const Matrix*>& ms) {
  Matrix acc(ms.front()->rows(), ms.front()->cols());
  for (const Matrix* m : ms) acc += *m;
  return acc * (1.0 / static_cast<double>(ms.size()));
}

Matrix sem_of(const std::vector<const Matrix*>& ms) {
  const Matrix mean = mean_of(ms);
  Matrix out(mean.rows(), mean.cols());
  if (ms.size() < 2) return out;
  const auto n = static_cast<double>(ms.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    double ss = 0.0;
    for (const Matrix* m : ms) {
      const double d = m->data()[i] - mean.data()[i];
      ss += d * d;
    }
    out.data()[i] = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  }
  return out;
}

std::vector<const Matrix*> collect_maps(const std::vector<CellOutput>& cells,
                                        const std::string& group, const std::string& name) {
  std::vector<const Matrix*> out;
  for (const auto& c : cells) {
    if (c.record.group != group || c.record.diverged) continue;
    const auto it = c.maps.find(name);
    if (it != c.maps.end()) out.push_back(&it->second);
  }
  return out;
}

void write_run_curves(const fs::path& out, Manifest& manifest,
                      const std::vector<CellOutput>& cells) {
  for (const auto& c : cells) {
    if (c.record.diverged) continue;
    const fs::path p = out / "runs" /
                       (file_stem(c.record.group) + "_r" + std::to_string(c.record.repeat) + ".csv");
    save_table_csv(p, c.curves);
    manifest.add(out, p, "training curves of " + c.record.group + " repeat " +
                             std::to_string(c.record.repeat),
                 {{"x", "epoch"}, {"y", "mse / sparsity"}});
  }
}

void write_json(const fs::path& path, const Json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  os << j.dump(2) << '\n';
  if (!os) throw FormatError("write failed for '" + path.string() + "'");
}

void finish(const fs::path& out, const AggregateReport& report, const ExperimentConfig& config,
            Manifest& manifest) {
  Json j = report.to_json();
  j["config"] = config_to_json(config);
  write_json(out / "report.json", j);
  manifest.add(out, out / "report.json", "aggregate report: mean and SEM per group and metric");
  write_json(out / "manifest.json",
             Json{{"experiment", report.experiment}, {"files", manifest.entries}});
}


}  // namespace

// ---------------------------------------------------------------------------
// Analysis

Json analyze_params(const RnnParams& params, const TaskSpec& spec, const fs::path& out) {
  Json a;
  const AdjacencyGraph g = assemble(params);
  const std::size_t seq = spec.seq_len;
  a["l1_whh"] = params.w_hh.sum_abs();
  a["resolvent_penalty"] = resolvent_penalty(params, 0.8, seq).value;
  a["spectral_radius"] = g.w.max_abs() > 0.0 ? spectral_radius(g.w) : 0.0;

  const bool write = !out.empty();
  const bool modular = params.inputs() == spec.features_all() &&
                       params.outputs() == spec.features_all();

  if (g.w.max_abs() == 0.0 || a["spectral_radius"].get<double>() == 0.0) {
    a["note"] = "graph has zero spectral radius; normalised measures skipped";
    return a;
  }
  const AdjacencyGraph ng = normalize(g);
  const IoMap rio = resolvent_io_default(g, seq);
  if (write) save_matrix_csv(out / "maps" / "rio.csv", rio.values, {{"kind", rio.describe()}});

  Json hops = Json::array();
  for (int k = 2; k <= static_cast<int>(seq) + 1; ++k) {
    const IoMap hop = hop_io(ng, k);
    Json h{{"k", k}, {"magnitude", hop.values.sum_abs()}};
    if (modular && hop.values.max_abs() > 0.0)
      h["block_contrast"] = block_contrast(hop.values, spec.modules, spec.features);
    hops.push_back(h);
    if (write)
      save_matrix_csv(out / "maps" / ("hop_k" + std::to_string(k) + ".csv"), hop.values,
                      {{"kind", hop.describe() + " normalized"}});
  }
  a["hops"] = hops;
  if (modular) a["rio_block_contrast"] = block_contrast(rio.values, spec.modules, spec.features);

  if (modular && has_optimal_map(spec.kind)) {
    const OptimalMap opt = optimal_map(spec);
    a["pearson_rio_optimal"] = pearson(rio.values, opt.weights);
    a["pearson_whh_optimal"] = pearson(params.w_hh, opt.weights);
    if (write)
      save_matrix_csv(out / "maps" / "optimal.csv", opt.weights,
                      {{"kind", "optimal " + std::string(to_string(spec.kind))}});
  }
  if (write) save_matrix_csv(out / "maps" / "w_hh.csv", params.w_hh, {{"kind", "w_hh"}});
  return a;
}

// ---------------------------------------------------------------------------
// Experiments

AggregateReport run_fig3(const ExperimentConfig& config, const fs::path& out) {
  config.validate();
  if (config.repeats < 2) throw ConfigError("repeats: fig3 needs at least 2 repeats");
  const std::vector<TaskKind> tasks{TaskKind::ModuleAveraging, TaskKind::Subtraction,
                                    TaskKind::Addition, TaskKind::Multiplication};
  const std::size_t base = config.task.seed;
  const std::size_t reps = config.repeats;

  std::map<TaskKind, OptimalMap> optimal;
  for (TaskKind kind : tasks) {
    TaskSpec spec = config.task;
    spec.kind = kind;
    optimal.emplace(kind, optimal_map(spec));
  }

  auto cells = run_cells(tasks.size() * reps, config.jobs, [&](std::size_t i) {
    const TaskKind kind = tasks[i / reps];
    const std::size_t rep = i % reps;
    TaskSpec spec = config.task;
    spec.kind = kind;
    spec.seed = data_seed(base, rep);
    TrainConfig tc = config.train;
    tc.seed = init_seed(base, rep, 0);
    if (kind == TaskKind::Multiplication) tc.beta = config.multiplication_beta;

    CellOutput cell;
    cell.record.group = std::string(to_string(kind));
    cell.record.repeat = rep;
    cell.record.beta = tc.beta;
    const Dataset data = make_dataset(spec);
    RunResult result;
    cell.record.data_seed = spec.seed;
    cell.record.init_seed = tc.seed;
    try {
      result = train(data, spec, tc);
    } catch (const TrainingDiverged& e) {
      cell.record.diverged = true;
      cell.record.note = e.what();
      return cell;
    }
    cell.curves = curves_table(result);

    const OptimalMap& opt = optimal.at(kind);
    const Matrix rio = resolvent_io_default(assemble(result.final_params), spec.seq_len).values;
    auto& m = cell.record.metrics;
    m["pearson_rio"] = pearson(rio, opt.weights);
    m["pearson_whh"] = pearson(result.final_params.w_hh, opt.weights);
    m["test_mse"] = result.final_test_mse;
    m["val_mse"] = result.final_val_mse;
    if (is_linear(kind)) m["oracle_test_mse"] = oracle_mse(opt, data, data.split.test);
    cell.maps["rio"] = rio;
    cell.maps["w_hh"] = result.final_params.w_hh;
    return cell;
  });

  AggregateReport report;
  report.experiment = "fig3";
  report.repeats = reps;
  for (auto& c : cells) report.runs.push_back(c.record);
  summarize(report);

  Json sanity = Json::object();
  for (TaskKind kind : tasks)
    sanity[std::string(to_string(kind))] =
        pearson(optimal.at(kind).weights, optimal.at(kind).weights);
  report.extra["oracle_self_correlation"] = sanity;

  if (!out.empty()) {
    Manifest manifest;
    for (TaskKind kind : tasks) {
      const std::string name(to_string(kind));
      const fs::path opt_path = out / "maps" / (name + "_optimal.csv");
      save_matrix_csv(opt_path, optimal.at(kind).weights, {{"kind", "optimal " + name}});
      manifest.add(out, opt_path, "optimal input-output map",
                   {{"rows", "input feature"}, {"cols", "output feature"}});
      for (const char* what : {"rio", "w_hh"}) {
        const auto ms = collect_maps(cells, name, what);
        if (ms.empty()) continue;
        for (const bool sem : {false, true}) {
          const std::string suffix = std::string(what) + (sem ? "_sem" : "_mean");
          const fs::path p = out / "maps" / (name + "_" + suffix + ".csv");
          save_matrix_csv(p, sem ? sem_of(ms) : mean_of(ms),
                          {{"kind", suffix}, {"runs", ms.size()}});
          manifest.add(out, p, std::string(sem ? "SEM" : "mean") + " of " + what + " across runs",
                       {{"rows", "input feature"}, {"cols", "output feature"}});
        }
      }
    }
    write_run_curves(out, manifest, cells);
    finish(out, report, config, manifest);
  }
  return report;
}

AggregateReport run_fig4(const ExperimentConfig& config, const fs::path& out) {
  config.validate();
  if (config.task.kind != TaskKind::OnOffAveraging)
    throw ConfigError("task: fig4 requires on_off_averaging");
  const std::size_t base = config.task.seed;
  const std::size_t reps = config.repeats;
  const int k_max = config.hop_max;
  const std::size_t mods = config.task.modules;
  const std::size_t feats = config.task.features;

  auto cells = run_cells(reps, config.jobs, [&](std::size_t rep) {
    TaskSpec spec = config.task;
    spec.seed = data_seed(base, rep);
    TrainConfig tc = config.train;
    tc.seed = init_seed(base, rep, 0);
    CellOutput cell;
    cell.record.group = "on_off_averaging";
    cell.record.repeat = rep;
    cell.record.beta = tc.beta;
    RunResult result;
    if (!train_cell(spec, tc, cell, result)) return cell;

    const AdjacencyGraph trained = normalize(assemble(result.final_params));
    const AdjacencyGraph initial = normalize(assemble(result.initial_params));
    std::vector<double> contrast, init_contrast;
    for (int k = 2; k <= k_max; ++k) {
      const Matrix hop = hop_io(trained, k).values;
      const double bc = block_contrast(hop, mods, feats);
      const double bc0 = block_contrast(hop_io(initial, k).values, mods, feats);
      cell.record.metrics["block_contrast_k" + std::to_string(k)] = bc;
      cell.record.metrics["init_block_contrast_k" + std::to_string(k)] = bc0;
      contrast.push_back(bc);
      init_contrast.push_back(bc0);
      cell.maps["hop_k" + std::to_string(k)] = hop;
    }
    // Every even k must beat each neighbouring odd k.
    bool ordered = true;
    for (int k = 2; k <= k_max; k += 2) {
      const double even = contrast[static_cast<std::size_t>(k - 2)];
      if (k - 1 >= 3) ordered = ordered && even > contrast[static_cast<std::size_t>(k - 3)];
      if (k + 1 <= k_max) ordered = ordered && even > contrast[static_cast<std::size_t>(k - 1)];
    }
    cell.record.metrics["even_beats_odd"] = ordered ? 1.0 : 0.0;
    cell.record.metrics["test_mse"] = result.final_test_mse;
    cell.record.series["block_contrast"] = contrast;
    cell.record.series["init_block_contrast"] = init_contrast;
    return cell;
  });

  AggregateReport report;
  report.experiment = "fig4";
  report.repeats = reps;
  std::size_t passing = 0;
  for (auto& c : cells) {
    report.runs.push_back(c.record);
    if (!c.record.diverged && c.record.metrics.at("even_beats_odd") == 1.0) ++passing;
  }
  summarize(report);

  const auto seq = static_cast<int>(config.task.seq_len);
  Json parity = Json::array();
  for (int k = 2; k <= k_max; ++k) {
    // k hops route an input that arrived k - 2 steps before the final step.
    const int arrival = seq - (k - 2);
    Json p{{"k", k}, {"parity", k % 2 == 0 ? "even" : "odd"}, {"arrival_step", arrival}};
    if (arrival >= 1)
      p["carries_signal"] =
          !is_noise_step(static_cast<std::size_t>(arrival - 1), config.task.seq_len);
    else
      p["carries_signal"] = nullptr;
    parity.push_back(p);
  }
  report.extra["parity"] = parity;
  report.extra["seeds_even_beats_odd"] = passing;

  if (!out.empty()) {
    Manifest manifest;
    Table bc{{"k", "block_contrast_mean", "block_contrast_sem", "init_block_contrast_mean"}, {}};
    for (int k = 2; k <= k_max; ++k) {
      const std::string key = "hop_k" + std::to_string(k);
      const auto ms = collect_maps(cells, "on_off_averaging", key);
      if (!ms.empty()) {
        const fs::path p = out / "maps" / ("on_off_averaging_" + key + "_mean.csv");
        save_matrix_csv(p, mean_of(ms), {{"kind", "hop k=" + std::to_string(k) + " normalized"},
                                         {"runs", ms.size()}});
        manifest.add(out, p, "mean W_io^k across runs",
                     {{"rows", "input feature"}, {"cols", "output feature"}});
      }
      if (report.summary.count("on_off_averaging")) {
        const auto& s = report.at("on_off_averaging", "block_contrast_k" + std::to_string(k));
        const auto& s0 = report.at("on_off_averaging", "init_block_contrast_k" + std::to_string(k));
        bc.rows.push_back({static_cast<double>(k), s.mean, s.sem, s0.mean});
      }
    }
    const fs::path bc_path = out / "runs" / "block_contrast.csv";
    save_table_csv(bc_path, bc);
    manifest.add(out, bc_path, "block contrast of W_io^k per hop length",
                 {{"x", "k"}, {"y", "block contrast"}});
    write_run_curves(out, manifest, cells);
    finish(out, report, config, manifest);
  }
  return report;
}

AggregateReport run_fig5(const ExperimentConfig& config, const fs::path& out) {
  config.validate();
  const std::vector<TaskKind> tasks{TaskKind::ModuleAveraging, TaskKind::OnOffAveraging};
  struct Family {
    std::string name;
    RegKind reg;
  };
  std::vector<Family> families{{"l1", RegKind::L1Whh}, {"resolvent", RegKind::ResolventIO}};
  std::vector<double> betas = config.beta_grid.values();
  const std::size_t grid_points = betas.size();
  if (config.include_zero_beta) {
    betas.push_back(0.0);
    families.push_back({"none", RegKind::None});
  }
  const std::size_t base = config.task.seed;
  const std::size_t reps = config.repeats;
  const std::size_t seq = config.task.seq_len;
  const int k_hi = static_cast<int>(seq) + 1;
  const double alpha = config.train.alpha;

  struct CellKey {
    TaskKind task;
    std::size_t family;
    std::size_t beta_index;
    std::size_t repeat;
  };
  std::vector<CellKey> keys;
  for (TaskKind task : tasks)
    for (std::size_t f = 0; f < families.size(); ++f)
      for (std::size_t b = 0; b < betas.size(); ++b) {
        // The unregularised family only exists at the beta = 0 sanity point.
        if (families[f].reg == RegKind::None && b < grid_points) continue;
        for (std::size_t r = 0; r < reps; ++r) keys.push_back({task, f, b, r});
      }

  const auto group_name = [&](TaskKind task, std::size_t f, std::size_t b) {
    return std::string(to_string(task)) + "/" + families[f].name + "/b" +
           (b < 10 ? "0" : "") + std::to_string(b);
  };

  auto cells = run_cells(keys.size(), config.jobs, [&](std::size_t i) {
    const CellKey& key = keys[i];
    TaskSpec spec = config.task;
    spec.kind = key.task;
    spec.seed = data_seed(base, key.repeat);
    TrainConfig tc = config.train;
    tc.reg = families[key.family].reg;
    tc.beta = betas[key.beta_index];
    tc.seed = init_seed(base, key.repeat, key.beta_index);

    CellOutput cell;
    cell.record.group = group_name(key.task, key.family, key.beta_index);
    cell.record.repeat = key.repeat;
    cell.record.beta_index = key.beta_index;
    cell.record.beta = tc.beta;
    RunResult result;
    if (!train_cell(spec, tc, cell, result)) return cell;

    const RnnParams& p = result.final_params;
    const AdjacencyGraph g = assemble(p);
    auto& m = cell.record.metrics;
    m["test_mse"] = result.final_test_mse;
    m["val_mse"] = result.final_val_mse;
    m["l1_whh"] = p.w_hh.sum_abs();
    m["weight_abs"] = p.w_ih.sum_abs() + p.w_hh.sum_abs() + p.w_ho.sum_abs();
    m["resolvent_abs"] = resolvent_penalty(p, alpha, 1, k_hi).value;
    std::vector<double> raw, normalized;
    for (const auto& h : hop_magnitude_profile(g, alpha, 1, k_hi, false))
      raw.push_back(h.magnitude);
    for (const auto& h : hop_magnitude_profile(g, alpha, 1, k_hi, true))
      normalized.push_back(h.magnitude);
    cell.record.series["hop_profile_raw"] = raw;
    cell.record.series["hop_profile_normalized"] = normalized;
    return cell;
  });

  AggregateReport report;
  report.experiment = "fig5";
  report.repeats = reps;
  for (auto& c : cells) report.runs.push_back(c.record);
  summarize(report);

  const auto mean_series = [&](const std::string& group, const std::string& name) {
    std::vector<double> acc;
    std::size_t n = 0;
    for (const auto& r : report.runs) {
      if (r.group != group || r.diverged) continue;
      const auto& s = r.series.at(name);
      if (acc.empty()) acc.assign(s.size(), 0.0);
      for (std::size_t k = 0; k < s.size(); ++k) acc[k] += s[k];
      ++n;
    }
    for (double& v : acc) v /= static_cast<double>(std::max<std::size_t>(n, 1));
    return acc;
  };

  report.extra["betas"] = betas;
  report.extra["hop_k_min"] = 1;
  report.extra["hop_k_max"] = k_hi;
  Json best = Json::object();
  for (TaskKind task : tasks) {
    const std::string tname(to_string(task));
    for (std::size_t f = 0; f < families.size(); ++f) {
      if (families[f].reg == RegKind::None) continue;
      // Best beta by mean validation MSE over the grid.
      std::size_t best_b = grid_points;
      double best_val = 0.0;
      for (std::size_t b = 0; b < grid_points; ++b) {
        const std::string group = group_name(task, f, b);
        if (!report.summary.count(group)) continue;
        const double v = report.at(group, "val_mse").mean;
        if (best_b == grid_points || v < best_val) {
          best_b = b;
          best_val = v;
        }
      }
      if (best_b == grid_points) continue;
      const std::string bg = group_name(task, f, best_b);
      const std::string last = group_name(task, f, grid_points - 1);
      Json entry{{"beta_index", best_b},
                 {"beta", betas[best_b]},
                 {"val_mse", best_val},
                 {"test_mse", report.at(bg, "test_mse").mean},
                 {"test_mse_sem", report.at(bg, "test_mse").sem},
                 {"hop_profile_raw", mean_series(bg, "hop_profile_raw")},
                 {"hop_profile_normalized", mean_series(bg, "hop_profile_normalized")}};
      if (report.summary.count(last))
        entry["largest_beta_degradation"] =
            report.at(last, "test_mse").mean / report.at(bg, "test_mse").mean;
      best[tname][families[f].name] = entry;
    }
  }
  report.extra["best"] = best;

  if (!out.empty()) {
    Manifest manifest;
    for (TaskKind task : tasks) {
      const std::string tname(to_string(task));
      for (std::size_t f = 0; f < families.size(); ++f) {
        Table t{{"beta", "test_mse_mean", "test_mse_sem", "val_mse_mean", "val_mse_sem",
                 "l1_whh_mean", "l1_whh_sem", "weight_abs_mean", "weight_abs_sem",
                 "resolvent_abs_mean", "resolvent_abs_sem"},
                {}};
        for (std::size_t b = 0; b < betas.size(); ++b) {
          const std::string group = group_name(task, f, b);
          if (!report.summary.count(group)) continue;
          std::vector<double> row{betas[b]};
          for (const char* metric :
               {"test_mse", "val_mse", "l1_whh", "weight_abs", "resolvent_abs"}) {
            row.push_back(report.at(group, metric).mean);
            row.push_back(report.at(group, metric).sem);
          }
          t.rows.push_back(std::move(row));
        }
        if (t.rows.empty()) continue;
        const fs::path p = out / "runs" / ("sweep_" + tname + "_" + families[f].name + ".csv");
        save_table_csv(p, t);
        manifest.add(out, p, families[f].name + " sweep over beta on " + tname,
                     {{"x", "beta"}, {"y", "mean/SEM of test MSE and sparsity terms"}});

        if (!best.contains(tname) || !best[tname].contains(families[f].name)) continue;
        const Json& e = best[tname][families[f].name];
        Table prof{{"k", "magnitude_raw", "magnitude_normalized"}, {}};
        const auto raw = e["hop_profile_raw"].get<std::vector<double>>();
        const auto nrm = e["hop_profile_normalized"].get<std::vector<double>>();
        for (std::size_t k = 0; k < raw.size(); ++k)
          prof.rows.push_back({static_cast<double>(k + 1), raw[k], nrm[k]});
        const fs::path pp =
            out / "maps" / ("best_profile_" + tname + "_" + families[f].name + ".csv");
        save_table_csv(pp, prof);
        manifest.add(out, pp, "hop magnitude profile of the best " + families[f].name + " model",
                     {{"x", "k"}, {"y", "sum |((alpha W)^k)_io|"}});
      }
    }
    write_run_curves(out, manifest, cells);
    finish(out, report, config, manifest);
  }
  return report;
}

SingleResult run_single(const ExperimentConfig& config, const fs::path& out) {
  config.validate();
  TaskSpec spec = config.task;
  TrainConfig tc = config.train;
  tc.seed = init_seed(spec.seed, 0, 0);
  const Dataset data = make_dataset(spec);

  SingleResult result;
  result.run = train(data, spec, tc);
  result.analysis = analyze_params(result.run.final_params, spec, out);
  result.analysis["final_test_mse"] = result.run.final_test_mse;
  result.analysis["final_val_mse"] = result.run.final_val_mse;
  result.analysis["initial_val_mse"] = result.run.initial_val_mse;
  if (is_linear(spec.kind))
    result.analysis["oracle_test_mse"] = oracle_mse(optimal_map(spec), data, data.split.test);

  if (!out.empty()) {
    Manifest manifest;
    const Json cfg = config_to_json(config);
    const fs::path ckpt = out / "checkpoint.csv";
    save_checkpoint(ckpt, result.run.final_params,
                    {{"seed", spec.seed}, {"init_seed", tc.seed}, {"config_hash", config_hash(cfg)},
                     {"task", std::string(to_string(spec.kind))}, {"seq_len", spec.seq_len},
                     {"modules", spec.modules}, {"features", spec.features}});
    manifest.add(out, ckpt, "final parameters");
    const fs::path curves = out / "runs" / "single.csv";
    save_table_csv(curves, curves_table(result.run));
    manifest.add(out, curves, "training curves", {{"x", "epoch"}, {"y", "mse / sparsity"}});
    for (const auto& entry : fs::directory_iterator(out / "maps"))
      manifest.add(out, entry.path(), "analysis map " + entry.path().stem().string(),
                   {{"rows", "input node"}, {"cols", "output node"}});
    Json report{{"experiment", "single"}, {"config", cfg}, {"analysis", result.analysis}};
    write_json(out / "report.json", report);
    manifest.add(out, out / "report.json", "run summary and analysis");
    // Directory iteration order is unspecified; sort for stable output.
    std::sort(manifest.entries.begin(), manifest.entries.end(),
              [](const Json& a, const Json& b) { return a["path"] < b["path"]; });
    write_json(out / "manifest.json", Json{{"experiment", "single"}, {"files", manifest.entries}});
  }
  return result;
}

}  // namespace pathweaver
