#include "pathweaver/taskgen.hpp"

#include <array>
#include <cmath>
#include <numeric>
#include <utility>

namespace pathweaver {

namespace {

constexpr std::array<std::pair<TaskKind, std::string_view>, 5> kTaskNames{{
    {TaskKind::ModuleAveraging, "module_averaging"},
    {TaskKind::Subtraction, "subtraction"},
    {TaskKind::Addition, "addition"},
    {TaskKind::Multiplication, "multiplication"},
    {TaskKind::OnOffAveraging, "on_off_averaging"},
}};

// Sub-stream ids for Rng::split.
constexpr std::uint64_t kStreamSamples = 1;
constexpr std::uint64_t kStreamSplit = 2;

}  // namespace

std::string_view to_string(TaskKind kind) {
  for (const auto& [k, name] : kTaskNames)
    if (k == kind) return name;
  return "unknown";
}

TaskKind parse_task_kind(std::string_view name) {
  for (const auto& [k, n] : kTaskNames)
    if (n == name) return k;
  throw ContractViolation("task: unknown task kind '" + std::string(name) + "'");
}

bool is_linear(TaskKind kind) {
  return kind == TaskKind::ModuleAveraging || kind == TaskKind::Subtraction ||
         kind == TaskKind::Addition;
}

void TaskSpec::validate() const {
  if (modules < 1 || features < 1 || seq_len < 1)
    throw ContractViolation("TaskSpec: modules, features and seq_len must be >= 1");
  if (samples < 3) throw ContractViolation("TaskSpec: samples must be >= 3");
  if (!(sigma_mu > 0.0) || !(sigma_eps >= 0.0))
    throw ContractViolation("TaskSpec: sigma_mu must be > 0 and sigma_eps >= 0");
  if (split.train < 0.0 || split.val < 0.0 || split.test < 0.0 ||
      std::abs(split.train + split.val + split.test - 1.0) > 1e-9)
    throw ContractViolation("TaskSpec: split fractions must be non-negative and sum to 1");
  if (static_cast<int>(kind) < 0 || static_cast<int>(kind) > 4)
    throw ContractViolation("TaskSpec: invalid task kind");
}

StructureMatrices structure_matrices(std::size_t modules) {
  if (modules < 1) throw ContractViolation("structure_matrices: modules must be >= 1");
  StructureMatrices s{Matrix::identity(modules), Matrix(modules, modules),
                      Matrix::identity(modules), Matrix(modules, modules)};
  for (std::size_t i = 0; i < modules; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      s.g_add(i, j) = 1.0;
      s.a_add(i, j) = 1.0;
    }
    if (i > 0) s.a_sub(i, i - 1) = -1.0;
  }
  return s;
}

Matrix feature_expander(std::size_t modules, std::size_t features) {
  if (modules < 1 || features < 1)
    throw ContractViolation("feature_expander: modules and features must be >= 1");
  Matrix g(modules * features, modules);
  for (std::size_t m = 0; m < modules; ++m)
    for (std::size_t f = 0; f < features; ++f) g(m * features + f, m) = 1.0;
  return g;
}

bool is_noise_step(std::size_t t, std::size_t seq_len) { return (seq_len - 1 - t) % 2 == 1; }

Dataset generate(const TaskSpec& spec) {
  spec.validate();
  const std::size_t m_count = spec.modules;
  const std::size_t f_per = spec.features;
  const std::size_t f_all = spec.features_all();
  const std::size_t seq = spec.seq_len;

  const StructureMatrices s = structure_matrices(m_count);
  const Matrix& mixing = spec.kind == TaskKind::Subtraction ? s.g_add : s.g_mod;

  Dataset d;
  d.samples = spec.samples;
  d.seq_len = seq;
  d.features = f_all;
  d.inputs.assign(spec.samples * seq * f_all, 0.0);
  d.targets = Matrix(spec.samples, f_all);

  Rng rng = Rng(spec.seed).split(kStreamSamples);
  std::vector<double> mu_h(m_count), mu_m(m_count), target(m_count);
  for (std::size_t n = 0; n < spec.samples; ++n) {
    for (double& v : mu_h) v = spec.sigma_mu * rng.normal();
    for (std::size_t i = 0; i < m_count; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < m_count; ++j) acc += mixing(i, j) * mu_h[j];
      mu_m[i] = acc;
    }

    for (std::size_t t = 0; t < seq; ++t)
      for (std::size_t f = 0; f < f_all; ++f)
        d.input(n, t, f) = mu_m[f / f_per] + spec.sigma_eps * rng.normal();
    if (spec.kind == TaskKind::OnOffAveraging) {
      for (std::size_t t = 0; t < seq; ++t) {
        if (!is_noise_step(t, seq)) continue;
        for (std::size_t f = 0; f < f_all; ++f) d.input(n, t, f) = rng.normal();
      }
    }

    switch (spec.kind) {
      case TaskKind::ModuleAveraging:
      case TaskKind::OnOffAveraging:
        target = mu_m;
        break;
      case TaskKind::Subtraction:
      case TaskKind::Addition: {
        const Matrix& op = spec.kind == TaskKind::Subtraction ? s.a_sub : s.a_add;
        for (std::size_t i = 0; i < m_count; ++i) {
          double acc = 0.0;
          for (std::size_t j = 0; j < m_count; ++j) acc += op(i, j) * mu_m[j];
          target[i] = acc;
        }
        break;
      }
      case TaskKind::Multiplication: {
        double prod = 1.0;
        for (std::size_t i = 0; i < m_count; ++i) target[i] = (prod *= mu_m[i]);
        break;
      }
    }
    for (std::size_t f = 0; f < f_all; ++f) d.targets(n, f) = target[f / f_per];
  }
  return d;
}

Dataset split(Dataset dataset, const TaskSpec& spec) {
  spec.validate();
  const std::size_t n = dataset.samples;
  // The epsilon keeps exact products such as 0.16 * 2000 from flooring low.
  const auto part = [n](double frac) {
    return static_cast<std::size_t>(std::floor(frac * static_cast<double>(n) + 1e-9));
  };
  const std::size_t n_val = part(spec.split.val);
  const std::size_t n_test = part(spec.split.test);
  if (n_val + n_test >= n || n_val == 0 || n_test == 0)
    throw ContractViolation("split: a partition is empty for " + std::to_string(n) + " samples");
  const std::size_t n_train = n - n_val - n_test;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng = Rng(spec.seed).split(kStreamSplit);
  for (std::size_t i = n - 1; i > 0; --i) {
    const auto j = static_cast<std::size_t>(rng.next_u64() % (i + 1));
    std::swap(order[i], order[j]);
  }

  auto first = order.begin();
  dataset.split.train.assign(first, first + static_cast<std::ptrdiff_t>(n_train));
  first += static_cast<std::ptrdiff_t>(n_train);
  dataset.split.val.assign(first, first + static_cast<std::ptrdiff_t>(n_val));
  first += static_cast<std::ptrdiff_t>(n_val);
  dataset.split.test.assign(first, order.end());
  return dataset;
}

Dataset make_dataset(const TaskSpec& spec) { return split(generate(spec), spec); }

}  // namespace pathweaver
