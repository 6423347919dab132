#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "pathweaver/numerics.hpp"

namespace pathweaver {

enum class TaskKind { ModuleAveraging, Subtraction, Addition, Multiplication, OnOffAveraging };

std::string_view to_string(TaskKind kind);
/// Accepts snake_case names ("module_averaging", "on_off_averaging", ...).
TaskKind parse_task_kind(std::string_view name);
bool is_linear(TaskKind kind);

struct SplitFractions {
  double train = 0.64;
  double val = 0.16;
  double test = 0.2;
};

struct TaskSpec {
  TaskKind kind = TaskKind::ModuleAveraging;
  std::size_t modules = 4;
  std::size_t features = 4;  // per module
  std::size_t seq_len = 5;
  std::size_t samples = 2000;
  double sigma_mu = 1.0;
  double sigma_eps = 1.0;
  std::uint64_t seed = 0;
  SplitFractions split;

  std::size_t features_all() const { return modules * features; }
  void validate() const;
};

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
};

/// Inputs are stored sample-major: inputs[(n * seq_len + t) * features + f].
struct Dataset {
  std::size_t samples = 0;
  std::size_t seq_len = 0;
  std::size_t features = 0;
  std::vector<double> inputs;
  Matrix targets;  // samples x features
  SplitIndices split;

  double input(std::size_t n, std::size_t t, std::size_t f) const {
    return inputs[(n * seq_len + t) * features + f];
  }
  double& input(std::size_t n, std::size_t t, std::size_t f) {
    return inputs[(n * seq_len + t) * features + f];
  }
};

struct StructureMatrices {
  Matrix g_mod;
  Matrix g_add;
  Matrix a_sub;
  Matrix a_add;
};

StructureMatrices structure_matrices(std::size_t modules);

/// I_M kron 1_F: (M*F) x M.
Matrix feature_expander(std::size_t modules, std::size_t features);

/// True when 0-based timestep t of an on-off sequence carries noise instead
/// of signal. The last step (t = L-1) always carries signal.
bool is_noise_step(std::size_t t, std::size_t seq_len);

/// Samples inputs and targets; split indices are left empty.
Dataset generate(const TaskSpec& spec);

/// Seeded shuffle then contiguous train/val/test partition.
Dataset split(Dataset dataset, const TaskSpec& spec);

/// generate() followed by split().
Dataset make_dataset(const TaskSpec& spec);

}  // namespace pathweaver
