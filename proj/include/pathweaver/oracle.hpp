#pragma once

#include <span>

#include "pathweaver/numerics.hpp"
#include "pathweaver/taskgen.hpp"

namespace pathweaver {

/// Least-error linear input-output map of a task, F_all x F_all, rows index
/// input features and columns index output features.
struct OptimalMap {
  Matrix weights;
  TaskKind task = TaskKind::ModuleAveraging;
  std::size_t modules = 0;
  std::size_t features = 0;
  std::size_t seq_len = 0;
  double sigma_mu = 1.0;
  double sigma_eps = 1.0;
};

class UnsupportedTask : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Feature-to-target mixing for one timestep, F_all x M, such that the
/// noiseless features equal mixing * (module-level regression targets).
Matrix target_mixing(const TaskSpec& spec);

/// Stacks target_mixing over time: row t * F_all + f. Linear tasks only.
Matrix design_matrix(const TaskSpec& spec);

/// Ridge posterior-mean map (A'A + s_eps^2/s_mu^2 I)^-1 A', averaged over
/// time and duplicated across the features of each output module.
OptimalMap ridge_optimal_map(const TaskSpec& spec);

/// Expected Jacobian of the cumulative-product task at mu = 0.
OptimalMap multiplication_optimal_map(const TaskSpec& spec);

bool has_optimal_map(TaskKind kind);

/// Dispatches on spec.kind. The on-off task has no analytic map and throws
/// UnsupportedTask.
OptimalMap optimal_map(const TaskSpec& spec);

/// Test error of the ridge estimator behind a linear-task map: each output
/// is the map applied to the time-summed inputs.
double oracle_mse(const OptimalMap& map, const Dataset& data,
                  std::span<const std::size_t> indices);

/// Expands an M x M module-level map (rows output module, cols input module)
/// into the F_all x F_all input-by-output feature orientation.
Matrix expand_module_map(const Matrix& module_map, std::size_t features);

}  // namespace pathweaver
