#include "pathweaver/oracle.hpp"

#include <algorithm>
#include <string>
#include <vector>

namespace pathweaver {

namespace {

OptimalMap with_meta(const TaskSpec& spec, Matrix weights) {
  OptimalMap out;
  out.weights = std::move(weights);
  out.task = spec.kind;
  out.modules = spec.modules;
  out.features = spec.features;
  out.seq_len = spec.seq_len;
  out.sigma_mu = spec.sigma_mu;
  out.sigma_eps = spec.sigma_eps;
  return out;
}

}  // namespace

Matrix target_mixing(const TaskSpec& spec) {
  const Matrix expander = feature_expander(spec.modules, spec.features);
  const StructureMatrices s = structure_matrices(spec.modules);
  switch (spec.kind) {
    case TaskKind::ModuleAveraging:
      return expander;
    // Features carry cumulative sums of the targets.
    case TaskKind::Subtraction:
      return matmul(expander, s.g_add);
    // Targets are cumulative sums of the features; invert with A_sub.
    case TaskKind::Addition:
      return matmul(expander, s.a_sub);
    case TaskKind::Multiplication:
    case TaskKind::OnOffAveraging:
      break;
  }
  throw UnsupportedTask("design_matrix: task '" + std::string(to_string(spec.kind)) +
                        "' is not a linear regression task");
}

Matrix design_matrix(const TaskSpec& spec) {
  if (!is_linear(spec.kind))
    throw UnsupportedTask("design_matrix: task '" + std::string(to_string(spec.kind)) +
                          "' is not a linear regression task");
  const Matrix mixing = target_mixing(spec);
  const std::size_t f_all = spec.features_all();
  Matrix a(f_all * spec.seq_len, spec.modules);
  for (std::size_t t = 0; t < spec.seq_len; ++t) a.set_block(t * f_all, 0, mixing);
  return a;
}

Matrix expand_module_map(const Matrix& module_map, std::size_t features) {
  const std::size_t m = module_map.rows();
  Matrix out(m * features, m * features);
  for (std::size_t in = 0; in < m * features; ++in)
    for (std::size_t o = 0; o < m * features; ++o)
      out(in, o) = module_map(o / features, in / features);
  return out;
}

OptimalMap ridge_optimal_map(const TaskSpec& spec) {
  spec.validate();
  const Matrix a = design_matrix(spec);
  const Matrix at = a.transpose();
  Matrix normal = matmul(at, a);
  const double ridge = (spec.sigma_eps * spec.sigma_eps) / (spec.sigma_mu * spec.sigma_mu);
  for (std::size_t i = 0; i < normal.rows(); ++i) normal(i, i) += ridge;
  const Matrix w = cholesky_solve(normal, at);  // M x (F_all * L)

  const std::size_t f_all = spec.features_all();
  const auto seq = static_cast<double>(spec.seq_len);
  // Time-averaged output-module x input-feature map.
  Matrix per_feature(spec.modules, f_all);
  for (std::size_t m = 0; m < spec.modules; ++m)
    for (std::size_t t = 0; t < spec.seq_len; ++t)
      for (std::size_t f = 0; f < f_all; ++f) per_feature(m, f) += w(m, t * f_all + f) / seq;

  Matrix out(f_all, f_all);
  for (std::size_t in = 0; in < f_all; ++in)
    for (std::size_t o = 0; o < f_all; ++o) out(in, o) = per_feature(o / spec.features, in);
  return with_meta(spec, std::move(out));
}

OptimalMap multiplication_optimal_map(const TaskSpec& spec) {
  spec.validate();
  if (spec.kind != TaskKind::Multiplication)
    throw UnsupportedTask("multiplication_optimal_map: task is '" +
                          std::string(to_string(spec.kind)) + "'");
  // dO_j/dmu_i = prod_{k<=j, k!=i} mu_k for i <= j; every term with a mu
  // factor has zero mean, which leaves only dO_1/dmu_1 = 1.
  Matrix module_map(spec.modules, spec.modules);
  module_map(0, 0) = 1.0;
  return with_meta(spec, expand_module_map(module_map, spec.features));
}

bool has_optimal_map(TaskKind kind) { return kind != TaskKind::OnOffAveraging; }

OptimalMap optimal_map(const TaskSpec& spec) {
  if (spec.kind == TaskKind::Multiplication) return multiplication_optimal_map(spec);
  return ridge_optimal_map(spec);
}

double oracle_mse(const OptimalMap& map, const Dataset& data,
                  std::span<const std::size_t> indices) {
  if (!is_linear(map.task))
    throw UnsupportedTask("oracle_mse: the map of task '" + std::string(to_string(map.task)) +
                          "' is not an estimator");
  const std::size_t f_all = data.features;
  if (map.weights.rows() != f_all || map.weights.cols() != f_all)
    throw ContractViolation("oracle_mse: map does not match the dataset features");
  if (indices.empty()) return 0.0;
  std::vector<double> summed(f_all);
  double err = 0.0;
  for (std::size_t n : indices) {
    std::fill(summed.begin(), summed.end(), 0.0);
    for (std::size_t t = 0; t < data.seq_len; ++t)
      for (std::size_t f = 0; f < f_all; ++f) summed[f] += data.input(n, t, f);
    for (std::size_t g = 0; g < f_all; ++g) {
      double pred = 0.0;
      for (std::size_t f = 0; f < f_all; ++f) pred += map.weights(f, g) * summed[f];
      const double d = pred - data.targets(n, g);
      err += d * d;
    }
  }
  return err / static_cast<double>(indices.size() * f_all);
}

}  // namespace pathweaver
