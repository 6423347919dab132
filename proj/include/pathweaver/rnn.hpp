#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "pathweaver/regularizers.hpp"
#include "pathweaver/rnn_params.hpp"
#include "pathweaver/taskgen.hpp"

namespace pathweaver {

/// A batch of sequences, inputs[(b * seq_len + t) * features + f], with one
/// target row per sequence.
struct SequenceBatch {
  std::size_t batch = 0;
  std::size_t seq_len = 0;
  std::size_t features = 0;
  std::vector<double> inputs;
  Matrix targets;  // batch x outputs
};

SequenceBatch gather(const Dataset& data, std::span<const std::size_t> indices);

struct ForwardCache {
  std::size_t batch = 0;
  std::size_t seq_len = 0;
  std::size_t hidden = 0;
  std::vector<double> states;  // (b * seq_len + t) * hidden + j
  Matrix outputs;              // batch x outputs

  double state(std::size_t b, std::size_t t, std::size_t j) const {
    return states[(b * seq_len + t) * hidden + j];
  }
};

/// h_t = tanh(W_ih x_t + W_hh h_{t-1} + b_h), h_0 = 0; readout W_ho h_L + b_o.
ForwardCache forward(const RnnParams& params, const SequenceBatch& batch);

/// Mean over batch and output dimensions of the squared error.
double mse(const Matrix& output, const Matrix& target);

/// Exact gradient of mse(forward(...), batch.targets) by backpropagation
/// through time. When `reg` is given, beta * reg->gradient is added.
RnnParams backward(const RnnParams& params, const SequenceBatch& batch, const ForwardCache& cache,
                   const RegTerm* reg = nullptr, double beta = 0.0);

struct AdamState {
  RnnParams m;
  RnnParams v;
  std::int64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static AdamState for_params(const RnnParams& params);
};

void adam_step(RnnParams& params, const RnnParams& gradient, AdamState& state, double lr);

struct TrainConfig {
  std::size_t epochs = 100;
  double lr = 0.01;
  double beta = 0.001;
  RegKind reg = RegKind::L1Whh;
  double alpha = 0.8;
  std::uint64_t seed = 0;
  std::size_t batch_size = 0;  // 0 = full batch
  std::size_t hidden = 0;      // 0 = same as the feature count

  void validate() const;
};

struct RunResult {
  std::vector<double> train_loss;  // task MSE after each epoch
  std::vector<double> val_loss;
  std::vector<double> test_loss;
  std::vector<double> sparsity;  // value of the configured penalty after each epoch
  RnnParams initial_params;
  RnnParams final_params;
  double initial_val_mse = 0.0;
  double final_val_mse = 0.0;
  double final_test_mse = 0.0;
};

class TrainingDiverged : public std::runtime_error {
 public:
  TrainingDiverged(const std::string& what, std::size_t epoch)
      : std::runtime_error(what), epoch_(epoch) {}
  std::size_t epoch() const noexcept { return epoch_; }

 private:
  std::size_t epoch_;
};

/// Trains on data.split.train with Adam; data must already be split.
RunResult train(const Dataset& data, const TaskSpec& spec, const TrainConfig& config);

/// Generates and splits the task data from spec, then trains.
RunResult train(const TaskSpec& spec, const TrainConfig& config);

}  // namespace pathweaver
