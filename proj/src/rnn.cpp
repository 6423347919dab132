#include "pathweaver/rnn.hpp"

#include <cmath>
#include <numeric>
#include <string>

namespace pathweaver {

namespace {

constexpr std::uint64_t kStreamInit = 11;
constexpr std::uint64_t kStreamShuffle = 12;

void check_batch(const RnnParams& params, const SequenceBatch& batch) {
  params.check_shapes();
  if (batch.features != params.inputs())
    throw ContractViolation("forward: batch has " + std::to_string(batch.features) +
                            " features but the network expects " +
                            std::to_string(params.inputs()));
  if (batch.inputs.size() != batch.batch * batch.seq_len * batch.features)
    throw ContractViolation("forward: batch input length does not match its shape");
  if (batch.seq_len < 1) throw ContractViolation("forward: empty sequences");
}

}  // namespace

SequenceBatch gather(const Dataset& data, std::span<const std::size_t> indices) {
  SequenceBatch out;
  out.batch = indices.size();
  out.seq_len = data.seq_len;
  out.features = data.features;
  const std::size_t stride = data.seq_len * data.features;
  out.inputs.resize(out.batch * stride);
  out.targets = Matrix(out.batch, data.targets.cols());
  for (std::size_t b = 0; b < indices.size(); ++b) {
    const std::size_t n = indices[b];
    if (n >= data.samples) throw ContractViolation("gather: sample index out of range");
    std::copy_n(data.inputs.begin() + static_cast<std::ptrdiff_t>(n * stride), stride,
                out.inputs.begin() + static_cast<std::ptrdiff_t>(b * stride));
    const auto src = data.targets.row(n);
    std::copy(src.begin(), src.end(), out.targets.row(b).begin());
  }
  return out;
}

ForwardCache forward(const RnnParams& params, const SequenceBatch& batch) {
  check_batch(params, batch);
  const std::size_t nin = params.inputs();
  const std::size_t nh = params.hidden();
  const std::size_t nout = params.outputs();
  const std::size_t seq = batch.seq_len;

  ForwardCache cache;
  cache.batch = batch.batch;
  cache.seq_len = seq;
  cache.hidden = nh;
  cache.states.assign(batch.batch * seq * nh, 0.0);
  cache.outputs = Matrix(batch.batch, nout);

  // Transposed copies turn each matrix-vector product into contiguous axpy
  // updates, which vectorise without reassociating sums.
  const Matrix w_ih_t = params.w_ih.transpose();
  const Matrix w_hh_t = params.w_hh.transpose();
  const Matrix w_ho_t = params.w_ho.transpose();
  const double* wi = w_ih_t.data().data();
  const double* wr = w_hh_t.data().data();
  const double* wo = w_ho_t.data().data();
  const double* b_h = params.b_h.data().data();
  const double* b_o = params.b_o.data().data();

  for (std::size_t b = 0; b < batch.batch; ++b) {
    const double* prev = nullptr;
    for (std::size_t t = 0; t < seq; ++t) {
      const double* x = batch.inputs.data() + (b * seq + t) * nin;
      double* h = cache.states.data() + (b * seq + t) * nh;
      std::copy_n(b_h, nh, h);
      for (std::size_t f = 0; f < nin; ++f) {
        const double xf = x[f];
        const double* col = wi + f * nh;
        for (std::size_t j = 0; j < nh; ++j) h[j] += col[j] * xf;
      }
      if (prev != nullptr) {
        for (std::size_t k = 0; k < nh; ++k) {
          const double pk = prev[k];
          const double* col = wr + k * nh;
          for (std::size_t j = 0; j < nh; ++j) h[j] += col[j] * pk;
        }
      }
      for (std::size_t j = 0; j < nh; ++j) h[j] = std::tanh(h[j]);
      prev = h;
    }
    double* out = cache.outputs.row(b).data();
    std::copy_n(b_o, nout, out);
    for (std::size_t j = 0; j < nh; ++j) {
      const double pj = prev[j];
      const double* col = wo + j * nout;
      for (std::size_t r = 0; r < nout; ++r) out[r] += col[r] * pj;
    }
  }
  return cache;
}

double mse(const Matrix& output, const Matrix& target) {
  if (output.rows() != target.rows() || output.cols() != target.cols())
    throw ContractViolation("mse: shape mismatch");
  if (output.size() == 0) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < output.size(); ++i) {
    const double d = output.data()[i] - target.data()[i];
    s += d * d;
  }
  return s / static_cast<double>(output.size());
}

RnnParams backward(const RnnParams& params, const SequenceBatch& batch, const ForwardCache& cache,
                   const RegTerm* reg, double beta) {
  check_batch(params, batch);
  const std::size_t nin = params.inputs();
  const std::size_t nh = params.hidden();
  const std::size_t nout = params.outputs();
  const std::size_t seq = batch.seq_len;
  if (cache.batch != batch.batch || cache.hidden != nh || cache.seq_len != seq)
    throw ContractViolation("backward: cache does not belong to this batch");

  RnnParams grad = RnnParams::zeros_like(params);
  double* g_ih = grad.w_ih.data().data();
  double* g_hh = grad.w_hh.data().data();
  double* g_ho = grad.w_ho.data().data();
  double* g_bh = grad.b_h.data().data();
  double* g_bo = grad.b_o.data().data();
  const double* w_hh = params.w_hh.data().data();
  const double* w_ho = params.w_ho.data().data();

  const double scale = 2.0 / static_cast<double>(batch.batch * nout);
  std::vector<double> dout(nout), dh(nh), da(nh);
  for (std::size_t b = 0; b < batch.batch; ++b) {
    const double* h_last = cache.states.data() + (b * seq + seq - 1) * nh;
    for (std::size_t r = 0; r < nout; ++r)
      dout[r] = scale * (cache.outputs(b, r) - batch.targets(b, r));

    std::fill(dh.begin(), dh.end(), 0.0);
    for (std::size_t r = 0; r < nout; ++r) {
      const double d = dout[r];
      g_bo[r] += d;
      double* go = g_ho + r * nh;
      const double* wo = w_ho + r * nh;
      for (std::size_t j = 0; j < nh; ++j) {
        go[j] += d * h_last[j];
        dh[j] += wo[j] * d;
      }
    }

    for (std::size_t t = seq; t-- > 0;) {
      const double* h = cache.states.data() + (b * seq + t) * nh;
      const double* x = batch.inputs.data() + (b * seq + t) * nin;
      const double* prev = t > 0 ? h - nh : nullptr;
      for (std::size_t j = 0; j < nh; ++j) da[j] = dh[j] * (1.0 - h[j] * h[j]);
      std::fill(dh.begin(), dh.end(), 0.0);
      for (std::size_t j = 0; j < nh; ++j) {
        const double d = da[j];
        g_bh[j] += d;
        double* gi = g_ih + j * nin;
        for (std::size_t f = 0; f < nin; ++f) gi[f] += d * x[f];
        if (prev != nullptr) {
          double* gr = g_hh + j * nh;
          const double* wr = w_hh + j * nh;
          for (std::size_t k = 0; k < nh; ++k) {
            gr[k] += d * prev[k];
            dh[k] += wr[k] * d;
          }
        }
      }
    }
  }

  if (reg != nullptr) compose_loss(0.0, *reg, beta, &grad);
  return grad;
}

AdamState AdamState::for_params(const RnnParams& params) {
  AdamState s;
  s.m = RnnParams::zeros_like(params);
  s.v = RnnParams::zeros_like(params);
  return s;
}

void adam_step(RnnParams& params, const RnnParams& gradient, AdamState& state, double lr) {
  ++state.step;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  auto p = params.tensors();
  auto g = gradient.tensors();
  auto m = state.m.tensors();
  auto v = state.v.tensors();
  for (std::size_t i = 0; i < p.size(); ++i) {
    auto pd = p[i]->data();
    auto gd = g[i]->data();
    auto md = m[i]->data();
    auto vd = v[i]->data();
    for (std::size_t e = 0; e < pd.size(); ++e) {
      md[e] = state.beta1 * md[e] + (1.0 - state.beta1) * gd[e];
      vd[e] = state.beta2 * vd[e] + (1.0 - state.beta2) * gd[e] * gd[e];
      const double m_hat = md[e] / c1;
      const double v_hat = vd[e] / c2;
      pd[e] -= lr * m_hat / (std::sqrt(v_hat) + state.eps);
    }
  }
}

void TrainConfig::validate() const {
  if (!(lr > 0.0)) throw ContractViolation("TrainConfig: lr must be > 0");
  if (!(beta >= 0.0)) throw ContractViolation("TrainConfig: beta must be >= 0");
  if (reg == RegKind::ResolventIO && !(alpha > 0.0 && alpha < 1.0))
    throw ContractViolation("TrainConfig: alpha must lie in (0, 1) for the resolvent penalty");
}

RunResult train(const Dataset& data, const TaskSpec& spec, const TrainConfig& config) {
  spec.validate();
  config.validate();
  if (data.split.train.empty() || data.split.val.empty() || data.split.test.empty())
    throw ContractViolation("train: dataset has not been split");

  const std::size_t f_all = data.features;
  const std::size_t nh = config.hidden ? config.hidden : f_all;
  RnnParams params = init_params(derive_seed(config.seed, {kStreamInit}), f_all, nh, f_all);
  AdamState adam = AdamState::for_params(params);

  const SequenceBatch train_set = gather(data, data.split.train);
  const SequenceBatch val_set = gather(data, data.split.val);
  const SequenceBatch test_set = gather(data, data.split.test);
  const bool full_batch = config.batch_size == 0 || config.batch_size >= train_set.batch;

  RunResult result;
  result.initial_params = params;
  result.initial_val_mse = mse(forward(params, val_set).outputs, val_set.targets);
  result.final_val_mse = result.initial_val_mse;
  result.final_test_mse = mse(forward(params, test_set).outputs, test_set.targets);
  result.train_loss.reserve(config.epochs);
  result.val_loss.reserve(config.epochs);
  result.test_loss.reserve(config.epochs);
  result.sparsity.reserve(config.epochs);

  const auto penalty = [&](const RnnParams& p) {
    return evaluate_regularizer(config.reg, p, config.alpha, spec.seq_len);
  };

  ForwardCache train_cache = forward(params, train_set);
  std::vector<std::size_t> order(data.split.train.begin(), data.split.train.end());
  Rng shuffle_rng = Rng(derive_seed(config.seed, {kStreamShuffle}));

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    double train_mse = 0.0;
    if (full_batch) {
      const RegTerm reg = penalty(params);
      const RnnParams grad = backward(params, train_set, train_cache, &reg, config.beta);
      adam_step(params, grad, adam, config.lr);
      train_cache = forward(params, train_set);
      train_mse = mse(train_cache.outputs, train_set.targets);
    } else {
      for (std::size_t i = order.size() - 1; i > 0; --i) {
        const auto j = static_cast<std::size_t>(shuffle_rng.next_u64() % (i + 1));
        std::swap(order[i], order[j]);
      }
      for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
        const std::size_t len = std::min(config.batch_size, order.size() - start);
        const SequenceBatch mb = gather(data, std::span(order).subspan(start, len));
        const ForwardCache cache = forward(params, mb);
        const RegTerm reg = penalty(params);
        const RnnParams grad = backward(params, mb, cache, &reg, config.beta);
        adam_step(params, grad, adam, config.lr);
      }
      train_mse = mse(forward(params, train_set).outputs, train_set.targets);
    }

    if (!std::isfinite(train_mse) || !params.all_finite())
      throw TrainingDiverged("train: loss became non-finite at epoch " + std::to_string(epoch),
                             epoch);
    result.train_loss.push_back(train_mse);
    result.val_loss.push_back(mse(forward(params, val_set).outputs, val_set.targets));
    result.test_loss.push_back(mse(forward(params, test_set).outputs, test_set.targets));
    result.sparsity.push_back(config.reg == RegKind::None ? 0.0 : penalty(params).value);
  }

  if (config.epochs > 0) {
    result.final_val_mse = result.val_loss.back();
    result.final_test_mse = result.test_loss.back();
  }
  result.final_params = std::move(params);
  return result;
}

RunResult train(const TaskSpec& spec, const TrainConfig& config) {
  return train(make_dataset(spec), spec, config);
}

}  // namespace pathweaver
