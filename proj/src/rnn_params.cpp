#include "pathweaver/rnn_params.hpp"

#include <cmath>

namespace pathweaver {

RnnParams RnnParams::zeros(std::size_t inputs, std::size_t hidden, std::size_t outputs) {
  return {Matrix(hidden, inputs), Matrix(hidden, hidden), Matrix(outputs, hidden),
          Matrix(hidden, 1), Matrix(outputs, 1)};
}

RnnParams RnnParams::zeros_like(const RnnParams& like) {
  return zeros(like.inputs(), like.hidden(), like.outputs());
}

void RnnParams::check_shapes() const {
  const std::size_t h = w_hh.rows();
  const bool ok = w_hh.cols() == h && w_ih.rows() == h && w_ho.cols() == h && b_h.rows() == h &&
                  b_h.cols() == 1 && b_o.rows() == w_ho.rows() && b_o.cols() == 1 && h > 0 &&
                  w_ih.cols() > 0 && w_ho.rows() > 0;
  if (!ok) throw ContractViolation("RnnParams: inconsistent parameter shapes");
}

bool RnnParams::all_finite() const {
  for (const Matrix* m : tensors())
    if (!m->all_finite()) return false;
  return true;
}

RnnParams& RnnParams::operator+=(const RnnParams& o) {
  auto mine = tensors();
  auto theirs = o.tensors();
  for (std::size_t i = 0; i < mine.size(); ++i) *mine[i] += *theirs[i];
  return *this;
}

RnnParams& RnnParams::operator*=(double s) {
  for (Matrix* m : tensors()) *m *= s;
  return *this;
}

RnnParams init_params(std::uint64_t seed, std::size_t inputs, std::size_t hidden,
                      std::size_t outputs) {
  if (inputs < 1 || hidden < 1 || outputs < 1)
    throw ContractViolation("init_params: dimensions must be >= 1");
  RnnParams p = RnnParams::zeros(inputs, hidden, outputs);
  const double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
  Rng rng(seed);
  for (Matrix* m : p.tensors())
    for (double& v : m->data()) v = rng.uniform(-bound, bound);
  return p;
}

}  // namespace pathweaver
