#pragma once

#include <array>
#include <cstddef>
#include <cstdint>

#include "pathweaver/numerics.hpp"

namespace pathweaver {

/// Weights of a one-layer tanh RNN, stored destination x source so the
/// forward pass applies W * x. Biases are column vectors.
struct RnnParams {
  Matrix w_ih;  // hidden x inputs
  Matrix w_hh;  // hidden x hidden
  Matrix w_ho;  // outputs x hidden
  Matrix b_h;   // hidden x 1
  Matrix b_o;   // outputs x 1

  std::size_t inputs() const { return w_ih.cols(); }
  std::size_t hidden() const { return w_hh.rows(); }
  std::size_t outputs() const { return w_ho.rows(); }

  static RnnParams zeros(std::size_t inputs, std::size_t hidden, std::size_t outputs);
  /// Same shapes as `like`, all zero.
  static RnnParams zeros_like(const RnnParams& like);

  std::array<Matrix*, 5> tensors() { return {&w_ih, &w_hh, &w_ho, &b_h, &b_o}; }
  std::array<const Matrix*, 5> tensors() const { return {&w_ih, &w_hh, &w_ho, &b_h, &b_o}; }

  /// Throws ContractViolation when the five shapes do not fit together.
  void check_shapes() const;
  bool all_finite() const;

  RnnParams& operator+=(const RnnParams& o);
  RnnParams& operator*=(double s);
  friend bool operator==(const RnnParams&, const RnnParams&) = default;
};

/// Every weight and bias uniform on (-1/sqrt(h), 1/sqrt(h)).
RnnParams init_params(std::uint64_t seed, std::size_t inputs, std::size_t hidden,
                      std::size_t outputs);

}  // namespace pathweaver
