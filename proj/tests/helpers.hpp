#pragma once

#include <cmath>
#include <functional>

#include "pathweaver/numerics.hpp"
#include "pathweaver/rnn_params.hpp"

namespace pwtest {

using pathweaver::Matrix;
using pathweaver::Rng;

inline Matrix random_matrix(Rng& rng, std::size_t r, std::size_t c, double lo = -1.0,
                            double hi = 1.0) {
  Matrix m(r, c);
  for (double& v : m.data()) v = rng.uniform(lo, hi);
  return m;
}

inline Matrix triple_loop(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) acc += a(i, k) * b(k, j);
      out(i, j) = acc;
    }
  return out;
}

/// Gauss-Jordan inverse with partial pivoting; independent of the library.
inline Matrix gauss_inverse(Matrix a) {
  const std::size_t n = a.rows();
  Matrix inv = Matrix::identity(n);
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t p = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(a(r, c)) > std::abs(a(p, c))) p = r;
    for (std::size_t j = 0; j < n; ++j) {
      std::swap(a(c, j), a(p, j));
      std::swap(inv(c, j), inv(p, j));
    }
    const double d = a(c, c);
    for (std::size_t j = 0; j < n; ++j) {
      a(c, j) /= d;
      inv(c, j) /= d;
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c) continue;
      const double f = a(r, c);
      for (std::size_t j = 0; j < n; ++j) {
        a(r, j) -= f * a(c, j);
        inv(r, j) -= f * inv(c, j);
      }
    }
  }
  return inv;
}

/// max over entries of |analytic - numeric| / max(1, |numeric|), using
/// central differences on every parameter.
inline double max_fd_error(pathweaver::RnnParams params, const pathweaver::RnnParams& analytic,
                           const std::function<double(const pathweaver::RnnParams&)>& f,
                           double step = 1e-5) {
  double worst = 0.0;
  auto tensors = params.tensors();
  const auto grads = analytic.tensors();
  for (std::size_t t = 0; t < tensors.size(); ++t) {
    for (std::size_t i = 0; i < tensors[t]->size(); ++i) {
      double& x = tensors[t]->data()[i];
      const double saved = x;
      x = saved + step;
      const double up = f(params);
      x = saved - step;
      const double down = f(params);
      x = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double err =
          std::abs(grads[t]->data()[i] - numeric) / std::max(1.0, std::abs(numeric));
      worst = std::max(worst, err);
    }
  }
  return worst;
}

}  // namespace pwtest
