#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace pathweaver {

/// Raised when a caller breaks an operation's precondition (shapes, ranges).
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Iterative estimate did not settle; carries the last value it produced.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double last_estimate)
      : std::runtime_error(what), last_estimate_(last_estimate) {}
  double last_estimate() const noexcept { return last_estimate_; }

 private:
  double last_estimate_;
};

class UndefinedCorrelation : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Matrix identity(std::size_t n);
  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool is_square() const noexcept { return rows_ == cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  Matrix transpose() const;
  Matrix block(std::size_t r0, std::size_t c0, std::size_t nr, std::size_t nc) const;
  void set_block(std::size_t r0, std::size_t c0, const Matrix& src);
  void fill(double v);

  double sum() const;
  double sum_abs() const;
  double max_abs() const;
  bool all_finite() const;

  Matrix& operator+=(const Matrix& o);
  Matrix& operator-=(const Matrix& o);
  Matrix& operator*=(double s);

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
Matrix operator*(Matrix a, double s);
Matrix operator*(double s, Matrix a);

Matrix matmul(const Matrix& a, const Matrix& b);

/// A^k by repeated multiplication; A^0 is the identity.
Matrix matpow(const Matrix& a, int k);

/// Largest element-wise |a - b|; shapes must agree.
double max_abs_diff(const Matrix& a, const Matrix& b);

/// Solves (S) x = B for symmetric positive definite S by Cholesky.
Matrix cholesky_solve(const Matrix& spd, const Matrix& rhs);

/// Largest eigenvalue magnitude. Non-symmetric input is fine; complex
/// dominant pairs are reported by modulus.
double spectral_radius(const Matrix& a, double tol = 1e-6);

/// Pearson correlation of the flattened entries.
double pearson(const Matrix& a, const Matrix& b);

/// xoshiro256** seeded through splitmix64. Normals come from Box-Muller.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi);
  double normal();

  /// Independent stream for a given purpose; the parent is not advanced.
  Rng split(std::uint64_t stream) const;

 private:
  std::uint64_t s_[4];
  std::uint64_t seed_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

Matrix sample_normal(Rng& rng, double mean, double std, std::size_t rows, std::size_t cols);

/// Mixes a base seed with any number of indices (run, grid point, purpose).
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> parts);

struct MeanSem {
  double mean = 0.0;
  double sem = 0.0;
};

/// Mean and standard error (sample std / sqrt(n)); sem is 0 for n < 2.
MeanSem mean_sem(std::span<const double> values);

}  // namespace pathweaver
