#include "pathweaver/numerics.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace pathweaver {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols)
    throw ContractViolation("Matrix: data length " + std::to_string(data_.size()) +
                            " does not match " + std::to_string(rows) + "x" +
                            std::to_string(cols));
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r ? rows.begin()->size() : 0;
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw ContractViolation("Matrix::from_rows: ragged rows");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Matrix(r, c, std::move(data));
}

Matrix Matrix::transpose() const {
  Matrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

Matrix Matrix::block(std::size_t r0, std::size_t c0, std::size_t nr, std::size_t nc) const {
  if (r0 + nr > rows_ || c0 + nc > cols_) throw ContractViolation("Matrix::block: out of range");
  Matrix b(nr, nc);
  for (std::size_t i = 0; i < nr; ++i)
    for (std::size_t j = 0; j < nc; ++j) b(i, j) = (*this)(r0 + i, c0 + j);
  return b;
}

void Matrix::set_block(std::size_t r0, std::size_t c0, const Matrix& src) {
  if (r0 + src.rows() > rows_ || c0 + src.cols() > cols_)
    throw ContractViolation("Matrix::set_block: out of range");
  for (std::size_t i = 0; i < src.rows(); ++i)
    for (std::size_t j = 0; j < src.cols(); ++j) (*this)(r0 + i, c0 + j) = src(i, j);
}

void Matrix::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

double Matrix::sum() const {
  double s = 0.0;
  for (double v : data_) s += v;
  return s;
}

double Matrix::sum_abs() const {
  double s = 0.0;
  for (double v : data_) s += std::abs(v);
  return s;
}

double Matrix::max_abs() const {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::abs(v));
  return m;
}

bool Matrix::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

namespace {
void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ContractViolation(std::string(op) + ": shape mismatch " + std::to_string(a.rows()) +
                            "x" + std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) +
                            "x" + std::to_string(b.cols()));
}
}  // namespace

Matrix& Matrix::operator+=(const Matrix& o) {
  require_same_shape(*this, o, "operator+=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
  return *this;
}

Matrix& Matrix::operator-=(const Matrix& o) {
  require_same_shape(*this, o, "operator-=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
  return *this;
}

Matrix& Matrix::operator*=(double s) {
  for (double& v : data_) v *= s;
  return *this;
}

Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
Matrix operator*(Matrix a, double s) { return a *= s; }
Matrix operator*(double s, Matrix a) { return a *= s; }

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows())
    throw ContractViolation("matmul: inner dimensions differ (" + std::to_string(a.cols()) +
                            " vs " + std::to_string(b.rows()) + ")");
  Matrix c(a.rows(), b.cols());
  const std::size_t n = b.cols();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double* ci = c.data().data() + i * n;
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      const double* bk = b.data().data() + k * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += aik * bk[j];
    }
  }
  return c;
}

Matrix matpow(const Matrix& a, int k) {
  if (!a.is_square()) throw ContractViolation("matpow: matrix is not square");
  if (k < 0) throw ContractViolation("matpow: negative exponent");
  Matrix result = Matrix::identity(a.rows());
  for (int i = 0; i < k; ++i) result = matmul(result, a);
  return result;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

Matrix cholesky_solve(const Matrix& spd, const Matrix& rhs) {
  if (!spd.is_square() || spd.rows() != rhs.rows())
    throw ContractViolation("cholesky_solve: incompatible shapes");
  const std::size_t n = spd.rows();
  Matrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double d = spd(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > 0.0)) throw std::runtime_error("cholesky_solve: matrix is not positive definite");
    l(j, j) = std::sqrt(d);
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = spd(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / l(j, j);
    }
  }
  Matrix x = rhs;
  for (std::size_t c = 0; c < x.cols(); ++c) {
    for (std::size_t i = 0; i < n; ++i) {
      double s = x(i, c);
      for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * x(k, c);
      x(i, c) = s / l(i, i);
    }
    for (std::size_t i = n; i-- > 0;) {
      double s = x(i, c);
      for (std::size_t k = i + 1; k < n; ++k) s -= l(k, i) * x(k, c);
      x(i, c) = s / l(i, i);
    }
  }
  return x;
}

namespace {

double frobenius(const Matrix& a) {
  double s = 0.0;
  for (double v : a.data()) s += v * v;
  return std::sqrt(s);
}

// Gelfand estimate ||A^(2^m)||^(1/2^m) via repeated squaring, rescaling each
// step so the iterate stays representable.
double gelfand_radius(const Matrix& a, double tol) {
  double log_scale = 0.0;
  Matrix p = a;
  double estimate = 0.0;
  double power = 1.0;
  for (int m = 0; m < 60; ++m) {
    const double norm = frobenius(p);
    if (norm == 0.0) return 0.0;
    const double next = std::exp((log_scale + std::log(norm)) / power);
    if (m > 4 && std::abs(next - estimate) <= tol * next) return next;
    estimate = next;
    p *= 1.0 / norm;
    log_scale = 2.0 * (log_scale + std::log(norm));
    p = matmul(p, p);
    power *= 2.0;
  }
  throw ConvergenceError("spectral_radius: growth-rate estimate did not settle", estimate);
}

}  // namespace

double spectral_radius(const Matrix& a, double tol) {
  if (!a.is_square()) throw ContractViolation("spectral_radius: matrix is not square");
  if (a.max_abs() == 0.0) throw ContractViolation("spectral_radius: zero matrix");
  if (!(tol > 0.0)) throw ContractViolation("spectral_radius: tolerance must be positive");
  const auto n = static_cast<Eigen::Index>(a.rows());
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> view(
      a.data().data(), n, n);
  Eigen::EigenSolver<Eigen::MatrixXd> solver(view, /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success) return gelfand_radius(a, tol);
  double rho = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) rho = std::max(rho, std::abs(solver.eigenvalues()[i]));
  return rho;
}

double pearson(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "pearson");
  const std::size_t n = a.size();
  if (n < 2) throw UndefinedCorrelation("pearson: need at least two entries");
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ma += a.data()[i];
    mb += b.data()[i];
  }
  ma /= static_cast<double>(n);
  mb /= static_cast<double>(n);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double da = a.data()[i] - ma;
    const double db = b.data()[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa == 0.0 || sbb == 0.0) throw UndefinedCorrelation("pearson: input has zero variance");
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
  std::uint64_t z = (x += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

Rng::Rng(std::uint64_t seed) : seed_(seed) {
  std::uint64_t x = seed;
  for (auto& s : s_) s = splitmix64(x);
}

std::uint64_t Rng::next_u64() {
  const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double Rng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

Rng Rng::split(std::uint64_t stream) const { return Rng(derive_seed(seed_, {stream})); }

Matrix sample_normal(Rng& rng, double mean, double std, std::size_t rows, std::size_t cols) {
  if (!(std >= 0.0)) throw ContractViolation("sample_normal: negative standard deviation");
  Matrix m(rows, cols);
  for (double& v : m.data()) v = mean + std * rng.normal();
  return m;
}

std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> parts) {
  std::uint64_t x = base;
  std::uint64_t h = splitmix64(x);
  for (std::uint64_t p : parts) {
    x = h ^ (p + 0x632BE59BD9B4E019ULL);
    h = splitmix64(x);
  }
  return h;
}

MeanSem mean_sem(std::span<const double> values) {
  MeanSem out;
  if (values.empty()) return out;
  double s = 0.0;
  for (double v : values) s += v;
  const auto n = static_cast<double>(values.size());
  out.mean = s / n;
  if (values.size() < 2) return out;
  double ss = 0.0;
  for (double v : values) ss += (v - out.mean) * (v - out.mean);
  out.sem = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  return out;
}

}  // namespace pathweaver
