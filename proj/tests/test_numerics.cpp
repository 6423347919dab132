#include <doctest.h>

#include <cmath>
#include <vector>

#include "helpers.hpp"
#include "pathweaver/numerics.hpp"

using namespace pathweaver;
using pwtest::random_matrix;

TEST_CASE("matmul: identity and triple-loop oracle") {
  Rng rng(1);
  const Matrix b = random_matrix(rng, 3, 3);
  CHECK(matmul(Matrix::identity(3), b) == b);
  const Matrix a = random_matrix(rng, 5, 5);
  CHECK(max_abs_diff(matmul(a, a), pwtest::triple_loop(a, a)) < 1e-12);
  const Matrix c = random_matrix(rng, 4, 7);
  const Matrix d = random_matrix(rng, 7, 2);
  CHECK(max_abs_diff(matmul(c, d), pwtest::triple_loop(c, d)) < 1e-12);
  CHECK_THROWS_AS(matmul(c, c), ContractViolation);
}

TEST_CASE("matmul: length-2 route in a three-node chain") {
  // 1 -> 2 -> 3
  const Matrix a = Matrix::from_rows({{0, 1, 0}, {0, 0, 1}, {0, 0, 0}});
  const Matrix a2 = matmul(a, a);
  CHECK(a2(0, 2) == 1.0);
  CHECK(a2.sum() == 1.0);
}

TEST_CASE("matpow: trivial exponents and the directed path") {
  Rng rng(2);
  const Matrix a = random_matrix(rng, 4, 4);
  CHECK(matpow(a, 0) == Matrix::identity(4));
  CHECK(matpow(a, 1) == a);
  Matrix path(4, 4);
  for (std::size_t i = 0; i + 1 < 4; ++i) path(i, i + 1) = 1.0;
  const Matrix p3 = matpow(path, 3);
  CHECK(p3(0, 3) == 1.0);
  CHECK(p3.sum_abs() == 1.0);
  CHECK_THROWS_AS(matpow(random_matrix(rng, 2, 3), 2), ContractViolation);
  CHECK_THROWS_AS(matpow(a, -1), ContractViolation);
}

TEST_CASE("matpow: power law on contractive matrices") {
  Rng rng(3);
  Matrix a = random_matrix(rng, 8, 8);
  a *= 1.0 / spectral_radius(a);
  for (int j = 0; j <= 8; ++j)
    for (int k = 0; j + k <= 8; ++k) {
      const Matrix lhs = matpow(a, j + k);
      const Matrix rhs = matmul(matpow(a, j), matpow(a, k));
      CHECK(max_abs_diff(lhs, rhs) <= 1e-10 * std::max(1.0, lhs.max_abs()));
    }
}

TEST_CASE("spectral_radius: closed forms") {
  Matrix d(3, 3);
  d(0, 0) = 2.0;
  d(1, 1) = 1.0;
  d(2, 2) = 0.5;
  CHECK(spectral_radius(d) == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(spectral_radius(Matrix::identity(5)) == doctest::Approx(1.0).epsilon(1e-9));
  // Rotation: complex pair of modulus 3.
  const Matrix r = Matrix::from_rows({{0, -3}, {3, 0}});
  CHECK(spectral_radius(r) == doctest::Approx(3.0).epsilon(1e-9));
  CHECK_THROWS_AS(spectral_radius(Matrix(2, 3)), ContractViolation);
}

TEST_CASE("spectral_radius: growth-rate oracle and homogeneity") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(100 + seed);
    const Matrix a = random_matrix(rng, 10, 10);
    const double rho = spectral_radius(a);
    // ||A^k v||^(1/k) with renormalisation, k = 500.
    Matrix v(10, 1, 1.0);
    double log_growth = 0.0;
    const Matrix scaled = a * (1.0 / rho);
    for (int k = 0; k < 500; ++k) {
      v = matmul(scaled, v);
      double n = 0.0;
      for (double x : v.data()) n += x * x;
      n = std::sqrt(n);
      log_growth += std::log(n);
      v *= 1.0 / n;
    }
    const double oracle = rho * std::exp(log_growth / 500.0);
    CHECK(std::abs(rho - oracle) / rho < 1e-2);
    CHECK(spectral_radius(a * -2.5) == doctest::Approx(2.5 * rho).epsilon(1e-8));
  }
}

TEST_CASE("pearson: identities and affine invariance") {
  Rng rng(4);
  const Matrix a = random_matrix(rng, 4, 4);
  CHECK(pearson(a, a) == doctest::Approx(1.0));
  CHECK(pearson(a, a * -1.0) == doctest::Approx(-1.0));
  Matrix b = a * 2.0;
  for (double& x : b.data()) x += 3.0;
  CHECK(pearson(a, b) == doctest::Approx(1.0));
  const Matrix c = random_matrix(rng, 4, 4);
  Matrix c2 = c * 0.5;
  for (double& x : c2.data()) x -= 7.0;
  CHECK(pearson(a, c) == doctest::Approx(pearson(a, c2)).epsilon(1e-12));
  CHECK_THROWS_AS(pearson(a, Matrix(4, 4, 1.0)), UndefinedCorrelation);
  CHECK_THROWS_AS(pearson(a, Matrix(2, 8)), ContractViolation);
}

TEST_CASE("Rng: determinism, streams and normal moments") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  Rng s1 = Rng(42).split(1), s2 = Rng(42).split(2);
  CHECK(s1.next_u64() != s2.next_u64());
  CHECK(derive_seed(1, {2, 3}) == derive_seed(1, {2, 3}));
  CHECK(derive_seed(1, {2, 3}) != derive_seed(1, {3, 2}));

  Rng r1(7), r2(7);
  CHECK(sample_normal(r1, 0, 1, 3, 3) == sample_normal(r2, 0, 1, 3, 3));
  Rng z(1);
  const Matrix c = sample_normal(z, 2.5, 0.0, 2, 2);
  for (double x : c.data()) CHECK(x == 2.5);
  CHECK_THROWS_AS(sample_normal(z, 0, -1, 1, 1), ContractViolation);

  Rng big(9);
  const Matrix draws = sample_normal(big, 0.0, 1.0, 1, 100000);
  const double mean = draws.sum() / 1e5;
  double var = 0.0;
  for (double x : draws.data()) var += (x - mean) * (x - mean);
  var /= 1e5 - 1;
  CHECK(std::abs(mean) < 0.05);
  CHECK(std::abs(var - 1.0) < 0.05);
  for (int i = 0; i < 1000; ++i) {
    const double u = big.uniform();
    CHECK((u >= 0.0 && u < 1.0));
  }
}

TEST_CASE("mean_sem") {
  const std::vector<double> v{1, 2, 3, 4};
  const MeanSem ms = mean_sem(v);
  CHECK(ms.mean == doctest::Approx(2.5));
  CHECK(ms.sem == doctest::Approx(std::sqrt(5.0 / 3.0) / 2.0));
  const std::vector<double> one{3.0};
  CHECK(mean_sem(one).sem == 0.0);
}

TEST_CASE("cholesky_solve against Gauss-Jordan") {
  Rng rng(5);
  const Matrix a = random_matrix(rng, 6, 6);
  Matrix spd = matmul(a.transpose(), a) + Matrix::identity(6);
  const Matrix rhs = random_matrix(rng, 6, 3);
  const Matrix x = cholesky_solve(spd, rhs);
  CHECK(max_abs_diff(x, matmul(pwtest::gauss_inverse(spd), rhs)) < 1e-10);
}
