#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "pathweaver/graphops.hpp"

using namespace pathweaver;

namespace {

RnnParams random_params(std::uint64_t seed, std::size_t i, std::size_t h, std::size_t o) {
  Rng rng(seed);
  RnnParams p;
  p.w_ih = pwtest::random_matrix(rng, h, i);
  p.w_hh = pwtest::random_matrix(rng, h, h);
  p.w_ho = pwtest::random_matrix(rng, o, h);
  p.b_h = pwtest::random_matrix(rng, h, 1);
  p.b_o = pwtest::random_matrix(rng, o, 1);
  return p;
}

// Scaling and squaring with a long Taylor series on the scaled matrix.
Matrix expm_oracle(const Matrix& a) {
  int s = 0;
  while (a.max_abs() * static_cast<double>(a.rows()) / std::pow(2.0, s) > 0.5) ++s;
  const Matrix x = a * std::pow(2.0, -s);
  Matrix term = Matrix::identity(a.rows());
  Matrix sum = term;
  for (int k = 1; k < 25; ++k) {
    term = pwtest::triple_loop(term, x) * (1.0 / k);
    sum += term;
  }
  for (int i = 0; i < s; ++i) sum = pwtest::triple_loop(sum, sum);
  return sum;
}

}  // namespace

TEST_CASE("assemble: hand-checked layout") {
  RnnParams p;
  p.w_ih = Matrix::from_rows({{1, 2}, {3, 4}});
  p.w_hh = Matrix::from_rows({{5, 6}, {7, 8}});
  p.w_ho = Matrix::from_rows({{9, 10}, {11, 12}});
  p.b_h = Matrix(2, 1, 99.0);
  p.b_o = Matrix(2, 1, 99.0);
  const AdjacencyGraph g = assemble(p);
  const Matrix expect = Matrix::from_rows({{0, 0, 1, 3, 0, 0},
                                           {0, 0, 2, 4, 0, 0},
                                           {0, 0, 5, 7, 9, 11},
                                           {0, 0, 6, 8, 10, 12},
                                           {0, 0, 0, 0, 0, 0},
                                           {0, 0, 0, 0, 0, 0}});
  CHECK(g.w == expect);
  CHECK(g.layout.size() == 6);
  CHECK(assemble(RnnParams::zeros(2, 3, 2)).w.max_abs() == 0.0);
}

TEST_CASE("hop_io: block algebra and path enumeration") {
  const RnnParams p = random_params(1, 3, 4, 3);
  const AdjacencyGraph g = assemble(p);
  CHECK(hop_io(g, 0).values.max_abs() == 0.0);
  CHECK(hop_io(g, 1).values.max_abs() == 0.0);
  CHECK(max_abs_diff(hop_io(g, 2).values,
                     pwtest::triple_loop(p.w_ih.transpose(), p.w_ho.transpose())) < 1e-12);

  const std::size_t n = g.layout.size();
  const Matrix h3 = hop_io(g, 3).values;
  for (std::size_t u = 0; u < 3; ++u)
    for (std::size_t v = 0; v < 3; ++v) {
      double acc = 0.0;
      for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b)
          acc += g.w(u, a) * g.w(a, b) * g.w(b, g.layout.output_begin() + v);
      CHECK(std::abs(h3(u, v) - acc) < 1e-12);
    }

  RnnParams no_rec = p;
  no_rec.w_hh.fill(0.0);
  CHECK(hop_io(assemble(no_rec), 3).values.max_abs() == 0.0);
}

TEST_CASE("hop_io: different graphs with the same square") {
  // Relabelling hidden units changes W but not W^2's io block.
  const RnnParams p = random_params(2, 2, 3, 2);
  RnnParams q = p;
  const std::size_t perm[3] = {2, 0, 1};
  for (std::size_t j = 0; j < 3; ++j) {
    for (std::size_t i = 0; i < 2; ++i) q.w_ih(j, i) = p.w_ih(perm[j], i);
    for (std::size_t o = 0; o < 2; ++o) q.w_ho(o, j) = p.w_ho(o, perm[j]);
  }
  CHECK(!(assemble(p).w == assemble(q).w));
  CHECK(max_abs_diff(hop_io(assemble(p), 2).values, hop_io(assemble(q), 2).values) < 1e-12);
}

TEST_CASE("normalize") {
  const AdjacencyGraph g = assemble(random_params(3, 2, 4, 2));
  CHECK(spectral_radius(normalize(g).w) == doctest::Approx(1.0).epsilon(1e-6));
  AdjacencyGraph d{Matrix::from_rows({{2, 0}, {0, 1}}), {0, 2, 0}};
  CHECK(normalize(d).w == Matrix::from_rows({{1, 0}, {0, 0.5}}));
  CHECK_THROWS_AS(normalize(assemble(RnnParams::zeros(2, 2, 2))), ContractViolation);
}

TEST_CASE("resolvent_io: term sums, scaling and the direct inverse") {
  const AdjacencyGraph g = assemble(random_params(4, 2, 2, 2));
  const AdjacencyGraph ng = normalize(g);

  Matrix sum(2, 2);
  for (int k = 2; k <= 6; ++k) sum += hop_io(ng, k).values * std::pow(0.8, k);
  CHECK(max_abs_diff(resolvent_io(g, 0.8, 2, 6, true).values, sum) < 1e-12);
  CHECK(max_abs_diff(resolvent_io_default(g, 5).values, sum) < 1e-12);
  CHECK(resolvent_io(g, 0.0, 2, 6, false).values.max_abs() == 0.0);

  // Scaling W by c scales term k by c^k.
  AdjacencyGraph scaled = g;
  scaled.w *= 0.5;
  for (int k = 2; k <= 5; ++k)
    CHECK(max_abs_diff(hop_io(scaled, k).values, hop_io(g, k).values * std::pow(0.5, k)) <
          1e-12);

  // Large truncation approaches the inverse minus the skipped low powers.
  const std::size_t n = ng.layout.size();
  const Matrix aw = ng.w * 0.8;
  const Matrix inv = pwtest::gauss_inverse(Matrix::identity(n) - aw);
  const Matrix direct = io_block(inv - Matrix::identity(n) - aw, ng.layout);
  CHECK(max_abs_diff(resolvent_io(g, 0.8, 2, 400, true).values, direct) < 1e-8);

  CHECK_THROWS_AS(resolvent_io(g, 1.0, 2, 6, true), ContractViolation);
  CHECK_THROWS_AS(resolvent_io(g, 0.5, 4, 2, true), ContractViolation);
}

TEST_CASE("communicability_io") {
  CHECK(communicability_io(assemble(RnnParams::zeros(2, 2, 2)), 20).values.max_abs() == 0.0);
  // A single input -> output edge of weight a: exp(W) = I + W exactly.
  const AdjacencyGraph edge{Matrix::from_rows({{0, 0.7}, {0, 0}}), {1, 0, 1}};
  CHECK(communicability_io(edge, 10).values(0, 0) == doctest::Approx(0.7));

  const AdjacencyGraph g = assemble(random_params(5, 2, 2, 2));
  const Matrix oracle = io_block(expm_oracle(g.w), g.layout);
  CHECK(max_abs_diff(communicability_io(g, 30).values, oracle) < 1e-8);
}

TEST_CASE("block_contrast") {
  Matrix block(16, 16);
  for (std::size_t i = 0; i < 16; ++i)
    for (std::size_t j = 0; j < 16; ++j) block(i, j) = i / 4 == j / 4 ? 1.0 : 0.0;
  CHECK(block_contrast(block, 4, 4) == doctest::Approx(1.0));
  CHECK(block_contrast(Matrix(16, 16, 0.3), 4, 4) == doctest::Approx(0.0));

  Matrix shuffled(16, 16);
  const auto p = [](std::size_t i) { return (i % 4) * 4 + i / 4; };
  for (std::size_t i = 0; i < 16; ++i)
    for (std::size_t j = 0; j < 16; ++j) shuffled(i, j) = block(p(i), p(j));
  CHECK(block_contrast(shuffled, 4, 4) < 0.2);

  CHECK_THROWS_AS(block_contrast(Matrix(16, 16), 4, 4), UndefinedCorrelation);
  CHECK_THROWS_AS(block_contrast(block, 3, 4), ContractViolation);
}

TEST_CASE("hop_magnitude_profile") {
  const auto zero = hop_magnitude_profile(assemble(RnnParams::zeros(2, 2, 2)), 0.8, 1, 4, false);
  CHECK(zero.size() == 4);
  for (const auto& h : zero) CHECK(h.magnitude == 0.0);

  const AdjacencyGraph g = assemble(random_params(6, 2, 3, 2));
  const auto prof = hop_magnitude_profile(g, 0.8, 1, 5, false);
  for (const auto& h : prof)
    CHECK(h.magnitude ==
          doctest::Approx(hop_io(g, h.k).values.sum_abs() * std::pow(0.8, h.k)).epsilon(1e-12));
}
