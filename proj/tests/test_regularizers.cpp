#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "pathweaver/graphops.hpp"
#include "pathweaver/regularizers.hpp"

using namespace pathweaver;

namespace {

RnnParams random_params(std::uint64_t seed, std::size_t i, std::size_t h, std::size_t o,
                        double scale = 1.0) {
  Rng rng(seed);
  RnnParams p;
  p.w_ih = pwtest::random_matrix(rng, h, i, -scale, scale);
  p.w_hh = pwtest::random_matrix(rng, h, h, -scale, scale);
  p.w_ho = pwtest::random_matrix(rng, o, h, -scale, scale);
  p.b_h = pwtest::random_matrix(rng, h, 1);
  p.b_o = pwtest::random_matrix(rng, o, 1);
  return p;
}

double sgn(double x) { return (x > 0.0) - (x < 0.0); }

// dvalue/dW = sum_k alpha^k sum_j (W')^j G (W')^(k-1-j), written out term by term.
Matrix literal_double_sum(const AdjacencyGraph& g, double alpha, int k_max) {
  const std::size_t n = g.layout.size();
  Matrix s(n, n);
  for (int k = 1; k <= k_max; ++k) s += matpow(g.w * alpha, k);
  Matrix gm(n, n);
  const std::size_t ob = g.layout.output_begin();
  for (std::size_t u = 0; u < g.layout.inputs; ++u)
    for (std::size_t v = 0; v < g.layout.outputs; ++v) gm(u, ob + v) = sgn(s(u, ob + v));
  const Matrix wt = g.w.transpose();
  Matrix d(n, n);
  for (int k = 1; k <= k_max; ++k)
    for (int j = 0; j < k; ++j)
      d += pwtest::triple_loop(pwtest::triple_loop(matpow(wt, j), gm), matpow(wt, k - 1 - j)) *
           std::pow(alpha, k);
  return d;
}

double min_abs_sio(const RnnParams& p, double alpha, int k_max) {
  const AdjacencyGraph g = assemble(p);
  const IoMap s = resolvent_io(g, alpha, 1, k_max, false);
  double lo = INFINITY;
  for (double v : s.values.data())
    lo = std::min(lo, std::abs(v));
  return lo;
}

}  // namespace

TEST_CASE("l1_whh") {
  RnnParams p = RnnParams::zeros(2, 2, 2);
  RegTerm r = l1_whh(p);
  CHECK(r.value == 0.0);
  CHECK(r.gradient == RnnParams::zeros(2, 2, 2));

  p.w_hh = Matrix::from_rows({{1, -2}, {0, 3}});
  r = l1_whh(p);
  CHECK(r.value == 6.0);
  CHECK(r.gradient.w_hh == Matrix::from_rows({{1, -1}, {0, 1}}));
  CHECK(r.gradient.w_ih.max_abs() == 0.0);

  const RnnParams q = random_params(1, 3, 3, 3);
  const RegTerm rq = l1_whh(q);
  CHECK(pwtest::max_fd_error(q, rq.gradient, [](const RnnParams& x) { return l1_whh(x).value; }) <
        1e-6);
}

TEST_CASE("resolvent_penalty: value and zero network") {
  CHECK(resolvent_penalty(RnnParams::zeros(3, 3, 3), 0.8, std::size_t{3}).value == 0.0);
  const RnnParams p = random_params(2, 3, 3, 3);
  const AdjacencyGraph g = assemble(p);
  Matrix s(3, 3);
  for (int k = 1; k <= 4; ++k) s += hop_io(g, k).values * std::pow(0.8, k);
  CHECK(resolvent_penalty(p, 0.8, std::size_t{3}).value == doctest::Approx(s.sum_abs()));
  CHECK(resolvent_penalty(p, 0.8, 1, 4).value == doctest::Approx(s.sum_abs()));
}

TEST_CASE("resolvent_penalty: gradient matches finite differences") {
  int checked = 0;
  for (std::uint64_t seed = 0; seed < 40 && checked < 20; ++seed) {
    const RnnParams p = random_params(100 + seed, 3, 3, 3);
    if (min_abs_sio(p, 0.8, 4) < 1e-3) continue;
    const RegTerm r = resolvent_penalty(p, 0.8, std::size_t{3});
    CHECK(pwtest::max_fd_error(p, r.gradient, [](const RnnParams& x) {
            return resolvent_penalty(x, 0.8, std::size_t{3}).value;
          }) < 1e-4);
    ++checked;
  }
  CHECK(checked == 20);
}

TEST_CASE("resolvent_penalty: gradient equals the literal double sum") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const RnnParams p = random_params(200 + seed, 2, 4, 3);
    const AdjacencyGraph g = assemble(p);
    const Matrix d = literal_double_sum(g, 0.7, 5);
    const RegTerm r = resolvent_penalty(p, 0.7, 1, 5);
    const std::size_t hb = g.layout.hidden_begin(), ob = g.layout.output_begin();
    CHECK(max_abs_diff(r.gradient.w_ih, d.block(0, hb, 2, 4).transpose()) < 1e-10);
    CHECK(max_abs_diff(r.gradient.w_hh, d.block(hb, hb, 4, 4).transpose()) < 1e-10);
    CHECK(max_abs_diff(r.gradient.w_ho, d.block(hb, ob, 4, 3).transpose()) < 1e-10);
  }
}

TEST_CASE("resolvent_penalty: biases are excluded, input weights matter") {
  const RnnParams p = random_params(3, 3, 3, 3);
  RnnParams q = p;
  q.b_h.fill(5.0);
  q.b_o.fill(-5.0);
  const RegTerm rp = resolvent_penalty(p, 0.8, std::size_t{3});
  const RegTerm rq = resolvent_penalty(q, 0.8, std::size_t{3});
  CHECK(rp.value == rq.value);
  CHECK(rp.gradient.b_h.max_abs() == 0.0);
  CHECK(rp.gradient.b_o.max_abs() == 0.0);
  q = p;
  q.w_ih(0, 0) += 0.5;
  CHECK(resolvent_penalty(q, 0.8, std::size_t{3}).value != rp.value);
}

TEST_CASE("compose_loss and evaluate_regularizer") {
  const RnnParams p = random_params(4, 2, 2, 2);
  const RegTerm reg = l1_whh(p);
  CHECK(compose_loss(1.5, reg, 0.0).total == 1.5);
  CHECK(compose_loss(1.5, RegTerm{0.0, RnnParams::zeros_like(p)}, 0.3).total == 1.5);
  RnnParams grad = RnnParams::zeros_like(p);
  const ComposedLoss c = compose_loss(1.0, reg, 0.1, &grad);
  CHECK(c.penalty == doctest::Approx(0.1 * reg.value));
  CHECK(c.total == doctest::Approx(1.0 + 0.1 * reg.value));
  CHECK(max_abs_diff(grad.w_hh, reg.gradient.w_hh * 0.1) < 1e-15);

  CHECK(evaluate_regularizer(RegKind::None, p, 0.8, 5).value == 0.0);
  CHECK(evaluate_regularizer(RegKind::L1Whh, p, 0.8, 5).value == reg.value);
  CHECK(evaluate_regularizer(RegKind::ResolventIO, p, 0.8, 5).value ==
        resolvent_penalty(p, 0.8, std::size_t{5}).value);
  CHECK(parse_reg_kind("resolvent") == RegKind::ResolventIO);
  CHECK_THROWS_AS(parse_reg_kind("l2"), ContractViolation);
}
