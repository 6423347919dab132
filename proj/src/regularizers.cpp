#include "pathweaver/regularizers.hpp"

#include <algorithm>
#include <string>
#include <vector>

#include "pathweaver/graphops.hpp"

namespace pathweaver {

namespace {

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

}  // namespace

std::string_view to_string(RegKind kind) {
  switch (kind) {
    case RegKind::None:
      return "none";
    case RegKind::L1Whh:
      return "l1";
    case RegKind::ResolventIO:
      return "resolvent";
  }
  return "unknown";
}

RegKind parse_reg_kind(std::string_view name) {
  if (name == "none") return RegKind::None;
  if (name == "l1") return RegKind::L1Whh;
  if (name == "resolvent") return RegKind::ResolventIO;
  throw ContractViolation("reg: unknown regulariser '" + std::string(name) + "'");
}

RegTerm l1_whh(const RnnParams& params) {
  RegTerm out{params.w_hh.sum_abs(), RnnParams::zeros_like(params)};
  auto src = params.w_hh.data();
  auto dst = out.gradient.w_hh.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = sign(src[i]);
  return out;
}

RegTerm resolvent_penalty(const RnnParams& params, double alpha, int k_min, int k_max) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw ContractViolation("resolvent_penalty: alpha must lie in (0, 1)");
  if (k_min < 0 || k_min > k_max)
    throw ContractViolation("resolvent_penalty: need 0 <= k_min <= k_max");

  const AdjacencyGraph g = assemble(params);
  const NodeLayout& lay = g.layout;
  const std::size_t n = lay.size();

  // T = alpha W', powers[m] = T^m, prefix[r] = sum_{m<r} T^m.
  const Matrix t = g.w.transpose() * alpha;
  std::vector<Matrix> powers{Matrix::identity(n)};
  std::vector<Matrix> prefix{Matrix(n, n)};
  for (int m = 0; m <= k_max; ++m) {
    if (m > 0) powers.push_back(matmul(powers.back(), t));
    prefix.push_back(prefix.back() + powers.back());
  }

  // S' = sum_{k=k_min}^{k_max} T^k, so S_io is read from the transposed block.
  const Matrix s_t = prefix[k_max + 1] - prefix[k_min];
  Matrix g_sign(n, n);
  double value = 0.0;
  for (std::size_t u = 0; u < lay.inputs; ++u) {
    for (std::size_t v = lay.output_begin(); v < n; ++v) {
      const double s = s_t(v, u);
      value += std::abs(s);
      g_sign(u, v) = sign(s);
    }
  }

  // d/dW tr(G' W^k) = sum_j (W')^j G (W')^(k-1-j). With alpha^k folded into T
  // this regroups as alpha * sum_j T^j G (sum_m T^m) over the admissible m.
  Matrix d(n, n);
  for (int j = 0; j < k_max; ++j) {
    const int m_hi = k_max - 1 - j;
    const int m_lo = std::max(0, k_min - 1 - j);
    if (m_lo > m_hi) continue;
    const Matrix tail = prefix[m_hi + 1] - prefix[m_lo];
    d += matmul(powers[j], matmul(g_sign, tail));
  }
  d *= alpha;

  RegTerm out{value, RnnParams::zeros_like(params)};
  const std::size_t hb = lay.hidden_begin();
  const std::size_t ob = lay.output_begin();
  out.gradient.w_ih = d.block(0, hb, lay.inputs, lay.hidden).transpose();
  out.gradient.w_hh = d.block(hb, hb, lay.hidden, lay.hidden).transpose();
  out.gradient.w_ho = d.block(hb, ob, lay.hidden, lay.outputs).transpose();
  return out;
}

RegTerm resolvent_penalty(const RnnParams& params, double alpha, std::size_t seq_len) {
  return resolvent_penalty(params, alpha, 1, static_cast<int>(seq_len) + 1);
}

RegTerm evaluate_regularizer(RegKind kind, const RnnParams& params, double alpha,
                             std::size_t seq_len) {
  switch (kind) {
    case RegKind::L1Whh:
      return l1_whh(params);
    case RegKind::ResolventIO:
      return resolvent_penalty(params, alpha, seq_len);
    case RegKind::None:
      break;
  }
  return {0.0, RnnParams::zeros_like(params)};
}

ComposedLoss compose_loss(double task_loss, const RegTerm& reg, double beta,
                          RnnParams* gradient) {
  if (!(beta >= 0.0)) throw ContractViolation("compose_loss: beta must be >= 0");
  ComposedLoss out;
  out.task = task_loss;
  out.penalty = beta * reg.value;
  out.total = task_loss + out.penalty;
  if (gradient != nullptr && beta != 0.0) {
    auto dst = gradient->tensors();
    auto src = reg.gradient.tensors();
    for (std::size_t i = 0; i < dst.size(); ++i) {
      auto dd = dst[i]->data();
      auto sd = src[i]->data();
      for (std::size_t e = 0; e < dd.size(); ++e) dd[e] += beta * sd[e];
    }
  }
  return out;
}

}  // namespace pathweaver
