#pragma once

#include <cstddef>
#include <string_view>

#include "pathweaver/rnn_params.hpp"

namespace pathweaver {

enum class RegKind { None, L1Whh, ResolventIO };

std::string_view to_string(RegKind kind);
/// "none", "l1" or "resolvent".
RegKind parse_reg_kind(std::string_view name);

/// A penalty value and its gradient with respect to every parameter.
struct RegTerm {
  double value = 0.0;
  RnnParams gradient;
};

/// sum |W_hh|; subgradient sign(W_hh) with sign(0) = 0.
RegTerm l1_whh(const RnnParams& params);

/// sum |S_io| with S = sum_{k=k_min}^{k_max} (alpha W)^k on the raw
/// (unnormalised) whole-network adjacency W. Penalty defaults use
/// k = 1..L+1.
RegTerm resolvent_penalty(const RnnParams& params, double alpha, int k_min, int k_max);
RegTerm resolvent_penalty(const RnnParams& params, double alpha, std::size_t seq_len);

/// Zero penalty for RegKind::None.
RegTerm evaluate_regularizer(RegKind kind, const RnnParams& params, double alpha,
                             std::size_t seq_len);

struct ComposedLoss {
  double total = 0.0;
  double task = 0.0;
  double penalty = 0.0;  // beta * reg.value
};

/// total = task + beta * reg.value. When `gradient` is given, beta * the
/// penalty gradient is added to it in place.
ComposedLoss compose_loss(double task_loss, const RegTerm& reg, double beta,
                          RnnParams* gradient = nullptr);

}  // namespace pathweaver
