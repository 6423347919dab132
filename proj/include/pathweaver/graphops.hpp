#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "pathweaver/numerics.hpp"
#include "pathweaver/rnn_params.hpp"

namespace pathweaver {

/// Node ordering of the whole-network graph: inputs, then hidden, then outputs.
struct NodeLayout {
  std::size_t inputs = 0;
  std::size_t hidden = 0;
  std::size_t outputs = 0;

  std::size_t size() const { return inputs + hidden + outputs; }
  std::size_t hidden_begin() const { return inputs; }
  std::size_t output_begin() const { return inputs + hidden; }
};

/// w(u, v) is the weight of the directed edge u -> v.
struct AdjacencyGraph {
  Matrix w;
  NodeLayout layout;
};

enum class IoMapKind { Hop, ResolventTruncated, Communicability };

/// Input-to-output block of a walk measure; rows are input nodes and
/// columns are output nodes.
struct IoMap {
  Matrix values;
  IoMapKind kind = IoMapKind::Hop;
  int hop = 0;  // Hop
  double alpha = 0.0;  // ResolventTruncated
  int k_min = 0;
  int k_max = 0;
  bool normalized = false;
  int terms = 0;  // Communicability

  /// One-line description, e.g. "hop k=3" or "resolvent alpha=0.8 k=2..6 normalized".
  std::string describe() const;
};

AdjacencyGraph assemble(const RnnParams& params);

/// Input-output block of a full n x n matrix laid out as `layout`.
Matrix io_block(const Matrix& full, const NodeLayout& layout);

/// Divides by the spectral radius.
AdjacencyGraph normalize(const AdjacencyGraph& g);

IoMap hop_io(const AdjacencyGraph& g, int k);

/// Input-output block of sum_{k=k_min}^{k_max} (alpha W)^k, where W is the
/// spectrally normalised graph when `normalized` is set.
IoMap resolvent_io(const AdjacencyGraph& g, double alpha, int k_min, int k_max, bool normalized);

/// Analysis defaults: normalised graph, alpha = 0.8, k = 2..L+1.
IoMap resolvent_io_default(const AdjacencyGraph& g, std::size_t seq_len);

/// Input-output block of the truncated Taylor series of exp(W).
IoMap communicability_io(const AdjacencyGraph& g, int terms);

/// (mean |within| - mean |between|) / (mean |within| + mean |between|) over
/// the module partition of an (M*F) x (M*F) map.
double block_contrast(const Matrix& map, std::size_t modules, std::size_t features);

struct HopMagnitude {
  int k = 0;
  double magnitude = 0.0;
};

/// Per-hop sum of |((alpha W)^k)_io| for k in [k_min, k_max].
std::vector<HopMagnitude> hop_magnitude_profile(const AdjacencyGraph& g, double alpha, int k_min,
                                                int k_max, bool normalized);

}  // namespace pathweaver
