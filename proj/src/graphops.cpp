#include "pathweaver/graphops.hpp"

#include <cmath>
#include <sstream>

namespace pathweaver {

std::string IoMap::describe() const {
  std::ostringstream os;
  switch (kind) {
    case IoMapKind::Hop:
      os << "hop k=" << hop;
      break;
    case IoMapKind::ResolventTruncated:
      os << "resolvent alpha=" << alpha << " k=" << k_min << ".." << k_max
         << (normalized ? " normalized" : " raw");
      break;
    case IoMapKind::Communicability:
      os << "communicability terms=" << terms;
      break;
  }
  return os.str();
}

AdjacencyGraph assemble(const RnnParams& params) {
  params.check_shapes();
  NodeLayout layout{params.inputs(), params.hidden(), params.outputs()};
  AdjacencyGraph g{Matrix(layout.size(), layout.size()), layout};
  g.w.set_block(0, layout.hidden_begin(), params.w_ih.transpose());
  g.w.set_block(layout.hidden_begin(), layout.hidden_begin(), params.w_hh.transpose());
  g.w.set_block(layout.hidden_begin(), layout.output_begin(), params.w_ho.transpose());
  return g;
}

Matrix io_block(const Matrix& full, const NodeLayout& layout) {
  return full.block(0, layout.output_begin(), layout.inputs, layout.outputs);
}

AdjacencyGraph normalize(const AdjacencyGraph& g) {
  if (g.w.max_abs() == 0.0) throw ContractViolation("normalize: zero adjacency matrix");
  const double rho = spectral_radius(g.w);
  if (!(rho > 0.0)) throw ContractViolation("normalize: spectral radius is zero");
  return {g.w * (1.0 / rho), g.layout};
}

IoMap hop_io(const AdjacencyGraph& g, int k) {
  if (k < 0) throw ContractViolation("hop_io: negative hop length");
  IoMap out;
  out.values = io_block(matpow(g.w, k), g.layout);
  out.kind = IoMapKind::Hop;
  out.hop = k;
  return out;
}

namespace {

void check_range(double alpha, int k_min, int k_max, const char* op) {
  if (!(alpha >= 0.0 && alpha < 1.0))
    throw ContractViolation(std::string(op) + ": alpha must lie in [0, 1)");
  if (k_min < 0 || k_min > k_max)
    throw ContractViolation(std::string(op) + ": need 0 <= k_min <= k_max");
}

Matrix walk_matrix(const AdjacencyGraph& g, bool normalized) {
  return normalized ? normalize(g).w : g.w;
}

}  // namespace

IoMap resolvent_io(const AdjacencyGraph& g, double alpha, int k_min, int k_max, bool normalized) {
  check_range(alpha, k_min, k_max, "resolvent_io");
  const Matrix scaled = walk_matrix(g, normalized) * alpha;
  const std::size_t n = g.layout.size();
  Matrix power = Matrix::identity(n);
  Matrix acc(n, n);
  for (int k = 0; k <= k_max; ++k) {
    if (k > 0) power = matmul(power, scaled);
    if (k >= k_min) acc += power;
  }
  IoMap out;
  out.values = io_block(acc, g.layout);
  out.kind = IoMapKind::ResolventTruncated;
  out.alpha = alpha;
  out.k_min = k_min;
  out.k_max = k_max;
  out.normalized = normalized;
  return out;
}

IoMap resolvent_io_default(const AdjacencyGraph& g, std::size_t seq_len) {
  return resolvent_io(g, 0.8, 2, static_cast<int>(seq_len) + 1, true);
}

IoMap communicability_io(const AdjacencyGraph& g, int terms) {
  if (terms < 1) throw ContractViolation("communicability_io: terms must be >= 1");
  const std::size_t n = g.layout.size();
  Matrix term = Matrix::identity(n);
  Matrix acc = term;
  for (int k = 1; k <= terms; ++k) {
    term = matmul(term, g.w) * (1.0 / k);
    acc += term;
  }
  IoMap out;
  out.values = io_block(acc, g.layout);
  out.kind = IoMapKind::Communicability;
  out.terms = terms;
  return out;
}

double block_contrast(const Matrix& map, std::size_t modules, std::size_t features) {
  const std::size_t f_all = modules * features;
  if (map.rows() != f_all || map.cols() != f_all)
    throw ContractViolation("block_contrast: map is not (M*F) x (M*F)");
  double within = 0.0, between = 0.0;
  std::size_t n_within = 0, n_between = 0;
  for (std::size_t r = 0; r < f_all; ++r) {
    for (std::size_t c = 0; c < f_all; ++c) {
      if (r / features == c / features) {
        within += std::abs(map(r, c));
        ++n_within;
      } else {
        between += std::abs(map(r, c));
        ++n_between;
      }
    }
  }
  const double mw = within / static_cast<double>(n_within);
  const double mb = n_between ? between / static_cast<double>(n_between) : 0.0;
  if (mw + mb == 0.0) throw UndefinedCorrelation("block_contrast: all-zero map");
  return (mw - mb) / (mw + mb);
}

std::vector<HopMagnitude> hop_magnitude_profile(const AdjacencyGraph& g, double alpha, int k_min,
                                                int k_max, bool normalized) {
  check_range(alpha, k_min, k_max, "hop_magnitude_profile");
  const Matrix scaled = walk_matrix(g, normalized) * alpha;
  std::vector<HopMagnitude> profile;
  Matrix power = Matrix::identity(g.layout.size());
  for (int k = 0; k <= k_max; ++k) {
    if (k > 0) power = matmul(power, scaled);
    if (k >= k_min) profile.push_back({k, io_block(power, g.layout).sum_abs()});
  }
  return profile;
}

}  // namespace pathweaver
