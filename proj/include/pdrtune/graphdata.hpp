#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "pdrtune/aiger.hpp"

namespace pdrtune::graphdata {

enum class NodeKind : unsigned char { Const, Pi, Latch, And, Po };

inline constexpr std::size_t kNodeFeatureDim = 8;

/// GNN input built from a (typically COI-reduced) circuit: a directed edge
/// list in signal-flow direction plus one feature row per node.
///
/// Node numbering is deterministic: the constant node (only if referenced),
/// then primary inputs, latches, AND gates in topological order, then one
/// node per primary output. Feature row layout: one-hot kind (5), fanin
/// inversion count / 2, log1p(fanout degree), level / max_level.
struct GraphData {
  int num_nodes = 0;
  std::vector<std::pair<int, int>> edges;  // (src, dst), fanin -> fanout
  std::vector<double> node_features;       // row-major, num_nodes x kNodeFeatureDim
  std::vector<NodeKind> node_kind;

  const double* feature_row(int node) const {
    return node_features.data() + static_cast<std::size_t>(node) * kNodeFeatureDim;
  }

  /// One `src dst` pair per line.
  std::string edgelist_text() const;
  /// CSV with a header row: node,kind,then the 8 feature columns.
  std::string nodefeat_csv() const;
};

/// Builds the graph; with `apply_coi` the circuit is cone-of-influence
/// reduced first (the standard path for GNN consumption).
GraphData build(const aiger::Aig& aig, bool apply_coi);

} // namespace pdrtune::graphdata
