#include "pdrtune/graphdata.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "pdrtune/coi.hpp"
#include "pdrtune/features.hpp"

namespace pdrtune::graphdata {

using aiger::Aig;
using aiger::AndGate;
using aiger::Latch;
using aiger::Literal;

namespace {

const char* kind_name(NodeKind k) {
  switch (k) {
  case NodeKind::Const: return "const";
  case NodeKind::Pi: return "pi";
  case NodeKind::Latch: return "latch";
  case NodeKind::And: return "and";
  case NodeKind::Po: return "po";
  }
  return "?";
}

} // namespace

GraphData build(const Aig& input, bool apply_coi) {
  if (apply_coi)
    return build(coi::reduce(input).first, false);
  const Aig& aig = input;

  bool const_used = false;
  for (const AndGate& g : aig.ands())
    const_used |= g.rhs0.is_const() || g.rhs1.is_const();
  for (const Latch& l : aig.latches())
    const_used |= l.next.is_const();
  for (Literal out : aig.outputs())
    const_used |= out.is_const();

  const int const_node = const_used ? 0 : -1;
  const int base = const_used ? 1 : 0;
  // Circuit variable v (input/latch/AND) maps to node base + v - 1.
  auto node_of_var = [&](unsigned var) -> int {
    return var == 0 ? const_node : base + static_cast<int>(var) - 1;
  };

  GraphData g;
  g.num_nodes = base + static_cast<int>(aig.max_var()) + static_cast<int>(aig.num_outputs());
  g.node_kind.assign(g.num_nodes, NodeKind::Pi);
  if (const_used)
    g.node_kind[0] = NodeKind::Const;
  for (unsigned v = 1; v <= aig.max_var(); ++v) {
    NodeKind k = NodeKind::And;
    switch (aig.kind_of(v)) {
    case Aig::NodeKind::Input: k = NodeKind::Pi; break;
    case Aig::NodeKind::Latch: k = NodeKind::Latch; break;
    default: break;
    }
    g.node_kind[node_of_var(v)] = k;
  }
  const int po_base = base + static_cast<int>(aig.max_var());
  for (unsigned k = 0; k < aig.num_outputs(); ++k)
    g.node_kind[po_base + static_cast<int>(k)] = NodeKind::Po;

  std::vector<double> inversions(g.num_nodes, 0.0);
  auto add_edge = [&](Literal src, int dst) {
    int s = node_of_var(src.var());
    if (s == dst)  // a latch feeding back into itself would be a self-loop
      return;
    g.edges.emplace_back(s, dst);
  };
  for (const AndGate& gate : aig.ands()) {
    int dst = node_of_var(gate.lhs);
    add_edge(gate.rhs0, dst);
    add_edge(gate.rhs1, dst);
    inversions[dst] = gate.rhs0.negated() + gate.rhs1.negated();
  }
  for (const Latch& l : aig.latches()) {
    int dst = node_of_var(l.var);
    add_edge(l.next, dst);
    inversions[dst] = l.next.negated();
  }
  for (unsigned k = 0; k < aig.num_outputs(); ++k) {
    Literal out = aig.outputs()[k];
    int dst = po_base + static_cast<int>(k);
    add_edge(out, dst);
    inversions[dst] = out.negated();
  }

  std::vector<unsigned> fanout(g.num_nodes, 0);
  for (auto [src, dst] : g.edges)
    ++fanout[src];

  features::LevelInfo levels = features::compute_levels(aig);
  std::vector<unsigned> node_level(g.num_nodes, 0);
  for (unsigned v = 1; v <= aig.max_var(); ++v)
    node_level[node_of_var(v)] = levels.level[v];
  for (unsigned k = 0; k < aig.num_outputs(); ++k)
    node_level[po_base + static_cast<int>(k)] = levels.level[aig.outputs()[k].var()];
  unsigned max_level = 0;
  for (unsigned lvl : node_level)
    max_level = std::max(max_level, lvl);

  g.node_features.assign(static_cast<std::size_t>(g.num_nodes) * kNodeFeatureDim, 0.0);
  for (int n = 0; n < g.num_nodes; ++n) {
    double* row = g.node_features.data() + static_cast<std::size_t>(n) * kNodeFeatureDim;
    row[static_cast<std::size_t>(g.node_kind[n])] = 1.0;
    row[5] = inversions[n] / 2.0;
    row[6] = std::log1p(static_cast<double>(fanout[n]));
    row[7] = max_level ? static_cast<double>(node_level[n]) / max_level : 0.0;
  }
  return g;
}

std::string GraphData::edgelist_text() const {
  std::string out;
  for (auto [src, dst] : edges)
    out += std::to_string(src) + ' ' + std::to_string(dst) + '\n';
  return out;
}

std::string GraphData::nodefeat_csv() const {
  std::string out = "node,kind,k_const,k_pi,k_latch,k_and,k_po,inversions,log_fanout,level\n";
  for (int n = 0; n < num_nodes; ++n) {
    const double* row = feature_row(n);
    char buf[200];
    std::snprintf(buf, sizeof(buf), "%d,%s,%g,%g,%g,%g,%g,%g,%g,%g\n", n,
                  kind_name(node_kind[n]), row[0], row[1], row[2], row[3], row[4], row[5],
                  row[6], row[7]);
    out += buf;
  }
  return out;
}

} // namespace pdrtune::graphdata
