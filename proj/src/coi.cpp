#include "pdrtune/coi.hpp"

#include <chrono>
#include <cstdio>

namespace pdrtune::coi {

using aiger::Aig;
using aiger::AndGate;
using aiger::Latch;
using aiger::Literal;

std::string CoiReport::csv_header() {
  return "circuit,ands_before,ands_after,latches_before,latches_after,reduction_pct,ms";
}

std::string CoiReport::to_csv_row(const std::string& circuit) const {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%u,%u,%u,%u,%.4f,%.3f", ands_before, ands_after,
                latches_before, latches_after, reduction_percent, elapsed_ms);
  return circuit + "," + buf;
}

std::pair<Aig, CoiReport> reduce(const Aig& aig) {
  if (aig.num_outputs() == 0)
    throw Error("cone-of-influence reduction needs at least one output");

  auto t0 = std::chrono::steady_clock::now();

  const unsigned i = aig.num_inputs();
  const unsigned l = aig.num_latches();
  std::vector<char> marked(aig.max_var() + 1, 0);
  std::vector<unsigned> worklist;

  auto visit = [&](unsigned var) {
    if (var != 0 && !marked[var]) {
      marked[var] = 1;
      worklist.push_back(var);
    }
  };

  for (Literal out : aig.outputs())
    visit(out.var());
  while (!worklist.empty()) {
    unsigned var = worklist.back();
    worklist.pop_back();
    switch (aig.kind_of(var)) {
    case Aig::NodeKind::And: {
      const AndGate& g = aig.and_of(var);
      visit(g.rhs0.var());
      visit(g.rhs1.var());
      break;
    }
    case Aig::NodeKind::Latch:
      // A live latch makes its next-state logic live across time steps.
      visit(aig.latch_of(var).next.var());
      break;
    default:
      break;
    }
  }

  // Compact renumbering; inputs keep their variables, retained latches and
  // ANDs keep their relative order.
  std::vector<unsigned> remap(aig.max_var() + 1, 0);
  unsigned next_var = 1;
  for (unsigned k = 1; k <= i; ++k)
    remap[k] = next_var++;
  std::vector<Latch> latches;
  for (const Latch& la : aig.latches())
    if (marked[la.var]) {
      remap[la.var] = next_var++;
      latches.push_back(la);
    }
  std::vector<AndGate> ands;
  for (const AndGate& g : aig.ands())
    if (marked[g.lhs]) {
      remap[g.lhs] = next_var++;
      ands.push_back(g);
    }

  auto remap_lit = [&](Literal lit) {
    return Literal(2 * remap[lit.var()] + (lit.negated() ? 1u : 0u));
  };
  for (Latch& la : latches) {
    la.var = remap[la.var];
    la.next = remap_lit(la.next);
  }
  for (AndGate& g : ands) {
    g.lhs = remap[g.lhs];
    g.rhs0 = remap_lit(g.rhs0);
    g.rhs1 = remap_lit(g.rhs1);
  }
  std::vector<Literal> outputs = aig.outputs();
  for (Literal& out : outputs)
    out = remap_lit(out);

  CoiReport report;
  report.ands_before = aig.num_ands();
  report.ands_after = static_cast<unsigned>(ands.size());
  report.latches_before = l;
  report.latches_after = static_cast<unsigned>(latches.size());
  report.reduction_percent = 100.0 * (report.ands_before - report.ands_after) /
                             std::max(report.ands_before, 1u);
  Aig reduced(i, std::move(latches), std::move(ands), std::move(outputs), aig.comments());
  report.elapsed_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return {std::move(reduced), report};
}

} // namespace pdrtune::coi
