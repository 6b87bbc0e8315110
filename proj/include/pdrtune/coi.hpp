#pragma once

#include <string>
#include <utility>

#include "pdrtune/aiger.hpp"

namespace pdrtune::coi {

struct CoiReport {
  unsigned ands_before = 0;
  unsigned ands_after = 0;
  unsigned latches_before = 0;
  unsigned latches_after = 0;
  double reduction_percent = 0.0;  // share of AND gates removed, in [0,100]
  double elapsed_ms = 0.0;

  /// `circuit,ands_before,ands_after,latches_before,latches_after,reduction_pct,ms`
  std::string to_csv_row(const std::string& circuit) const;
  static std::string csv_header();
};

/// Cone-of-influence reduction: keeps exactly the variables reachable
/// backwards from the outputs, where a retained latch pulls in its
/// next-state cone (iterated to fixpoint). Primary inputs are always kept
/// in the numbering; dead ones simply end up unreferenced. Requires at
/// least one output.
std::pair<aiger::Aig, CoiReport> reduce(const aiger::Aig& aig);

} // namespace pdrtune::coi
