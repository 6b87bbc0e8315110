#pragma once

#include <array>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pdrtune/aiger.hpp"

namespace pdrtune::features {

/// The 11-dimensional static feature vector, computed from the original
/// (un-reduced) circuit. Flattening order is fixed and must never change:
/// counts, functional patterns, depth statistics, flop fanout statistics.
struct CircuitFeatures {
  double num_pi = 0;
  double num_po = 0;
  double num_latches = 0;
  double num_ands = 0;
  double num_mux = 0;
  double num_xor = 0;
  double num_adder = 0;  // half-adder and full-adder patterns combined
  double max_level = 0;
  double avg_level = 0;
  double flop_fanout_var = 0;
  double flop_fanout_std = 0;

  std::array<double, 11> flatten() const {
    return {num_pi,    num_po,        num_latches, num_ands,       num_mux, num_xor,
            num_adder, max_level, avg_level, flop_fanout_var, flop_fanout_std};
  }

  bool operator==(const CircuitFeatures&) const = default;
};

const std::array<std::string, 11>& feature_names();

/// ITE decomposition of an AND node: literal (2*node+1) computes
/// ITE(sel, then_lit, else_lit). The selector is returned in positive
/// polarity. XOR shows up as then_lit == !else_lit.
struct MuxDecomposition {
  aiger::Literal sel;
  aiger::Literal then_lit;
  aiger::Literal else_lit;
};

/// Structural two-level match: the node and both children are ANDs, both
/// fanins of the node are complemented, and the children share one literal
/// in opposite polarity. Returns absent for anything else.
std::optional<MuxDecomposition> detect_mux(const aiger::Aig& aig, unsigned var);

struct HalfAdderMatch {
  aiger::Literal sum;    // computes a ^ b
  aiger::Literal carry;  // computes a & b
  aiger::Literal a, b;
};

struct FullAdderMatch {
  aiger::Literal sum;    // parity of the support triple
  aiger::Literal carry;  // majority of the support triple
  std::array<unsigned, 3> support;
};

/// Functional pattern scan with the counting discipline used by extract():
/// every AND belongs to at most one pattern, matched in priority order
/// full adder, half adder, MUX, XOR, scanning roots in topological order.
struct PatternSummary {
  std::vector<unsigned> mux_roots;
  std::vector<unsigned> xor_roots;
  std::vector<HalfAdderMatch> half_adders;
  std::vector<FullAdderMatch> full_adders;
};

PatternSummary detect_patterns(const aiger::Aig& aig);

struct LevelInfo {
  std::vector<unsigned> level;  // indexed by variable; PI/latch/const are 0
  unsigned max_level = 0;
  double avg_level = 0;         // mean over AND gates only
};

LevelInfo compute_levels(const aiger::Aig& aig);

/// Population variance and standard deviation of latch fanouts, where the
/// fanout of a latch counts every literal reference to its output variable
/// (AND fanins, outputs, and next-state functions).
std::pair<double, double> flop_fanout_stats(const aiger::Aig& aig);

CircuitFeatures extract(const aiger::Aig& aig);

/// Elementwise z-score transform fitted on a corpus; dimensions that are
/// constant across the corpus get scale 1.
struct FeatureNormalizer {
  std::array<double, 11> shift{};
  std::array<double, 11> scale{};

  std::array<double, 11> apply(const std::array<double, 11>& raw) const;
  std::array<double, 11> apply(const CircuitFeatures& f) const;

  std::string to_json() const;
  static FeatureNormalizer from_json(std::string_view text);
  void save(const std::string& path) const;
  static FeatureNormalizer load(const std::string& path);

  bool operator==(const FeatureNormalizer&) const = default;
};

FeatureNormalizer fit_normalizer(const std::vector<CircuitFeatures>& corpus);

} // namespace pdrtune::features
