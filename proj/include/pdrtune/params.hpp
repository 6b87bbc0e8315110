#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

namespace pdrtune::params {

/// One full assignment of the 9 boolean PDR engine flags. Bit order is fixed
/// as (g, r, n, c, y, f, i, t, k) with g the most significant bit, so the
/// 9-bit index sorts configurations lexicographically by bit string.
struct PdrConfig {
  bool skip_general = false;   // -g
  bool two_rounds = false;     // -r
  bool skip_down = false;      // -n
  bool ctgs = false;           // -c
  bool flop_prio = false;      // -y
  bool flop_order = false;     // -f
  bool eager_push = false;     // -i
  bool use_abs = false;        // -t
  bool simple_refine = false;  // -k

  std::array<bool, 9> bits() const {
    return {skip_general, two_rounds, skip_down, ctgs,     flop_prio,
            flop_order,   eager_push, use_abs,   simple_refine};
  }

  unsigned index() const {
    unsigned idx = 0;
    for (bool b : bits())
      idx = (idx << 1) | (b ? 1u : 0u);
    return idx;
  }

  static PdrConfig from_index(unsigned idx);

  bool operator==(const PdrConfig&) const = default;
  auto operator<=>(const PdrConfig& o) const { return index() <=> o.index(); }
};

inline constexpr std::array<char, 9> kFlagLetters = {'g', 'r', 'n', 'c', 'y',
                                                     'f', 'i', 't', 'k'};

/// Returns the ids (1..4) of the constraint rules a configuration violates:
///   1: -g nullifies -r/-n/-c/-y/-f, so none of them may be set with it
///   2: -f requires -y
///   3: -c requires the down phase, i.e. not -n
///   4: -k requires -t
std::vector<int> check_rules(const PdrConfig& c);

inline bool is_valid(const PdrConfig& c) { return check_rules(c).empty(); }

struct ConfigSpace {
  std::vector<PdrConfig> configs;  // sorted ascending by bit-vector index
};

/// All configurations out of the 2^9 = 512 that pass every rule; 114 total.
ConfigSpace enumerate_valid();

/// Renders `pdr` followed by one ` -x` token per enabled flag in fixed order.
/// Rejects invalid configurations.
std::string to_flag_string(const PdrConfig& c);

/// Inverse of to_flag_string. Accepts an optional leading `pdr` token;
/// rejects unknown and duplicate flags.
PdrConfig from_flag_string(std::string_view text);

/// Text encodings `grncyfitk=010011001` (prefix optional on input).
std::string to_bit_string(const PdrConfig& c);
PdrConfig from_bit_string(std::string_view text);

} // namespace pdrtune::params
