#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "pdrtune/util.hpp"

namespace pdrtune::aiger {

/// AIGER literal: 2*variable + negation bit. Literal 0 is constant false,
/// literal 1 is constant true.
struct Literal {
  unsigned value = 0;

  constexpr Literal() = default;
  constexpr explicit Literal(unsigned v) : value(v) {}

  static constexpr Literal of_var(unsigned var, bool negate = false) {
    return Literal(2 * var + (negate ? 1u : 0u));
  }

  constexpr unsigned var() const { return value >> 1; }
  constexpr bool negated() const { return (value & 1u) != 0; }
  constexpr bool is_const() const { return var() == 0; }
  constexpr Literal operator!() const { return Literal(value ^ 1u); }

  auto operator<=>(const Literal&) const = default;
};

inline constexpr Literal lit_false{0};
inline constexpr Literal lit_true{1};

enum class LatchInit : unsigned char { Zero, One, X };

struct Latch {
  unsigned var = 0;       // output variable of the latch
  Literal next;           // next-state function
  LatchInit init = LatchInit::Zero;

  bool operator==(const Latch&) const = default;
};

struct AndGate {
  unsigned lhs = 0;       // defined variable
  Literal rhs0, rhs1;     // operands, stored with rhs0.value >= rhs1.value

  bool operator==(const AndGate&) const = default;
};

/// Immutable and-inverter graph in canonical numbering: inputs are variables
/// 1..I, latches I+1..I+L, AND gates I+L+1..I+L+A in topological order.
/// The constructor validates all invariants and normalizes operand order;
/// instances are safe to share across threads.
class Aig {
public:
  enum class NodeKind : unsigned char { Constant, Input, Latch, And };

  Aig() = default;
  Aig(unsigned num_inputs, std::vector<Latch> latches, std::vector<AndGate> ands,
      std::vector<Literal> outputs, std::string comments = {});

  unsigned num_inputs() const { return num_inputs_; }
  unsigned num_latches() const { return static_cast<unsigned>(latches_.size()); }
  unsigned num_ands() const { return static_cast<unsigned>(ands_.size()); }
  unsigned num_outputs() const { return static_cast<unsigned>(outputs_.size()); }
  unsigned max_var() const { return num_inputs_ + num_latches() + num_ands(); }

  const std::vector<Latch>& latches() const { return latches_; }
  const std::vector<AndGate>& ands() const { return ands_; }
  const std::vector<Literal>& outputs() const { return outputs_; }
  const std::string& comments() const { return comments_; }

  NodeKind kind_of(unsigned var) const;
  const AndGate& and_of(unsigned var) const;
  const Latch& latch_of(unsigned var) const;

  /// Structural equality; comments are ignored.
  bool operator==(const Aig& o) const {
    return num_inputs_ == o.num_inputs_ && latches_ == o.latches_ &&
           ands_ == o.ands_ && outputs_ == o.outputs_;
  }

private:
  unsigned num_inputs_ = 0;
  std::vector<Latch> latches_;
  std::vector<AndGate> ands_;
  std::vector<Literal> outputs_;
  std::string comments_;
};

struct SimResult {
  std::vector<bool> outputs;
  std::vector<bool> next_state;
};

/// Two-valued simulation in topological order. Latches with init X must be
/// resolved by the caller through `state`.
SimResult simulate(const Aig& aig, const std::vector<bool>& inputs,
                   const std::vector<bool>& state);

Aig parse_ascii(std::string_view text);
Aig parse_binary(std::string_view bytes);
/// Dispatches on the header keyword (`aag` vs `aig`).
Aig parse(std::string_view bytes);
Aig load_file(const std::string& path);

std::string write_ascii(const Aig& aig);
std::string write_binary(const Aig& aig);

} // namespace pdrtune::aiger
