#include "pdrtune/aiger.hpp"

#include <algorithm>
#include <charconv>
#include <optional>

namespace pdrtune::aiger {

namespace {

// ---------------------------------------------------------------- scanning

struct LineScanner {
  std::string_view text;
  std::size_t pos = 0;
  std::size_t line_no = 0;

  bool eof() const { return pos >= text.size(); }

  // Returns the next line without its terminating '\n'.
  std::optional<std::string_view> next() {
    if (eof())
      return std::nullopt;
    ++line_no;
    std::size_t nl = text.find('\n', pos);
    std::string_view line;
    if (nl == std::string_view::npos) {
      line = text.substr(pos);
      pos = text.size();
    } else {
      line = text.substr(pos, nl - pos);
      pos = nl + 1;
    }
    if (!line.empty() && line.back() == '\r')
      line.remove_suffix(1);
    return line;
  }

  std::string_view rest() const { return text.substr(pos); }
};

unsigned parse_number(std::string_view tok, std::size_t line) {
  unsigned long long v = 0;
  auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc{} || p != tok.data() + tok.size())
    throw Error("expected a number, got '" + std::string(tok) + "'", line);
  if (v > 0xffffffffull)
    throw Error("number out of range: " + std::string(tok), line);
  return static_cast<unsigned>(v);
}

struct Header {
  unsigned m = 0, i = 0, l = 0, o = 0, a = 0, b = 0, c = 0;
};

Header parse_header(std::string_view line, std::size_t line_no, std::string_view keyword) {
  auto toks = util::split_ws(line);
  if (toks.empty() || toks[0] != keyword || toks.size() < 6 || toks.size() > 10)
    throw Error("malformed header (expected '" + std::string(keyword) + " M I L O A')", line_no);
  unsigned vals[9] = {0};
  for (std::size_t k = 1; k < toks.size(); ++k)
    vals[k - 1] = parse_number(toks[k], line_no);
  Header h{vals[0], vals[1], vals[2], vals[3], vals[4], vals[5], vals[6]};
  if (vals[7] != 0 || vals[8] != 0)
    throw Error("justice/fairness sections are not supported", line_no);
  if (static_cast<unsigned long long>(h.i) + h.l + h.a > h.m)
    throw Error("malformed header: M < I + L + A", line_no);
  return h;
}

std::string_view take_line(LineScanner& sc, const char* what) {
  auto line = sc.next();
  if (!line)
    throw Error(std::string("unexpected end of file in ") + what, sc.line_no + 1);
  return *line;
}

Literal check_literal(unsigned value, unsigned max_var, std::size_t line) {
  if (value > 2 * max_var + 1)
    throw Error("literal out of range: " + std::to_string(value), line);
  return Literal(value);
}

// Reads the trailing symbol table / comment section shared by both formats.
// Symbol lines are preserved verbatim inside the comment text; they are never
// interpreted.
std::string read_trailer(LineScanner& sc, std::string comments) {
  while (auto line = sc.next()) {
    if (*line == "c") {
      comments += std::string(sc.rest());
      break;
    }
    comments += std::string(*line);
    comments += '\n';
  }
  return comments;
}

enum class DefKind : unsigned char { None, Input, Latch, And };

} // namespace

// ------------------------------------------------------------------- type

Aig::Aig(unsigned num_inputs, std::vector<Latch> latches, std::vector<AndGate> ands,
         std::vector<Literal> outputs, std::string comments)
    : num_inputs_(num_inputs), latches_(std::move(latches)), ands_(std::move(ands)),
      outputs_(std::move(outputs)), comments_(std::move(comments)) {
  const unsigned i = num_inputs_;
  const unsigned l = static_cast<unsigned>(latches_.size());
  const unsigned max = max_var();
  for (unsigned k = 0; k < l; ++k) {
    if (latches_[k].var != i + 1 + k)
      throw Error("latch variable numbering is not canonical");
    if (latches_[k].next.var() > max)
      throw Error("latch next-state literal out of range");
  }
  for (unsigned k = 0; k < ands_.size(); ++k) {
    AndGate& g = ands_[k];
    if (g.lhs != i + l + 1 + k)
      throw Error("AND variable numbering is not canonical");
    if (g.rhs0.var() >= g.lhs || g.rhs1.var() >= g.lhs)
      throw Error("non-topological AND gate " + std::to_string(g.lhs));
    if (g.rhs0.value < g.rhs1.value)
      std::swap(g.rhs0, g.rhs1);
  }
  for (Literal out : outputs_)
    if (out.var() > max)
      throw Error("output literal out of range");
}

Aig::NodeKind Aig::kind_of(unsigned var) const {
  if (var == 0)
    return NodeKind::Constant;
  if (var <= num_inputs_)
    return NodeKind::Input;
  if (var <= num_inputs_ + num_latches())
    return NodeKind::Latch;
  if (var <= max_var())
    return NodeKind::And;
  throw Error("variable out of range: " + std::to_string(var));
}

const AndGate& Aig::and_of(unsigned var) const {
  if (kind_of(var) != NodeKind::And)
    throw Error("variable is not an AND gate: " + std::to_string(var));
  return ands_[var - num_inputs_ - num_latches() - 1];
}

const Latch& Aig::latch_of(unsigned var) const {
  if (kind_of(var) != NodeKind::Latch)
    throw Error("variable is not a latch: " + std::to_string(var));
  return latches_[var - num_inputs_ - 1];
}

// --------------------------------------------------------------- simulate

SimResult simulate(const Aig& aig, const std::vector<bool>& inputs,
                   const std::vector<bool>& state) {
  if (inputs.size() != aig.num_inputs())
    throw Error("input vector length mismatch");
  if (state.size() != aig.num_latches())
    throw Error("latch state length mismatch");

  std::vector<char> value(aig.max_var() + 1, 0);
  unsigned v = 1;
  for (unsigned k = 0; k < aig.num_inputs(); ++k, ++v)
    value[v] = inputs[k];
  for (unsigned k = 0; k < aig.num_latches(); ++k, ++v)
    value[v] = state[k];
  for (const AndGate& g : aig.ands())
    value[g.lhs] = static_cast<char>((value[g.rhs0.var()] ^ g.rhs0.negated()) &
                                     (value[g.rhs1.var()] ^ g.rhs1.negated()));

  SimResult res;
  res.outputs.reserve(aig.outputs().size());
  for (Literal out : aig.outputs())
    res.outputs.push_back((value[out.var()] ^ out.negated()) != 0);
  res.next_state.reserve(aig.num_latches());
  for (const Latch& l : aig.latches())
    res.next_state.push_back((value[l.next.var()] ^ l.next.negated()) != 0);
  return res;
}

// ------------------------------------------------------------ ASCII parse

Aig parse_ascii(std::string_view text) {
  LineScanner sc{text};
  Header h = parse_header(take_line(sc, "header"), sc.line_no, "aag");

  std::vector<DefKind> defined(h.m + 1, DefKind::None);
  auto define = [&](unsigned var, DefKind kind, std::size_t line) {
    if (var == 0 || var > h.m)
      throw Error("literal out of range: variable " + std::to_string(var), line);
    if (defined[var] != DefKind::None)
      throw Error("duplicate definition of variable " + std::to_string(var), line);
    defined[var] = kind;
  };

  std::vector<unsigned> input_vars;
  input_vars.reserve(h.i);
  for (unsigned k = 0; k < h.i; ++k) {
    auto line = take_line(sc, "input section");
    auto toks = util::split_ws(line);
    if (toks.size() != 1)
      throw Error("malformed input line", sc.line_no);
    Literal lit = check_literal(parse_number(toks[0], sc.line_no), h.m, sc.line_no);
    if (lit.negated() || lit.is_const())
      throw Error("input must be a positive non-constant literal", sc.line_no);
    define(lit.var(), DefKind::Input, sc.line_no);
    input_vars.push_back(lit.var());
  }

  struct RawLatch {
    unsigned var;
    Literal next;
    LatchInit init;
  };
  std::vector<RawLatch> raw_latches;
  raw_latches.reserve(h.l);
  for (unsigned k = 0; k < h.l; ++k) {
    auto line = take_line(sc, "latch section");
    auto toks = util::split_ws(line);
    if (toks.size() != 2 && toks.size() != 3)
      throw Error("malformed latch line", sc.line_no);
    Literal lit = check_literal(parse_number(toks[0], sc.line_no), h.m, sc.line_no);
    if (lit.negated() || lit.is_const())
      throw Error("latch must be defined by a positive non-constant literal", sc.line_no);
    Literal next = check_literal(parse_number(toks[1], sc.line_no), h.m, sc.line_no);
    LatchInit init = LatchInit::Zero;
    if (toks.size() == 3) {
      unsigned r = parse_number(toks[2], sc.line_no);
      if (r == 0)
        init = LatchInit::Zero;
      else if (r == 1)
        init = LatchInit::One;
      else if (r == lit.value)
        init = LatchInit::X;
      else
        throw Error("invalid latch reset value " + std::to_string(r), sc.line_no);
    }
    define(lit.var(), DefKind::Latch, sc.line_no);
    raw_latches.push_back({lit.var(), next, init});
  }

  std::vector<Literal> outputs;
  outputs.reserve(h.o);
  for (unsigned k = 0; k < h.o; ++k) {
    auto line = take_line(sc, "output section");
    auto toks = util::split_ws(line);
    if (toks.size() != 1)
      throw Error("malformed output line", sc.line_no);
    outputs.push_back(check_literal(parse_number(toks[0], sc.line_no), h.m, sc.line_no));
  }

  // Bad-state and constraint sections are carried along as uninterpreted
  // comment lines.
  std::string comments;
  for (unsigned k = 0; k < h.b; ++k) {
    auto line = take_line(sc, "bad-state section");
    comments += "bad " + std::string(util::trim(line)) + "\n";
  }
  for (unsigned k = 0; k < h.c; ++k) {
    auto line = take_line(sc, "constraint section");
    comments += "constraint " + std::string(util::trim(line)) + "\n";
  }

  struct RawAnd {
    unsigned lhs;
    Literal rhs0, rhs1;
  };
  std::vector<RawAnd> raw_ands;
  raw_ands.reserve(h.a);
  for (unsigned k = 0; k < h.a; ++k) {
    auto line = take_line(sc, "AND section");
    auto toks = util::split_ws(line);
    if (toks.size() != 3)
      throw Error("malformed AND line", sc.line_no);
    Literal lhs = check_literal(parse_number(toks[0], sc.line_no), h.m, sc.line_no);
    if (lhs.negated() || lhs.is_const())
      throw Error("AND must be defined by a positive non-constant literal", sc.line_no);
    Literal r0 = check_literal(parse_number(toks[1], sc.line_no), h.m, sc.line_no);
    Literal r1 = check_literal(parse_number(toks[2], sc.line_no), h.m, sc.line_no);
    if (r0.var() >= lhs.var() || r1.var() >= lhs.var())
      throw Error("non-topological AND: " + std::to_string(lhs.value) + " depends on a variable it does not dominate",
                  sc.line_no);
    define(lhs.var(), DefKind::And, sc.line_no);
    raw_ands.push_back({lhs.var(), r0, r1});
  }

  comments = read_trailer(sc, std::move(comments));

  auto check_resolves = [&](Literal lit) {
    if (!lit.is_const() && defined[lit.var()] == DefKind::None)
      throw Error("reference to undefined variable " + std::to_string(lit.var()));
  };
  for (const RawAnd& g : raw_ands) {
    check_resolves(g.rhs0);
    check_resolves(g.rhs1);
  }
  for (const RawLatch& l : raw_latches)
    check_resolves(l.next);
  for (Literal out : outputs)
    check_resolves(out);

  // Renumber into canonical form: inputs 1..I, latches, then ANDs by
  // ascending original variable (preserves topological order).
  std::vector<unsigned> remap(h.m + 1, 0);
  unsigned next_var = 1;
  for (unsigned var : input_vars)
    remap[var] = next_var++;
  for (const RawLatch& l : raw_latches)
    remap[l.var] = next_var++;
  std::vector<std::size_t> and_order(raw_ands.size());
  for (std::size_t k = 0; k < and_order.size(); ++k)
    and_order[k] = k;
  std::sort(and_order.begin(), and_order.end(),
            [&](std::size_t a, std::size_t b) { return raw_ands[a].lhs < raw_ands[b].lhs; });
  for (std::size_t k : and_order)
    remap[raw_ands[k].lhs] = next_var++;

  auto remap_lit = [&](Literal lit) {
    return Literal(2 * remap[lit.var()] + (lit.negated() ? 1u : 0u));
  };

  std::vector<Latch> latches;
  latches.reserve(raw_latches.size());
  for (const RawLatch& l : raw_latches)
    latches.push_back({remap[l.var], remap_lit(l.next), l.init});
  std::vector<AndGate> ands;
  ands.reserve(raw_ands.size());
  for (std::size_t k : and_order)
    ands.push_back({remap[raw_ands[k].lhs], remap_lit(raw_ands[k].rhs0), remap_lit(raw_ands[k].rhs1)});
  for (Literal& out : outputs)
    out = remap_lit(out);

  return Aig(h.i, std::move(latches), std::move(ands), std::move(outputs), std::move(comments));
}

// ----------------------------------------------------------- binary parse

namespace {

unsigned decode_delta(std::string_view bytes, std::size_t& pos) {
  unsigned result = 0;
  unsigned shift = 0;
  for (;;) {
    if (pos >= bytes.size())
      throw Error("truncated delta stream in binary AND section");
    unsigned char ch = static_cast<unsigned char>(bytes[pos++]);
    if (shift >= 32 || (shift == 28 && (ch & 0x7f) > 0x0f))
      throw Error("delta value overflow in binary AND section");
    result |= static_cast<unsigned>(ch & 0x7f) << shift;
    if ((ch & 0x80) == 0)
      return result;
    shift += 7;
  }
}

void encode_delta(std::string& out, unsigned delta) {
  while (delta & ~0x7fu) {
    out.push_back(static_cast<char>(0x80 | (delta & 0x7f)));
    delta >>= 7;
  }
  out.push_back(static_cast<char>(delta));
}

} // namespace

Aig parse_binary(std::string_view bytes) {
  LineScanner sc{bytes};
  Header h = parse_header(take_line(sc, "header"), sc.line_no, "aig");
  if (static_cast<unsigned long long>(h.i) + h.l + h.a != h.m)
    throw Error("malformed header: binary format requires M = I + L + A", 1);

  std::vector<Latch> latches;
  latches.reserve(h.l);
  for (unsigned k = 0; k < h.l; ++k) {
    auto line = take_line(sc, "latch section");
    auto toks = util::split_ws(line);
    if (toks.size() != 1 && toks.size() != 2)
      throw Error("malformed latch line", sc.line_no);
    unsigned var = h.i + 1 + k;
    Literal next = check_literal(parse_number(toks[0], sc.line_no), h.m, sc.line_no);
    LatchInit init = LatchInit::Zero;
    if (toks.size() == 2) {
      unsigned r = parse_number(toks[1], sc.line_no);
      if (r == 0)
        init = LatchInit::Zero;
      else if (r == 1)
        init = LatchInit::One;
      else if (r == 2 * var)
        init = LatchInit::X;
      else
        throw Error("invalid latch reset value " + std::to_string(r), sc.line_no);
    }
    latches.push_back({var, next, init});
  }

  std::vector<Literal> outputs;
  outputs.reserve(h.o);
  for (unsigned k = 0; k < h.o; ++k) {
    auto line = take_line(sc, "output section");
    auto toks = util::split_ws(line);
    if (toks.size() != 1)
      throw Error("malformed output line", sc.line_no);
    outputs.push_back(check_literal(parse_number(toks[0], sc.line_no), h.m, sc.line_no));
  }

  std::string comments;
  for (unsigned k = 0; k < h.b; ++k)
    comments += "bad " + std::string(util::trim(take_line(sc, "bad-state section"))) + "\n";
  for (unsigned k = 0; k < h.c; ++k)
    comments += "constraint " + std::string(util::trim(take_line(sc, "constraint section"))) + "\n";

  std::vector<AndGate> ands;
  ands.reserve(h.a);
  std::size_t pos = sc.pos;
  for (unsigned k = 0; k < h.a; ++k) {
    unsigned lhs_var = h.i + h.l + 1 + k;
    unsigned lhs_lit = 2 * lhs_var;
    unsigned delta0 = decode_delta(bytes, pos);
    if (delta0 == 0 || delta0 > lhs_lit)
      throw Error("non-monotone variable numbering in binary AND section (gate " +
                  std::to_string(lhs_var) + ")");
    unsigned rhs0 = lhs_lit - delta0;
    unsigned delta1 = decode_delta(bytes, pos);
    if (delta1 > rhs0)
      throw Error("non-monotone variable numbering in binary AND section (gate " +
                  std::to_string(lhs_var) + ")");
    unsigned rhs1 = rhs0 - delta1;
    ands.push_back({lhs_var, Literal(rhs0), Literal(rhs1)});
  }
  sc.pos = pos;

  comments = read_trailer(sc, std::move(comments));
  return Aig(h.i, std::move(latches), std::move(ands), std::move(outputs), std::move(comments));
}

Aig parse(std::string_view bytes) {
  if (bytes.starts_with("aag"))
    return parse_ascii(bytes);
  if (bytes.starts_with("aig"))
    return parse_binary(bytes);
  throw Error("unrecognized AIGER header (expected 'aag' or 'aig')", 1);
}

Aig load_file(const std::string& path) {
  return parse(util::read_file(path));
}

// ----------------------------------------------------------------- writers

namespace {

void append_latch_init(std::string& out, const Latch& l) {
  switch (l.init) {
  case LatchInit::Zero:
    break;
  case LatchInit::One:
    out += " 1";
    break;
  case LatchInit::X:
    out += ' ';
    out += std::to_string(2 * l.var);
    break;
  }
}

void append_comments(std::string& out, const std::string& comments) {
  if (comments.empty())
    return;
  out += "c\n";
  out += comments;
  if (comments.back() != '\n')
    out += '\n';
}

} // namespace

std::string write_ascii(const Aig& aig) {
  std::string out = "aag " + std::to_string(aig.max_var()) + ' ' +
                    std::to_string(aig.num_inputs()) + ' ' + std::to_string(aig.num_latches()) +
                    ' ' + std::to_string(aig.num_outputs()) + ' ' + std::to_string(aig.num_ands()) +
                    '\n';
  for (unsigned k = 1; k <= aig.num_inputs(); ++k) {
    out += std::to_string(2 * k);
    out += '\n';
  }
  for (const Latch& l : aig.latches()) {
    out += std::to_string(2 * l.var) + ' ' + std::to_string(l.next.value);
    append_latch_init(out, l);
    out += '\n';
  }
  for (Literal o : aig.outputs()) {
    out += std::to_string(o.value);
    out += '\n';
  }
  for (const AndGate& g : aig.ands())
    out += std::to_string(2 * g.lhs) + ' ' + std::to_string(g.rhs0.value) + ' ' +
           std::to_string(g.rhs1.value) + '\n';
  append_comments(out, aig.comments());
  return out;
}

std::string write_binary(const Aig& aig) {
  std::string out = "aig " + std::to_string(aig.max_var()) + ' ' +
                    std::to_string(aig.num_inputs()) + ' ' + std::to_string(aig.num_latches()) +
                    ' ' + std::to_string(aig.num_outputs()) + ' ' + std::to_string(aig.num_ands()) +
                    '\n';
  for (const Latch& l : aig.latches()) {
    out += std::to_string(l.next.value);
    append_latch_init(out, l);
    out += '\n';
  }
  for (Literal o : aig.outputs()) {
    out += std::to_string(o.value);
    out += '\n';
  }
  for (const AndGate& g : aig.ands()) {
    unsigned lhs_lit = 2 * g.lhs;
    encode_delta(out, lhs_lit - g.rhs0.value);
    encode_delta(out, g.rhs0.value - g.rhs1.value);
  }
  append_comments(out, aig.comments());
  return out;
}

} // namespace pdrtune::aiger
