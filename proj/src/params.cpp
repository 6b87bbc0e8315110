#include "pdrtune/params.hpp"

#include "pdrtune/util.hpp"

namespace pdrtune::params {

PdrConfig PdrConfig::from_index(unsigned idx) {
  if (idx >= 512)
    throw Error("configuration index out of range: " + std::to_string(idx));
  PdrConfig c;
  c.skip_general = (idx >> 8) & 1;
  c.two_rounds = (idx >> 7) & 1;
  c.skip_down = (idx >> 6) & 1;
  c.ctgs = (idx >> 5) & 1;
  c.flop_prio = (idx >> 4) & 1;
  c.flop_order = (idx >> 3) & 1;
  c.eager_push = (idx >> 2) & 1;
  c.use_abs = (idx >> 1) & 1;
  c.simple_refine = idx & 1;
  return c;
}

std::vector<int> check_rules(const PdrConfig& c) {
  std::vector<int> violated;
  if (c.skip_general &&
      (c.two_rounds || c.skip_down || c.ctgs || c.flop_prio || c.flop_order))
    violated.push_back(1);
  if (c.flop_order && !c.flop_prio)
    violated.push_back(2);
  if (c.ctgs && c.skip_down)
    violated.push_back(3);
  if (c.simple_refine && !c.use_abs)
    violated.push_back(4);
  return violated;
}

ConfigSpace enumerate_valid() {
  ConfigSpace space;
  space.configs.reserve(114);
  for (unsigned idx = 0; idx < 512; ++idx) {
    PdrConfig c = PdrConfig::from_index(idx);
    if (is_valid(c))
      space.configs.push_back(c);
  }
  return space;
}

std::string to_flag_string(const PdrConfig& c) {
  auto violated = check_rules(c);
  if (!violated.empty())
    throw Error("cannot render invalid configuration (violates rule " +
                std::to_string(violated.front()) + ")");
  std::string out = "pdr";
  auto bits = c.bits();
  for (std::size_t k = 0; k < bits.size(); ++k)
    if (bits[k]) {
      out += " -";
      out += kFlagLetters[k];
    }
  return out;
}

PdrConfig from_flag_string(std::string_view text) {
  auto toks = util::split_ws(text);
  std::size_t start = 0;
  if (!toks.empty() && toks[0] == "pdr")
    start = 1;
  std::array<bool, 9> bits{};
  for (std::size_t k = start; k < toks.size(); ++k) {
    std::string_view tok = toks[k];
    if (tok.size() != 2 || tok[0] != '-')
      throw Error("unknown flag token '" + std::string(tok) + "'");
    std::size_t pos = std::string_view(kFlagLetters.data(), 9).find(tok[1]);
    if (pos == std::string_view::npos)
      throw Error("unknown flag '-" + std::string(1, tok[1]) + "'");
    if (bits[pos])
      throw Error("duplicate flag '-" + std::string(1, tok[1]) + "'");
    bits[pos] = true;
  }
  PdrConfig c;
  c.skip_general = bits[0];
  c.two_rounds = bits[1];
  c.skip_down = bits[2];
  c.ctgs = bits[3];
  c.flop_prio = bits[4];
  c.flop_order = bits[5];
  c.eager_push = bits[6];
  c.use_abs = bits[7];
  c.simple_refine = bits[8];
  return c;
}

std::string to_bit_string(const PdrConfig& c) {
  std::string out = "grncyfitk=";
  for (bool b : c.bits())
    out += b ? '1' : '0';
  return out;
}

PdrConfig from_bit_string(std::string_view text) {
  if (text.starts_with("grncyfitk="))
    text.remove_prefix(10);
  if (text.size() != 9)
    throw Error("bit string must have exactly 9 digits");
  unsigned idx = 0;
  for (char ch : text) {
    if (ch != '0' && ch != '1')
      throw Error("bit string may contain only 0 and 1");
    idx = (idx << 1) | (ch == '1' ? 1u : 0u);
  }
  return PdrConfig::from_index(idx);
}

} // namespace pdrtune::params
