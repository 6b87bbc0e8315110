#include "pdrtune/features.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

namespace pdrtune::features {

using aiger::Aig;
using aiger::AndGate;
using aiger::Latch;
using aiger::Literal;

const std::array<std::string, 11>& feature_names() {
  static const std::array<std::string, 11> names = {
      "num_pi",    "num_po",    "num_latches",     "num_ands",
      "num_mux",   "num_xor",   "num_adder",       "max_level",
      "avg_level", "flop_fanout_var", "flop_fanout_std"};
  return names;
}

// ------------------------------------------------------------------ levels

LevelInfo compute_levels(const Aig& aig) {
  LevelInfo info;
  info.level.assign(aig.max_var() + 1, 0);
  unsigned long long sum = 0;
  for (const AndGate& g : aig.ands()) {
    unsigned lvl = 1 + std::max(info.level[g.rhs0.var()], info.level[g.rhs1.var()]);
    info.level[g.lhs] = lvl;
    info.max_level = std::max(info.max_level, lvl);
    sum += lvl;
  }
  info.avg_level = aig.num_ands() ? static_cast<double>(sum) / aig.num_ands() : 0.0;
  return info;
}

// ------------------------------------------------------------ flop fanout

std::pair<double, double> flop_fanout_stats(const Aig& aig) {
  if (aig.num_latches() == 0)
    return {0.0, 0.0};
  const unsigned first = aig.num_inputs() + 1;
  const unsigned last = aig.num_inputs() + aig.num_latches();
  std::vector<unsigned> fanout(aig.num_latches(), 0);
  auto count = [&](Literal lit) {
    unsigned v = lit.var();
    if (v >= first && v <= last)
      ++fanout[v - first];
  };
  for (const AndGate& g : aig.ands()) {
    count(g.rhs0);
    count(g.rhs1);
  }
  for (const Latch& l : aig.latches())
    count(l.next);
  for (Literal out : aig.outputs())
    count(out);

  double mean = 0;
  for (unsigned f : fanout)
    mean += f;
  mean /= fanout.size();
  double var = 0;
  for (unsigned f : fanout)
    var += (f - mean) * (f - mean);
  var /= fanout.size();
  return {var, std::sqrt(var)};
}

// ----------------------------------------------------- pattern detection

std::optional<MuxDecomposition> detect_mux(const Aig& aig, unsigned var) {
  if (aig.kind_of(var) != Aig::NodeKind::And)
    return std::nullopt;
  const AndGate& g = aig.and_of(var);
  if (!g.rhs0.negated() || !g.rhs1.negated())
    return std::nullopt;
  if (aig.kind_of(g.rhs0.var()) != Aig::NodeKind::And ||
      aig.kind_of(g.rhs1.var()) != Aig::NodeKind::And)
    return std::nullopt;
  const AndGate& c0 = aig.and_of(g.rhs0.var());
  const AndGate& c1 = aig.and_of(g.rhs1.var());

  // !var = c0() | c1(); a shared literal in opposite polarity is the selector.
  const Literal c0_lits[2] = {c0.rhs0, c0.rhs1};
  const Literal c1_lits[2] = {c1.rhs0, c1.rhs1};
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      if (c0_lits[a] == !c1_lits[b]) {
        Literal sel = c0_lits[a];
        Literal then_lit = c0_lits[1 - a];
        Literal else_lit = c1_lits[1 - b];
        if (sel.negated()) {
          sel = !sel;
          std::swap(then_lit, else_lit);
        }
        return MuxDecomposition{sel, then_lit, else_lit};
      }
  return std::nullopt;
}

namespace {

constexpr unsigned char kVarMask[3] = {0xAA, 0xCC, 0xF0};
constexpr unsigned char kParity3 = 0x96;
constexpr unsigned char kMaj3 = 0xE8;

struct ConeFunction {
  std::vector<unsigned> support;   // sorted leaf variables, |support| <= 3
  unsigned char tt = 0;            // truth table of the positive root literal
  std::vector<unsigned> cone_ands; // every AND variable inside the cone
};

// Collapses the AND cone under `root` down to input/latch/constant leaves,
// giving up once it spans more than three leaf variables or too many gates.
std::optional<ConeFunction> cone_function(const Aig& aig, unsigned root,
                                          std::size_t max_nodes = 64) {
  ConeFunction cf;
  std::vector<unsigned> stack = {root};
  std::vector<unsigned> seen;
  while (!stack.empty()) {
    unsigned v = stack.back();
    stack.pop_back();
    if (v == 0 || std::find(seen.begin(), seen.end(), v) != seen.end())
      continue;
    seen.push_back(v);
    if (aig.kind_of(v) == Aig::NodeKind::And) {
      cf.cone_ands.push_back(v);
      if (cf.cone_ands.size() > max_nodes)
        return std::nullopt;
      const AndGate& g = aig.and_of(v);
      stack.push_back(g.rhs0.var());
      stack.push_back(g.rhs1.var());
    } else {
      cf.support.push_back(v);
      if (cf.support.size() > 3)
        return std::nullopt;
    }
  }
  std::sort(cf.support.begin(), cf.support.end());
  std::sort(cf.cone_ands.begin(), cf.cone_ands.end());

  std::vector<unsigned char> value(aig.max_var() + 1, 0);
  for (std::size_t k = 0; k < cf.support.size(); ++k)
    value[cf.support[k]] = kVarMask[k];
  auto eval = [&](Literal lit) -> unsigned char {
    unsigned char t = value[lit.var()];
    return lit.negated() ? static_cast<unsigned char>(~t) : t;
  };
  for (unsigned v : cf.cone_ands) {
    const AndGate& g = aig.and_of(v);
    value[v] = static_cast<unsigned char>(eval(g.rhs0) & eval(g.rhs1));
  }
  cf.tt = value[root];
  return cf;
}

} // namespace

PatternSummary detect_patterns(const Aig& aig) {
  PatternSummary summary;
  const unsigned first_and = aig.num_inputs() + aig.num_latches() + 1;
  const unsigned last_and = aig.max_var();
  if (aig.num_ands() == 0)
    return summary;

  std::vector<unsigned> refs(aig.max_var() + 1, 0);
  for (const AndGate& g : aig.ands()) {
    ++refs[g.rhs0.var()];
    ++refs[g.rhs1.var()];
  }
  for (const Latch& l : aig.latches())
    ++refs[l.next.var()];
  for (Literal out : aig.outputs())
    ++refs[out.var()];

  std::vector<char> consumed(aig.max_var() + 1, 0);
  auto consume = [&](const std::vector<unsigned>& vars) {
    for (unsigned v : vars)
      consumed[v] = 1;
  };

  // Full adders: a 3-input parity cone paired with a 3-input majority cone
  // over the same leaf triple.
  struct Cand {
    unsigned var;
    Literal lit;  // polarity that realizes the positive function
    ConeFunction cf;
  };
  std::vector<Cand> xor3, maj3;
  for (unsigned v = first_and; v <= last_and; ++v) {
    auto cf = cone_function(aig, v);
    if (!cf || cf->support.size() != 3)
      continue;
    if (cf->tt == kParity3)
      xor3.push_back({v, Literal::of_var(v), std::move(*cf)});
    else if (cf->tt == static_cast<unsigned char>(~kParity3))
      xor3.push_back({v, Literal::of_var(v, true), std::move(*cf)});
    else if (cf->tt == kMaj3)
      maj3.push_back({v, Literal::of_var(v), std::move(*cf)});
    else if (cf->tt == static_cast<unsigned char>(~kMaj3))
      maj3.push_back({v, Literal::of_var(v, true), std::move(*cf)});
  }
  for (const Cand& sum : xor3) {
    if (consumed[sum.var])
      continue;
    for (const Cand& carry : maj3) {
      if (consumed[carry.var] || carry.cf.support != sum.cf.support)
        continue;
      summary.full_adders.push_back(
          {sum.lit, carry.lit, {sum.cf.support[0], sum.cf.support[1], sum.cf.support[2]}});
      consume(sum.cf.cone_ands);
      consume(carry.cf.cone_ands);
      break;
    }
  }

  // Half adders: an XOR root whose all-positive child is live outside the
  // pattern; that child is the carry.
  for (unsigned v = first_and; v <= last_and; ++v) {
    if (consumed[v])
      continue;
    auto ite = detect_mux(aig, v);
    if (!ite || ite->then_lit != !ite->else_lit)
      continue;
    const AndGate& g = aig.and_of(v);
    for (Literal child : {g.rhs0, g.rhs1}) {
      unsigned cv = child.var();
      const AndGate& cg = aig.and_of(cv);
      if (!cg.rhs0.negated() && !cg.rhs1.negated() && refs[cv] > 1 && !consumed[cv]) {
        summary.half_adders.push_back(
            {Literal::of_var(v), Literal::of_var(cv), cg.rhs0, cg.rhs1});
        consume({v, g.rhs0.var(), g.rhs1.var()});
        break;
      }
    }
  }

  // Remaining ITE roots: MUX when the branches differ, XOR otherwise.
  for (unsigned v = first_and; v <= last_and; ++v) {
    if (consumed[v])
      continue;
    auto ite = detect_mux(aig, v);
    if (!ite || ite->then_lit == !ite->else_lit)
      continue;
    summary.mux_roots.push_back(v);
    const AndGate& g = aig.and_of(v);
    consume({v, g.rhs0.var(), g.rhs1.var()});
  }
  for (unsigned v = first_and; v <= last_and; ++v) {
    if (consumed[v])
      continue;
    auto ite = detect_mux(aig, v);
    if (!ite || ite->then_lit != !ite->else_lit)
      continue;
    summary.xor_roots.push_back(v);
    const AndGate& g = aig.and_of(v);
    consume({v, g.rhs0.var(), g.rhs1.var()});
  }
  return summary;
}

// ----------------------------------------------------------------- extract

CircuitFeatures extract(const Aig& aig) {
  CircuitFeatures f;
  f.num_pi = aig.num_inputs();
  f.num_po = aig.num_outputs();
  f.num_latches = aig.num_latches();
  f.num_ands = aig.num_ands();

  PatternSummary patterns = detect_patterns(aig);
  f.num_mux = static_cast<double>(patterns.mux_roots.size());
  f.num_xor = static_cast<double>(patterns.xor_roots.size());
  f.num_adder =
      static_cast<double>(patterns.half_adders.size() + patterns.full_adders.size());

  LevelInfo levels = compute_levels(aig);
  f.max_level = levels.max_level;
  f.avg_level = levels.avg_level;

  auto [var, std_dev] = flop_fanout_stats(aig);
  f.flop_fanout_var = var;
  f.flop_fanout_std = std_dev;
  return f;
}

// -------------------------------------------------------------- normalizer

FeatureNormalizer fit_normalizer(const std::vector<CircuitFeatures>& corpus) {
  if (corpus.empty())
    throw Error("cannot fit a feature normalizer on an empty corpus");
  FeatureNormalizer n;
  for (const CircuitFeatures& f : corpus) {
    auto v = f.flatten();
    for (std::size_t d = 0; d < 11; ++d)
      n.shift[d] += v[d];
  }
  for (double& s : n.shift)
    s /= static_cast<double>(corpus.size());
  std::array<double, 11> var{};
  for (const CircuitFeatures& f : corpus) {
    auto v = f.flatten();
    for (std::size_t d = 0; d < 11; ++d)
      var[d] += (v[d] - n.shift[d]) * (v[d] - n.shift[d]);
  }
  for (std::size_t d = 0; d < 11; ++d) {
    double sd = std::sqrt(var[d] / static_cast<double>(corpus.size()));
    n.scale[d] = sd > 1e-12 ? sd : 1.0;
  }
  return n;
}

std::array<double, 11> FeatureNormalizer::apply(const std::array<double, 11>& raw) const {
  std::array<double, 11> out;
  for (std::size_t d = 0; d < 11; ++d)
    out[d] = (raw[d] - shift[d]) / scale[d];
  return out;
}

std::array<double, 11> FeatureNormalizer::apply(const CircuitFeatures& f) const {
  return apply(f.flatten());
}

std::string FeatureNormalizer::to_json() const {
  nlohmann::json j;
  j["shift"] = shift;
  j["scale"] = scale;
  return j.dump(2);
}

FeatureNormalizer FeatureNormalizer::from_json(std::string_view text) {
  nlohmann::json j = nlohmann::json::parse(text);
  FeatureNormalizer n;
  auto shift = j.at("shift").get<std::vector<double>>();
  auto scale = j.at("scale").get<std::vector<double>>();
  if (shift.size() != 11 || scale.size() != 11)
    throw Error("feature normalizer must have 11 shift/scale pairs");
  std::copy(shift.begin(), shift.end(), n.shift.begin());
  std::copy(scale.begin(), scale.end(), n.scale.begin());
  for (double s : n.scale)
    if (!(s > 0))
      throw Error("feature normalizer scales must be positive");
  return n;
}

void FeatureNormalizer::save(const std::string& path) const {
  util::write_file(path, to_json());
}

FeatureNormalizer FeatureNormalizer::load(const std::string& path) {
  return from_json(util::read_file(path));
}

} // namespace pdrtune::features
