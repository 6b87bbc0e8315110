#include <doctest.h>

#include <cmath>

#include "pdrtune/features.hpp"
#include "pdrtune/synth.hpp"
#include "test_util.hpp"

using namespace pdrtune;
using namespace pdrtune::aiger;
using namespace pdrtune::features;

namespace {

// Evaluates a literal for one full input/state assignment index.
bool lit_value(const Aig& aig, Literal lit, unsigned assignment) {
  std::vector<bool> inputs(aig.num_inputs()), state(aig.num_latches());
  for (unsigned k = 0; k < aig.num_inputs(); ++k)
    inputs[k] = (assignment >> k) & 1;
  for (unsigned k = 0; k < aig.num_latches(); ++k)
    state[k] = (assignment >> (aig.num_inputs() + k)) & 1;
  std::vector<int> memo(aig.max_var() + 1, -1);
  return testutil::eval_recursive(aig, lit, inputs, state, memo);
}

} // namespace

TEST_CASE("two-input AND feature vector") {
  Aig aig = parse_ascii("aag 3 2 0 1 1\n2\n4\n6\n6 2 4\n");
  CircuitFeatures f = extract(aig);
  CHECK(f.num_pi == 2);
  CHECK(f.num_po == 1);
  CHECK(f.num_latches == 0);
  CHECK(f.num_ands == 1);
  CHECK(f.num_mux == 0);
  CHECK(f.num_xor == 0);
  CHECK(f.num_adder == 0);
  CHECK(f.max_level == 1);
  CHECK(f.avg_level == doctest::Approx(1.0));
  CHECK(f.flop_fanout_var == 0);
  CHECK(f.flop_fanout_std == 0);
}

TEST_CASE("empty circuit yields all-zero features") {
  CircuitFeatures f = extract(Aig());
  for (double v : f.flatten())
    CHECK(v == 0.0);
}

TEST_CASE("XOR pattern: classified XOR and verified by truth table") {
  auto [aig, root] = testutil::build_xor();
  CircuitFeatures f = extract(aig);
  CHECK(f.num_xor == 1);
  CHECK(f.num_mux == 0);
  CHECK(f.num_adder == 0);

  auto ite = detect_mux(aig, root);
  REQUIRE(ite.has_value());
  CHECK(ite->then_lit == !ite->else_lit);
  // The positive root computes a ^ b; check all four assignments.
  for (unsigned assignment = 0; assignment < 4; ++assignment) {
    bool a = assignment & 1, b = (assignment >> 1) & 1;
    CHECK(lit_value(aig, Literal::of_var(root), assignment) == (a != b));
  }
}

TEST_CASE("ITE pattern: decomposition matches the 8-row truth table") {
  auto [aig, root] = testutil::build_ite();
  auto ite = detect_mux(aig, root);
  REQUIRE(ite.has_value());
  CHECK_FALSE(ite->sel.negated());
  CHECK(ite->sel == Literal::of_var(1));
  CHECK(ite->then_lit == Literal::of_var(2));
  CHECK(ite->else_lit == Literal::of_var(3));

  for (unsigned assignment = 0; assignment < 8; ++assignment) {
    bool s = lit_value(aig, ite->sel, assignment);
    bool t = lit_value(aig, ite->then_lit, assignment);
    bool e = lit_value(aig, ite->else_lit, assignment);
    bool node = lit_value(aig, Literal::of_var(root, true), assignment);
    CHECK(node == (s ? t : e));
  }

  CircuitFeatures f = extract(aig);
  CHECK(f.num_mux == 1);
  CHECK(f.num_xor == 0);
}

TEST_CASE("plain AND is not a MUX") {
  Aig aig = parse_ascii("aag 3 2 0 1 1\n2\n4\n6\n6 2 4\n");
  CHECK_FALSE(detect_mux(aig, 3).has_value());
}

TEST_CASE("half adder: counted once, with correct sum and carry functions") {
  Aig aig = testutil::build_half_adder();
  CircuitFeatures f = extract(aig);
  CHECK(f.num_adder == 1);
  CHECK(f.num_xor == 0);
  CHECK(f.num_mux == 0);

  PatternSummary p = detect_patterns(aig);
  REQUIRE(p.half_adders.size() == 1);
  const HalfAdderMatch& ha = p.half_adders[0];
  for (unsigned assignment = 0; assignment < 4; ++assignment) {
    bool a = lit_value(aig, ha.a, assignment);
    bool b = lit_value(aig, ha.b, assignment);
    CHECK(lit_value(aig, ha.sum, assignment) == (a != b));
    CHECK(lit_value(aig, ha.carry, assignment) == (a && b));
  }
}

TEST_CASE("full adder: one adder, nothing double-counted") {
  Aig aig = testutil::build_full_adder();
  CircuitFeatures f = extract(aig);
  CHECK(f.num_adder == 1);
  CHECK(f.num_xor == 0);
  CHECK(f.num_mux == 0);

  PatternSummary p = detect_patterns(aig);
  REQUIRE(p.full_adders.size() == 1);
  const FullAdderMatch& fa = p.full_adders[0];
  for (unsigned assignment = 0; assignment < 8; ++assignment) {
    bool a = (assignment >> 0) & 1, b = (assignment >> 1) & 1, c = (assignment >> 2) & 1;
    bool sum = lit_value(aig, fa.sum, assignment);
    bool carry = lit_value(aig, fa.carry, assignment);
    CHECK(sum == ((a != b) != c));
    CHECK(carry == ((a && b) || (a && c) || (b && c)));
  }
}

TEST_CASE("pattern invariants on random circuits") {
  Rng rng(41);
  synth::RandomAigOptions opts;
  opts.max_inputs = 8;
  opts.max_latches = 3;
  opts.max_ands = 50;
  for (int trial = 0; trial < 40; ++trial) {
    Aig aig = synth::random_aig(rng, opts);
    CircuitFeatures f = extract(aig);
    CHECK(f.num_xor + f.num_mux <= f.num_ands);
    CHECK(f.flop_fanout_std == doctest::Approx(std::sqrt(f.flop_fanout_var)).epsilon(1e-9));
    CHECK(f.avg_level <= f.max_level);

    // Every reported pair satisfies its defining truth table, across the
    // whole (small) input/state space.
    PatternSummary p = detect_patterns(aig);
    unsigned bits = aig.num_inputs() + aig.num_latches();
    if (bits > 12)
      continue;
    for (unsigned assignment = 0; assignment < (1u << bits); ++assignment) {
      for (const HalfAdderMatch& ha : p.half_adders) {
        bool a = lit_value(aig, ha.a, assignment);
        bool b = lit_value(aig, ha.b, assignment);
        CHECK(lit_value(aig, ha.sum, assignment) == (a != b));
        CHECK(lit_value(aig, ha.carry, assignment) == (a && b));
      }
      for (const FullAdderMatch& fa : p.full_adders) {
        bool a = lit_value(aig, Literal::of_var(fa.support[0]), assignment);
        bool b = lit_value(aig, Literal::of_var(fa.support[1]), assignment);
        bool c = lit_value(aig, Literal::of_var(fa.support[2]), assignment);
        CHECK(lit_value(aig, fa.sum, assignment) == ((a != b) != c));
        CHECK(lit_value(aig, fa.carry, assignment) ==
              ((a && b) || (a && c) || (b && c)));
      }
    }
  }
}

TEST_CASE("levels: chain of five ANDs") {
  // Each AND consumes the previous one.
  std::vector<AndGate> ands;
  for (unsigned k = 0; k < 5; ++k) {
    Literal prev = k == 0 ? Literal::of_var(1) : Literal::of_var(2 + k);
    ands.push_back({3 + k, prev, Literal::of_var(2)});
  }
  Aig aig(2, {}, std::move(ands), {Literal::of_var(7)});
  LevelInfo info = compute_levels(aig);
  CHECK(info.max_level == 5);
  CHECK(info.avg_level == doctest::Approx(3.0));
}

TEST_CASE("levels: empty circuit") {
  LevelInfo info = compute_levels(Aig());
  CHECK(info.max_level == 0);
  CHECK(info.avg_level == 0.0);
}

TEST_CASE("flop fanout statistics") {
  SUBCASE("fanouts 1,1,4") {
    std::vector<Latch> latches = {
        {2, Literal::of_var(1)}, {3, Literal::of_var(1)}, {4, Literal::of_var(1)}};
    std::vector<AndGate> ands = {
        {5, Literal::of_var(4), Literal::of_var(4)},
        {6, Literal::of_var(4), Literal::of_var(4, true)},
        {7, Literal::of_var(2), Literal::of_var(1)},
    };
    Aig aig(1, std::move(latches), std::move(ands), {Literal::of_var(3)});
    auto [var, sd] = flop_fanout_stats(aig);
    CHECK(var == doctest::Approx(2.0));
    CHECK(sd == doctest::Approx(std::sqrt(2.0)));
  }
  SUBCASE("equal fanouts give zero variance") {
    std::vector<Latch> latches = {{2, Literal::of_var(3)}, {3, Literal::of_var(2)}};
    Aig aig(1, std::move(latches), {}, {Literal::of_var(2), Literal::of_var(3, true)});
    // Each latch: one next-state reference plus one output reference.
    auto [var, sd] = flop_fanout_stats(aig);
    CHECK(var == 0.0);
    CHECK(sd == 0.0);
  }
  SUBCASE("no latches") {
    auto [var, sd] = flop_fanout_stats(Aig());
    CHECK(var == 0.0);
    CHECK(sd == 0.0);
  }
}

TEST_CASE("extraction is invariant under structure-preserving relabeling") {
  Rng rng(43);
  synth::RandomAigOptions opts;
  opts.min_inputs = 3;
  opts.max_inputs = 8;
  opts.min_latches = 2;
  opts.max_latches = 5;
  opts.max_ands = 40;
  for (int trial = 0; trial < 20; ++trial) {
    Aig aig = synth::random_aig(rng, opts);
    std::vector<unsigned> input_perm(aig.num_inputs()), latch_perm(aig.num_latches());
    for (unsigned k = 0; k < input_perm.size(); ++k)
      input_perm[k] = k;
    for (unsigned k = 0; k < latch_perm.size(); ++k)
      latch_perm[k] = k;
    rng.shuffle(input_perm);
    rng.shuffle(latch_perm);
    Aig relabeled = testutil::relabel(aig, input_perm, latch_perm);
    auto a = extract(aig).flatten();
    auto b = extract(relabeled).flatten();
    for (int d = 0; d < 11; ++d)
      CHECK(a[d] == doctest::Approx(b[d]).epsilon(1e-12));
  }
}

TEST_CASE("feature vector order is frozen") {
  const std::array<std::string, 11> expected = {
      "num_pi",    "num_po",    "num_latches",     "num_ands",
      "num_mux",   "num_xor",   "num_adder",       "max_level",
      "avg_level", "flop_fanout_var", "flop_fanout_std"};
  CHECK(feature_names() == expected);

  CircuitFeatures f;
  f.num_pi = 1;
  f.num_po = 2;
  f.num_latches = 3;
  f.num_ands = 4;
  f.num_mux = 5;
  f.num_xor = 6;
  f.num_adder = 7;
  f.max_level = 8;
  f.avg_level = 9;
  f.flop_fanout_var = 10;
  f.flop_fanout_std = 11;
  std::array<double, 11> want = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11};
  CHECK(f.flatten() == want);
}

TEST_CASE("normalizer") {
  SUBCASE("single circuit maps to zero") {
    CircuitFeatures f = extract(testutil::build_xor().aig);
    FeatureNormalizer n = fit_normalizer({f});
    for (double v : n.apply(f))
      CHECK(v == doctest::Approx(0.0));
  }
  SUBCASE("corpus {0,2} maps to -1 and +1") {
    CircuitFeatures a, b;
    a.num_ands = 0;
    b.num_ands = 2;
    FeatureNormalizer n = fit_normalizer({a, b});
    CHECK(n.apply(a)[3] == doctest::Approx(-1.0));
    CHECK(n.apply(b)[3] == doctest::Approx(1.0));
  }
  SUBCASE("constant dimension passes through with scale 1") {
    CircuitFeatures a, b;
    a.num_pi = b.num_pi = 7;
    a.num_ands = 0;
    b.num_ands = 2;
    FeatureNormalizer n = fit_normalizer({a, b});
    CHECK(n.scale[0] == 1.0);
    CHECK(n.apply(a)[0] == doctest::Approx(0.0));
    CHECK(n.apply(b)[0] == doctest::Approx(0.0));
  }
  SUBCASE("fitting corpus lands on mean 0, std 1") {
    Rng rng(47);
    synth::RandomAigOptions opts;
    opts.max_inputs = 8;
    opts.max_latches = 6;
    opts.max_ands = 60;
    std::vector<CircuitFeatures> corpus;
    for (int k = 0; k < 25; ++k)
      corpus.push_back(extract(synth::random_aig(rng, opts)));
    FeatureNormalizer n = fit_normalizer(corpus);
    std::array<double, 11> mean{}, var{};
    for (const CircuitFeatures& f : corpus) {
      auto z = n.apply(f);
      for (int d = 0; d < 11; ++d)
        mean[d] += z[d];
    }
    for (int d = 0; d < 11; ++d)
      mean[d] /= static_cast<double>(corpus.size());
    for (const CircuitFeatures& f : corpus) {
      auto z = n.apply(f);
      for (int d = 0; d < 11; ++d)
        var[d] += (z[d] - mean[d]) * (z[d] - mean[d]);
    }
    for (int d = 0; d < 11; ++d) {
      CHECK(std::abs(mean[d]) < 1e-6);
      double sd = std::sqrt(var[d] / static_cast<double>(corpus.size()));
      if (n.scale[d] != 1.0 || std::abs(n.shift[d]) > 1e-12)
        CHECK((std::abs(sd - 1.0) < 1e-6 || sd == 0.0));
    }
  }
  SUBCASE("empty corpus is an error") {
    CHECK_THROWS_AS(fit_normalizer({}), Error);
  }
  SUBCASE("JSON round-trip") {
    CircuitFeatures a, b;
    a.num_ands = 1;
    b.num_ands = 5;
    b.avg_level = 2.5;
    FeatureNormalizer n = fit_normalizer({a, b});
    FeatureNormalizer back = FeatureNormalizer::from_json(n.to_json());
    CHECK(back == n);
  }
}
