#include <doctest.h>

#include <set>

#include "pdrtune/coi.hpp"
#include "pdrtune/synth.hpp"
#include "test_util.hpp"

using namespace pdrtune;
using namespace pdrtune::aiger;

namespace {

// Independent fixpoint oracle: plain backward BFS over AND fanins, repeated
// with re-seeding from the next-state literals of reached latches until a
// full sweep adds nothing.
std::set<unsigned> coi_oracle(const Aig& aig) {
  std::set<unsigned> reached;
  std::vector<unsigned> frontier;
  auto seed = [&](unsigned var) {
    if (var != 0 && reached.insert(var).second)
      frontier.push_back(var);
  };
  for (Literal out : aig.outputs())
    seed(out.var());
  for (;;) {
    while (!frontier.empty()) {
      unsigned var = frontier.back();
      frontier.pop_back();
      if (aig.kind_of(var) == Aig::NodeKind::And) {
        const AndGate& g = aig.and_of(var);
        seed(g.rhs0.var());
        seed(g.rhs1.var());
      }
    }
    std::set<unsigned> snapshot = reached;
    std::size_t before = reached.size();
    for (unsigned var : snapshot)
      if (aig.kind_of(var) == Aig::NodeKind::Latch)
        seed(aig.latch_of(var).next.var());
    if (reached.size() == before)
      break;
  }
  return reached;
}

unsigned count_kind(const std::set<unsigned>& vars, const Aig& aig, Aig::NodeKind kind) {
  unsigned n = 0;
  for (unsigned v : vars)
    if (aig.kind_of(v) == kind)
      ++n;
  return n;
}

} // namespace

TEST_CASE("dangling AND is removed") {
  // out = a & b; a dangling gate a & !b also exists.
  std::vector<AndGate> ands = {
      {3, Literal::of_var(1), Literal::of_var(2)},
      {4, Literal::of_var(1), Literal::of_var(2, true)},
  };
  Aig aig(2, {}, std::move(ands), {Literal::of_var(3)});
  auto [reduced, report] = coi::reduce(aig);
  CHECK(report.ands_before == 2);
  CHECK(report.ands_after == 1);
  CHECK(reduced.num_ands() == 1);
  CHECK(report.reduction_percent == doctest::Approx(50.0));
}

TEST_CASE("identity when everything feeds the output") {
  std::vector<AndGate> ands = {
      {3, Literal::of_var(1), Literal::of_var(2)},
      {4, Literal::of_var(3), Literal::of_var(1, true)},
  };
  Aig aig(2, {}, std::move(ands), {Literal::of_var(4)});
  auto [reduced, report] = coi::reduce(aig);
  CHECK(reduced == aig);
  CHECK(report.reduction_percent == 0.0);
  CHECK(report.ands_after == report.ands_before);
}

TEST_CASE("latch next-state cone is retained through the fixpoint") {
  // Latch feeds the output; its next-state is an AND that nothing else uses.
  // A second AND is fully dead.
  std::vector<Latch> latches = {{2, Literal::of_var(3)}};
  std::vector<AndGate> ands = {
      {3, Literal::of_var(1), Literal::of_var(2)},        // next-state logic
      {4, Literal::of_var(1, true), Literal::of_var(2)},  // dead
  };
  Aig aig(1, std::move(latches), std::move(ands), {Literal::of_var(2, true)});
  auto [reduced, report] = coi::reduce(aig);
  CHECK(report.latches_after == 1);
  CHECK(report.ands_after == 1);
  REQUIRE(reduced.num_ands() == 1);
  // The retained AND is the next-state gate.
  CHECK(reduced.latches()[0].next.var() == reduced.ands()[0].lhs);
}

TEST_CASE("zero outputs is an error") {
  Aig aig(1, {}, {}, {});
  CHECK_THROWS_AS(coi::reduce(aig), Error);
}

TEST_CASE("retained set equals the repeated-BFS oracle") {
  Rng rng(23);
  synth::RandomAigOptions opts;
  opts.max_inputs = 8;
  opts.max_latches = 6;
  opts.max_ands = 60;
  for (int trial = 0; trial < 100; ++trial) {
    Aig aig = synth::random_aig(rng, opts);
    std::set<unsigned> want = coi_oracle(aig);
    auto [reduced, report] = coi::reduce(aig);
    CHECK(report.latches_after == count_kind(want, aig, Aig::NodeKind::Latch));
    CHECK(report.ands_after == count_kind(want, aig, Aig::NodeKind::And));
  }
}

TEST_CASE("idempotence") {
  Rng rng(29);
  synth::RandomAigOptions opts;
  opts.max_inputs = 8;
  opts.max_latches = 6;
  opts.max_ands = 60;
  for (int trial = 0; trial < 50; ++trial) {
    Aig aig = synth::random_aig(rng, opts);
    Aig once = coi::reduce(aig).first;
    Aig twice = coi::reduce(once).first;
    CHECK(once == twice);
  }
}

TEST_CASE("semantic preservation under 3-step simulation") {
  Rng rng(31);
  synth::RandomAigOptions opts;
  opts.max_inputs = 8;
  opts.max_latches = 6;
  opts.max_ands = 40;
  for (int trial = 0; trial < 30; ++trial) {
    Aig aig = synth::random_aig(rng, opts);
    auto [reduced, report] = coi::reduce(aig);

    // Project the original latch state onto the retained latches by matching
    // the order-preserving reduction.
    std::vector<unsigned> kept;  // original latch positions present in reduced
    {
      std::set<unsigned> retained = coi_oracle(aig);
      for (unsigned k = 0; k < aig.num_latches(); ++k)
        if (retained.count(aig.num_inputs() + 1 + k))
          kept.push_back(k);
    }
    REQUIRE(kept.size() == reduced.num_latches());

    for (int round = 0; round < 16; ++round) {
      std::vector<bool> inputs(aig.num_inputs());
      for (std::size_t k = 0; k < inputs.size(); ++k)
        inputs[k] = rng.flip();
      std::vector<bool> state(aig.num_latches());
      for (std::size_t k = 0; k < state.size(); ++k)
        state[k] = aig.latches()[k].init == LatchInit::One;
      std::vector<bool> rstate(kept.size());
      for (std::size_t k = 0; k < kept.size(); ++k)
        rstate[k] = state[kept[k]];

      for (int step = 0; step < 3; ++step) {
        SimResult a = simulate(aig, inputs, state);
        SimResult b = simulate(reduced, inputs, rstate);
        CHECK(a.outputs == b.outputs);
        state = a.next_state;
        for (std::size_t k = 0; k < kept.size(); ++k)
          rstate[k] = state[kept[k]];
      }
    }
  }
}

TEST_CASE("report CSV row") {
  coi::CoiReport r;
  r.ands_before = 10;
  r.ands_after = 7;
  r.latches_before = 3;
  r.latches_after = 2;
  r.reduction_percent = 30.0;
  r.elapsed_ms = 1.25;
  CHECK(coi::CoiReport::csv_header() ==
        "circuit,ands_before,ands_after,latches_before,latches_after,reduction_pct,ms");
  CHECK(r.to_csv_row("foo") == "foo,10,7,3,2,30.0000,1.250");
}
