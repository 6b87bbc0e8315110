#include <doctest.h>

#include <set>

#include "pdrtune/params.hpp"
#include "pdrtune/util.hpp"

using namespace pdrtune;
using namespace pdrtune::params;

TEST_CASE("check_rules on the worked examples") {
  CHECK(check_rules(PdrConfig{}).empty());

  PdrConfig g_and_r;
  g_and_r.skip_general = true;
  g_and_r.two_rounds = true;
  CHECK(check_rules(g_and_r) == std::vector<int>{1});

  PdrConfig f_without_y;
  f_without_y.flop_order = true;
  CHECK(check_rules(f_without_y) == std::vector<int>{2});

  PdrConfig c_with_n;
  c_with_n.ctgs = true;
  c_with_n.skip_down = true;
  CHECK(check_rules(c_with_n) == std::vector<int>{3});

  PdrConfig k_without_t;
  k_without_t.simple_refine = true;
  CHECK(check_rules(k_without_t) == std::vector<int>{4});
}

TEST_CASE("enumerate_valid: 114 of 512, sorted, unique") {
  ConfigSpace space = enumerate_valid();
  CHECK(space.configs.size() == 114);

  std::set<unsigned> indices;
  unsigned last = 0;
  bool first = true;
  for (const PdrConfig& c : space.configs) {
    CHECK(is_valid(c));
    unsigned idx = c.index();
    indices.insert(idx);
    if (!first)
      CHECK(idx > last);
    last = idx;
    first = false;
  }
  CHECK(indices.size() == 114);

  // Branch decomposition: the skip-general branch contributes 1*2*3 = 6
  // configurations, the rest 2*3*3*2*3 = 108.
  int with_g = 0, without_g = 0;
  for (const PdrConfig& c : space.configs)
    (c.skip_general ? with_g : without_g)++;
  CHECK(with_g == 6);
  CHECK(without_g == 108);
}

TEST_CASE("enumerate_valid matches an independent straight-line filter") {
  // Second implementation straight off the rule table, bit-twiddled.
  std::set<unsigned> oracle;
  for (unsigned idx = 0; idx < 512; ++idx) {
    bool g = (idx >> 8) & 1, r = (idx >> 7) & 1, n = (idx >> 6) & 1, c = (idx >> 5) & 1,
         y = (idx >> 4) & 1, f = (idx >> 3) & 1, t = (idx >> 1) & 1, k = idx & 1;
    bool ok = (!g || (!r && !n && !c && !y && !f)) && (!f || y) && (!c || !n) && (!k || t);
    if (ok)
      oracle.insert(idx);
  }
  CHECK(oracle.size() == 114);
  CHECK(512 - oracle.size() == 398);  // ~78% of the space eliminated

  std::set<unsigned> got;
  for (const PdrConfig& c : enumerate_valid().configs)
    got.insert(c.index());
  CHECK(got == oracle);

  // Everything outside the space violates at least one rule.
  for (unsigned idx = 0; idx < 512; ++idx)
    if (!oracle.count(idx))
      CHECK_FALSE(check_rules(PdrConfig::from_index(idx)).empty());
}

TEST_CASE("flag string rendering") {
  CHECK(to_flag_string(PdrConfig{}) == "pdr");

  PdrConfig gi;
  gi.skip_general = true;
  gi.eager_push = true;
  CHECK(to_flag_string(gi) == "pdr -g -i");

  PdrConfig invalid;
  invalid.skip_general = true;
  invalid.two_rounds = true;
  CHECK_THROWS_AS(to_flag_string(invalid), Error);
}

TEST_CASE("flag string round-trip over the whole space") {
  for (const PdrConfig& c : enumerate_valid().configs)
    CHECK(from_flag_string(to_flag_string(c)) == c);
}

TEST_CASE("from_flag_string errors and leniency") {
  PdrConfig c = from_flag_string("-g -i");  // leading pdr is optional
  CHECK(c.skip_general);
  CHECK(c.eager_push);
  CHECK_THROWS_AS(from_flag_string("pdr -q"), Error);
  CHECK_THROWS_AS(from_flag_string("pdr -g -g"), Error);
  CHECK_THROWS_AS(from_flag_string("pdr --g"), Error);
}

TEST_CASE("bit string encoding") {
  PdrConfig c;
  c.two_rounds = true;
  c.use_abs = true;
  CHECK(to_bit_string(c) == "grncyfitk=010000010");
  CHECK(from_bit_string("grncyfitk=010000010") == c);
  CHECK(from_bit_string("010000010") == c);
  CHECK_THROWS_AS(from_bit_string("01000001"), Error);
  CHECK_THROWS_AS(from_bit_string("01000001x"), Error);
}
