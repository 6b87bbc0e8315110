#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>

#include "pdrtune/synth.hpp"
#include "pdrtune/train.hpp"
#include "test_util.hpp"

using namespace pdrtune;
using namespace pdrtune::train;
using params::PdrConfig;

namespace {

RuntimeRecord rec(const std::string& circuit, PdrConfig config, double seconds,
                  Outcome outcome = Outcome::Safe) {
  return {circuit, config, seconds, outcome};
}

std::vector<RuntimeRecord> toy_records(int n_circuits, int n_configs = 3) {
  std::vector<RuntimeRecord> records;
  params::ConfigSpace space = params::enumerate_valid();
  for (int c = 0; c < n_circuits; ++c)
    for (int k = 0; k < n_configs; ++k)
      records.push_back(rec("c" + std::to_string(c), space.configs[k], 10.0 + k));
  return records;
}

} // namespace

TEST_CASE("dataset CSV round-trip and validation") {
  std::vector<RuntimeRecord> records = {
      rec("a", PdrConfig{}, 12.5),
      rec("a", params::from_flag_string("pdr -g -i"), 3600.0, Outcome::Timeout),
      rec("b", params::from_flag_string("pdr -t -k"), 0.25, Outcome::Unsafe),
  };
  std::string path = (std::filesystem::temp_directory_path() / "pdrtune_ds.csv").string();
  util::write_file(path, dataset_csv(records));
  std::vector<RuntimeRecord> back = load_dataset(path);
  REQUIRE(back.size() == 3);
  CHECK(back[0].circuit_id == "a");
  CHECK(back[1].config == records[1].config);
  CHECK(back[1].outcome == Outcome::Timeout);
  CHECK(back[2].wall_seconds == doctest::Approx(0.25));
  std::filesystem::remove(path);
}

TEST_CASE("load_dataset rejects bad rows") {
  auto write_and_load = [](const std::string& body) {
    std::string path =
        (std::filesystem::temp_directory_path() / "pdrtune_ds_bad.csv").string();
    util::write_file(path, body);
    std::vector<RuntimeRecord> r = load_dataset(path);
    std::filesystem::remove(path);
    return r;
  };
  CHECK_THROWS_AS(write_and_load("nope\n"), Error);
  CHECK_THROWS_AS(
      write_and_load("circuit,config_flags,seconds,outcome\na,pdr,1.0,MAYBE\n"), Error);
  CHECK_THROWS_AS(
      write_and_load("circuit,config_flags,seconds,outcome\na,pdr -f,1.0,SAFE\n"), Error);
  CHECK_THROWS_AS(
      write_and_load("circuit,config_flags,seconds,outcome\na,pdr,0.0,SAFE\n"), Error);
  CHECK_THROWS_AS(
      write_and_load("circuit,config_flags,seconds,outcome\na,pdr,x,SAFE\n"), Error);
}

TEST_CASE("timeout imputation doubles the wall limit before the log") {
  CHECK(target_log_runtime(rec("a", PdrConfig{}, 100.0)) ==
        doctest::Approx(std::log1p(100.0)));
  CHECK(target_log_runtime(rec("a", PdrConfig{}, 3600.0, Outcome::Timeout)) ==
        doctest::Approx(std::log1p(7200.0)));
}

TEST_CASE("split: 10 circuits go 8/1/1 by circuit") {
  std::vector<RuntimeRecord> records = toy_records(10);
  SplitRecords folds = split(records, 7);

  auto circuits_of = [](const std::vector<RuntimeRecord>& v) {
    std::set<std::string> s;
    for (const RuntimeRecord& r : v)
      s.insert(r.circuit_id);
    return s;
  };
  auto tr = circuits_of(folds.train), va = circuits_of(folds.val), te = circuits_of(folds.test);
  CHECK(tr.size() == 8);
  CHECK(va.size() == 1);
  CHECK(te.size() == 1);

  // Partition: pairwise disjoint and jointly complete.
  for (const auto& c : va)
    CHECK_FALSE(tr.count(c));
  for (const auto& c : te) {
    CHECK_FALSE(tr.count(c));
    CHECK_FALSE(va.count(c));
  }
  CHECK(folds.train.size() + folds.val.size() + folds.test.size() == records.size());

  // Deterministic under the seed, different for another seed (10 circuits
  // give 90 val/test combinations, so a collision would be suspicious).
  SplitRecords again = split(records, 7);
  CHECK(circuits_of(again.val) == va);
  CHECK(circuits_of(again.test) == te);

  CHECK_THROWS_AS(split(toy_records(9), 7), Error);
}

TEST_CASE("filter_nontrivial keys on the default-configuration record") {
  PdrConfig def;
  PdrConfig other = params::from_flag_string("pdr -i");
  std::vector<RuntimeRecord> records = {
      rec("fast", def, 59.0),        rec("fast", other, 400.0),
      rec("slow", def, 61.0),        rec("slow", other, 10.0),
      rec("stuck", def, 3600.0, Outcome::Timeout),
      rec("nodefault", other, 500.0),
  };
  std::vector<RuntimeRecord> kept = filter_nontrivial(records, 60.0);
  std::set<std::string> names;
  for (const RuntimeRecord& r : kept)
    names.insert(r.circuit_id);
  CHECK(names == std::set<std::string>{"slow", "stuck"});
  CHECK(kept.size() == 3);  // both slow records plus the stuck one
}

TEST_CASE("kendall tau and spearman rho basics") {
  std::vector<double> truth = {1, 2, 3};
  std::vector<double> same = {10, 20, 30};
  std::vector<double> reversed = {30, 20, 10};
  std::vector<double> swapped = {1, 3, 2};

  CHECK(kendall_tau(truth, same) == doctest::Approx(1.0));
  CHECK(kendall_tau(truth, reversed) == doctest::Approx(-1.0));
  CHECK(kendall_tau(truth, swapped) == doctest::Approx(1.0 / 3.0));
  CHECK(spearman_rho(truth, same) == doctest::Approx(1.0));
  CHECK(spearman_rho(truth, reversed) == doctest::Approx(-1.0));
  CHECK(spearman_rho(truth, swapped) == doctest::Approx(0.5));

  std::vector<double> one = {1};
  CHECK_THROWS_AS(kendall_tau(one, one), Error);
  CHECK_THROWS_AS(spearman_rho(one, one), Error);
}

TEST_CASE("rank metrics match exhaustive oracles for n <= 6") {
  // tau via inversion counting; rho via Pearson correlation of rank vectors.
  for (std::size_t n = 2; n <= 6; ++n) {
    std::vector<double> truth(n);
    for (std::size_t k = 0; k < n; ++k)
      truth[k] = static_cast<double>(k + 1);
    std::vector<double> pred = truth;
    std::sort(pred.begin(), pred.end());
    do {
      long long inversions = 0;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
          if (pred[i] > pred[j])
            ++inversions;
      double pairs = static_cast<double>(n) * (n - 1) / 2.0;
      double tau_oracle = (pairs - 2.0 * inversions) / pairs;
      CHECK(kendall_tau(truth, pred) == doctest::Approx(tau_oracle).epsilon(1e-15));

      double mean = (n + 1) / 2.0;
      double cov = 0, var_t = 0, var_p = 0;
      for (std::size_t k = 0; k < n; ++k) {
        cov += (truth[k] - mean) * (pred[k] - mean);
        var_t += (truth[k] - mean) * (truth[k] - mean);
        var_p += (pred[k] - mean) * (pred[k] - mean);
      }
      double rho_oracle = cov / std::sqrt(var_t * var_p);
      CHECK(spearman_rho(truth, pred) == doctest::Approx(rho_oracle).epsilon(1e-12));
    } while (std::next_permutation(pred.begin(), pred.end()));
  }
}

TEST_CASE("rank metrics are invariant under monotone transforms of predictions") {
  Rng rng(71);
  for (int trial = 0; trial < 30; ++trial) {
    std::size_t n = 3 + rng.below(6);
    std::vector<double> truth(n), pred(n), warped(n);
    for (std::size_t k = 0; k < n; ++k) {
      truth[k] = rng.uniform(0, 10);
      pred[k] = rng.uniform(0, 10);
      warped[k] = std::exp(0.5 * pred[k]) + 3.0;
    }
    CHECK(kendall_tau(truth, pred) == doctest::Approx(kendall_tau(truth, warped)));
    CHECK(spearman_rho(truth, pred) == doctest::Approx(spearman_rho(truth, warped)));
  }
}

TEST_CASE("prediction ties count as neither concordant nor discordant") {
  std::vector<double> truth = {1, 2, 3};
  std::vector<double> constant = {5, 5, 5};
  CHECK(kendall_tau(truth, constant) == 0.0);
}

TEST_CASE("prepare and evaluate wire circuits to samples correctly") {
  Rng rng(73);
  synth::RandomAigOptions opts;
  opts.min_latches = 1;
  opts.max_inputs = 6;
  opts.max_latches = 4;
  opts.max_ands = 30;

  std::vector<RuntimeRecord> records = toy_records(10, 4);
  ArtifactMap artifacts =
      build_artifacts(records, [&](const std::string&) { return synth::random_aig(rng, opts); });
  CHECK(artifacts.size() == 10);

  features::FeatureNormalizer norm = fit_normalizer_on(records, artifacts);
  PreparedData data = prepare(records, artifacts, norm);
  CHECK(data.circuits.size() == 10);
  CHECK(data.samples.size() == 40);

  model::PredictorNet net;  // zero weights: constant predictions
  RankMetrics m = evaluate_metrics(net, data);
  CHECK(m.per_circuit.size() == 10);
  CHECK(m.kendall_tau == 0.0);  // constant predictions tie every pair
}

TEST_CASE("train_loop is deterministic and restores the best checkpoint") {
  Rng rng(79);
  synth::RandomAigOptions opts;
  opts.min_latches = 1;
  opts.max_inputs = 6;
  opts.max_latches = 4;
  opts.max_ands = 25;

  std::vector<RuntimeRecord> records = toy_records(12, 6);
  ArtifactMap artifacts =
      build_artifacts(records, [&](const std::string&) { return synth::random_aig(rng, opts); });
  features::FeatureNormalizer norm = fit_normalizer_on(records, artifacts);
  SplitRecords folds = split(records, 3);
  PreparedData train_data = prepare(folds.train, artifacts, norm);
  PreparedData val_data = prepare(folds.val, artifacts, norm);

  TrainOptions topts;
  topts.max_epochs = 5;
  topts.seed = 3;

  model::PredictorNet net_a, net_b;
  net_a.init_params(3);
  net_b.init_params(3);
  TrainResult ra = train_loop(net_a, train_data, val_data, topts);
  TrainResult rb = train_loop(net_b, train_data, val_data, topts);

  REQUIRE(ra.epochs.size() == rb.epochs.size());
  for (std::size_t e = 0; e < ra.epochs.size(); ++e) {
    CHECK(ra.epochs[e].train_loss == rb.epochs[e].train_loss);
    CHECK(ra.epochs[e].val_tau == rb.epochs[e].val_tau);
  }
  for (std::size_t k = 0; k < net_a.num_params(); ++k)
    CHECK(net_a.params()[k] == net_b.params()[k]);
  CHECK(ra.best_epoch >= 0);
  CHECK(ra.best_val_tau >= -1.0);
}

TEST_CASE("permutation importance of a dead input is exactly zero") {
  Rng rng(83);
  synth::RandomAigOptions opts;
  opts.max_inputs = 6;
  opts.max_latches = 4;
  opts.max_ands = 25;

  std::vector<RuntimeRecord> records = toy_records(10, 3);
  ArtifactMap artifacts =
      build_artifacts(records, [&](const std::string&) { return synth::random_aig(rng, opts); });
  features::FeatureNormalizer norm = fit_normalizer_on(records, artifacts);
  PreparedData data = prepare(records, artifacts, norm);

  model::PredictorNet net;  // all-zero weights ignore every feature
  auto importance = permutation_importance(net, data, 5, 3);
  REQUIRE(importance.size() == 11);
  for (const auto& [name, delta] : importance)
    CHECK(delta == 0.0);
  CHECK(importance[0].first == "num_pi");
}
