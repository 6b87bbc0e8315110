#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pdrtune/aiger.hpp"
#include "pdrtune/coi.hpp"
#include "pdrtune/features.hpp"
#include "pdrtune/graphdata.hpp"
#include "pdrtune/model.hpp"
#include "pdrtune/params.hpp"
#include "pdrtune/predict.hpp"
#include "pdrtune/runner.hpp"
#include "pdrtune/synth.hpp"
#include "pdrtune/train.hpp"
#include "pdrtune/util.hpp"

namespace fs = std::filesystem;
using namespace pdrtune;

namespace {

void emit(const std::string& out_path, const std::string& text) {
  if (out_path.empty())
    std::fputs(text.c_str(), stdout);
  else
    util::write_file(out_path, text);
}

aiger::Aig load_circuit(const std::string& dir, const std::string& id) {
  for (const char* ext : {".aag", ".aig", ""}) {
    fs::path p = fs::path(dir) / (id + ext);
    if (fs::exists(p))
      return aiger::load_file(p.string());
  }
  throw Error("no AIGER file for circuit '" + id + "' under " + dir);
}

std::string format_row(const std::string& name, const std::array<double, 11>& v) {
  std::string row = name;
  for (double x : v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), ",%.6g", x);
    row += buf;
  }
  return row + "\n";
}

struct TrainArgs {
  std::string data, circuits, out, metrics;
  train::TrainOptions opts;
  double filter_trivial = -1;
};

int cmd_train(const TrainArgs& args) {
  auto records = train::load_dataset(args.data);
  if (args.filter_trivial >= 0)
    records = train::filter_nontrivial(records, args.filter_trivial);
  auto folds = train::split(records, args.opts.seed);
  auto artifacts = train::build_artifacts(
      records, [&](const std::string& id) { return load_circuit(args.circuits, id); });
  auto normalizer = train::fit_normalizer_on(folds.train, artifacts);
  auto train_data = train::prepare(folds.train, artifacts, normalizer);
  auto val_data = train::prepare(folds.val, artifacts, normalizer);

  model::PredictorNet net;
  net.init_params(args.opts.seed);
  train::TrainResult result = train::train_loop(net, train_data, val_data, args.opts);
  model::save_checkpoint(args.out, net, normalizer);

  if (!args.metrics.empty()) {
    std::string csv = "epoch,train_loss,val_tau,val_rho\n";
    for (std::size_t e = 0; e < result.epochs.size(); ++e) {
      char buf[120];
      std::snprintf(buf, sizeof(buf), "%zu,%.6f,%.6f,%.6f\n", e, result.epochs[e].train_loss,
                    result.epochs[e].val_tau, result.epochs[e].val_rho);
      csv += buf;
    }
    util::write_file(args.metrics, csv);
  }

  auto test_data = train::prepare(folds.test, artifacts, normalizer);
  train::RankMetrics test = train::evaluate_metrics(net, test_data);
  std::printf("trained %zu epochs (best epoch %d, val tau %.4f)\n", result.epochs.size(),
              result.best_epoch, result.best_val_tau);
  std::printf("test fold: mean tau %.4f, mean rho %.4f over %zu circuits\n", test.kendall_tau,
              test.spearman_rho, test.per_circuit.size());
  std::printf("checkpoint written to %s\n", args.out.c_str());
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"circuit-aware PDR configuration toolkit"};
  app.require_subcommand(1);

  // ------------------------------------------------------------------ space
  auto* sp_space = app.add_subcommand("space", "enumerate the valid configuration space");
  bool space_count_only = false;
  std::string space_out;
  sp_space->add_flag("--count-only", space_count_only, "print only the count");
  sp_space->add_option("-o,--out", space_out, "write CSV here instead of stdout");

  // --------------------------------------------------------------- features
  auto* sp_feat = app.add_subcommand("features", "extract the 11 static features");
  std::vector<std::string> feat_paths;
  std::string feat_normalize, feat_out;
  sp_feat->add_option("aig", feat_paths, "AIGER files")->required();
  sp_feat->add_option("--normalize", feat_normalize, "apply a stored normalizer (JSON)");
  sp_feat->add_option("-o,--out", feat_out, "output CSV path");

  // -------------------------------------------------------------------- coi
  auto* sp_coi = app.add_subcommand("coi", "cone-of-influence reduction");
  std::string coi_in, coi_out, coi_report;
  sp_coi->add_option("aig", coi_in, "input AIGER file")->required();
  sp_coi->add_option("-o,--out", coi_out, "write the reduced circuit here");
  sp_coi->add_option("--report", coi_report, "write the CSV report here");

  // ------------------------------------------------------------------ graph
  auto* sp_graph = app.add_subcommand("graph", "emit the GNN edge list and node features");
  std::string graph_in, graph_edgelist, graph_nodefeat;
  bool graph_no_coi = false;
  sp_graph->add_option("aig", graph_in, "input AIGER file")->required();
  sp_graph->add_flag("--no-coi", graph_no_coi, "skip the COI reduction");
  sp_graph->add_option("--edgelist", graph_edgelist, "edge list output path");
  sp_graph->add_option("--nodefeat", graph_nodefeat, "node feature CSV output path");

  // ------------------------------------------------------------------ synth
  auto* sp_synth = app.add_subcommand("synth", "generate a synthetic training corpus");
  synth::SynthOptions synth_opts;
  std::string synth_dir;
  sp_synth->add_option("--out", synth_dir, "output directory")->required();
  sp_synth->add_option("--n", synth_opts.n_circuits, "number of circuits");
  sp_synth->add_option("--seed", synth_opts.seed, "generator seed");
  sp_synth->add_option("--wall-limit", synth_opts.wall_limit, "clamp for planted runtimes");

  // ------------------------------------------------------------------ train
  auto* sp_train = app.add_subcommand("train", "train the runtime predictor");
  TrainArgs train_args;
  sp_train->add_option("--data", train_args.data, "runtime CSV")->required();
  sp_train->add_option("--circuits", train_args.circuits, "directory of AIGER files")->required();
  sp_train->add_option("--out", train_args.out, "checkpoint output path")->required();
  sp_train->add_option("--metrics", train_args.metrics, "per-epoch metrics CSV path");
  sp_train->add_option("--epochs", train_args.opts.max_epochs, "epoch cap");
  sp_train->add_option("--patience", train_args.opts.patience, "early-stopping patience");
  sp_train->add_option("--lr", train_args.opts.lr, "Adam learning rate");
  sp_train->add_option("--alpha", train_args.opts.loss.alpha, "MSE weight in the hybrid loss");
  sp_train->add_option("--margin", train_args.opts.loss.margin, "ranking hinge margin");
  sp_train->add_option("--seed", train_args.opts.seed, "split/init/shuffle seed");
  sp_train->add_option("--filter-trivial", train_args.filter_trivial,
                       "drop circuits whose default run finished within this many seconds");

  // ---------------------------------------------------------------- predict
  auto* sp_pred = app.add_subcommand("predict", "rank configurations for a circuit");
  std::string pred_model, pred_aig, pred_out;
  int pred_top = 114;
  sp_pred->add_option("--model", pred_model, "checkpoint path")->required();
  sp_pred->add_option("--aig", pred_aig, "AIGER file")->required();
  sp_pred->add_option("--top", pred_top, "number of configurations to emit");
  sp_pred->add_option("-o,--out", pred_out, "output CSV path");

  // -------------------------------------------------------------------- run
  auto* sp_run = app.add_subcommand("run", "execute engine configurations");
  runner::RunSpec run_spec;
  std::string run_aig, run_flags, run_model, run_out;
  int run_top = 1;
  bool run_sequential = false;
  sp_run->add_option("--engine", run_spec.engine_template,
                     "command template with {aig} and {flags}")->required();
  sp_run->add_option("--aig", run_aig, "AIGER file")->required();
  sp_run->add_option("--flags", run_flags, "run one explicit configuration, e.g. 'pdr -g'");
  sp_run->add_option("--model", run_model, "checkpoint: run the predicted top-k instead");
  sp_run->add_option("--top", run_top, "k when running from a model");
  sp_run->add_option("--wall-limit", run_spec.wall_limit, "per-run wall clock limit (s)");
  sp_run->add_option("--max-parallel", run_spec.max_parallel, "concurrent engine cap");
  sp_run->add_flag("--sequential", run_sequential, "force one engine at a time");
  sp_run->add_flag("--early-cancel", run_spec.early_cancel,
                   "kill remaining runs after the first solve");
  sp_run->add_option("--safe-pattern", run_spec.safe_pattern, "regex marking SAFE output");
  sp_run->add_option("--unsafe-pattern", run_spec.unsafe_pattern, "regex marking UNSAFE output");
  sp_run->add_option("--log-dir", run_spec.log_dir, "directory for captured engine output");
  sp_run->add_option("-o,--out", run_out, "results CSV path");

  // --------------------------------------------------------------- evaluate
  auto* sp_eval = app.add_subcommand("evaluate", "compare two result sets");
  std::string eval_baseline, eval_method, eval_scatter;
  double eval_wall = 3600.0;
  sp_eval->add_option("--baseline", eval_baseline, "baseline results CSV")->required();
  sp_eval->add_option("--method", eval_method, "method results CSV")->required();
  sp_eval->add_option("--wall-limit", eval_wall, "wall limit used for the runs (s)");
  sp_eval->add_option("--scatter", eval_scatter, "scatter CSV output path");

  // ------------------------------------------------------------- importance
  auto* sp_imp = app.add_subcommand("importance", "permutation feature importance");
  std::string imp_model, imp_data, imp_circuits, imp_fold = "test";
  std::uint64_t imp_seed = 0;
  int imp_repeats = 10;
  sp_imp->add_option("--model", imp_model, "checkpoint path")->required();
  sp_imp->add_option("--data", imp_data, "runtime CSV")->required();
  sp_imp->add_option("--circuits", imp_circuits, "directory of AIGER files")->required();
  sp_imp->add_option("--fold", imp_fold, "test, val, train or all")
      ->check(CLI::IsMember({"test", "val", "train", "all"}));
  sp_imp->add_option("--seed", imp_seed, "split seed (must match training)");
  sp_imp->add_option("--repeats", imp_repeats, "shuffles per feature");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (sp_space->parsed()) {
      params::ConfigSpace space = params::enumerate_valid();
      if (space_count_only) {
        std::printf("%zu\n", space.configs.size());
        return 0;
      }
      std::string csv = "bits,flags\n";
      for (const auto& c : space.configs)
        csv += params::to_bit_string(c) + "," + params::to_flag_string(c) + "\n";
      emit(space_out, csv);
    } else if (sp_feat->parsed()) {
      std::string csv = "circuit";
      for (const auto& name : features::feature_names())
        csv += "," + name;
      csv += "\n";
      features::FeatureNormalizer norm;
      if (!feat_normalize.empty())
        norm = features::FeatureNormalizer::load(feat_normalize);
      for (const std::string& path : feat_paths) {
        features::CircuitFeatures f = features::extract(aiger::load_file(path));
        auto values = feat_normalize.empty() ? f.flatten() : norm.apply(f);
        csv += format_row(fs::path(path).stem().string(), values);
      }
      emit(feat_out, csv);
    } else if (sp_coi->parsed()) {
      auto [reduced, report] = coi::reduce(aiger::load_file(coi_in));
      if (!coi_out.empty()) {
        bool binary = fs::path(coi_out).extension() == ".aig";
        util::write_file(coi_out,
                         binary ? aiger::write_binary(reduced) : aiger::write_ascii(reduced));
      }
      std::string csv = coi::CoiReport::csv_header() + "\n" +
                        report.to_csv_row(fs::path(coi_in).stem().string()) + "\n";
      emit(coi_report, csv);
    } else if (sp_graph->parsed()) {
      graphdata::GraphData g = graphdata::build(aiger::load_file(graph_in), !graph_no_coi);
      if (!graph_edgelist.empty())
        util::write_file(graph_edgelist, g.edgelist_text());
      if (!graph_nodefeat.empty())
        util::write_file(graph_nodefeat, g.nodefeat_csv());
      std::printf("%d nodes, %zu edges\n", g.num_nodes, g.edges.size());
    } else if (sp_synth->parsed()) {
      synth::SynthResult res = synth::generate(synth_dir, synth_opts);
      std::printf("wrote %zu circuits and %zu runtime records to %s\n",
                  res.circuit_ids.size(), res.records.size(), synth_dir.c_str());
    } else if (sp_train->parsed()) {
      return cmd_train(train_args);
    } else if (sp_pred->parsed()) {
      model::Checkpoint ck = model::load_checkpoint(pred_model);
      aiger::Aig aig = aiger::load_file(pred_aig);
      auto f_norm = ck.normalizer.apply(features::extract(aig));
      auto ranking = predict::rank_configs(ck.net, graphdata::build(aig, true), f_norm);
      emit(pred_out, predict::to_csv(predict::top_k(ranking, pred_top)));
    } else if (sp_run->parsed()) {
      if (run_sequential)
        run_spec.max_parallel = 1;
      predict::TopK configs;
      if (!run_model.empty()) {
        model::Checkpoint ck = model::load_checkpoint(run_model);
        aiger::Aig aig = aiger::load_file(run_aig);
        auto f_norm = ck.normalizer.apply(features::extract(aig));
        auto ranking = predict::rank_configs(ck.net, graphdata::build(aig, true), f_norm);
        configs = predict::top_k(ranking, run_top);
      } else {
        configs.k = 1;
        configs.entries.push_back({params::from_flag_string(run_flags), 0.0});
      }
      runner::PortfolioResult res = runner::run_portfolio(run_spec, run_aig, configs);
      std::string csv = runner::results_csv_header() + "\n";
      for (const auto& r : res.all)
        csv += runner::to_csv_row(r) + "\n";
      emit(run_out, csv);
      std::fprintf(stderr, "best: %s in %.3fs\n",
                   std::string(runner::outcome_name(res.best.outcome)).c_str(),
                   res.best.wall_seconds);
      for (const auto& r : res.all)
        if (r.outcome == runner::Outcome::Error && r.diagnostic != "cancelled")
          return 1;
    } else if (sp_eval->parsed()) {
      runner::EvalSummary summary =
          runner::evaluate(runner::load_results_csv(eval_baseline),
                           runner::load_results_csv(eval_method), eval_wall);
      for (const std::string& w : summary.warnings)
        std::fprintf(stderr, "warning: %s\n", w.c_str());
      std::fputs(summary.table_text.c_str(), stdout);
      if (!eval_scatter.empty())
        util::write_file(eval_scatter, runner::scatter_csv(summary));
    } else if (sp_imp->parsed()) {
      model::Checkpoint ck = model::load_checkpoint(imp_model);
      auto records = train::load_dataset(imp_data);
      auto artifacts = train::build_artifacts(
          records, [&](const std::string& id) { return load_circuit(imp_circuits, id); });
      std::vector<train::RuntimeRecord> fold_records;
      if (imp_fold == "all") {
        fold_records = records;
      } else {
        auto folds = train::split(records, imp_seed);
        fold_records = imp_fold == "test" ? folds.test
                       : imp_fold == "val" ? folds.val
                                           : folds.train;
      }
      auto data = train::prepare(fold_records, artifacts, ck.normalizer);
      auto importance = train::permutation_importance(ck.net, data, imp_seed, imp_repeats);
      std::sort(importance.begin(), importance.end(),
                [](const auto& a, const auto& b) { return a.second > b.second; });
      std::printf("feature,delta_tau\n");
      for (const auto& [name, delta] : importance)
        std::printf("%s,%.6f\n", name.c_str(), delta);
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
