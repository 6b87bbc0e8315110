#pragma once

#include <array>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "pdrtune/features.hpp"
#include "pdrtune/model.hpp"
#include "pdrtune/params.hpp"

namespace pdrtune::train {

enum class Outcome : unsigned char { Safe, Unsafe, Timeout };

std::string_view outcome_name(Outcome o);
Outcome outcome_from_name(std::string_view name);

struct RuntimeRecord {
  std::string circuit_id;
  params::PdrConfig config;
  double wall_seconds = 0;  // for Timeout records this is the wall limit
  Outcome outcome = Outcome::Safe;
};

/// CSV schema: `circuit,config_flags,seconds,outcome`.
std::vector<RuntimeRecord> load_dataset(const std::string& path);
std::string dataset_csv(const std::vector<RuntimeRecord>& records);

/// Training target: log1p seconds, with timeouts imputed at twice the wall
/// limit so they rank strictly worse than any finishing run.
double target_log_runtime(const RuntimeRecord& r);

struct SplitRecords {
  std::vector<RuntimeRecord> train, val, test;
};

/// 80/10/10 split by circuit (every record of a circuit lands in one fold),
/// deterministic under the seed. Needs at least 10 distinct circuits.
SplitRecords split(const std::vector<RuntimeRecord>& records, std::uint64_t seed);

/// Keeps only circuits whose default-configuration (all flags off) record
/// ran longer than the threshold or timed out.
std::vector<RuntimeRecord> filter_nontrivial(const std::vector<RuntimeRecord>& records,
                                             double threshold_seconds = 60.0);

/// Kendall tau: (concordant - discordant) / (n(n-1)/2); pairs tied in either
/// vector count as neither.
double kendall_tau(std::span<const double> truth, std::span<const double> pred);

/// Spearman rho via the rank-difference formula, with mid-ranks for ties.
double spearman_rho(std::span<const double> truth, std::span<const double> pred);

struct RankMetrics {
  double kendall_tau = 0;   // unweighted mean over circuits with >= 2 configs
  double spearman_rho = 0;
  std::vector<std::pair<std::string, std::pair<double, double>>> per_circuit;
};

/// Per-circuit graph + features, shared between training and prediction.
struct CircuitArtifacts {
  model::CompiledGraph graph;            // COI-reduced, compiled
  features::CircuitFeatures features;    // from the original circuit
};
using ArtifactMap = std::map<std::string, CircuitArtifacts>;

/// Loads every distinct circuit named by the records through `load`.
ArtifactMap build_artifacts(const std::vector<RuntimeRecord>& records,
                            const std::function<aiger::Aig(const std::string&)>& load);

features::FeatureNormalizer
fit_normalizer_on(const std::vector<RuntimeRecord>& fold, const ArtifactMap& artifacts);

/// One fold, ready for the model: circuits with normalized features plus
/// samples indexing into them.
struct PreparedData {
  std::vector<std::string> ids;
  std::vector<model::CircuitInput> circuits;  // graph pointers into ArtifactMap
  std::vector<model::Sample> samples;
};

PreparedData prepare(const std::vector<RuntimeRecord>& records, const ArtifactMap& artifacts,
                     const features::FeatureNormalizer& normalizer);

RankMetrics evaluate_metrics(const model::PredictorNet& net, const PreparedData& data);

struct TrainOptions {
  int max_epochs = 300;
  int patience = 20;
  double lr = 1e-3;
  model::LossConfig loss;
  std::uint64_t seed = 0;
};

struct EpochStats {
  double train_loss = 0;
  double val_tau = 0;
  double val_rho = 0;
};

struct TrainResult {
  std::vector<EpochStats> epochs;
  int best_epoch = -1;
  double best_val_tau = 0;
};

/// Minibatch training grouped by circuit; keeps the checkpoint with the best
/// validation mean tau and restores it before returning. Aborts on NaN loss.
TrainResult train_loop(model::PredictorNet& net, const PreparedData& train_data,
                       const PreparedData& val_data, const TrainOptions& opts);

/// Mean drop in validation tau when one normalized feature column is shuffled
/// across circuits; averaged over `repeats` shuffles per feature.
std::vector<std::pair<std::string, double>>
permutation_importance(const model::PredictorNet& net, const PreparedData& test_data,
                       std::uint64_t seed, int repeats = 10);

} // namespace pdrtune::train
