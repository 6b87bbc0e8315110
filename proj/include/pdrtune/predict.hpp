#pragma once

#include <array>
#include <string>
#include <vector>

#include "pdrtune/model.hpp"
#include "pdrtune/params.hpp"

namespace pdrtune::predict {

struct RankedConfig {
  params::PdrConfig config;
  double predicted_log_runtime = 0;
};

struct TopK {
  std::vector<RankedConfig> entries;  // ascending by (prediction, bit-vector)
  int k = 0;
};

/// Scores every one of the 114 valid configurations with a single graph
/// encoding and returns the full ranking; ties break on the bit-vector index
/// so the order is stable across runs. Rejects feature vectors that do not
/// look normalized (any |value| > 50).
std::vector<RankedConfig> rank_configs(const model::PredictorNet& net,
                                       const model::CompiledGraph& graph,
                                       const std::array<double, 11>& f_norm);

std::vector<RankedConfig> rank_configs(const model::PredictorNet& net,
                                       const graphdata::GraphData& graph,
                                       const std::array<double, 11>& f_norm);

/// Prefix of the ranking; k must be in [1, ranking size].
TopK top_k(const std::vector<RankedConfig>& ranking, int k);

/// CSV `rank,flags,predicted_log_runtime` with a header row.
std::string to_csv(const TopK& topk);

} // namespace pdrtune::predict
