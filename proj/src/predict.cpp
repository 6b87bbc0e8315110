#include "pdrtune/predict.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "pdrtune/util.hpp"

namespace pdrtune::predict {

std::vector<RankedConfig> rank_configs(const model::PredictorNet& net,
                                       const model::CompiledGraph& graph,
                                       const std::array<double, 11>& f_norm) {
  for (double v : f_norm)
    if (!std::isfinite(v) || std::abs(v) > 50.0)
      throw Error("feature vector does not look normalized (|value| > 50); "
                  "apply the stored normalizer first");

  std::vector<double> h = model::encode(net, graph);
  params::ConfigSpace space = params::enumerate_valid();
  std::vector<RankedConfig> ranking;
  ranking.reserve(space.configs.size());
  for (const params::PdrConfig& c : space.configs)
    ranking.push_back({c, model::head_forward(net, h, f_norm, c)});
  std::stable_sort(ranking.begin(), ranking.end(),
                   [](const RankedConfig& a, const RankedConfig& b) {
                     if (a.predicted_log_runtime != b.predicted_log_runtime)
                       return a.predicted_log_runtime < b.predicted_log_runtime;
                     return a.config.index() < b.config.index();
                   });
  return ranking;
}

std::vector<RankedConfig> rank_configs(const model::PredictorNet& net,
                                       const graphdata::GraphData& graph,
                                       const std::array<double, 11>& f_norm) {
  return rank_configs(net, model::compile(graph), f_norm);
}

TopK top_k(const std::vector<RankedConfig>& ranking, int k) {
  if (k < 1 || static_cast<std::size_t>(k) > ranking.size())
    throw Error("k must be between 1 and " + std::to_string(ranking.size()));
  TopK out;
  out.k = k;
  out.entries.assign(ranking.begin(), ranking.begin() + k);
  return out;
}

std::string to_csv(const TopK& topk) {
  std::string out = "rank,flags,predicted_log_runtime\n";
  for (std::size_t i = 0; i < topk.entries.size(); ++i) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.6f", topk.entries[i].predicted_log_runtime);
    out += std::to_string(i + 1) + "," + params::to_flag_string(topk.entries[i].config) + "," +
           buf + "\n";
  }
  return out;
}

} // namespace pdrtune::predict
