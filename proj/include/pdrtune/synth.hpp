#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "pdrtune/aiger.hpp"
#include "pdrtune/train.hpp"
#include "pdrtune/util.hpp"

namespace pdrtune::synth {

struct RandomAigOptions {
  unsigned min_inputs = 1, max_inputs = 16;
  unsigned min_latches = 0, max_latches = 8;
  unsigned min_ands = 1, max_ands = 60;
  unsigned num_outputs = 1;
  bool allow_x_init = false;
  double const_fraction = 0.02;  // chance an AND fanin is the constant
  // Style knobs; when negative they are drawn per circuit.
  double recent_bias = -1;   // probability an AND fanin is a recent AND (depth)
  double latch_skew = -1;    // >1 concentrates latch fanout on few latches
};

/// Random canonical AIG honoring all structural invariants; output cones are
/// anchored near the top of the gate list so dead logic exists for COI.
aiger::Aig random_aig(Rng& rng, const RandomAigOptions& opts);

struct SynthOptions {
  int n_circuits = 60;
  std::uint64_t seed = 42;
  double wall_limit = 3600.0;
  unsigned min_ands = 20, max_ands = 500;
  unsigned min_latches = 2, max_latches = 40;
  unsigned min_inputs = 2, max_inputs = 32;
};

/// Planted runtime model, written to the manifest so tests can recover it:
/// log t = intercept + base_u * u + base_v * v
///         + sum_j (w0[j] + wu[j] * u + wv[j] * v) * bit_j + noise,
/// where u is the corpus-standardized flop fanout std and v the standardized
/// average level; seconds are exp(log t) clamped to the wall limit.
struct PlantedCoefficients {
  double intercept = 4.0;
  double base_u = 0.30;
  double base_v = 0.30;
  std::array<double, 9> w0{};  // bit order g,r,n,c,y,f,i,t,k
  std::array<double, 9> wu{};
  std::array<double, 9> wv{};
  double noise_sigma = 0.005;
  double flop_std_mean = 0, flop_std_sd = 1;
  double avg_level_mean = 0, avg_level_sd = 1;

  std::string to_json() const;
  static PlantedCoefficients from_json(std::string_view text);

  /// Expected log-runtime without the noise term.
  double expected_log(double flop_std, double avg_level, const params::PdrConfig& c) const;
};

struct SynthResult {
  std::vector<std::string> circuit_ids;
  std::vector<train::RuntimeRecord> records;
  PlantedCoefficients coefficients;
};

/// Writes `<dir>/<id>.aag` per circuit plus `runtimes.csv` and
/// `manifest.json`; the runtime of every valid configuration is planted so
/// the optimal configuration is a known function of circuit features.
SynthResult generate(const std::string& out_dir, const SynthOptions& opts);

} // namespace pdrtune::synth
